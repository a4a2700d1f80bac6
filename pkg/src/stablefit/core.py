"""Core stable-law types, parameterization conversion, and shared identities.

The package works in the parameterization whose characteristic function is

    phi(k) = exp{ i delta k - gamma^alpha |k|^alpha (1 - i beta sgn(k) omega(k, alpha)) }

with omega = tan(pi alpha / 2) for alpha != 1 and omega = -(2/pi) log|k| for
alpha = 1 ("one_param" below).  The companion "zero_param" form shifts only the
location so that densities vary continuously in alpha.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import InsufficientSampleError, InvalidParamsError

ALPHA_FLOOR = 0.01
GAMMA_FLOOR = 0.01
PARAM_NAMES = ("alpha", "beta", "gamma", "delta")


class ParamForm(enum.Enum):
    ONE = "one_param"
    ZERO = "zero_param"


@dataclass(frozen=True)
class StableParams:
    """Four parameters of a stable law plus the parameterization convention.

    Invariants: ALPHA_FLOOR <= alpha <= 2, -1 <= beta <= 1, gamma > 0,
    delta finite.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float
    param_form: ParamForm = ParamForm.ONE

    def __post_init__(self):
        for name in PARAM_NAMES:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise InvalidParamsError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not ALPHA_FLOOR <= self.alpha <= 2.0:
            raise InvalidParamsError(
                f"alpha must lie in [{ALPHA_FLOOR}, 2], got {self.alpha}"
            )
        if not -1.0 <= self.beta <= 1.0:
            raise InvalidParamsError(f"beta must lie in [-1, 1], got {self.beta}")
        if not self.gamma > 0.0:
            raise InvalidParamsError(f"gamma must be positive, got {self.gamma}")
        if not isinstance(self.param_form, ParamForm):
            raise InvalidParamsError(f"unknown parameterization {self.param_form!r}")

    def astuple(self):
        return (self.alpha, self.beta, self.gamma, self.delta)


@dataclass(frozen=True)
class ClampOutcome:
    """Result of forcing raw estimates into the valid parameter domain."""

    params: StableParams
    clamped_fields: frozenset
    raw_values: dict

    def __post_init__(self):
        for name in PARAM_NAMES:
            same = getattr(self.params, name) == self.raw_values[name]
            if (name in self.clamped_fields) == same:
                raise InvalidParamsError(
                    f"clamp bookkeeping inconsistent for {name}"
                )


@dataclass(frozen=True)
class Sample:
    """Immutable one-dimensional data sample.

    Values are stored as a read-only float64 array; the sorted view is cached
    on first use.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise InsufficientSampleError("sample must be one-dimensional")
        if arr.shape[0] < 1:
            raise InsufficientSampleError("sample must not be empty")
        if not np.all(np.isfinite(arr)):
            raise InsufficientSampleError("sample contains non-finite values")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self):
        return int(self.values.shape[0])

    @cached_property
    def sorted_values(self):
        out = np.sort(self.values)
        out.setflags(write=False)
        return out

    @cached_property
    def iqr(self):
        q25, q75 = np.quantile(self.values, [0.25, 0.75])
        return float(q75 - q25)


def skew_location_shift(alpha, beta, gamma):
    """Location offset between the two parameterizations for given shape/scale."""
    if alpha == 1.0:
        return beta * (2.0 / math.pi) * gamma * math.log(gamma)
    return beta * gamma * math.tan(0.5 * math.pi * alpha)


def convert_parameterization(p, target):
    """Return the same distribution expressed in the target parameterization.

    Only the location changes; shape, skew, and scale are shared by both
    conventions.
    """
    if not isinstance(target, ParamForm):
        raise InvalidParamsError(f"unknown parameterization {target!r}")
    if p.param_form is target:
        return p
    shift = skew_location_shift(p.alpha, p.beta, p.gamma)
    if target is ParamForm.ZERO:
        delta = p.delta + shift
    else:
        delta = p.delta - shift
    return replace(p, delta=delta, param_form=target)


def clamp_to_domain(alpha, beta, gamma, delta, param_form=ParamForm.ONE):
    """Force a raw estimate tuple into the valid domain, recording what moved.

    beta clips to [-1, 1]; alpha clips to [ALPHA_FLOOR, 2]; gamma gets the
    same small positive floor.  delta is never touched.  Idempotent.
    """
    raw = {"alpha": float(alpha), "beta": float(beta),
           "gamma": float(gamma), "delta": float(delta)}
    for name, v in raw.items():
        if not math.isfinite(v):
            raise InvalidParamsError(
                f"non-finite raw {name} ({v!r}); estimation failed upstream"
            )
    clamped = {
        "alpha": min(max(raw["alpha"], ALPHA_FLOOR), 2.0),
        "beta": min(max(raw["beta"], -1.0), 1.0),
        "gamma": max(raw["gamma"], GAMMA_FLOOR),
        "delta": raw["delta"],
    }
    moved = frozenset(n for n in PARAM_NAMES if clamped[n] != raw[n])
    params = StableParams(clamped["alpha"], clamped["beta"], clamped["gamma"],
                          clamped["delta"], param_form=param_form)
    return ClampOutcome(params=params, clamped_fields=moved, raw_values=raw)


def standardize_sample(x, p):
    """Map data to the standard variate of the same distribution family.

    For parameters p the returned sample is distributed as S(alpha, beta, 1, 0)
    when x is distributed as p.  At alpha = 1 the plain affine map (x - delta) /
    gamma leaves a residual location (2/pi) beta ln(gamma) behind, which is
    removed here.
    """
    p = convert_parameterization(p, ParamForm.ONE)
    z = (x.values - p.delta) / p.gamma
    if p.alpha == 1.0:
        z = z - (2.0 / math.pi) * p.beta * math.log(p.gamma)
    return Sample(z)


def tail_constant(alpha):
    """Constant c_alpha = sin(pi alpha / 2) Gamma(alpha) / pi in the power-tail
    law P(X > x) ~ c_alpha gamma^alpha (1 + beta) x^(-alpha)."""
    if not 0.0 < alpha < 2.0:
        raise InvalidParamsError(
            f"power tail defined for 0 < alpha < 2 only, got {alpha}"
        )
    return math.sin(0.5 * math.pi * alpha) * math.gamma(alpha) / math.pi
