"""Empirical and exact characteristic-function sources.

Both source types expose log_abs(k) and imag_log(k) for k > 0 plus a scale
hint, which is everything the closed-form estimators consume.  Estimators
therefore run unchanged on data (EmpiricalCF) or on exact transforms
(ExactCF); the exact source turns the estimator algebra into a noise-free
round trip, which the test suite leans on heavily.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ParamForm, Sample, StableParams, convert_parameterization
from .errors import DegenerateFrequencyError, InvalidParamsError


@dataclass(frozen=True)
class CFPoint:
    """One empirical CF evaluation: complex value plus its log decomposition."""

    value: complex
    log_abs: float
    imag_log: float


def _validate_frequency(k):
    k = float(k)
    if not (math.isfinite(k) and k > 0.0):
        raise InvalidParamsError(f"frequency must be positive and finite, got {k}")
    return k


def _ecf_value(x: Sample, k: float) -> complex:
    # signed k allowed here; public entry points restrict to k > 0
    re, im = kernels.ecf_sums(x.values, np.array([float(k)]))
    n = x.n
    return complex(re[0] / n, im[0] / n)


def ecf_at(x: Sample, k) -> CFPoint:
    """Empirical CF (1/n) sum exp(i k X_j) with log-modulus and argument.

    The modulus never exceeds 1; rounding that would push it past 1 is
    clipped so log_abs stays nonpositive.  A vanishing modulus yields
    log_abs = -inf and an undefined (nan) argument; the scalar accessors
    below turn that case into an error.
    """
    k = _validate_frequency(k)
    v = _ecf_value(x, k)
    m = min(abs(v), 1.0)
    if m == 0.0:
        return CFPoint(value=v, log_abs=-math.inf, imag_log=math.nan)
    return CFPoint(value=v, log_abs=math.log(m),
                   imag_log=math.atan2(v.imag, v.real))


def log_abs_ecf(x: Sample, k) -> float:
    pt = ecf_at(x, k)
    if not math.isfinite(pt.log_abs):
        raise DegenerateFrequencyError(
            f"empirical CF modulus vanished at k={float(k)}; use a smaller k"
        )
    return pt.log_abs


def imag_log_ecf(x: Sample, k) -> float:
    pt = ecf_at(x, k)
    if not math.isfinite(pt.log_abs):
        raise DegenerateFrequencyError(
            f"empirical CF modulus vanished at k={float(k)}; use a smaller k"
        )
    return pt.imag_log


class EmpiricalCF:
    """Sample-backed CF source with principal-branch argument.

    The argument comes from atan2, so it lives in (-pi, pi]; estimators that
    evaluate it at pre-standardized frequencies stay well inside the branch,
    and they surface a diagnostic when the magnitude exceeds pi/2.
    """

    principal_branch = True

    def __init__(self, x: Sample):
        self._x = x

    @property
    def sample(self) -> Sample:
        return self._x

    @property
    def n(self) -> int:
        return self._x.n

    def value(self, k) -> complex:
        return _ecf_value(self._x, k)

    def log_abs(self, k) -> float:
        return log_abs_ecf(self._x, k)

    def imag_log(self, k) -> float:
        return imag_log_ecf(self._x, k)

    @property
    def scale_hint(self) -> float:
        # half the interquartile range lands near gamma for common shapes;
        # it only seeds bracketed searches, so roughness is fine
        iqr = self._x.iqr
        return iqr / 2.0 if iqr > 0.0 else 1.0


class ExactCF:
    """Closed-form cumulant of a stable law, with unwrapped imaginary part."""

    principal_branch = False
    n = None

    def __init__(self, params: StableParams):
        self._p = convert_parameterization(params, ParamForm.ONE)

    @property
    def params(self) -> StableParams:
        return self._p

    def value(self, k) -> complex:
        return cmath.exp(complex(self.log_abs(k), self.imag_log(k)))

    def log_abs(self, k) -> float:
        k = _validate_frequency(k)
        p = self._p
        return -((p.gamma * k) ** p.alpha)

    def imag_log(self, k) -> float:
        k = _validate_frequency(k)
        p = self._p
        if p.alpha == 1.0:
            return p.delta * k - (2.0 / math.pi) * p.beta * p.gamma * k * math.log(k)
        return (p.delta * k
                + p.beta * (p.gamma * k) ** p.alpha
                * math.tan(0.5 * math.pi * p.alpha))

    @property
    def scale_hint(self) -> float:
        return self._p.gamma
