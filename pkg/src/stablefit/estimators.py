"""Two-point characteristic-function estimators for stable laws.

All methods here reduce to the same closed forms: evaluate the log-CF at two
positive frequencies, invert for (alpha, gamma) from the real part, then for
(beta, delta) from the imaginary part.  They differ only in how the two
frequencies are chosen:

* fit_proposed  -- scale-adaptive points refined through a weighted
  sensitivity criterion (the headline method),
* fit_krutto    -- points where the log-modulus crosses -0.1 and -0.5,
* fit_bibalan   -- unit frequency plus the point separating the Gaussian and
  Cauchy envelope shapes at the directly estimated scale.

Every operation accepts either a Sample or any object exposing
log_abs(k)/imag_log(k)/scale_hint (an ExactCF, say), so the closed forms can
be exercised noise-free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import ALPHA_FLOOR, ClampOutcome, ParamForm, Sample, StableParams, \
    clamp_to_domain
from .ecf import EmpiricalCF
from .errors import DegenerateFrequencyError, EstimationError, \
    InvalidParamsError, PointSelectionError, ScaleSearchError, StableFitError
from .numerics import find_root, maximize_scalar

# |alpha - 1| below this switches the beta/delta formulas to the log-kernel
# branch; the general branch divides by tan(pi alpha / 2) terms that blow up
_ALPHA_ONE_BAND = 0.01

# log-modulus reported when the empirical CF modulus underflows to zero at an
# absurd probe frequency; only sign information is used out there
_LOG_ABS_FLOOR = -745.0

METHOD_NAMES = ("proposed", "bibalan", "krutto", "quantile")


@dataclass(frozen=True)
class TwoPoints:
    """Pair of positive, distinct CF evaluation frequencies."""

    k0: float
    k1: float

    def __post_init__(self):
        for name in ("k0", "k1"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidParamsError(
                    f"{name} must be a positive finite frequency, got {v!r}"
                )
        if self.k0 == self.k1:
            raise InvalidParamsError(
                f"evaluation points must be distinct, both are {self.k0}"
            )


@dataclass(frozen=True)
class ProposedConfig:
    """Tuning knobs of the adaptive point-selection algorithm.

    xi seeds the first small frequency as xi / gamma_temp; delta_alpha is the
    probe offset in the sensitivity criterion; tau the exponential weight
    decay rate; refinement_rounds the number of eta-update/re-estimate
    alternations; root_tol the tolerance of the eta root solve.
    """

    xi: float = 0.5
    delta_alpha: float = 0.01
    tau: float = 2.5
    refinement_rounds: int = 2
    root_tol: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.xi < 1.0:
            raise InvalidParamsError(f"xi must lie in (0, 1), got {self.xi}")
        if not self.delta_alpha > 0.0:
            raise InvalidParamsError(
                f"delta_alpha must be positive, got {self.delta_alpha}"
            )
        if not self.tau > 0.0:
            raise InvalidParamsError(f"tau must be positive, got {self.tau}")
        if not (isinstance(self.refinement_rounds, int)
                and self.refinement_rounds >= 1):
            raise InvalidParamsError(
                f"refinement_rounds must be an integer >= 1, "
                f"got {self.refinement_rounds!r}"
            )
        if not self.root_tol > 0.0:
            raise InvalidParamsError(
                f"root_tol must be positive, got {self.root_tol}"
            )


class RefinementStep(NamedTuple):
    """One intermediate state of the adaptive fit."""

    alpha: float
    gamma: float
    eta: float
    k0: float
    k1: float


@dataclass(frozen=True)
class EstimationReport:
    """Fitted parameters plus everything needed to audit how they were found.

    params is always in the one_param form.  points/eta/gamma_temp are None
    for methods that do not produce them; iterations holds the refinement
    trace (non-empty exactly for the proposed method); clamp records raw
    pre-clamp values; ks is filled in by callers that evaluate the fit.
    """

    params: StableParams
    method: str
    points: Optional[TwoPoints]
    eta: Optional[float]
    gamma_temp: Optional[float]
    iterations: tuple
    clamp: ClampOutcome
    n: Optional[int]
    ks: Optional[float] = None
    warnings: tuple = ()

    def __post_init__(self):
        if not (isinstance(self.method, str) and self.method):
            raise InvalidParamsError(f"bad method name {self.method!r}")
        if self.params.param_form is not ParamForm.ONE:
            raise InvalidParamsError("report params must use the one_param form")
        if self.method == "proposed" and not self.iterations:
            raise InvalidParamsError(
                "proposed-method report requires a refinement trace"
            )


def _as_cf(x):
    if isinstance(x, Sample):
        return EmpiricalCF(x)
    if hasattr(x, "log_abs") and hasattr(x, "imag_log"):
        return x
    raise TypeError(
        f"expected a Sample or a CF source, got {type(x).__name__}"
    )


def _safe_log_abs(cf, k):
    # probing far into the tail of the ECF can hit an underflowed modulus;
    # treat it as "very negative" so bracketing searches keep their sign info
    try:
        return cf.log_abs(k)
    except DegenerateFrequencyError:
        return _LOG_ABS_FLOOR


def estimate_alpha_gamma(x, pts: TwoPoints):
    """Closed-form (alpha, gamma) from the log-modulus at two frequencies.

    Returns raw, unclamped values.  Requires the log-modulus to be strictly
    negative at both points, which holds for any non-degenerate sample.
    """
    cf = _as_cf(x)
    la0 = cf.log_abs(pts.k0)
    la1 = cf.log_abs(pts.k1)
    for k, la in ((pts.k0, la0), (pts.k1, la1)):
        if not la < 0.0:
            raise DegenerateFrequencyError(
                f"log-CF modulus is {la} at k={k}; need strictly negative"
            )
    L0 = math.log(-la0)
    L1 = math.log(-la1)
    if L0 == L1:
        raise DegenerateFrequencyError(
            f"identical log-modulus at k0={pts.k0} and k1={pts.k1}"
        )
    lk0 = math.log(pts.k0)
    lk1 = math.log(pts.k1)
    alpha = (L0 - L1) / (lk0 - lk1)
    gamma = math.exp((lk0 * L1 - lk1 * L0) / (L0 - L1))
    return alpha, gamma


def _beta_delta_from_phases(u0, u1, k0, k1, alpha, scale_pow):
    """Invert the CF phase at two frequencies for (beta, delta).

    u0/u1 are the imaginary parts of the log-CF; scale_pow is gamma**alpha
    for the generic scheme, or the directly estimated scale for the variant
    that measures it at unit frequency.  Near alpha = 1 the generic algebra
    divides by quantities that vanish, so the log-kernel branch takes over.
    """
    general = abs(alpha - 1.0) >= _ALPHA_ONE_BAND
    if general:
        t = math.tan(0.5 * math.pi * alpha)
        A = k0 ** alpha * k1
        B = k1 ** alpha * k0
        if A != B:
            beta = (k1 * u0 - k0 * u1) / (scale_pow * t * (A - B))
            delta = (k1 ** alpha * u0 - k0 ** alpha * u1) / (B - A)
            return beta, delta
        # fall through: the denominator collapsed exactly as it would at
        # alpha = 1, so use that branch instead of failing
    dl = k0 * k1 * (math.log(k1) - math.log(k0))
    beta = 0.5 * math.pi * (k1 * u0 - k0 * u1) / (scale_pow * dl)
    delta = (k1 * math.log(k1) * u0 - k0 * math.log(k0) * u1) / dl
    return beta, delta


def estimate_beta_delta(x, pts: TwoPoints, alpha_hat, gamma_hat):
    """Closed-form (beta, delta) from the CF phase, given (alpha, gamma).

    Raw, unclamped values; the caller decides what to do with beta outside
    [-1, 1].
    """
    if not (alpha_hat > 0.0 and gamma_hat > 0.0):
        raise InvalidParamsError(
            f"need positive alpha and gamma, got {alpha_hat}, {gamma_hat}"
        )
    cf = _as_cf(x)
    u0 = cf.imag_log(pts.k0)
    u1 = cf.imag_log(pts.k1)
    return _beta_delta_from_phases(u0, u1, pts.k0, pts.k1, alpha_hat,
                                   gamma_hat ** alpha_hat)


def _g_term(alpha, eta, tau):
    return (alpha * eta ** (alpha - 1.0) + tau) * math.exp(
        -eta ** alpha - tau * eta)


def weighted_sensitivity_g(alpha, eta, cfg: ProposedConfig = ProposedConfig(),
                           *, delta_alpha=None, tau=None):
    """Derivative in eta of the weighted CF-envelope gap used to pick points.

    The gap is (exp(-eta**(alpha+da)) - exp(-eta**alpha)) * exp(-tau*eta):
    how far apart the CF moduli of two nearby stability indices sit at
    frequency eta, discounted away from the origin.  Its stationary points
    are the zeros of this function.  Positive near eta = 0+, negative at
    eta = 1, for every alpha in (0, 2].

    delta_alpha/tau keyword overrides exist so the da -> 0 collapse can be
    checked even though the config type forbids storing da = 0.
    """
    da = cfg.delta_alpha if delta_alpha is None else delta_alpha
    tv = cfg.tau if tau is None else tau
    return _g_term(alpha, eta, tv) - _g_term(alpha + da, eta, tv)


def _g_values(alpha, etas, cfg):
    # vectorized twin of weighted_sensitivity_g for the bracketing scan
    e = np.asarray(etas, dtype=np.float64)

    def term(a):
        return (a * e ** (a - 1.0) + cfg.tau) * np.exp(-e ** a - cfg.tau * e)

    return term(alpha) - term(alpha + cfg.delta_alpha)


def eta_of_alpha(alpha, cfg: ProposedConfig = ProposedConfig()):
    """Smaller positive zero of the weighted sensitivity for this alpha.

    Scans 200 log-spaced probes on (1e-6, 1) for the first sign change, then
    polishes with a bracketed root solve.  No sign change means the
    sensitivity criterion has nothing to say; callers fall back to their
    previous point ratio.
    """
    probes = np.geomspace(1e-6, 1.0, 200)
    vals = _g_values(alpha, probes, cfg)
    idx = None
    for i in range(len(probes) - 1):
        if vals[i] == 0.0:
            return float(probes[i])
        if vals[i] * vals[i + 1] < 0.0:
            idx = i
            break
    if idx is None:
        raise PointSelectionError(
            f"no sign change of the sensitivity criterion on (1e-6, 1) "
            f"at alpha={alpha}"
        )
    # root_tol bounds the residual |g| at the returned point; the interval
    # tolerance runs much tighter because g can be steep at small alpha
    res = find_root(
        lambda e: weighted_sensitivity_g(alpha, e, cfg),
        probes[idx], probes[idx + 1],
        tol=1e-5 * cfg.root_tol, f_tol=cfg.root_tol,
    )
    return res.root


def temp_gamma(x):
    """Rough scale: the gamma at which the CF modulus at 1/gamma equals 1/e.

    For an exact stable CF this recovers gamma itself, whatever the other
    three parameters.  Solved by a bracketed root search on
    h(g) = log|CF(1/g)| + 1, starting from [s/100, 100 s] where s is the
    source's scale hint, widening tenfold up to three times.
    """
    cf = _as_cf(x)
    s = cf.scale_hint

    def h(g):
        return _safe_log_abs(cf, 1.0 / g) + 1.0

    lo = s / 100.0
    hi = s * 100.0
    for _ in range(4):
        if h(lo) < 0.0 < h(hi):
            res = find_root(h, lo, hi, tol=1e-9 * s, f_tol=1e-9)
            return res.root
        lo /= 10.0
        hi *= 10.0
    raise ScaleSearchError(
        "could not bracket the unit-modulus scale; the sample looks "
        "degenerate (near-constant)"
    )


def _phase_diagnostics(cf, pts: TwoPoints):
    # the phase comes off a principal branch for empirical sources; flag
    # evaluations that drift into wrap-around territory
    if not getattr(cf, "principal_branch", False):
        return []
    notes = []
    for k in (pts.k0, pts.k1):
        try:
            u = cf.imag_log(k)
        except DegenerateFrequencyError:
            continue
        if abs(u) > 0.5 * math.pi:
            notes.append(
                f"CF phase {u:.3f} at k={k:.6g} is outside (-pi/2, pi/2); "
                f"location-to-scale ratio may be too large for reliable "
                f"beta/delta (consider centering or prescaling)"
            )
    return notes


def fit_proposed(x, cfg: ProposedConfig = ProposedConfig()) -> EstimationReport:
    """Adaptive two-point fit of all four parameters.

    Pipeline: rough scale from the unit-modulus search; initial points
    (xi/g, 1/g); closed-form (alpha, gamma); then refinement_rounds times
    over, an eta from the sensitivity criterion at the current alpha, new
    points (eta/g, 1/g) at the current gamma, and re-estimation; finally the
    phase inversion for (beta, delta) and domain clamping.  Every
    intermediate (alpha, gamma, eta, k0, k1) lands in the iterations trace;
    failures carry the partial trace on the exception's .trace attribute.
    """
    cf = _as_cf(x)
    trace = []
    warns = []
    try:
        g_temp = temp_gamma(cf)
        eta = cfg.xi
        pts = TwoPoints(cfg.xi / g_temp, 1.0 / g_temp)
        alpha_r, gamma_r = estimate_alpha_gamma(cf, pts)
        trace.append(RefinementStep(alpha_r, gamma_r, eta, pts.k0, pts.k1))
        for _ in range(cfg.refinement_rounds):
            a = min(max(alpha_r, ALPHA_FLOOR), 2.0)
            try:
                eta = eta_of_alpha(a, cfg)
            except PointSelectionError:
                warns.append(
                    f"sensitivity criterion found no interior point at "
                    f"alpha={a:.6g}; keeping eta={eta:.6g}"
                )
            pts = TwoPoints(eta / gamma_r, 1.0 / gamma_r)
            alpha_r, gamma_r = estimate_alpha_gamma(cf, pts)
            trace.append(RefinementStep(alpha_r, gamma_r, eta, pts.k0, pts.k1))
        beta_r, delta_r = estimate_beta_delta(
            cf, pts, min(max(alpha_r, ALPHA_FLOOR), 2.0), gamma_r)
    except StableFitError as e:
        e.trace = tuple(trace)
        raise
    warns.extend(_phase_diagnostics(cf, pts))
    clamp = clamp_to_domain(alpha_r, beta_r, gamma_r, delta_r)
    return EstimationReport(
        params=clamp.params, method="proposed", points=pts, eta=eta,
        gamma_temp=g_temp, iterations=tuple(trace), clamp=clamp,
        n=cf.n, warnings=tuple(warns),
    )


def _level_crossing(cf, level, scale_hint):
    """Smallest positive k with log|CF(k)| = level (level < 0)."""
    grid = np.geomspace(1e-3, 1e3, 121) / scale_hint
    prev_k = None
    prev_v = None
    for k in grid:
        v = _safe_log_abs(cf, k) - level
        if v == 0.0:
            return float(k)
        if prev_v is not None and prev_v > 0.0 > v:
            res = find_root(
                lambda q: _safe_log_abs(cf, q) - level,
                prev_k, k, tol=1e-10 * k, f_tol=1e-12,
            )
            return res.root
        prev_k, prev_v = k, v
    raise EstimationError(
        f"log-CF modulus never crosses {level} on the scanned frequency "
        f"range; the sample scale may be extreme"
    )


def fit_krutto(x) -> EstimationReport:
    """Two-point fit with frequencies pinned to fixed log-modulus levels.

    k0 and k1 are the smallest positive frequencies where the empirical
    log-modulus equals -0.1 and -0.5.  Those levels adapt to the scale of
    the data automatically, which makes the method scale-equivariant, just
    without the sensitivity-driven refinement of the proposed scheme.
    """
    cf = _as_cf(x)
    s = cf.scale_hint
    k0 = _level_crossing(cf, -0.1, s)
    k1 = _level_crossing(cf, -0.5, s)
    pts = TwoPoints(k0, k1)
    alpha_r, gamma_r = estimate_alpha_gamma(cf, pts)
    beta_r, delta_r = estimate_beta_delta(
        cf, pts, min(max(alpha_r, ALPHA_FLOOR), 2.0), gamma_r)
    warns = _phase_diagnostics(cf, pts)
    clamp = clamp_to_domain(alpha_r, beta_r, gamma_r, delta_r)
    return EstimationReport(
        params=clamp.params, method="krutto", points=pts, eta=None,
        gamma_temp=None, iterations=(), clamp=clamp, n=cf.n,
        warnings=tuple(warns),
    )


def fit_bibalan(x) -> EstimationReport:
    """Two-point fit anchored at unit frequency.

    The scale power c = -log|CF(1)| is read off directly; the companion
    frequency k0 maximizes the gap between the Gaussian and Cauchy moduli
    sharing that c, which separates the two shape regimes best.  gamma
    comes from c**(1/alpha) rather than the generic two-point formula, and
    the phase inversion uses c itself in place of gamma**alpha.  The unit
    anchor means the method is not scale-equivariant; data far from unit
    scale should be prescaled.
    """
    cf = _as_cf(x)
    c_hat = -cf.log_abs(1.0)
    if not c_hat > 0.0:
        raise EstimationError(
            "CF modulus at unit frequency is 1 to working precision, so the "
            "scale cannot be read off; rescale the data (multiplying by 100 "
            "is the usual remedy) and refit"
        )

    def envelope_gap(k):
        return abs(math.exp(-c_hat * k * k) - math.exp(-c_hat * k))

    # the Gaussian and Cauchy moduli at scale power c cross at k = 1 for
    # every c, so the first hump of the gap always lives inside (0, 1)
    k0 = maximize_scalar(envelope_gap, 1e-6, 1.0, tol=1e-9)
    pts = TwoPoints(k0, 1.0)
    alpha_r, _ = estimate_alpha_gamma(cf, pts)
    a = min(max(alpha_r, ALPHA_FLOOR), 2.0)
    gamma_r = c_hat ** (1.0 / a)
    u0 = cf.imag_log(pts.k0)
    u1 = cf.imag_log(pts.k1)
    beta_r, delta_r = _beta_delta_from_phases(u0, u1, pts.k0, pts.k1, a,
                                              c_hat)
    warns = _phase_diagnostics(cf, pts)
    clamp = clamp_to_domain(alpha_r, beta_r, gamma_r, delta_r)
    return EstimationReport(
        params=clamp.params, method="bibalan", points=pts, eta=None,
        gamma_temp=None, iterations=(), clamp=clamp, n=cf.n,
        warnings=tuple(warns),
    )

