"""Quantile-ratio parameter estimation backed by precomputed lookup tables.

Four functionals of a distribution's quantiles pin down the four
parameters: a tail-weight ratio phi1 (decreasing in alpha), a skewness
contrast phi2 (increasing in beta), the interquartile range in scale
units phi3, and a median offset phi4 that backs out the location.  The
tables of these functionals over an (alpha, beta) grid are generated
from this package's own distribution engine, cached on disk, and
inverted at fit time by alternating one-dimensional interpolation.

phi4 is stored as the negated median of the shifted-parameterization
standard law, which is finite and smooth in alpha everywhere the grid
reaches, so the location estimate needs no special casing near
alpha = 1 (it does get a low-confidence warning there, because the
skew-shift term multiplies beta error by tan(pi alpha / 2)).

The tables are only calibrated for alpha >= 0.6; fits that saturate the
lower edge carry an out-of-validity warning rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import ParamForm, Sample, StableParams, clamp_to_domain, \
    skew_location_shift
from .dist import DistEvalConfig, quantile as dist_quantile
from .errors import EstimationError, InsufficientSampleError, QuantileError, \
    StableFitError
from .estimators import EstimationReport

_PROBE_PS = (0.05, 0.25, 0.5, 0.75, 0.95)
_MIN_SAMPLE = 20
_MAX_ALTERNATIONS = 50
_ALTERNATION_TOL = 1e-12
# half-width of the alpha band around 1 where the location estimate is
# downgraded instead of specially handled
_ALPHA_ONE_CAUTION = 0.05

_DEFAULT_ALPHA_GRID = tuple(round(0.6 + 0.1 * i, 10) for i in range(15))
_DEFAULT_BETA_GRID = tuple(round(-1.0 + 0.25 * i, 10) for i in range(9))
_CACHE_NAME = "qm_lookup_v1.npz"
_TABLE_VERSION = "1"

_default_lookup = None


def sample_quantiles(x: Sample, ps) -> np.ndarray:
    """Empirical quantiles of a sample at the given probability levels.

    Uses the linear-interpolation convention on order statistics, which
    makes the result exactly affine-equivariant.  Requires at least 20
    observations: below that the outer levels used by the fit sit on
    single order statistics and carry no tail information.
    """
    if x.n < _MIN_SAMPLE:
        raise InsufficientSampleError(
            f"need at least {_MIN_SAMPLE} observations for quantile "
            f"estimation, got {x.n}"
        )
    ps = np.asarray(ps, dtype=np.float64)
    if ps.ndim != 1 or ps.size == 0:
        raise QuantileError("probability levels must be a non-empty 1-d list")
    if np.any(ps <= 0.0) or np.any(ps >= 1.0):
        raise QuantileError("probability levels must lie strictly in (0, 1)")
    return np.quantile(x.sorted_values, ps, method="linear")


@dataclass(frozen=True)
class QuantileLookup:
    """Immutable tables of the four quantile functionals on a parameter grid.

    Grid nodes where table generation failed hold NaN and are skipped by
    interpolation.  phi1 and phi3 are even in beta, phi2 and phi4 odd.
    """

    alpha_grid: np.ndarray
    beta_grid: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    phi3: np.ndarray
    phi4: np.ndarray
    version: str = _TABLE_VERSION

    def __post_init__(self):
        a = np.asarray(self.alpha_grid, dtype=np.float64)
        b = np.asarray(self.beta_grid, dtype=np.float64)
        if a.ndim != 1 or a.size < 2 or np.any(np.diff(a) <= 0.0):
            raise QuantileError("alpha grid must be strictly increasing")
        if b.ndim != 1 or b.size < 2 or np.any(np.diff(b) <= 0.0):
            raise QuantileError("beta grid must be strictly increasing")
        shape = (a.size, b.size)
        tables = {}
        for name in ("phi1", "phi2", "phi3", "phi4"):
            t = np.asarray(getattr(self, name), dtype=np.float64)
            if t.shape != shape:
                raise QuantileError(
                    f"{name} table shape {t.shape} does not match grid {shape}"
                )
            t = t.copy()
            t.setflags(write=False)
            tables[name] = t
        a = a.copy()
        b = b.copy()
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "alpha_grid", a)
        object.__setattr__(self, "beta_grid", b)
        for name, t in tables.items():
            object.__setattr__(self, name, t)

    def save(self, path):
        np.savez_compressed(
            path,
            alpha_grid=self.alpha_grid,
            beta_grid=self.beta_grid,
            phi1=self.phi1,
            phi2=self.phi2,
            phi3=self.phi3,
            phi4=self.phi4,
            version=np.asarray(self.version),
        )

    @classmethod
    def load(cls, path) -> "QuantileLookup":
        with np.load(path, allow_pickle=False) as d:
            version = str(d["version"][()])
            if version != _TABLE_VERSION:
                raise QuantileError(
                    f"lookup cache version {version!r} is not supported"
                )
            return cls(
                alpha_grid=d["alpha_grid"],
                beta_grid=d["beta_grid"],
                phi1=d["phi1"],
                phi2=d["phi2"],
                phi3=d["phi3"],
                phi4=d["phi4"],
                version=version,
            )


def _node_phis(alpha, beta, cfg):
    """The four functionals at one nonnegative-beta grid node.

    Works entirely from quantiles of the shifted-parameterization
    standard law, so no moment needs to exist.  Symmetric nodes (beta
    zero, or the Gaussian boundary where skew has no effect) get their
    median levels fixed exactly, which also halves the work there.
    """
    p0 = StableParams(alpha, beta, 1.0, 0.0, param_form=ParamForm.ZERO)
    if beta == 0.0 or alpha == 2.0:
        q75 = dist_quantile(p0, 0.75, cfg)
        q95 = dist_quantile(p0, 0.95, cfg)
        q05, q25, q50 = -q95, -q75, 0.0
    else:
        q05, q25, q50, q75, q95 = (
            dist_quantile(p0, p, cfg) for p in _PROBE_PS
        )
    outer = q95 - q05
    inner = q75 - q25
    if not (outer > 0.0 and inner > 0.0):
        raise QuantileError("degenerate quantile spread at a grid node")
    # in the symmetric branch q05 = -q95 and q50 = 0, so phi2 and phi4
    # come out exactly zero with no separate case
    phi1 = outer / inner
    phi2 = (q95 + q05 - 2.0 * q50) / outer
    phi3 = inner
    phi4 = 0.0 - q50
    return phi1, phi2, phi3, phi4


def build_lookup(resolution=None, cfg: DistEvalConfig = None) -> QuantileLookup:
    """Generate the lookup tables from the distribution engine.

    resolution is either None for the default 0.1 x 0.25 grid or a pair
    (alpha_grid, beta_grid) of increasing node lists.  Nodes are
    evaluated at nonnegative beta and mirrored through the parity of
    each functional, so symmetric beta grids cost half as much and the
    odd tables are antisymmetric to the bit.  A node whose quantile
    evaluation fails is stored as NaN and skipped at fit time.
    """
    if resolution is None:
        alpha_grid = np.array(_DEFAULT_ALPHA_GRID)
        beta_grid = np.array(_DEFAULT_BETA_GRID)
    else:
        alpha_grid = np.asarray(resolution[0], dtype=np.float64)
        beta_grid = np.asarray(resolution[1], dtype=np.float64)
    shape = (alpha_grid.size, beta_grid.size)
    tables = [np.full(shape, np.nan) for _ in range(4)]
    half = {}
    for i, a in enumerate(alpha_grid):
        for j, b in enumerate(beta_grid):
            key = (float(a), abs(float(b)))
            if key not in half:
                try:
                    half[key] = _node_phis(key[0], key[1], cfg)
                except StableFitError:
                    half[key] = None
            node = half[key]
            if node is None:
                continue
            p1, p2, p3, p4 = node
            if b < 0.0:
                p2, p4 = -p2, -p4
            for t, v in zip(tables, (p1, p2, p3, p4)):
                t[i, j] = v
    return QuantileLookup(alpha_grid, beta_grid, *tables)


def get_default_lookup() -> QuantileLookup:
    """The packaged lookup, loaded once; rebuilt in memory if missing."""
    global _default_lookup
    if _default_lookup is None:
        ref = resources.files("stablefit") / "data" / _CACHE_NAME
        try:
            with resources.as_file(ref) as path:
                _default_lookup = QuantileLookup.load(path)
        except FileNotFoundError:
            _default_lookup = build_lookup()
    return _default_lookup


def _slice_at_beta(table, grid_b, b):
    # one value per alpha row, linearly interpolated across beta
    out = np.empty(table.shape[0])
    for i in range(table.shape[0]):
        row = table[i]
        m = np.isfinite(row)
        out[i] = np.interp(b, grid_b[m], row[m]) if m.sum() >= 2 else np.nan
    return out


def _slice_at_alpha(table, grid_a, a):
    out = np.empty(table.shape[1])
    for j in range(table.shape[1]):
        col = table[:, j]
        m = np.isfinite(col)
        out[j] = np.interp(a, grid_a[m], col[m]) if m.sum() >= 2 else np.nan
    return out


def _inv_interp(vals, grid, target):
    """Invert a monotone tabulated slice, clipping outside its range.

    Returns (value, below, above) where the booleans record saturation
    at the low-grid and high-grid ends.
    """
    m = np.isfinite(vals)
    if m.sum() < 2:
        raise QuantileError("lookup slice has too few valid nodes to invert")
    v = vals[m]
    g = grid[m]
    if v[0] > v[-1]:
        v = v[::-1]
        g = g[::-1]
    t = min(max(target, v[0]), v[-1])
    below_val, above_val = (target < v[0]), (target > v[-1])
    out = float(np.interp(t, v, g))
    if g[0] < g[-1]:
        return out, below_val, above_val
    return out, above_val, below_val


def _bilinear(table, lookup, a, b):
    row = _slice_at_alpha(table, lookup.alpha_grid, a)
    m = np.isfinite(row)
    if m.sum() < 2:
        raise QuantileError("lookup slice has too few valid nodes")
    return float(np.interp(b, lookup.beta_grid[m], row[m]))


def fit_quantile(x: Sample, table: QuantileLookup = None,
                 cfg: DistEvalConfig = None) -> EstimationReport:
    """Estimate all four parameters by inverting the quantile tables.

    The tail-weight and skewness functionals are inverted by alternating
    one-dimensional interpolations until the (alpha, beta) iterate is
    fixed; scale then comes from the interquartile range and location
    from the median plus the tabulated offset.  Samples lighter-tailed
    than the top of the alpha grid pin alpha there with beta forced to
    zero, since skewness is unidentifiable at that boundary.
    """
    if table is None:
        table = get_default_lookup()
    q05, q25, q50, q75, q95 = sample_quantiles(x, _PROBE_PS)
    outer = q95 - q05
    inner = q75 - q25
    if not (outer > 0.0 and inner > 0.0):
        raise EstimationError(
            "sample quantile spread is degenerate; data look discrete "
            "or constant"
        )
    phi1_hat = outer / inner
    phi2_hat = (q95 + q05 - 2.0 * q50) / outer
    flags = []

    top = _slice_at_beta(table.phi1, table.beta_grid, 0.0)
    top_val = top[np.isfinite(top)][-1] if np.isfinite(top).any() else np.nan
    if np.isfinite(top_val) and phi1_hat <= top_val:
        alpha_hat = float(table.alpha_grid[-1])
        beta_hat = 0.0
        flags.append(
            "tail-weight ratio at or below the top-of-grid value; "
            "beta is not identified there and was set to zero"
        )
    else:
        alpha_hat, beta_hat = float(table.alpha_grid[-1]), 0.0
        saturated_low = False
        for _ in range(_MAX_ALTERNATIONS):
            slice1 = _slice_at_beta(table.phi1, table.beta_grid, beta_hat)
            a_new, a_lo, _ = _inv_interp(slice1, table.alpha_grid, phi1_hat)
            slice2 = _slice_at_alpha(table.phi2, table.alpha_grid, a_new)
            b_new, _, _ = _inv_interp(slice2, table.beta_grid, phi2_hat)
            moved = max(abs(a_new - alpha_hat), abs(b_new - beta_hat))
            alpha_hat, beta_hat, saturated_low = a_new, b_new, a_lo
            if moved < _ALTERNATION_TOL:
                break
        else:
            flags.append("alternating table inversion did not fully settle")
        if saturated_low:
            flags.append(
                "alpha saturated the lower table edge; the estimate is "
                "outside the method's calibrated range"
            )
    if abs(alpha_hat - 1.0) < _ALPHA_ONE_CAUTION:
        flags.append(
            "alpha within 0.05 of 1; the location estimate is "
            "low-confidence there"
        )

    phi3 = _bilinear(table.phi3, table, alpha_hat, beta_hat)
    if not (phi3 > 0.0):
        raise EstimationError("tabulated interquartile width is not positive")
    gamma_hat = inner / phi3
    phi4 = _bilinear(table.phi4, table, alpha_hat, beta_hat)
    delta_hat = q50 + gamma_hat * phi4 \
        - skew_location_shift(alpha_hat, beta_hat, gamma_hat)

    outcome = clamp_to_domain(alpha_hat, beta_hat, gamma_hat, delta_hat)
    return EstimationReport(
        params=outcome.params,
        method="quantile",
        points=None,
        eta=None,
        gamma_temp=None,
        iterations=(),
        clamp=outcome,
        n=x.n,
        warnings=tuple(flags),
    )
