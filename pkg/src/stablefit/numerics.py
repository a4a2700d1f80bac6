"""Deterministic scalar numerics: root bracketing, maximization, quadrature.

These routines are the only root-finding / optimization / integration entry
points used by the estimation and distribution modules, so their behavior
(tolerances, iteration caps, determinism) is pinned here in one place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketError, ConvergenceError

_EPS = float(np.finfo(np.float64).eps)
_INVPHI = 0.5 * (math.sqrt(5.0) - 1.0)

# 15-point Kronrod extension of 7-point Gauss, symmetric about 0.
_KR_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_KR_WEIGHTS = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_G7_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
_G7_WEIGHTS = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])


@dataclass(frozen=True)
class BracketedRoot:
    """Converged root with its final enclosure and diagnostics."""

    lo: float
    hi: float
    root: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class QuadratureResult:
    """Integral value with an error estimate and refinement diagnostics."""

    value: float
    error: float
    subdivisions: int
    converged: bool


def find_root(f, lo, hi, tol=1e-10, f_tol=None, max_iter=200):
    """Brent's method on a sign-changing bracket.

    Succeeds when the enclosure shrinks to ``tol`` (plus a machine-precision
    floor relative to the root) or, if ``f_tol`` is given, when the residual
    magnitude drops below it.  Invariant under swapping lo/hi and under
    flipping the sign of f: both are normalized away before iterating.
    """
    lo = float(lo)
    hi = float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo == hi:
        raise BracketError(f"degenerate bracket [{lo}, {hi}]")
    a, b = (lo, hi) if lo < hi else (hi, lo)
    fa = float(f(a))
    fb = float(f(b))
    sign = -1.0 if fa > 0.0 else 1.0
    fa *= sign
    fb *= sign
    if fa * fb > 0.0:
        raise BracketError(
            f"no sign change on [{a}, {b}]: f values {sign * fa}, {sign * fb}"
        )
    c, fc = a, fa
    d = e = b - a
    iterations = 0
    while True:
        iterations += 1
        if iterations > max_iter:
            raise ConvergenceError(
                f"root not located within {max_iter} iterations"
            )
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * _EPS * abs(b) + 0.5 * tol
        xm = 0.5 * (c - b)
        if (abs(xm) <= tol1 or fb == 0.0
                or (f_tol is not None and abs(fb) <= f_tol)):
            width = max(tol1, abs(c - b))
            return BracketedRoot(lo=b - width, hi=b + width, root=b,
                                 residual=sign * fb, iterations=iterations)
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = xm
                e = d
        else:
            d = xm
            e = d
        a, fa = b, fb
        if abs(d) > tol1:
            b += d
        else:
            b += tol1 if xm > 0.0 else -tol1
        fb = sign * float(f(b))


def maximize_scalar(f, lo, hi, tol=1e-9, max_iter=300):
    """Golden-section search for the maximizer of f on [lo, hi].

    Assumes unimodality on the bracket; on a flat function it converges to an
    interior point.  Deterministic for deterministic f.
    """
    lo = float(lo)
    hi = float(hi)
    if not hi > lo:
        raise BracketError(f"degenerate bracket [{lo}, {hi}]")
    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1 = float(f(x1))
    f2 = float(f(x2))
    it = 0
    while b - a > tol and it < max_iter:
        it += 1
        if f1 < f2:
            a = x1
            x1, f1 = x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = float(f(x2))
        else:
            b = x2
            x2, f2 = x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = float(f(x1))
    return 0.5 * (a + b)


def _eval_nodes(f, nodes):
    """Evaluate f on a 1-d node array, tolerating scalar-only callables."""
    try:
        out = np.asarray(f(nodes), dtype=np.float64)
        if out.shape == nodes.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(f(x)) for x in nodes], dtype=np.float64)


def _panel_rule(fv, half_width):
    k15 = half_width * float(fv @ _KR_WEIGHTS)
    g7 = half_width * float(fv[_G7_IDX] @ _G7_WEIGHTS)
    return k15, abs(k15 - g7)


def integrate(f, lo, hi, abs_tol=1e-9, max_subdivisions=2000,
              initial_edges=None):
    """Adaptive Gauss-Kronrod quadrature of f over [lo, hi].

    Each panel's value uses the 15-point Kronrod rule; the gap to the embedded
    7-point Gauss rule serves as the error estimate, and the worst panel is
    bisected until the summed estimate meets ``abs_tol`` or the refinement
    budget ``max_subdivisions`` is spent.  ``initial_edges`` seeds the panel
    decomposition (useful for oscillatory integrands) and does not count
    against the budget.  The result reports whether the tolerance was met;
    callers decide how to surface an unconverged estimate.
    """
    lo = float(lo)
    hi = float(hi)
    sign = 1.0
    if lo == hi:
        return QuadratureResult(0.0, 0.0, 0, True)
    if lo > hi:
        lo, hi = hi, lo
        sign = -1.0
    if initial_edges is None:
        edges = np.array([lo, hi])
    else:
        interior = np.asarray(initial_edges, dtype=np.float64)
        interior = interior[(interior > lo) & (interior < hi)]
        edges = np.unique(np.concatenate(([lo, hi], interior)))
    lefts = edges[:-1]
    rights = edges[1:]
    mids = 0.5 * (lefts + rights)
    halves = 0.5 * (rights - lefts)
    nodes = mids[:, None] + halves[:, None] * _KR_NODES[None, :]
    fv = _eval_nodes(f, nodes.ravel()).reshape(nodes.shape)
    k15 = halves * (fv @ _KR_WEIGHTS)
    g7 = halves * (fv[:, _G7_IDX] @ _G7_WEIGHTS)
    panels = [(float(la), float(rb), float(v), float(abs(v - g)))
              for la, rb, v, g in zip(lefts, rights, k15, g7)]
    splits = 0
    while splits < max_subdivisions:
        total_err = math.fsum(p[3] for p in panels)
        if total_err <= abs_tol:
            break
        worst = max(range(len(panels)), key=lambda i: (panels[i][3], -panels[i][0]))
        a, b, _, _ = panels[worst]
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        new = []
        for aa, bb in ((a, m), (m, b)):
            half = 0.5 * (bb - aa)
            sub_nodes = 0.5 * (aa + bb) + half * _KR_NODES
            sub_fv = _eval_nodes(f, sub_nodes)
            val, err = _panel_rule(sub_fv, half)
            new.append((aa, bb, val, err))
        panels[worst:worst + 1] = new
        splits += 1
    panels.sort(key=lambda p: p[0])
    value = math.fsum(p[2] for p in panels)
    error = math.fsum(p[3] for p in panels)
    return QuadratureResult(value=sign * value, error=error,
                            subdivisions=splits, converged=error <= abs_tol)
