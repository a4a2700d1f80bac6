"""Hot numeric loops in two interchangeable implementations.

Functions suffixed _nb are numba-compiled, those suffixed _np are pure numpy;
the unsuffixed wrappers dispatch between them per call based on the backend
flag.  The compiled loops use compensated (Kahan) accumulation and the numpy
twins rely on pairwise summation, so both stay accurate on sums over 1e5-scale
samples and the two backends agree to near machine precision.

No parallel execution and no fastmath: the kernels must give bit-stable
results and stay safe under process forking in the benchmark harness.
"""
import math

import numpy as np

from .backends import HAVE_NUMBA, numba_active


def _ecf_sums_loops(x, k, out_re, out_im):
    for j in range(k.shape[0]):
        kj = k[j]
        s_re = 0.0
        c_re = 0.0
        s_im = 0.0
        c_im = 0.0
        for i in range(x.shape[0]):
            t = kj * x[i]
            y = math.cos(t) - c_re
            acc = s_re + y
            c_re = (acc - s_re) - y
            s_re = acc
            y = math.sin(t) - c_im
            acc = s_im + y
            c_im = (acc - s_im) - y
            s_im = acc
        out_re[j] = s_re
        out_im[j] = s_im


def _cf_inversion_sums_loops(z, k, a, b, c, d, out_big, out_small):
    # out_big collects the 1/k-weighted (distribution) series,
    # out_small the unweighted (density) series
    for i in range(z.shape[0]):
        zi = z[i]
        acc_big = 0.0
        acc_small = 0.0
        for j in range(k.shape[0]):
            t = zi * k[j]
            s = math.sin(t)
            co = math.cos(t)
            acc_big += a[j] * s - b[j] * co
            acc_small += c[j] * co + d[j] * s
        out_big[i] = acc_big
        out_small[i] = acc_small


if HAVE_NUMBA:
    from numba import njit

    _ecf_sums_nb = njit(cache=True)(_ecf_sums_loops)
    _cf_inversion_sums_nb = njit(cache=True)(_cf_inversion_sums_loops)
else:  # pragma: no cover - exercised only on numba-free installs
    _ecf_sums_nb = None
    _cf_inversion_sums_nb = None

_CHUNK_ELEMS = 4_000_000


def _ecf_sums_np(x, k):
    parts_re = []
    parts_im = []
    step = max(1, _CHUNK_ELEMS // max(1, k.shape[0]))
    for s in range(0, x.shape[0], step):
        t = k[:, None] * x[None, s:s + step]
        parts_re.append(np.cos(t).sum(axis=1))
        parts_im.append(np.sin(t).sum(axis=1))
    return (np.sum(parts_re, axis=0), np.sum(parts_im, axis=0))


def _cf_inversion_sums_np(z, k, a, b, c, d):
    out_big = np.empty(z.shape[0])
    out_small = np.empty(z.shape[0])
    step = max(1, _CHUNK_ELEMS // max(1, k.shape[0]))
    for s in range(0, z.shape[0], step):
        t = z[s:s + step, None] * k[None, :]
        sn = np.sin(t)
        cs = np.cos(t)
        out_big[s:s + step] = sn @ a - cs @ b
        out_small[s:s + step] = cs @ c + sn @ d
    return out_big, out_small


def ecf_sums(x, k):
    """Sums of cos(k_j x_i) and sin(k_j x_i) over i, one pair per frequency."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    k = np.ascontiguousarray(k, dtype=np.float64)
    if numba_active():
        out_re = np.empty(k.shape[0])
        out_im = np.empty(k.shape[0])
        _ecf_sums_nb(x, k, out_re, out_im)
        return out_re, out_im
    return _ecf_sums_np(x, k)


def cf_inversion_sums(z, k, a, b, c, d):
    """Weighted trigonometric sums over a frequency grid, per evaluation point.

    Returns (sum_j a_j sin(z k_j) - b_j cos(z k_j),
             sum_j c_j cos(z k_j) + d_j sin(z k_j)) for each z.
    """
    z = np.ascontiguousarray(z, dtype=np.float64)
    k = np.ascontiguousarray(k, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    if numba_active():
        out_big = np.empty(z.shape[0])
        out_small = np.empty(z.shape[0])
        _cf_inversion_sums_nb(z, k, a, b, c, d, out_big, out_small)
        return out_big, out_small
    return _cf_inversion_sums_np(z, k, a, b, c, d)
