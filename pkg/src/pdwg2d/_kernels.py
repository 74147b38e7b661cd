"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

All assembly reductions funnel through three batched primitives:

* ``weighted_gram(vals, wts)``   -> ``M[e,i,j] = sum_q wts[e,q] vals[e,q,i] vals[e,q,j]``
* ``weighted_pair(A, B, wts)``   -> ``M[e,i,j] = sum_q wts[e,q] A[e,q,i] B[e,q,j]``
* ``batch_solve(M, R)``          -> per-element dense solves ``M[e] X[e] = R[e]``

Set ``PDWG2D_DISABLE_NUMBA=1`` to force the numpy implementations (used by
the backend-agreement tests and the benchmark in ``benchmarks/``).
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("PDWG2D_DISABLE_NUMBA", "0") == "1"

try:
    if _DISABLED:
        raise ImportError
    import numba

    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False


def backend() -> str:
    return "numba" if _HAVE_NUMBA else "numpy"


# -- pure-numpy implementations --------------------------------------------

def _weighted_gram_np(vals, wts):
    return np.einsum("eq,eqi,eqj->eij", wts, vals, vals)


def _weighted_pair_np(a, b, wts):
    return np.einsum("eq,eqi,eqj->eij", wts, a, b)


def _batch_solve_np(m, r):
    return np.linalg.solve(m, r)


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _weighted_gram_nb(vals, wts):  # pragma: no cover - compiled
        ne, nq, ni = vals.shape
        out = np.zeros((ne, ni, ni))
        for e in range(ne):
            for q in range(nq):
                w = wts[e, q]
                for i in range(ni):
                    vi = w * vals[e, q, i]
                    for j in range(i, ni):
                        out[e, i, j] += vi * vals[e, q, j]
        for e in range(ne):
            for i in range(ni):
                for j in range(i):
                    out[e, i, j] = out[e, j, i]
        return out

    @numba.njit(cache=True)
    def _weighted_pair_nb(a, b, wts):  # pragma: no cover - compiled
        ne, nq, ni = a.shape
        nj = b.shape[2]
        out = np.zeros((ne, ni, nj))
        for e in range(ne):
            for q in range(nq):
                w = wts[e, q]
                for i in range(ni):
                    vi = w * a[e, q, i]
                    for j in range(nj):
                        out[e, i, j] += vi * b[e, q, j]
        return out

    @numba.njit(cache=True)
    def _batch_solve_nb(m, r):  # pragma: no cover - compiled
        ne = m.shape[0]
        out = np.empty_like(r)
        for e in range(ne):
            out[e] = np.linalg.solve(m[e], r[e])
        return out

    weighted_gram = _weighted_gram_nb
    weighted_pair = _weighted_pair_nb
    batch_solve = _batch_solve_nb
else:
    weighted_gram = _weighted_gram_np
    weighted_pair = _weighted_pair_np
    batch_solve = _batch_solve_np
