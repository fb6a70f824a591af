"""Hot inner loops: numba-compiled when available, numpy otherwise.

Set ``CONFNULL_DISABLE_NUMBA=1`` to force the numpy path. Both paths are
always importable (``*_numpy`` / ``*_numba``) so they can be compared.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_DISABLED = os.environ.get("CONFNULL_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
HAS_NUMBA = numba is not None
USE_NUMBA = HAS_NUMBA and not _DISABLED


def propagate_numpy(x0, step, inflow, forcing):
    """Mode-wise variation of constants on a panel grid.

    ``x[k+1] = step[k] * x[k] + sum_j inflow[k, j] * forcing[k, j]``

    Shapes: ``x0 (N,)``, ``step (K-1, N)``, ``inflow``/``forcing (K-1, q, N)``.
    Returns ``(K, N)``.
    """
    gain = np.einsum("kjn,kjn->kn", inflow, forcing)
    out = np.empty((step.shape[0] + 1, x0.shape[0]))
    out[0] = x0
    for k in range(step.shape[0]):
        out[k + 1] = step[k] * out[k] + gain[k]
    return out


def weighted_sum_numpy(weights, values):
    """``sum_{k,j} weights[k, j, n] * values[k, j, n]`` per mode."""
    return np.einsum("kjn,kjn->n", weights, values)


def interp_rows_numpy(rows, index, frac):
    """Linear interpolation between ``rows[index]`` and ``rows[index + 1]``."""
    f = frac[..., None]
    return (1.0 - f) * rows[index] + f * rows[index + 1]


if HAS_NUMBA:

    @numba.njit(cache=True)
    def propagate_numba(x0, step, inflow, forcing):
        kk, q = inflow.shape[0], inflow.shape[1]
        n = x0.shape[0]
        out = np.empty((kk + 1, n))
        for m in range(n):
            out[0, m] = x0[m]
        for k in range(kk):
            for m in range(n):
                acc = step[k, m] * out[k, m]
                for j in range(q):
                    acc += inflow[k, j, m] * forcing[k, j, m]
                out[k + 1, m] = acc
        return out

    @numba.njit(cache=True)
    def weighted_sum_numba(weights, values):
        kk, q, n = weights.shape
        out = np.zeros(n)
        for k in range(kk):
            for j in range(q):
                for m in range(n):
                    out[m] += weights[k, j, m] * values[k, j, m]
        return out

    @numba.njit(cache=True)
    def _interp_flat(rows, index, frac):
        p = index.shape[0]
        n = rows.shape[1]
        out = np.empty((p, n))
        for i in range(p):
            f = frac[i]
            a = index[i]
            for m in range(n):
                out[i, m] = (1.0 - f) * rows[a, m] + f * rows[a + 1, m]
        return out

    def interp_rows_numba(rows, index, frac):
        shape = index.shape
        out = _interp_flat(rows, index.ravel(), frac.ravel())
        return out.reshape(shape + (rows.shape[1],))

else:  # pragma: no cover
    propagate_numba = propagate_numpy
    weighted_sum_numba = weighted_sum_numpy
    interp_rows_numba = interp_rows_numpy


if USE_NUMBA:
    propagate = propagate_numba
    weighted_sum = weighted_sum_numba
    interp_rows = interp_rows_numba
else:
    propagate = propagate_numpy
    weighted_sum = weighted_sum_numpy
    interp_rows = interp_rows_numpy


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
