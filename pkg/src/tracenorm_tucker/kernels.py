"""Fused elementwise kernels for the ADMM inner loops.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version. The numba path is used when numba imports cleanly and the
environment variable ``TRACENORM_TUCKER_NUMBA`` is not set to ``0``.
Both paths take flat, C-contiguous float64 arrays.

The numba versions walk the buffers once without temporaries; the numpy
versions allocate. Results agree to rounding (summation order differs in
the norm reductions).
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "USE_NUMBA",
    "backend",
    "prox_average",
    "consensus_average",
    "dual_step",
    "diff_norm",
]


def _numba_requested() -> bool:
    return os.environ.get("TRACENORM_TUCKER_NUMBA", "1").strip().lower() not in ("0", "false", "off", "no")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by TRACENORM_TUCKER_NUMBA")
    from numba import njit

    USE_NUMBA = True
except ImportError:
    USE_NUMBA = False


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# -- numpy reference path -------------------------------------------------


def _prox_average_np(x, y, m, mu, tau, sign):
    # (mu*x + sign*y + tau*m) / (mu + tau)
    return (mu * x + sign * y + tau * m) / (mu + tau)


def _consensus_average_np(ms, ys, t, x_prev, mu, lam, tau):
    num = mu * ms.sum(axis=0) + ys.sum(axis=0) + lam * t + tau * x_prev
    return num / (ms.shape[0] * mu + lam + tau)


def _dual_step_np(y, a, b, step):
    d = a - b
    y += step * d
    return float(np.sqrt(np.dot(d, d)))


def _diff_norm_np(a, b):
    d = a - b
    return float(np.sqrt(np.dot(d, d)))


# -- numba path -------------------------------------------------------------

if USE_NUMBA:

    @njit(cache=True, fastmath=False)
    def _prox_average_nb(x, y, m, mu, tau, sign):
        out = np.empty_like(x)
        inv = 1.0 / (mu + tau)
        for i in range(x.size):
            out[i] = (mu * x[i] + sign * y[i] + tau * m[i]) * inv
        return out

    @njit(cache=True, fastmath=False)
    def _consensus_average_nb(ms, ys, t, x_prev, mu, lam, tau):
        n_modes, size = ms.shape
        out = np.empty(size)
        inv = 1.0 / (n_modes * mu + lam + tau)
        for i in range(size):
            acc = 0.0
            for n in range(n_modes):
                acc += mu * ms[n, i] + ys[n, i]
            out[i] = (acc + lam * t[i] + tau * x_prev[i]) * inv
        return out

    @njit(cache=True, fastmath=False)
    def _dual_step_nb(y, a, b, step):
        acc = 0.0
        for i in range(y.size):
            d = a[i] - b[i]
            y[i] += step * d
            acc += d * d
        return np.sqrt(acc)

    @njit(cache=True, fastmath=False)
    def _diff_norm_nb(a, b):
        acc = 0.0
        for i in range(a.size):
            d = a[i] - b[i]
            acc += d * d
        return np.sqrt(acc)


def _flat(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64).reshape(-1)


def prox_average(x, y, m, mu: float, tau: float, sign: float = 1.0) -> np.ndarray:
    """``(mu*x + sign*y + tau*m) / (mu + tau)``, shaped like ``x``.

    This is the point handed to the trace-norm prox in both solvers; the
    convex solver passes ``sign=-1``.
    """
    shape = np.shape(x)
    args = (_flat(x), _flat(y), _flat(m), float(mu), float(tau), float(sign))
    out = _prox_average_nb(*args) if USE_NUMBA else _prox_average_np(*args)
    return out.reshape(shape)


def consensus_average(ms, ys, t, x_prev, mu: float, lam: float, tau: float) -> np.ndarray:
    """Closed-form minimizer of the proximal X-subproblem.

    ``ms`` and ``ys`` are stacked as ``(N, *dims)``.
    """
    shape = np.shape(t)
    n = len(ms)
    ms2 = np.ascontiguousarray(ms, dtype=np.float64).reshape(n, -1)
    ys2 = np.ascontiguousarray(ys, dtype=np.float64).reshape(n, -1)
    args = (ms2, ys2, _flat(t), _flat(x_prev), float(mu), float(lam), float(tau))
    out = _consensus_average_nb(*args) if USE_NUMBA else _consensus_average_np(*args)
    return out.reshape(shape)


def dual_step(y: np.ndarray, a, b, step: float) -> float:
    """In place ``y += step * (a - b)``; returns ``||a - b||_F``.

    ``y`` must be C-contiguous float64 so that the update is visible to
    the caller.
    """
    if not (y.flags.c_contiguous and y.dtype == np.float64):
        raise ValueError("dual buffer must be C-contiguous float64")
    yf = y.reshape(-1)
    if USE_NUMBA:
        return float(_dual_step_nb(yf, _flat(a), _flat(b), float(step)))
    return _dual_step_np(yf, _flat(a), _flat(b), float(step))


def diff_norm(a, b) -> float:
    """``||a - b||_F`` without keeping the difference around."""
    if np.shape(a) != np.shape(b):
        raise ValueError(f"shape mismatch {np.shape(a)} vs {np.shape(b)}")
    if USE_NUMBA:
        return float(_diff_norm_nb(_flat(a), _flat(b)))
    return _diff_norm_np(_flat(a), _flat(b))
