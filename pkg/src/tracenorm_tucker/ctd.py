"""Convex trace-norm regularized decomposition via Jacobi-parallel ADMM.

Solves ``min_X sum_n a_n ||X_(n)||_tr + (lam/2) ||X - T||_F^2`` by
splitting ``X`` into per-mode copies ``M_n`` tied by multipliers ``Y_n``.
All ``M_n`` updates read the same snapshot of ``(X, Y)``, so they are
independent of each other and may run on a thread pool.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import ConfigError, SolverConfig, min_tau
from .linalg import numerical_rank, svt
from .model import FactorModel, IterationRecord, SolveReport
from .tensor import frob_norm, multi_mode_product, refold, unfold

__all__ = [
    "CtdState",
    "CtdResult",
    "DivergenceError",
    "ctd_decompose",
    "update_m",
    "update_x",
    "estimate_ranks",
]


class DivergenceError(RuntimeError):
    pass


@dataclass
class CtdState:
    x: np.ndarray
    m: np.ndarray  # (N, *dims)
    y: np.ndarray  # (N, *dims)
    mu: float
    iter: int = 0
    residual_history: list[float] = field(default_factory=list)
    # per-mode (left singular vectors, shrunk singular values) from the last M update
    spectra: list = field(default_factory=list)

    @classmethod
    def zeros(cls, dims, mu: float) -> "CtdState":
        n = len(dims)
        return cls(
            x=np.zeros(dims),
            m=np.zeros((n,) + tuple(dims)),
            y=np.zeros((n,) + tuple(dims)),
            mu=mu,
        )


@dataclass
class CtdResult:
    x: np.ndarray
    model: FactorModel
    mode_ranks: tuple[int, ...]
    report: SolveReport
    state: CtdState


def update_m(state: CtdState, cfg: SolverConfig, mode: int, tau: float | None = None, weight: float = 1.0):
    """Proximal update of the mode-``mode`` copy ``M_n``.

    Returns ``(M_n_new, u, s_shrunk)`` where ``u`` and ``s_shrunk`` are the
    left singular vectors and thresholded singular values of its unfolding.
    """
    n_modes = state.x.ndim
    if tau is None:
        tau = cfg.taus(state.mu, n_modes, n_modes + 1)[mode]
    mu = state.mu
    avg = kernels.prox_average(state.x, state.y[mode], state.m[mode], mu, tau, sign=-1.0)
    threshold = weight / (mu + tau)
    z, s, u = svt(unfold(avg, mode), threshold, return_singular_values=True)
    shrunk = np.maximum(s - threshold, 0.0)
    return refold(z, mode, state.x.shape), u, shrunk


def update_x(state: CtdState, cfg: SolverConfig, t: np.ndarray, tau: float | None = None) -> np.ndarray:
    """Closed-form X update: weighted average of the copies, data and old X."""
    n_modes = t.ndim
    if tau is None:
        tau = cfg.taus(state.mu, n_modes, n_modes + 1)[n_modes]
    return kernels.consensus_average(state.m, state.y, t, state.x, state.mu, cfg.lam, tau)


def estimate_ranks(state: CtdState) -> tuple[int, ...]:
    """Numerical rank of each ``unfold(M_n, n)`` at the 1% threshold."""
    if state.spectra:
        return tuple(numerical_rank(s) for _, s in state.spectra)
    ranks = []
    for n in range(state.x.ndim):
        s = np.linalg.svd(unfold(state.m[n], n), compute_uv=False)
        ranks.append(numerical_rank(s))
    return tuple(ranks)


def _objective(spectra, weights, x, t, lam) -> float:
    tr = sum(w * float(np.sum(s)) for w, (_, s) in zip(weights, spectra))
    return tr + 0.5 * lam * kernels.diff_norm(x, t) ** 2


def ctd_decompose(t: np.ndarray, cfg: SolverConfig | None = None) -> CtdResult:
    """Run the convex solver on ``t``.

    Stops when ``max(||X^{k+1} - X^k|| / ||X^k||, max_n ||M_n - X|| / ||T||)``
    drops below ``cfg.tol``. The returned model's factors are the leading
    left singular vectors of the final shrinkage SVDs, truncated to the
    estimated ranks, and its core is ``X ×_n U_n^T``.

    Raises
    ------
    ConfigError
        If ``cfg`` is invalid.
    DivergenceError
        If the feasibility residual grows tenfold over 20 iterations.
    """
    cfg = SolverConfig.ctd_defaults() if cfg is None else cfg
    t = np.ascontiguousarray(t, dtype=np.float64)
    n_modes = t.ndim
    cfg.validate(n_modes, n_modes + 1)
    weights = cfg.mode_weights(n_modes)

    start = time.perf_counter()
    report = SolveReport("ctd")
    state = CtdState.zeros(t.shape, cfg.mu0)
    t_norm = frob_norm(t)
    scale = t_norm if t_norm > 0 else 1.0
    pool = ThreadPoolExecutor(cfg.n_jobs) if cfg.n_jobs > 1 else None

    try:
        for it in range(1, cfg.max_iter + 1):
            taus = cfg.taus(state.mu, n_modes, n_modes + 1)
            if not cfg.adaptive_mu and cfg.tau is None and np.any(taus <= min_tau(state.mu, n_modes, cfg.gamma)):
                raise ConfigError("derived tau violates the convergence condition")

            def _m(n):
                return update_m(state, cfg, n, taus[n], weights[n])

            outs = list(pool.map(_m, range(n_modes))) if pool else [_m(n) for n in range(n_modes)]
            x_new = update_x(state, cfg, t, taus[n_modes])

            m_new = np.stack([o[0] for o in outs])
            feas = 0.0
            step = cfg.gamma * state.mu
            for n in range(n_modes):
                feas = max(feas, kernels.dual_step(state.y[n], m_new[n], x_new, step))

            dx = kernels.diff_norm(x_new, state.x)
            denom = max(frob_norm(state.x), frob_norm(x_new))
            rel_change = dx / denom if denom > 0 else 0.0
            state.x = x_new
            state.m = m_new
            state.spectra = [(o[1], o[2]) for o in outs]
            state.iter = it
            residual = feas / scale
            state.residual_history.append(residual)
            report.iterations.append(
                IterationRecord(
                    it,
                    residual,
                    rel_change,
                    _objective(state.spectra, weights, state.x, t, cfg.lam),
                    1e3 * (time.perf_counter() - start),
                )
            )

            if max(rel_change, residual) < cfg.tol:
                report.converged = True
                break
            hist = state.residual_history
            if it > 20 and hist[-21] > 0 and hist[-1] > 10.0 * hist[-21] and hist[-1] > cfg.tol:
                raise DivergenceError(
                    f"feasibility residual grew from {hist[-21]:.3e} to {hist[-1]:.3e} "
                    f"over iterations {it - 20}..{it}"
                )
            if cfg.adaptive_mu:
                state.mu = min(cfg.rho * state.mu, cfg.mu_max)
    finally:
        if pool is not None:
            pool.shutdown()

    report.wall_ms = 1e3 * (time.perf_counter() - start)
    if not report.converged:
        report.message = f"stopped at max_iter={cfg.max_iter}"

    ranks = estimate_ranks(state)
    factors = [np.ascontiguousarray(u[:, :r]) for (u, _), r in zip(state.spectra, ranks)]
    core = multi_mode_product(state.x, factors, transpose=True)
    return CtdResult(state.x, FactorModel(core, factors), ranks, report, state)
