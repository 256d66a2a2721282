"""Non-convex decomposition: HOOI with trace-norm penalties on the core.

Solves ``min sum_n ||G_(n)||_tr + (lam/2) ||T - G ×_1 U_1 ... ×_N U_N||^2``
over orthonormal-column factors by ADMM on the split ``G_n = G_(n)``.
Only the small ``R_n x prod_{j != n} R_j`` core unfoldings are ever
decomposed; the factor step is an ``I_n x R_n`` Procrustes problem.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels, linalg
from .baselines import check_ranks
from .config import SolverConfig
from .model import FactorModel, IterationRecord, SolveReport
from .tensor import frob_norm, multi_mode_product, refold, unfold

__all__ = [
    "NctdState",
    "NctdResult",
    "init_state",
    "project",
    "nctd_decompose",
    "update_core",
    "update_factor",
    "update_aux",
    "factor_target",
    "h_value",
    "split_objective",
]


@dataclass
class NctdState:
    core: np.ndarray
    factors: list[np.ndarray]
    aux: list[np.ndarray]
    duals: list[np.ndarray]
    mu: float
    iter: int = 0


@dataclass
class NctdResult:
    model: FactorModel
    report: SolveReport
    state: NctdState

    @property
    def x(self) -> np.ndarray:
        return self.model.reconstruct()


def init_state(dims: Sequence[int], ranks: Sequence[int], mu0: float, seed=None) -> NctdState:
    """Zero core/aux/duals; factors are QR-orthonormalized Gaussian draws."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    factors = []
    for d, r in zip(dims, ranks):
        q, _ = np.linalg.qr(rng.standard_normal((d, r)))
        factors.append(np.ascontiguousarray(q))
    ranks = tuple(ranks)
    aux, duals = [], []
    for n, r in enumerate(ranks):
        shape = (r, int(np.prod(ranks)) // r)
        aux.append(np.zeros(shape))
        duals.append(np.zeros(shape))
    return NctdState(np.zeros(ranks), factors, aux, duals, mu0)


def project(t: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    """``t ×_1 U_1^T ... ×_N U_N^T``."""
    return multi_mode_product(t, factors, transpose=True)


def update_core(state: NctdState, cfg: SolverConfig, t: np.ndarray, projected: np.ndarray | None = None) -> np.ndarray:
    """Exact minimizer of the augmented Lagrangian over the core for fixed factors."""
    n_modes = t.ndim
    mu = state.mu
    if projected is None:
        projected = project(t, state.factors)
    ranks = state.core.shape
    acc = np.zeros(ranks)
    for n in range(n_modes):
        acc += refold(state.aux[n] - state.duals[n] / mu, n, ranks)
    denom = cfg.lam + n_modes * mu
    return (cfg.lam / denom) * projected + (mu / denom) * acc


def factor_target(t: np.ndarray, core: np.ndarray, factors: Sequence[np.ndarray], mode: int) -> np.ndarray:
    """``T_(n) W_n^T`` with ``W_n = G_(n) (⊗_{j != n} U_j)^T``, Kronecker-free.

    Evaluated as ``unfold(t ×_{j != n} U_j^T, n) @ G_(n)^T``; the
    Kronecker factor is absorbed by the mode products.
    """
    y = multi_mode_product(t, factors, transpose=True, skip=mode)
    return unfold(y, mode) @ unfold(core, mode).T


def h_value(t: np.ndarray, core: np.ndarray, factors: Sequence[np.ndarray]) -> float:
    """``<T, G ×_1 U_1 ... ×_N U_N>``."""
    return float(np.vdot(project(t, factors), core))


def update_factor(state: NctdState, t: np.ndarray, mode: int) -> np.ndarray:
    """Procrustes step: orthonormal ``U_n`` maximizing ``h`` with the rest fixed."""
    return linalg.procrustes(factor_target(t, state.core, state.factors, mode))


def update_aux(state: NctdState, cfg: SolverConfig, mode: int, tau: float | None = None, weight: float = 1.0) -> np.ndarray:
    n_modes = state.core.ndim
    mu = state.mu
    if tau is None:
        tau = cfg.taus(mu, n_modes, n_modes)[mode]
    g_n = unfold(state.core, mode)
    avg = kernels.prox_average(g_n, state.duals[mode], state.aux[mode], mu, tau, sign=1.0)
    return linalg.svt(avg, weight / (mu + tau))


def split_objective(state: NctdState, cfg: SolverConfig, t: np.ndarray, core: np.ndarray | None = None) -> float:
    """Augmented core objective ``sum_n (mu/2)||G_(n) - G_n + Y_n/mu||^2
    + (lam/2)||T - G ×_n U_n||^2`` for the current factors."""
    core = state.core if core is None else core
    mu = state.mu
    acc = 0.0
    for n in range(core.ndim):
        d = unfold(core, n) - state.aux[n] + state.duals[n] / mu
        acc += 0.5 * mu * float(np.vdot(d, d))
    x = multi_mode_product(core, state.factors)
    return acc + 0.5 * cfg.lam * frob_norm(t - x) ** 2


def _x_rel_change(core_new, factors_new, core_old, factors_old) -> float:
    # ||X_new - X_old|| with X = G ×_n U_n, orthonormal U_n, never forming X
    cross = multi_mode_product(core_old, [un.T @ uo for un, uo in zip(factors_new, factors_old)])
    a2 = float(np.vdot(core_new, core_new))
    b2 = float(np.vdot(core_old, core_old))
    d2 = max(a2 + b2 - 2.0 * float(np.vdot(core_new, cross)), 0.0)
    denom = np.sqrt(max(a2, b2))
    return float(np.sqrt(d2) / denom) if denom > 0 else 0.0


def nctd_decompose(
    t: np.ndarray,
    ranks: Sequence[int],
    cfg: SolverConfig | None = None,
    seed=0,
) -> NctdResult:
    """Run the non-convex solver with working ranks ``ranks``.

    Each iteration updates the core, then for every mode (against the same
    core snapshot) the factor, the auxiliary unfolding and the multiplier,
    and finally grows ``mu``. Stops when ``max_n ||G_(n) - G_n||_F`` falls
    below ``cfg.tol``; otherwise the last iterate is returned with
    ``report.converged`` False.
    """
    cfg = SolverConfig.nctd_defaults() if cfg is None else cfg
    t = np.ascontiguousarray(t, dtype=np.float64)
    n_modes = t.ndim
    ranks = check_ranks(t.shape, ranks)
    cfg.validate(n_modes, n_modes)
    weights = cfg.mode_weights(n_modes)

    start = time.perf_counter()
    report = SolveReport("nctd")
    state = init_state(t.shape, ranks, cfg.mu0, seed)
    t_sq = frob_norm(t) ** 2
    pool = ThreadPoolExecutor(cfg.n_jobs) if cfg.n_jobs > 1 else None
    projected = project(t, state.factors)

    try:
        for it in range(1, cfg.max_iter + 1):
            mu = state.mu
            taus = cfg.taus(mu, n_modes, n_modes)
            core_old, factors_old = state.core, list(state.factors)
            state.core = update_core(state, cfg, t, projected)

            def _mode(n):
                u = state.factors[n]
                snap = state
                for _ in range(cfg.inner_sweeps):
                    u = update_factor(snap, t, n)
                    if cfg.inner_sweeps > 1:
                        snap = NctdState(
                            state.core,
                            [u if j == n else f for j, f in enumerate(state.factors)],
                            state.aux,
                            state.duals,
                            mu,
                        )
                return u, update_aux(state, cfg, n, taus[n], weights[n])

            outs = list(pool.map(_mode, range(n_modes))) if pool else [_mode(n) for n in range(n_modes)]

            residual = 0.0
            step = cfg.gamma * mu
            for n, (u, g_n) in enumerate(outs):
                state.factors[n] = u
                state.aux[n] = g_n
                residual = max(residual, kernels.dual_step(state.duals[n], unfold(state.core, n), g_n, step))

            projected = project(t, state.factors)
            rel_change = _x_rel_change(state.core, state.factors, core_old, factors_old)
            fit_sq = max(t_sq - 2.0 * float(np.vdot(projected, state.core)) + float(np.vdot(state.core, state.core)), 0.0)
            tr = sum(w * linalg.trace_norm(g) for w, g in zip(weights, state.aux))
            state.mu = min(cfg.rho * mu, cfg.mu_max) if cfg.adaptive_mu else mu
            state.iter = it
            report.iterations.append(
                IterationRecord(it, residual, rel_change, tr + 0.5 * cfg.lam * fit_sq, 1e3 * (time.perf_counter() - start))
            )
            if residual < cfg.tol:
                report.converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()

    report.wall_ms = 1e3 * (time.perf_counter() - start)
    if not report.converged:
        report.message = f"stopped at max_iter={cfg.max_iter}"
    model = FactorModel(state.core.copy(), [f.copy() for f in state.factors])
    return NctdResult(model, report, state)
