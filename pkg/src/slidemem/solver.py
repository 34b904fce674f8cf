"""Collocation solver for T-periodic substrate profiles.

The reduced equation ``D s = f(t, s)`` is collocated at the equispaced grid
nodes, with the derivative represented by its dense nodal matrix, and the
resulting nonlinear system is solved by damped Newton iteration.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import rgamma

from .fracops import (
    CfdsOperator,
    PeriodicGrid,
    apply,
    build_operator,
    _weakly_singular,
    cfds_direct_nodes,
    shifted_samples,
    trig_eval,
)
from .model import (
    ChemostatParams,
    DilutionSchedule,
    biomass_from_substrate,
    contois_mu,
    rhs_df_ds,
    rhs_f,
)

__all__ = [
    "Classification",
    "SolveConfig",
    "PeriodicSolution",
    "MultistartResult",
    "Bucket",
    "TwoDimSolution",
    "operator_for",
    "residual",
    "jacobian",
    "solve",
    "multistart",
    "random_guess",
    "interpolate",
    "solve_2d",
    "energy_residual",
    "volterra_residual",
    "direct_residual",
]

log = logging.getLogger(__name__)


class Classification(str, enum.Enum):
    NON_TRIVIAL = "NonTrivial"
    TRIVIAL_WASHOUT = "TrivialWashout"
    NOT_CONVERGED = "NotConverged"


@dataclass(frozen=True)
class SolveConfig:
    node_count: int = 100
    interpolation_count: int = 200
    newton_tol: float = 1e-12
    max_iterations: int = 200
    backtrack: float = 0.5
    min_step: float = 2.0**-20
    trivial_threshold: float = 1e-6
    cluster_radius: float = 1e-6
    seed: int = 42

    def __post_init__(self) -> None:
        if self.node_count < 4 or self.node_count % 2:
            raise ValueError(f"node_count must be even and >= 4, got {self.node_count}")
        if self.interpolation_count < self.node_count:
            raise ValueError("interpolation_count must be >= node_count")
        for name in ("newton_tol", "min_step", "trivial_threshold", "cluster_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    @classmethod
    def for_schedule(cls, schedule: DilutionSchedule, **kw) -> "SolveConfig":
        """Default mesh: N=100/M=200, raised to N=300/M=400 for discontinuous schedules."""
        if not schedule.is_smooth:
            kw.setdefault("node_count", 300)
            kw.setdefault("interpolation_count", 400)
        return cls(**kw)

    def to_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class PeriodicSolution:
    grid: PeriodicGrid
    s_nodes: np.ndarray = field(repr=False)
    x_nodes: np.ndarray = field(repr=False)
    residual_sup: float
    iterations: int
    classification: Classification
    s_at_zero: float

    @property
    def converged(self) -> bool:
        return self.classification is not Classification.NOT_CONVERGED


@lru_cache(maxsize=64)
def _cached_operator(period: float, n: int, alpha: float, memory_length: float) -> CfdsOperator:
    return build_operator(PeriodicGrid(period, n), alpha, memory_length)


@lru_cache(maxsize=64)
def _cached_matrix(period: float, n: int, alpha: float, memory_length: float) -> np.ndarray:
    a = _cached_operator(period, n, alpha, memory_length).matrix
    a.setflags(write=False)
    return a


def operator_for(params: ChemostatParams, node_count: int) -> CfdsOperator:
    return _cached_operator(params.period, node_count, params.alpha, params.memory_length)


def _matrix_for(op: CfdsOperator) -> np.ndarray:
    g = op.grid
    return _cached_matrix(g.period, g.node_count, op.alpha, op.memory_length)


def residual(
    s_nodes: np.ndarray,
    params: ChemostatParams,
    schedule: DilutionSchedule,
    op: CfdsOperator,
) -> np.ndarray:
    s = op.grid.check(s_nodes)
    return apply(op, s) - rhs_f(op.grid.nodes, s, params, schedule)


def jacobian(
    s_nodes: np.ndarray,
    params: ChemostatParams,
    schedule: DilutionSchedule,
    op: CfdsOperator,
) -> np.ndarray:
    s = op.grid.check(s_nodes)
    jac = np.array(_matrix_for(op))
    jac[np.diag_indices_from(jac)] -= rhs_df_ds(op.grid.nodes, s, params, schedule)
    return jac


def _newton(
    state: np.ndarray,
    res_fn,
    jac_fn,
    project,
    tol: float,
    config: SolveConfig,
) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """Damped Newton with backtracking on the 2-norm and projection onto the box.

    Returns (state, residual, iterations, converged).
    """
    r = res_fn(state)
    norm = np.linalg.norm(r)
    for it in range(config.max_iterations + 1):
        if np.max(np.abs(r)) <= tol:
            return state, r, it, True
        if it == config.max_iterations:
            break
        jac = jac_fn(state)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            try:
                step = np.linalg.solve(jac + 1e-12 * np.eye(jac.shape[0]), -r)
            except np.linalg.LinAlgError:
                break
        if not np.all(np.isfinite(step)):
            break
        lam = 1.0
        accepted = False
        while lam >= config.min_step:
            trial = project(state + lam * step)
            r_trial = res_fn(trial)
            n_trial = np.linalg.norm(r_trial)
            if n_trial < norm:
                accepted = True
                break
            lam *= config.backtrack
        if not accepted:
            # No decrease along the Newton direction: near the rounding floor
            # or stuck against the box. Either way stop here.
            break
        state, r, norm = trial, r_trial, n_trial
    return state, r, it, bool(np.max(np.abs(r)) <= tol)


def _classify(s: np.ndarray, params: ChemostatParams, converged: bool, config: SolveConfig) -> Classification:
    if not converged:
        return Classification.NOT_CONVERGED
    if np.max(np.abs(s - params.s_in)) <= config.trivial_threshold:
        return Classification.TRIVIAL_WASHOUT
    return Classification.NON_TRIVIAL


def solve(
    initial_guess: np.ndarray | float,
    params: ChemostatParams,
    schedule: DilutionSchedule,
    config: SolveConfig = SolveConfig(),
) -> PeriodicSolution:
    op = operator_for(params, config.node_count)
    grid = op.grid
    guess = np.broadcast_to(np.asarray(initial_guess, dtype=float), (grid.node_count,))
    if np.any(guess < 0) or np.any(guess > params.s_in):
        raise ValueError(f"initial guess must lie in [0, {params.s_in}]")
    # the bound on |f| over the box makes the tolerance state-independent
    f_sup = params.time_scale * (schedule.d_max + params.mu_max) * params.s_in
    tol = config.newton_tol * (1.0 + f_sup)

    s, r, iterations, ok = _newton(
        np.array(guess),
        lambda s: residual(s, params, schedule, op),
        lambda s: jacobian(s, params, schedule, op),
        lambda s: np.clip(s, 0.0, params.s_in),
        tol,
        config,
    )
    cls = _classify(s, params, ok, config)
    if cls is Classification.TRIVIAL_WASHOUT:
        log.debug("solve converged to washout after %d iterations", iterations)
    return PeriodicSolution(
        grid=grid,
        s_nodes=s,
        x_nodes=biomass_from_substrate(s, params),
        residual_sup=float(np.max(np.abs(r))),
        iterations=iterations,
        classification=cls,
        s_at_zero=float(trig_eval(s, grid.period, 0.0)),
    )


# ---------------------------------------------------------------------------
# multistart


@dataclass(frozen=True)
class Bucket:
    representative: PeriodicSolution
    members: int

    @property
    def classification(self) -> Classification:
        return self.representative.classification


@dataclass(frozen=True)
class MultistartResult:
    solutions: list[PeriodicSolution]
    buckets: list[Bucket]
    not_converged: int
    seed: int

    def summary(self) -> dict[str, object]:
        return {
            "starts": len(self.solutions),
            "not_converged": self.not_converged,
            "seed": self.seed,
            "buckets": [
                {"classification": b.classification.value, "members": b.members,
                 "s_at_zero": b.representative.s_at_zero}
                for b in self.buckets
            ],
        }


def random_guess(seed: int, index: int, n: int, s_in: float) -> np.ndarray:
    """Elementwise-uniform start on ``[0, s_in]`` for start ``index``."""
    rng = np.random.default_rng([seed, index])
    return rng.uniform(0.0, s_in, size=n)


def _bucketize(solutions: list[PeriodicSolution], radius: float) -> list[Bucket]:
    reps: list[PeriodicSolution] = []
    counts: list[int] = []
    for sol in solutions:
        if not sol.converged:
            continue
        for i, rep in enumerate(reps):
            if np.max(np.abs(rep.s_nodes - sol.s_nodes)) <= radius:
                counts[i] += 1
                break
        else:
            reps.append(sol)
            counts.append(1)
    return [Bucket(r, c) for r, c in zip(reps, counts)]


def multistart(
    n_starts: int,
    params: ChemostatParams,
    schedule: DilutionSchedule,
    config: SolveConfig = SolveConfig(),
    workers: int = 1,
    guesses: Sequence[np.ndarray | float] | None = None,
) -> MultistartResult:
    """Independent solves from seeded uniform starts, bucketed by sup-distance.

    ``guesses`` replaces the random starts for the first ``len(guesses)`` runs.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    n = config.node_count
    fixed = list(guesses or ())

    def run(i: int) -> PeriodicSolution:
        guess = fixed[i] if i < len(fixed) else random_guess(config.seed, i, n, params.s_in)
        return solve(guess, params, schedule, config)

    operator_for(params, n)  # build once before fanning out
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sols = list(pool.map(run, range(n_starts)))
    else:
        sols = [run(i) for i in range(n_starts)]
    return MultistartResult(
        solutions=sols,
        buckets=_bucketize(sols, config.cluster_radius),
        not_converged=sum(not s.converged for s in sols),
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# post-processing


def interpolate(solution: PeriodicSolution, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Trigonometric interpolation onto ``t_j = j T / m``, ``j = 0..m-1``."""
    period = solution.grid.period
    t = np.arange(m) * period / m
    return t, trig_eval(solution.s_nodes, period, t)


@dataclass(frozen=True)
class TwoDimSolution:
    grid: PeriodicGrid
    s_nodes: np.ndarray = field(repr=False)
    x_nodes: np.ndarray = field(repr=False)
    z_sup: float
    residual_sup: float
    iterations: int
    classification: Classification


def _residual_2d(state, params, schedule, op):
    n = op.grid.node_count
    s, x = state[:n], state[n:]
    t = op.grid.nodes
    mu = contois_mu(s, x, params)
    d = schedule.evaluate(t)
    ts = params.time_scale
    r_s = apply(op, s) - ts * (-mu * x / params.yield_ + d * (params.s_in - s))
    r_x = apply(op, x) - ts * (mu - d) * x
    return np.concatenate([r_s, r_x])


def _jacobian_2d(state, params, schedule, op):
    n = op.grid.node_count
    s, x = state[:n], state[n:]
    t = op.grid.nodes
    a = _matrix_for(op)
    d = schedule.evaluate(t)
    ts = params.time_scale
    k, mu_max = params.saturation, params.mu_max
    den = k * x + s
    safe = np.where(den > 0, den, 1.0)
    mu = np.where(den > 0, mu_max * s / safe, 0.0)
    dmu_ds = np.where(den > 0, mu_max * k * x / safe**2, 0.0)
    dmu_dx = np.where(den > 0, -mu_max * k * s / safe**2, 0.0)
    y = params.yield_
    jac = np.zeros((2 * n, 2 * n))
    jac[:n, :n] = a
    jac[n:, n:] = a
    idx = np.arange(n)
    # r_s = A s - ts * (-mu x / Y + d (s_in - s))
    jac[idx, idx] -= ts * (-dmu_ds * x / y - d)
    jac[idx, n + idx] -= ts * (-(dmu_dx * x + mu) / y)
    # r_x = A x - ts * (mu - d) x
    jac[n + idx, idx] -= ts * dmu_ds * x
    jac[n + idx, n + idx] -= ts * (dmu_dx * x + mu - d)
    return jac


def solve_2d(
    initial_s: np.ndarray | float,
    initial_x: np.ndarray | float,
    params: ChemostatParams,
    schedule: DilutionSchedule,
    config: SolveConfig = SolveConfig(),
) -> TwoDimSolution:
    """Solve the coupled substrate/biomass collocation system."""
    op = operator_for(params, config.node_count)
    n = op.grid.node_count
    s0 = np.broadcast_to(np.asarray(initial_s, dtype=float), (n,))
    x0 = np.broadcast_to(np.asarray(initial_x, dtype=float), (n,))
    state = np.concatenate([s0, x0])
    f_sup = params.time_scale * (schedule.d_max + params.mu_max) * params.s_in
    tol = config.newton_tol * (1.0 + f_sup)

    def project(v):
        v = v.copy()
        v[:n] = np.clip(v[:n], 0.0, params.s_in)
        v[n:] = np.maximum(v[n:], 0.0)
        return v

    state, r, iterations, ok = _newton(
        project(state),
        lambda v: _residual_2d(v, params, schedule, op),
        lambda v: _jacobian_2d(v, params, schedule, op),
        project,
        tol,
        config,
    )
    s, x = state[:n], state[n:]
    z = params.yield_ * (params.s_in - s) - x
    return TwoDimSolution(
        grid=op.grid,
        s_nodes=s,
        x_nodes=x,
        z_sup=float(np.max(np.abs(z))),
        residual_sup=float(np.max(np.abs(r))),
        iterations=iterations,
        classification=_classify(s, params, ok, config),
    )


def energy_residual(
    s_nodes: np.ndarray,
    x_nodes: np.ndarray,
    params: ChemostatParams,
    schedule: DilutionSchedule,
) -> float:
    """``int z D z dt + theta^(1-alpha) int D(t) z^2 dt`` by the periodic trapezoid rule."""
    op = operator_for(params, len(s_nodes))
    z = params.yield_ * (params.s_in - np.asarray(s_nodes)) - np.asarray(x_nodes)
    dt = op.grid.period / op.grid.node_count
    lhs = np.sum(z * apply(op, z)) * dt
    rhs = params.time_scale * np.sum(schedule.evaluate(op.grid.nodes) * z * z) * dt
    return float(lhs + rhs)


# ---------------------------------------------------------------------------
# independent residual checks


def _window_cuts(grid: PeriodicGrid, schedule: DilutionSchedule, memory_length: float) -> list[float]:
    """Lags ``u`` in ``(0, L)`` at which ``D(t_j - u)`` jumps for some node ``t_j``."""
    period = grid.period
    cuts = set()
    for b in schedule.breakpoints():
        base = np.mod(grid.nodes - b, period)
        q = 0
        while True:
            u = base + q * period
            inside = u[(u > 0.0) & (u < memory_length)]
            if u.min() >= memory_length:
                break
            cuts.update(inside.tolist())
            q += 1
    return sorted(cuts)


def volterra_residual(
    solution: PeriodicSolution,
    params: ChemostatParams,
    schedule: DilutionSchedule,
) -> float:
    """Sup over nodes of the integral-form defect.

    Compares ``s(t_j)`` with ``s(t_j - L + k T) + I_L^alpha f(., s(.))(t_j)``,
    ``k`` the smallest integer placing the shifted time in ``[0, T]``. The
    integrand uses the trigonometric interpolant of the nodal solution.
    """
    grid = solution.grid
    period = grid.period
    s_nodes = solution.s_nodes
    big_l = params.memory_length
    t = grid.nodes

    k = np.ceil((big_l - t) / period)
    shift = trig_eval(s_nodes, period, t - big_l + k * period)

    def integrand(u: np.ndarray) -> np.ndarray:
        s_tau = np.clip(shifted_samples(s_nodes, period, u), 0.0, params.s_in)
        tau = t[None, :] - u[:, None]
        return rhs_f(tau, s_tau, params, schedule)

    body = _weakly_singular(
        integrand,
        params.alpha - 1.0,
        big_l,
        grid.nyquist_frequency,
        _window_cuts(grid, schedule, big_l),
    )
    integral = float(rgamma(params.alpha)) * body
    return float(np.max(np.abs(shift + integral - s_nodes)))


def direct_residual(
    solution: PeriodicSolution,
    params: ChemostatParams,
    schedule: DilutionSchedule,
) -> float:
    """Sup over nodes of ``D s - f`` with ``D s`` from time-domain quadrature.

    Independent of the multiplier path used by the solver.
    """
    grid = solution.grid
    s = solution.s_nodes
    d = cfds_direct_nodes(s, params.alpha, params.memory_length, grid.period)
    return float(np.max(np.abs(d - rhs_f(grid.nodes, s, params, schedule))))


def with_seed(config: SolveConfig, seed: int) -> SolveConfig:
    return replace(config, seed=seed)
