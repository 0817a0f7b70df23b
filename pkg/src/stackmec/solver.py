"""CPPO: alternating leader pricing / follower offloading with ULAR rebalancing.

Each outer iteration

1. prices every UE with an inner optimiser on the leader's per-UE objective
   ``(lam - kappa_i) * g*(lam)`` with the sharing counts ``M_j`` frozen,
2. lets every UE best-respond to its new price,
3. repairs data-capacity overflow and energy-budget violations (ULAR),

and stops once neither prices nor offloads move by more than the tolerance.
The baselines reuse the same loop with one of the steps swapped out.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from stackmec.economics import (
    Assignment,
    StrategyProfile,
    UtilityBreakdown,
    delivered_profile,
    overloaded_uavs,
    serving_rates,
    sharing_cost_per_mb,
    transmission_cost,
    utility_breakdown,
)
from stackmec.errors import ConfigurationError
from stackmec.game import (
    EquilibriumCertificate,
    bounds_kernel,
    leader_gradient_kernel,
    leader_kernel,
    offload_kernel,
    price_kernel,
    verify_equilibrium,
)
from stackmec.pso import PsoConfig, projected_gradient_ascent, psopssl_maximize
from stackmec.scenario import Scenario
from stackmec.ular import Clustering, kmeans_place, rebalance_labels, respond_availability


class Algorithm(str, enum.Enum):
    CPPO = "CPPO"
    NU_CPPO = "NU_CPPO"
    OSRS = "OSRS"
    PSRS = "PSRS"
    PSO = "PSO"
    GD = "GD"

    @classmethod
    def parse(cls, name: str) -> "Algorithm":
        key = name.strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ConfigurationError(
                f"unknown algorithm {name!r}; choose from {', '.join(a.value for a in cls)}"
            ) from None


@dataclass(frozen=True)
class SolverConfig:
    pso: PsoConfig = field(default_factory=PsoConfig)
    tolerance: float = 1e-3  # max-norm change of (prices, offloads)
    max_outer: int = 100
    kmeans_iterations: int = 100
    certificate_tolerance: float = 1e-6
    gd_step: float = 0.1

    def __post_init__(self):
        if self.max_outer < 1:
            raise ConfigurationError("max_outer must be >= 1")
        if self.tolerance <= 0:
            raise ConfigurationError("tolerance must be positive")
        if self.gd_step <= 0:
            raise ConfigurationError("gd_step must be positive")


@dataclass(frozen=True, eq=False)
class IterationRecord:
    iteration: int
    prices: np.ndarray
    offloads: np.ndarray
    controller_utility: float
    mean_ue_utility: float
    max_change: float
    labels: tuple
    clamped: np.ndarray  # closed-form price outside the thresholds (or undefined)
    moves: int  # UEs reassigned by the ULAR step
    available: np.ndarray  # per-UAV energy availability


@dataclass(eq=False)
class SolveReport:
    algorithm: Algorithm
    seed: int
    trace: List[IterationRecord]
    profile: StrategyProfile
    assignment: Assignment
    breakdown: UtilityBreakdown  # nominal, as computed by the strategy rules
    delivered: UtilityBreakdown  # overloaded UAVs dropped, see delivered_profile
    overloaded: np.ndarray
    certificate: EquilibriumCertificate
    stable: bool  # strategy change fell below tolerance with no reassignment
    initial_assignment: Assignment
    availability_flips: int = 0
    wall_time: float = 0.0

    @property
    def converged(self) -> bool:
        return self.stable and self.certificate.certified

    @property
    def outer_iterations(self) -> int:
        return len(self.trace)

    @property
    def controller_utility(self) -> float:
        return self.delivered.controller_utility

    @property
    def mean_ue_utility(self) -> float:
        return self.delivered.mean_ue_utility


def _seed_sequence(seed, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


_KMEANS, _DRAWS, _INNER = 0, 1, 2


class _Model:
    """Per-assignment UE quantities needed by the kernels."""

    def __init__(self, s: Scenario, a: Assignment):
        self.rates = serving_rates(a, s)
        self.trans = transmission_cost(s.local_power, self.rates)
        self.eps = np.asarray(s.unit_energy)
        self.delta = np.asarray(s.satisfaction_coeff)
        self.total = np.asarray(s.total_data)
        self.lo, self.hi = bounds_kernel(self.trans, self.eps, self.delta, self.total)

    def respond(self, lam):
        return offload_kernel(lam, self.trans, self.eps, self.delta, self.total)


def _ular_step(s: Scenario, a: Assignment, g, lam):
    c = Clustering.from_assignment(a, s)
    labels, moves = rebalance_labels(c.labels, c.distances, g, s.data_capacity)
    rebalanced = Assignment.from_labels(labels, a.uav_positions)
    available, final = respond_availability(rebalanced, s, StrategyProfile(g, lam))
    extra = int((final.labels != rebalanced.labels).sum())
    return final, len(moves) + extra, available


def _price_flags(m: _Model, kappa):
    raw = price_kernel(m.trans, m.eps, m.delta, kappa)
    return np.isnan(raw) | (raw < m.lo) | (raw > m.hi)


def _leader_prices(kind, m: _Model, kappa, lam, cfg: SolverConfig, seed, outer):
    """Inner leader update, one UE at a time with frozen sharing counts."""
    new = np.empty_like(lam)
    for i in range(lam.size):
        args = (kappa[i], m.trans[i], m.eps[i], m.delta[i], m.total[i])

        def objective(x, args=args):
            return leader_kernel(x[:, 0], *args)

        start = np.clip(lam[i], m.lo[i], m.hi[i])
        if kind is Algorithm.GD:
            res = projected_gradient_ascent(
                objective, lambda x, args=args: leader_gradient_kernel(x, *args[:4]),
                m.lo[i], m.hi[i], start, cfg.gd_step, cfg.pso.inner_iterations)
        else:
            pso = cfg.pso
            if kind is Algorithm.PSO:
                pso = replace(pso, adaptive=False)
            res = psopssl_maximize(objective, m.lo[i], m.hi[i], pso,
                                   seed=_seed_sequence(seed, _INNER, outer, i), initial=start)
        new[i] = res.x[0]
    return new


def solve(s: Scenario, kind, cfg: Optional[SolverConfig] = None, seed: int = 0) -> SolveReport:
    kind = Algorithm.parse(kind) if isinstance(kind, str) else Algorithm(kind)
    cfg = cfg or SolverConfig()
    started = time.perf_counter()
    use_ular = kind is not Algorithm.NU_CPPO

    clustering = kmeans_place(s, _seed_sequence(seed, _KMEANS), cfg.kmeans_iterations)
    a = clustering.to_assignment()
    m = _Model(s, a)
    lam = 0.5 * (m.lo + m.hi)
    g = m.respond(lam)
    available = np.ones(s.n_uavs, dtype=bool)
    if use_ular:
        a, _, available = _ular_step(s, a, g, lam)
    initial = a

    draws = np.random.default_rng(_seed_sequence(seed, _DRAWS)).random(s.n_ues)
    trace: List[IterationRecord] = []
    stable = False
    flips = 0
    for outer in range(1, cfg.max_outer + 1):
        m = _Model(s, a)
        kappa = sharing_cost_per_mb(a, g, s)

        if kind is Algorithm.OSRS:
            new_lam = m.lo + draws * (m.hi - m.lo)
            new_g = m.respond(new_lam)
        elif kind is Algorithm.PSRS:
            new_g = draws * m.total
            raw = price_kernel(m.trans, m.eps, m.delta, kappa)
            new_lam = np.clip(np.where(np.isnan(raw), m.lo, raw), m.lo, m.hi)
        else:
            new_lam = _leader_prices(kind, m, kappa, lam, cfg, seed, outer)
            new_g = m.respond(new_lam)
        clamped = _price_flags(m, kappa)

        moves = 0
        if use_ular:
            before = a.labels
            a, moves, now_available = _ular_step(s, a, new_g, new_lam)
            flips += int((now_available != available).sum())
            available = now_available
            moved = a.labels != before
            if moved.any():
                m2 = _Model(s, a)
                new_lam = np.where(moved, np.clip(new_lam, m2.lo, m2.hi), new_lam)

        change = float(max(np.abs(new_lam - lam).max(), np.abs(new_g - g).max()))
        lam, g = new_lam, new_g
        bd = utility_breakdown(StrategyProfile(g, lam), a, s)
        trace.append(IterationRecord(
            iteration=outer, prices=lam.copy(), offloads=g.copy(),
            controller_utility=bd.controller_utility, mean_ue_utility=bd.mean_ue_utility,
            max_change=change, labels=tuple(a.labels.tolist()), clamped=clamped,
            moves=moves, available=available.copy()))
        if change < cfg.tolerance and moves == 0:
            stable = True
            break

    profile = StrategyProfile(g, lam)
    return SolveReport(
        algorithm=kind,
        seed=int(seed),
        trace=trace,
        profile=profile,
        assignment=a,
        breakdown=utility_breakdown(profile, a, s),
        delivered=utility_breakdown(delivered_profile(profile, a, s), a, s),
        overloaded=overloaded_uavs(a, profile, s),
        certificate=verify_equilibrium(profile, a, s, cfg.certificate_tolerance),
        stable=stable,
        initial_assignment=initial,
        availability_flips=flips,
        wall_time=time.perf_counter() - started,
    )


def cppo_solve(s: Scenario, cfg: Optional[SolverConfig] = None, seed: int = 0) -> SolveReport:
    return solve(s, Algorithm.CPPO, cfg, seed)


def solve_baseline(kind, s: Scenario, cfg: Optional[SolverConfig] = None,
                   seed: int = 0) -> SolveReport:
    return solve(s, kind, cfg, seed)


def cross_sections(report: SolveReport, s: Scenario, points: int = 1001):
    """Per-UE utility slices through the final profile.

    Returns ``(ue_rows, leader_rows)``: ``U_i`` against ``g`` on ``[0, G_i]``
    at the final price, and ``U_con`` against ``lam_i`` on the price
    thresholds with UE i best-responding and everything else fixed.
    """
    a, prof = report.assignment, report.profile
    m = _Model(s, a)
    kappa = sharing_cost_per_mb(a, prof.offloads, s)
    base = report.breakdown.controller_utility
    ue_rows, leader_rows = [], []
    for i in range(s.n_ues):
        if a.labels[i] < 0:
            continue
        gs = np.linspace(0.0, m.total[i], points)
        ui = (m.delta[i] * np.log1p(gs) - m.trans[i] * gs
              - m.eps[i] * (m.total[i] - gs) - prof.prices[i] * gs)
        ue_rows.extend((i, float(x), float(u)) for x, u in zip(gs, ui))

        lams = np.linspace(m.lo[i], m.hi[i], points)
        args = (kappa[i], m.trans[i], m.eps[i], m.delta[i], m.total[i])
        own = (prof.prices[i] - kappa[i]) * prof.offloads[i]
        ucon = base - own + leader_kernel(lams, *args)
        leader_rows.extend((i, float(x), float(u)) for x, u in zip(lams, ucon))
    return ue_rows, leader_rows


def with_overloaded_cluster(s: Scenario, seed: int = 0, cfg: Optional[SolverConfig] = None,
                            fraction: float = 0.8) -> Scenario:
    """Copy of ``s`` whose busiest cluster cannot carry its equilibrium load.

    Solves without rebalancing, sets the data capacity of the UAV with the
    largest offered load to ``fraction`` of that load and gives every other
    UAV room for the whole task volume, so any rebalance stays feasible.
    """
    if not 0 < fraction < 1:
        raise ConfigurationError("fraction must lie in (0, 1)")
    ref = solve(s, Algorithm.NU_CPPO, cfg, seed)
    load = ref.profile.offloads @ ref.assignment.links.astype(float)
    busiest = int(np.argmax(load))
    cap = np.full(s.n_uavs, float(np.sum(s.total_data)))
    cap[busiest] = fraction * load[busiest]
    return s.replace_uavs(data_capacity=cap)
