"""Time, energy and utility bookkeeping for a strategy profile.

Canonical units: offloaded data ``g`` in MB, so transmission time is
``g * BITS_PER_MB / rate`` and UAV compute time is
``alpha * g * BYTES_PER_MB / (f_j / M_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stackmec.channel import rate_matrix
from stackmec.errors import DomainError, StructuralError
from stackmec.scenario import Scenario, UeProfile

BITS_PER_MB = 8e6
BYTES_PER_MB = 1e6


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    offloads: np.ndarray  # g, MB
    prices: np.ndarray  # lambda, per MB

    def __post_init__(self):
        object.__setattr__(self, "offloads", _frozen(self.offloads))
        object.__setattr__(self, "prices", _frozen(self.prices))
        if self.offloads.shape != self.prices.shape or self.offloads.ndim != 1:
            raise StructuralError("offloads and prices must be 1-D and equally long")

    def __eq__(self, other):
        if not isinstance(other, StrategyProfile):
            return NotImplemented
        return (np.array_equal(self.offloads, other.offloads)
                and np.array_equal(self.prices, other.prices))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Assignment:
    """UE-to-UAV link matrix ``X`` together with the UAV placements."""

    links: np.ndarray  # (I, J), 0/1
    uav_positions: np.ndarray  # (J, 3)

    def __post_init__(self):
        links = _frozen(self.links, dtype=np.int8)
        pos = _frozen(self.uav_positions)
        if links.ndim != 2:
            raise StructuralError("link matrix must be 2-D")
        if not np.isin(links, (0, 1)).all():
            raise StructuralError("link matrix entries must be 0 or 1")
        if (links.sum(axis=1) > 1).any():
            bad = np.flatnonzero(links.sum(axis=1) > 1)
            raise StructuralError(f"UEs {bad.tolist()} linked to more than one UAV")
        if pos.shape != (links.shape[1], 3):
            raise StructuralError("need one 3D position per UAV")
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "uav_positions", pos)

    @classmethod
    def from_labels(cls, labels, uav_positions) -> "Assignment":
        """Build from per-UE UAV indices; -1 marks an unlinked UE."""
        labels = np.asarray(labels, dtype=int)
        n_uavs = len(uav_positions)
        if (labels >= n_uavs).any() or (labels < -1).any():
            raise StructuralError("label out of range")
        links = np.zeros((labels.size, n_uavs), dtype=np.int8)
        linked = labels >= 0
        links[np.flatnonzero(linked), labels[linked]] = 1
        return cls(links, uav_positions)

    @property
    def n_ues(self) -> int:
        return self.links.shape[0]

    @property
    def n_uavs(self) -> int:
        return self.links.shape[1]

    @property
    def labels(self) -> np.ndarray:
        lab = np.argmax(self.links, axis=1)
        return np.where(self.links.any(axis=1), lab, -1)

    @property
    def cluster_members(self) -> tuple:
        return tuple(tuple(np.flatnonzero(self.links[:, j]).tolist())
                     for j in range(self.n_uavs))

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return (np.array_equal(self.links, other.links)
                and np.array_equal(self.uav_positions, other.uav_positions))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class UtilityBreakdown:
    satisfaction: np.ndarray  # delta_i * ln(1 + g_i)
    transmission_energy: np.ndarray
    local_energy: np.ndarray
    payment: np.ndarray
    ue_utility: np.ndarray
    compute_energy: np.ndarray  # per UAV
    hover_energy: np.ndarray  # per UAV
    revenue: float
    total_cost: float
    controller_utility: float

    @property
    def mean_ue_utility(self) -> float:
        return float(np.mean(self.ue_utility))


# --------------------------------------------------------------------------
# follower side


def transmission_cost(local_power, rate):
    """Transmission energy per offloaded MB, ``p_i * t_trans / g``."""
    return local_power * BITS_PER_MB / rate


def ue_utility(ue: UeProfile, g, price, rate):
    """``delta ln(1+g) - E_trans - E_local - price*g`` (vectorised over g)."""
    g = np.asarray(g, dtype=float)
    if (g < 0).any() or (g > ue.total_data).any() or np.isnan(g).any():
        raise DomainError(f"offload must lie in [0, {ue.total_data}]")
    out = (ue.satisfaction_coeff * np.log1p(g)
           - transmission_cost(ue.local_power, rate) * g
           - ue.unit_energy * (ue.total_data - g)
           - price * g)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# leader side


def offload_counts(a: Assignment, offloads) -> np.ndarray:
    """``M_j``: linked UEs with strictly positive offload, per UAV."""
    active = (np.asarray(offloads) > 0).astype(int)
    return active @ a.links.astype(int)


def compute_cost_per_mb(s: Scenario, counts) -> np.ndarray:
    """Compute energy per offloaded MB on each UAV given ``M_j`` sharers."""
    cycles_per_mb = s.channel.encode_coeff * BYTES_PER_MB
    return s.compute_power * cycles_per_mb * np.asarray(counts, dtype=float) / s.compute_capacity


def sharing_cost_per_mb(a: Assignment, offloads, s: Scenario) -> np.ndarray:
    """Per-UE compute energy per MB, counting the UE itself as a sharer.

    This is the marginal rate that applies to UE i's offload: the other
    active UEs on its UAV plus i.  Unlinked UEs get NaN.
    """
    g = np.asarray(offloads)
    counts = offload_counts(a, g)
    labels = a.labels
    linked = labels >= 0
    own = np.zeros(a.n_ues, dtype=int)
    own[linked] = counts[labels[linked]] - (g[linked] > 0)
    per_uav = s.compute_power * s.channel.encode_coeff * BYTES_PER_MB / s.compute_capacity
    out = np.full(a.n_ues, np.nan)
    out[linked] = per_uav[labels[linked]] * (own[linked] + 1)
    return out


def serving_rates(a: Assignment, s: Scenario) -> np.ndarray:
    """Uplink rate of each UE to its linked UAV (NaN when unlinked)."""
    rates = rate_matrix(s.ue_positions, a.uav_positions, s.transmit_power, s.channel)
    labels = a.labels
    out = np.full(a.n_ues, np.nan)
    linked = labels >= 0
    out[linked] = rates[np.flatnonzero(linked), labels[linked]]
    return out


def compute_energy(profile: StrategyProfile, a: Assignment, s: Scenario) -> np.ndarray:
    kappa = compute_cost_per_mb(s, offload_counts(a, profile.offloads))
    return kappa * (profile.offloads @ a.links.astype(float))


def _check(profile: StrategyProfile, a: Assignment, s: Scenario):
    if a.n_ues != s.n_ues or a.n_uavs != s.n_uavs:
        raise StructuralError("assignment shape does not match scenario")
    if profile.offloads.size != s.n_ues:
        raise StructuralError("profile length does not match scenario")
    unlinked_offload = (a.labels < 0) & (profile.offloads > 0)
    if unlinked_offload.any():
        raise StructuralError("unlinked UE cannot offload")


def controller_utility(profile: StrategyProfile, a: Assignment, s: Scenario) -> float:
    _check(profile, a, s)
    revenue = float(profile.prices @ profile.offloads)
    return revenue - float(compute_energy(profile, a, s).sum()) - float(s.hover_energy.sum())


def energy_feasible(a: Assignment, profile: StrategyProfile, s: Scenario) -> np.ndarray:
    """Per-UAV flag: compute plus hover energy within the battery budget."""
    _check(profile, a, s)
    return compute_energy(profile, a, s) + s.hover_energy <= s.energy_budget


def utility_breakdown(profile: StrategyProfile, a: Assignment, s: Scenario) -> UtilityBreakdown:
    _check(profile, a, s)
    g, lam = profile.offloads, profile.prices
    rates = serving_rates(a, s)
    safe_rates = np.where(np.isnan(rates), 1.0, rates)
    satisfaction = s.satisfaction_coeff * np.log1p(g)
    trans = np.where(g > 0, transmission_cost(s.local_power, safe_rates) * g, 0.0)
    local = s.unit_energy * (s.total_data - g)
    payment = lam * g
    comp = compute_energy(profile, a, s)
    hover = np.array(s.hover_energy)
    revenue = float(payment.sum())
    cost = float(comp.sum() + hover.sum())
    return UtilityBreakdown(
        satisfaction=satisfaction,
        transmission_energy=trans,
        local_energy=local,
        payment=payment,
        ue_utility=satisfaction - trans - local - payment,
        compute_energy=comp,
        hover_energy=hover,
        revenue=revenue,
        total_cost=cost,
        controller_utility=revenue - cost,
    )


def overloaded_uavs(a: Assignment, profile: StrategyProfile, s: Scenario) -> np.ndarray:
    """Per-UAV flag: data load above ``D_j`` or energy above the budget."""
    load = profile.offloads @ a.links.astype(float)
    return (load > s.data_capacity) | ~energy_feasible(a, profile, s)


def delivered_profile(profile: StrategyProfile, a: Assignment, s: Scenario) -> StrategyProfile:
    """Profile as actually served: UEs on an overloaded UAV compute locally.

    An overloaded UAV cannot take its assigned load, so none of its UEs'
    data is processed, billed or counted towards satisfaction.
    """
    down = overloaded_uavs(a, profile, s)
    if not down.any():
        return profile
    labels = a.labels
    dropped = (labels >= 0) & down[np.maximum(labels, 0)]
    return StrategyProfile(np.where(dropped, 0.0, profile.offloads), profile.prices)
