"""Closed-form Stackelberg best responses and equilibrium checks.

With ``a = p_i*BITS_PER_MB/r - eps_i`` (net per-MB cost of offloading instead
of computing locally) and ``kappa`` the leader's compute energy per MB on the
serving UAV:

* follower optimum    ``g*(lam) = delta / (a + lam) - 1`` clipped to ``[0, G]``
* price thresholds    ``lam_min = delta / (1 + G) - a``,  ``lam_max = delta - a``
* leader optimum      ``lam* = sqrt(delta * (a + kappa)) - a``

The leader's per-UE objective is ``(lam - kappa) * g*(lam)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stackmec.economics import (
    BYTES_PER_MB,
    Assignment,
    StrategyProfile,
    controller_utility,
    serving_rates,
    sharing_cost_per_mb,
    transmission_cost,
)
from stackmec.errors import DegenerateEconomicsError
from stackmec.scenario import Scenario, UavProfile, UeProfile


@dataclass(frozen=True)
class PriceBounds:
    lam_min: float
    lam_max: float

    @property
    def width(self) -> float:
        return self.lam_max - self.lam_min


@dataclass(frozen=True, eq=False)
class EquilibriumCertificate:
    profile: StrategyProfile
    ue_gains: np.ndarray  # best unilateral improvement per UE
    controller_gains: np.ndarray  # best single-price improvement per UE
    ue_scale: np.ndarray
    controller_scale: float
    tolerance: float

    @property
    def max_ue_gain(self) -> float:
        return float(self.ue_gains.max(initial=0.0))

    @property
    def max_controller_gain(self) -> float:
        return float(self.controller_gains.max(initial=0.0))

    @property
    def certified(self) -> bool:
        return bool((self.ue_gains <= self.tolerance * self.ue_scale).all()
                    and (self.controller_gains <= self.tolerance * self.controller_scale).all())


# --------------------------------------------------------------------------
# vectorised kernels; arguments broadcast elementwise


def bounds_kernel(trans, eps, delta, total):
    a = trans - eps
    return delta / (1.0 + total) - a, delta - a


def offload_kernel(lam, trans, eps, delta, total):
    lam = np.asarray(lam, dtype=float)
    lo, hi = bounds_kernel(trans, eps, delta, total)
    denom = trans - eps + lam
    with np.errstate(divide="ignore", invalid="ignore"):
        interior = delta / denom - 1.0
    g = np.where(lam <= lo, total, np.where(lam >= hi, 0.0, interior))
    return np.clip(g, 0.0, total)


def price_kernel(trans, eps, delta, kappa):
    """Unclamped optimal price; NaN where the radicand is negative."""
    a = trans - eps
    radicand = delta * (a + kappa)
    with np.errstate(invalid="ignore"):
        return np.where(radicand >= 0, np.sqrt(np.maximum(radicand, 0.0)) - a, np.nan)


def leader_kernel(lam, kappa, trans, eps, delta, total):
    """Leader's per-UE objective ``(lam - kappa) * g*(lam)``."""
    return (np.asarray(lam, dtype=float) - kappa) * offload_kernel(lam, trans, eps, delta, total)


def leader_gradient_kernel(lam, kappa, trans, eps, delta):
    """Derivative of the leader objective on the open price interval."""
    a = trans - eps
    return delta * (a + kappa) / (a + np.asarray(lam, dtype=float)) ** 2 - 1.0


def leader_curvature_kernel(lam, kappa, trans, eps, delta):
    a = trans - eps
    return -2.0 * delta * (a + kappa) / (a + np.asarray(lam, dtype=float)) ** 3


# --------------------------------------------------------------------------
# profile-level API


def _trans(ue: UeProfile, rate):
    return transmission_cost(ue.local_power, rate)


def price_bounds(ue: UeProfile, rate: float) -> PriceBounds:
    lo, hi = bounds_kernel(_trans(ue, rate), ue.unit_energy, ue.satisfaction_coeff,
                           ue.total_data)
    return PriceBounds(float(lo), float(hi))


def optimal_offload(ue: UeProfile, price, rate: float):
    """Follower best response to ``price`` over a link of the given rate."""
    g = offload_kernel(price, _trans(ue, rate), ue.unit_energy, ue.satisfaction_coeff,
                       ue.total_data)
    return float(g) if np.ndim(g) == 0 else g


def compute_cost(uav: UavProfile, n_offloading: int, encode_coeff: float) -> float:
    """Per-MB compute energy on ``uav`` when ``n_offloading`` UEs share it."""
    return (uav.compute_power * encode_coeff * BYTES_PER_MB * n_offloading
            / uav.compute_capacity)


def raw_optimal_price(ue: UeProfile, rate: float, n_offloading: int, uav: UavProfile,
                      encode_coeff: float = 1900.0) -> float:
    """Stationary point of the leader objective, before clamping."""
    kappa = compute_cost(uav, n_offloading, encode_coeff)
    lam = float(price_kernel(_trans(ue, rate), ue.unit_energy, ue.satisfaction_coeff, kappa))
    if np.isnan(lam):
        raise DegenerateEconomicsError(
            f"UE {ue.id}: negative radicand in optimal price "
            f"(net offload cost {float(_trans(ue, rate)) - ue.unit_energy:.6g} "
            f"+ compute cost {kappa:.6g} < 0)")
    return lam


def optimal_price(ue: UeProfile, rate: float, n_offloading: int, uav: UavProfile,
                  encode_coeff: float = 1900.0) -> float:
    """Leader's optimal unit price for ``ue``, clamped to the price thresholds.

    Raises DegenerateEconomicsError when the closed form is undefined.
    """
    lam = raw_optimal_price(ue, rate, n_offloading, uav, encode_coeff)
    b = price_bounds(ue, rate)
    return float(np.clip(lam, b.lam_min, b.lam_max))


# --------------------------------------------------------------------------
# verification


def _grid_max(fn, lo, hi, points=401, zooms=3):
    """Maximise a scalar function on [lo, hi] by grid search with zooming."""
    best_x, best_v = lo, -np.inf
    for _ in range(zooms + 1):
        xs = np.linspace(lo, hi, points)
        vals = fn(xs)
        k = int(np.nanargmax(vals))
        if vals[k] > best_v:
            best_x, best_v = xs[k], vals[k]
        step = xs[1] - xs[0]
        lo, hi = max(lo, best_x - step), min(hi, best_x + step)
        if hi <= lo:
            break
    return best_x, best_v


def verify_equilibrium(profile: StrategyProfile, a: Assignment, s: Scenario,
                       tolerance: float = 1e-6) -> EquilibriumCertificate:
    """Search unilateral deviations of every UE and of every single price.

    A UE deviation changes ``g_i`` with everything else fixed.  A leader
    deviation changes ``lam_i`` while UE i best-responds; the other UEs'
    offloads, and hence the sharing counts ``M_j``, stay fixed, so each price
    is checked against its own separable component of the controller utility.
    Gains are compared with ``tolerance * max(|U|, 1)``.
    """
    g, lam = profile.offloads, profile.prices
    rates = serving_rates(a, s)
    labels = a.labels
    kappas = sharing_cost_per_mb(a, g, s)

    ue_gains = np.zeros(s.n_ues)
    ctrl_gains = np.zeros(s.n_ues)
    ue_scale = np.ones(s.n_ues)
    for i, ue in enumerate(s.ues):
        if labels[i] < 0:
            continue
        trans = float(_trans(ue, rates[i]))
        eps, delta, total = ue.unit_energy, ue.satisfaction_coeff, ue.total_data

        def ue_value(x):
            return delta * np.log1p(x) - trans * x - eps * (total - x) - lam[i] * x

        current = float(ue_value(g[i]))
        ue_scale[i] = max(abs(current), 1.0)
        _, best = _grid_max(ue_value, 0.0, total)
        ue_gains[i] = max(best - current, 0.0)

        kappa = kappas[i]
        lo, hi = bounds_kernel(trans, eps, delta, total)
        current = (lam[i] - kappa) * g[i]
        _, best = _grid_max(lambda x: leader_kernel(x, kappa, trans, eps, delta, total),
                            float(lo), float(hi))
        ctrl_gains[i] = max(best - current, 0.0)

    u_con = controller_utility(profile, a, s)
    return EquilibriumCertificate(profile, ue_gains, ctrl_gains, ue_scale,
                                  max(abs(u_con), 1.0), tolerance)
