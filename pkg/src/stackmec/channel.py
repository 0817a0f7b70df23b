"""Line-of-sight uplink between ground UEs and hovering UAVs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stackmec.scenario import ChannelConstants, UavProfile, UeProfile


@dataclass(frozen=True)
class LinkRate:
    ue_id: int
    uav_id: int
    distance: float  # m
    gain: float
    rate: float  # bit/s


def distance(ue: UeProfile, uav: UavProfile) -> float:
    return float(np.linalg.norm(np.subtract(ue.position, uav.position)))


def gain(d, path_loss_exponent):
    """Channel gain ``d ** -rho`` (no reference-distance normalisation)."""
    return np.power(d, -path_loss_exponent)


def shannon_rate(d, transmit_power, c: ChannelConstants):
    snr = transmit_power * gain(d, c.path_loss_exponent) / c.noise_power
    return c.bandwidth * np.log1p(snr) / np.log(2.0)


def uplink_rate(ue: UeProfile, uav: UavProfile, c: ChannelConstants) -> float:
    return float(shannon_rate(distance(ue, uav), ue.transmit_power, c))


def link(ue: UeProfile, uav: UavProfile, c: ChannelConstants) -> LinkRate:
    d = distance(ue, uav)
    return LinkRate(ue.id, uav.id, d, float(gain(d, c.path_loss_exponent)),
                    float(shannon_rate(d, ue.transmit_power, c)))


def distance_matrix(ue_positions, uav_positions) -> np.ndarray:
    """Pairwise 3D distances, shape (I, J)."""
    a = np.asarray(ue_positions, dtype=float)[:, None, :]
    b = np.asarray(uav_positions, dtype=float)[None, :, :]
    return np.sqrt(((a - b) ** 2).sum(axis=-1))


def rate_matrix(ue_positions, uav_positions, transmit_power, c: ChannelConstants):
    d = distance_matrix(ue_positions, uav_positions)
    return shannon_rate(d, np.asarray(transmit_power, dtype=float)[:, None], c)
