"""Problem instances: UEs, UAV-mounted edge servers and channel constants.

Units used throughout the package: data in megabytes, power in watts,
energy in joules, rates in bit/s, compute capacity in cycles/s and the
encoding coefficient in cycles/byte.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import cached_property
from pathlib import Path
from typing import Tuple

import numpy as np

from stackmec.errors import ConfigurationError, SchemaError, ValidationError

SCHEMA_VERSION = 1

Point = Tuple[float, float, float]
Range = Tuple[float, float]


def _require_positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValidationError(name, f"must be a positive finite number, got {value!r}")


def _as_point(name, value) -> Point:
    try:
        x, y, z = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ValidationError(name, f"expected three coordinates, got {value!r}") from None
    if not all(math.isfinite(c) for c in (x, y, z)):
        raise ValidationError(name, f"coordinates must be finite, got {value!r}")
    return (x, y, z)


@dataclass(frozen=True)
class UeProfile:
    id: int
    position: Point
    total_data: float  # G_i, MB
    transmit_power: float  # q_i, W
    local_power: float  # p_i, W
    unit_energy: float  # eps_i, J/MB
    satisfaction_coeff: float  # delta_i

    def __post_init__(self):
        object.__setattr__(self, "position", _as_point("position", self.position))
        for name in ("total_data", "transmit_power", "local_power", "unit_energy",
                     "satisfaction_coeff"):
            _require_positive(name, getattr(self, name))
        if self.position[2] != 0.0:
            raise ValidationError("position", "UEs sit on the ground (z == 0)")


@dataclass(frozen=True)
class UavProfile:
    id: int
    position: Point
    compute_capacity: float  # f_j, cycles/s
    compute_power: float  # P_j^comp, W
    hover_power: float  # P_j^hov, W
    power_efficiency: float  # eta
    energy_budget: float  # J
    data_capacity: float  # D_j, MB

    def __post_init__(self):
        object.__setattr__(self, "position", _as_point("position", self.position))
        for name in ("compute_capacity", "compute_power", "hover_power", "energy_budget",
                     "data_capacity"):
            _require_positive(name, getattr(self, name))
        if not 0.0 < self.power_efficiency <= 1.0:
            raise ValidationError("power_efficiency", "must lie in (0, 1]")
        if not self.position[2] > 0.0:
            raise ValidationError("position", "UAV corridor height must be positive")

    @property
    def hover_energy(self) -> float:
        return self.hover_power / self.power_efficiency


@dataclass(frozen=True)
class ChannelConstants:
    bandwidth: float = 1e6  # B, Hz
    noise_power: float = 1e-9  # sigma^2, W
    path_loss_exponent: float = 2.0  # rho
    encode_coeff: float = 1900.0  # alpha, cycles/byte

    def __post_init__(self):
        for f in fields(self):
            _require_positive(f.name, getattr(self, f.name))


@dataclass(frozen=True)
class Scenario:
    ues: Tuple[UeProfile, ...]
    uavs: Tuple[UavProfile, ...]
    channel: ChannelConstants = field(default_factory=ChannelConstants)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ues", tuple(self.ues))
        object.__setattr__(self, "uavs", tuple(self.uavs))
        if not self.ues:
            raise ValidationError("ues", "at least one UE is required")
        if not self.uavs:
            raise ValidationError("uavs", "at least one UAV is required")
        if [u.id for u in self.ues] != list(range(len(self.ues))):
            raise ValidationError("ues", "ids must be 0..I-1 in order")
        if [u.id for u in self.uavs] != list(range(len(self.uavs))):
            raise ValidationError("uavs", "ids must be 0..J-1 in order")
        heights = {u.position[2] for u in self.uavs}
        if len(heights) != 1:
            raise ValidationError("position", "all UAVs must share one corridor height")

    @property
    def n_ues(self) -> int:
        return len(self.ues)

    @property
    def n_uavs(self) -> int:
        return len(self.uavs)

    @property
    def height(self) -> float:
        return self.uavs[0].position[2]

    # Column views used by the vectorised kernels.  Read-only copies.

    def _column(self, items, name):
        arr = np.array([getattr(x, name) for x in items], dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def ue_positions(self) -> np.ndarray:
        return self._column(self.ues, "position")

    @cached_property
    def total_data(self) -> np.ndarray:
        return self._column(self.ues, "total_data")

    @cached_property
    def transmit_power(self) -> np.ndarray:
        return self._column(self.ues, "transmit_power")

    @cached_property
    def local_power(self) -> np.ndarray:
        return self._column(self.ues, "local_power")

    @cached_property
    def unit_energy(self) -> np.ndarray:
        return self._column(self.ues, "unit_energy")

    @cached_property
    def satisfaction_coeff(self) -> np.ndarray:
        return self._column(self.ues, "satisfaction_coeff")

    @cached_property
    def compute_capacity(self) -> np.ndarray:
        return self._column(self.uavs, "compute_capacity")

    @cached_property
    def compute_power(self) -> np.ndarray:
        return self._column(self.uavs, "compute_power")

    @cached_property
    def hover_energy(self) -> np.ndarray:
        return self._column(self.uavs, "hover_energy")

    @cached_property
    def energy_budget(self) -> np.ndarray:
        return self._column(self.uavs, "energy_budget")

    @cached_property
    def data_capacity(self) -> np.ndarray:
        return self._column(self.uavs, "data_capacity")

    def replace_uavs(self, **changes) -> "Scenario":
        """Copy with the given UavProfile fields overridden on every UAV.

        Values may be scalars or per-UAV sequences.
        """
        uavs = []
        for j, uav in enumerate(self.uavs):
            kw = {k: (v[j] if np.ndim(v) else v) for k, v in changes.items()}
            uavs.append(replace(uav, **kw))
        return Scenario(self.ues, uavs, self.channel, self.seed)


# --------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class GenerationConfig:
    """Ranges (inclusive) for uniformly drawn scenario parameters."""

    n_ues: int = 20
    n_uavs: int = 3
    area: Tuple[float, float] = (1000.0, 1000.0)  # m
    height: float = 100.0  # m
    total_data: Range = (10.0, 50.0)
    unit_energy: Range = (0.2, 0.5)
    satisfaction_coeff: Range = (40.0, 40.0)
    transmit_power: Range = (0.1, 0.1)
    local_power: Range = (0.5, 1.0)
    compute_capacity: Range = (1e9, 5e9)
    compute_power: Range = (0.1, 0.5)
    hover_power: Range = (100.0, 100.0)
    power_efficiency: Range = (0.8, 0.8)
    energy_budget: Range = (5e5, 5e5)
    data_capacity: Range = (200.0, 200.0)
    bandwidth: float = 1e6
    noise_power: float = 1e-9
    path_loss_exponent: float = 2.0
    encode_coeff: float = 1900.0

    UE_RANGES = ("total_data", "transmit_power", "local_power", "unit_energy",
                 "satisfaction_coeff")
    UAV_RANGES = ("compute_capacity", "compute_power", "hover_power", "power_efficiency",
                  "energy_budget", "data_capacity")

    def validate(self):
        for name in ("n_ues", "n_uavs"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if len(self.area) != 2 or min(self.area) <= 0:
            raise ConfigurationError("area bounds must be positive")
        if self.height <= 0:
            raise ConfigurationError("height must be positive")
        for name in self.UE_RANGES + self.UAV_RANGES:
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigurationError(f"{name}: range bounds must be finite")
            if lo > hi:
                raise ConfigurationError(f"{name}: min {lo} exceeds max {hi}")

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown generation fields: {sorted(unknown)}")
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kw)


def generate(config: GenerationConfig, seed: int) -> Scenario:
    """Draw a scenario; every parameter independently uniform on its range.

    The draw order is fixed so that ``(config, seed)`` determines the result
    bit for bit.
    """
    config.validate()
    rng = np.random.default_rng(seed)
    n, m = int(config.n_ues), int(config.n_uavs)
    width, depth = config.area

    def draw(name, size):
        lo, hi = getattr(config, name)
        return rng.uniform(lo, hi, size)

    ue_xy = rng.uniform((0.0, 0.0), (width, depth), (n, 2))
    ue_cols = {name: draw(name, n) for name in config.UE_RANGES}
    uav_xy = rng.uniform((0.0, 0.0), (width, depth), (m, 2))
    uav_cols = {name: draw(name, m) for name in config.UAV_RANGES}

    ues = [
        UeProfile(id=i, position=(ue_xy[i, 0], ue_xy[i, 1], 0.0),
                  **{k: float(v[i]) for k, v in ue_cols.items()})
        for i in range(n)
    ]
    uavs = [
        UavProfile(id=j, position=(uav_xy[j, 0], uav_xy[j, 1], float(config.height)),
                   **{k: float(v[j]) for k, v in uav_cols.items()})
        for j in range(m)
    ]
    channel = ChannelConstants(config.bandwidth, config.noise_power,
                               config.path_loss_exponent, config.encode_coeff)
    return Scenario(ues, uavs, channel, int(seed))


# --------------------------------------------------------------------------
# persistence


def to_dict(s: Scenario) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "seed": s.seed,
        "channel": asdict(s.channel),
        "ues": [{**asdict(u), "position": list(u.position)} for u in s.ues],
        "uavs": [{**asdict(u), "position": list(u.position)} for u in s.uavs],
    }


def dumps(s: Scenario) -> str:
    return json.dumps(to_dict(s), indent=2) + "\n"


def from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise SchemaError("scenario document must be a JSON object")
    missing = [k for k in ("version", "seed", "channel", "ues", "uavs") if k not in doc]
    if missing:
        raise SchemaError(f"missing top-level fields: {', '.join(missing)}")
    if doc["version"] != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {doc['version']!r}")
    if not isinstance(doc["ues"], list) or not isinstance(doc["uavs"], list):
        raise SchemaError("'ues' and 'uavs' must be lists")

    def build(cls, entry):
        if not isinstance(entry, dict):
            raise SchemaError(f"{cls.__name__} entry must be an object")
        names = [f.name for f in fields(cls)]
        absent = [k for k in names if k not in entry]
        if absent:
            raise SchemaError(f"{cls.__name__} missing fields: {', '.join(absent)}")
        return cls(**{k: entry[k] for k in names})

    channel = build(ChannelConstants, doc["channel"])
    ues = [build(UeProfile, e) for e in doc["ues"]]
    uavs = [build(UavProfile, e) for e in doc["uavs"]]
    return Scenario(ues, uavs, channel, int(doc["seed"]))


def save(s: Scenario, path) -> None:
    Path(path).write_text(dumps(s), encoding="utf-8")


def load(path) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return from_dict(doc)
