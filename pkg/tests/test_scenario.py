import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_uav, make_ue
from stackmec import scenario as scn
from stackmec.errors import ConfigurationError, SchemaError, ValidationError


def test_generate_is_deterministic():
    cfg = scn.GenerationConfig()
    assert scn.dumps(scn.generate(cfg, 7)) == scn.dumps(scn.generate(cfg, 7))
    assert scn.dumps(scn.generate(cfg, 7)) != scn.dumps(scn.generate(cfg, 8))


def test_generate_shapes_and_height():
    s = scn.generate(scn.GenerationConfig(n_ues=12, n_uavs=4, height=150.0), 1)
    assert (s.n_ues, s.n_uavs) == (12, 4)
    assert s.height == 150.0
    assert s.ue_positions.shape == (12, 3)
    assert np.all(s.ue_positions[:, 2] == 0.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 30), m=st.integers(1, 5))
def test_generated_values_lie_in_their_ranges(seed, n, m):
    cfg = scn.GenerationConfig(n_ues=n, n_uavs=m)
    s = scn.generate(cfg, seed)
    for name in cfg.UE_RANGES:
        lo, hi = getattr(cfg, name)
        vals = np.array([getattr(u, name) for u in s.ues])
        assert np.all((vals >= lo) & (vals <= hi)), name
    for name in cfg.UAV_RANGES:
        lo, hi = getattr(cfg, name)
        vals = np.array([getattr(u, name) for u in s.uavs])
        assert np.all((vals >= lo) & (vals <= hi)), name
    xy = np.array([u.position[:2] for u in s.ues + s.uavs])
    assert np.all((xy >= 0) & (xy <= 1000.0))


def test_json_round_trip(tmp_path, default_scenario):
    path = tmp_path / "s.json"
    scn.save(default_scenario, path)
    loaded = scn.load(path)
    assert loaded == default_scenario
    assert scn.dumps(loaded) == path.read_text()
    assert path.read_bytes().endswith(b"}\n")


def test_schema_errors(default_scenario):
    doc = scn.to_dict(default_scenario)
    with pytest.raises(SchemaError):
        scn.from_dict({k: v for k, v in doc.items() if k != "uavs"})
    with pytest.raises(SchemaError):
        scn.from_dict({**doc, "version": 99})
    broken = json.loads(json.dumps(doc))
    del broken["ues"][0]["total_data"]
    with pytest.raises(SchemaError):
        scn.from_dict(broken)


@pytest.mark.parametrize("field, value", [
    ("total_data", 0.0), ("unit_energy", -1.0), ("satisfaction_coeff", float("nan")),
    ("local_power", float("inf")),
])
def test_ue_field_validation_names_field(field, value):
    with pytest.raises(ValidationError) as err:
        make_ue(**{field: value})
    assert err.value.field == field


def test_position_rules():
    with pytest.raises(ValidationError):
        make_ue(position=(0.0, 0.0, 1.0))
    with pytest.raises(ValidationError):
        make_uav(position=(0.0, 0.0, 0.0))
    with pytest.raises(ValidationError):
        make_uav(power_efficiency=1.5)


def test_scenario_structure_rules():
    with pytest.raises(ValidationError):
        scn.Scenario([make_ue(1)], [make_uav()])
    with pytest.raises(ValidationError):
        scn.Scenario([make_ue()], [make_uav(0), make_uav(1, position=(0.0, 0.0, 90.0))])
    with pytest.raises(ValidationError):
        scn.Scenario([], [make_uav()])


def test_hover_energy():
    assert make_uav(hover_power=100.0, power_efficiency=0.8).hover_energy == pytest.approx(125.0)


def test_columns_are_read_only(default_scenario):
    with pytest.raises(ValueError):
        default_scenario.total_data[0] = 1.0


def test_replace_uavs(default_scenario):
    s = default_scenario.replace_uavs(data_capacity=50.0)
    assert np.all(s.data_capacity == 50.0)
    s = default_scenario.replace_uavs(data_capacity=[1.0, 2.0, 3.0])
    assert s.data_capacity.tolist() == [1.0, 2.0, 3.0]
    assert s.ues == default_scenario.ues


def test_config_validation():
    with pytest.raises(ConfigurationError):
        scn.GenerationConfig(n_ues=0).validate()
    with pytest.raises(ConfigurationError):
        scn.GenerationConfig(total_data=(50.0, 10.0)).validate()
    with pytest.raises(ConfigurationError):
        scn.GenerationConfig.from_dict({"bogus": 1})
    cfg = scn.GenerationConfig.from_dict({"n_ues": 5, "total_data": [1, 2]})
    assert cfg.n_ues == 5 and cfg.total_data == (1, 2)
