import numpy as np
import pytest

from stackmec.scenario import (
    ChannelConstants,
    GenerationConfig,
    Scenario,
    UavProfile,
    UeProfile,
    generate,
)

ACCEPTANCE_LINES = {}


def record_acceptance(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])


def make_ue(i=0, position=(0.0, 0.0, 0.0), **kw):
    params = dict(total_data=30.0, transmit_power=0.1, local_power=0.8, unit_energy=0.3,
                  satisfaction_coeff=40.0)
    params.update(kw)
    return UeProfile(id=i, position=position, **params)


def make_uav(j=0, position=(0.0, 0.0, 100.0), **kw):
    params = dict(compute_capacity=3e9, compute_power=0.3, hover_power=100.0,
                  power_efficiency=0.8, energy_budget=5e5, data_capacity=200.0)
    params.update(kw)
    return UavProfile(id=j, position=position, **params)


@pytest.fixture
def default_scenario():
    return generate(GenerationConfig(), 0)


@pytest.fixture
def single_ue_scenario():
    return Scenario([make_ue(position=(30.0, 40.0, 0.0))], [make_uav()], ChannelConstants(), 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
