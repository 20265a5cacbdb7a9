"""Shared fixtures: default-sensor experiment chain and a linear sensor.

Session-scoped fixtures run the expensive capture chains once; tests
treat the results as read-only.
"""

import dataclasses

import numpy as np
import pytest

from hdrcal import (
    SensorConfig,
    TargetSpec,
    default_experiment,
    load_crf_csv,
    run_calibration,
    run_recovery,
)

# verdict lines appended by tests/test_acceptance.py; printed after the
# run so they survive pytest's fd-level output capture
ACCEPTANCE_VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


def shipped_crf_path() -> str:
    from importlib.resources import files

    return str(files("hdrcal.data") / "default_crf.csv")


@pytest.fixture(scope="session")
def shipped_crf():
    return load_crf_csv(shipped_crf_path())


@pytest.fixture(scope="session")
def default_exp():
    return default_experiment(seed=0)


@pytest.fixture(scope="session")
def default_calib(default_exp):
    return run_calibration(default_exp)


@pytest.fixture(scope="session")
def default_recovery(default_exp, default_calib):
    return run_recovery(default_exp, default_calib)


@pytest.fixture(scope="session")
def noiseless_exp():
    return default_experiment(seed=0, noiseless=True)


@pytest.fixture(scope="session")
def noiseless_calib(noiseless_exp):
    return run_calibration(noiseless_exp)


@pytest.fixture(scope="session")
def noiseless_recovery(noiseless_exp, noiseless_calib):
    return run_recovery(noiseless_exp, noiseless_calib)


def make_linear_sensor(n_nodes=400) -> SensorConfig:
    """Sensor with response v = dark + H: log-log slope 1 up to the offset."""
    h = np.geomspace(0.01, 65400.0, n_nodes)
    curve = ((0.0, 100.0),) + tuple((float(x), float(100.0 + x)) for x in h)
    return SensorConfig(
        bit_depth=16,
        response_curve=curve,
        reference_exposure=1.0,
        dark_level=100.0,
        read_noise_sigma=0.0,
        shot_noise_coeff=0.0,
        anomaly_p_max=0.0,
        anomaly_threshold=50000.0,
        anomaly_steepness=300.0,
        exposure_limits=(1e-6, 100.0),
        rng_seed=0,
    )


def make_linear_target() -> TargetSpec:
    dbs = tuple(round(2.4 * i, 10) for i in range(16))
    return TargetSpec(db_values=dbs, peak_irradiance=50000.0)


@pytest.fixture(scope="session")
def linear_exp():
    tgt = make_linear_target()
    return default_experiment(
        sensor=make_linear_sensor(), target=tgt, calibration_target=tgt, seed=0
    )


@pytest.fixture(scope="session")
def linear_calib(linear_exp):
    return run_calibration(linear_exp)


@pytest.fixture()
def small_scene():
    """A 32x32 two-level irradiance map for cheap capture tests."""
    from hdrcal import IrradianceMap

    values = np.full((32, 32), 100.0)
    values[:16] = 40000.0
    return IrradianceMap(values=values)
