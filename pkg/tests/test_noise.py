import numpy as np
import pytest

from qpermute.config import config_from_dict
from qpermute.noise import DriftParams, drift_fidelity_sweep, drifted_bank, format_table, loglog_slope, perturb_operator, rotation
from qpermute.oracle import haar_random_unitary
from qpermute.state import unitarity_residual


@pytest.fixture(scope="module")
def config():
    return config_from_dict({
        "n": 2, "seed": 11, "operators": "haar", "inputPolarization": [[0.6, 0], [0, 0.8]],
        "controlAmplitudes": "uniform-permutations",
    })


def test_sigma_zero_is_exact():
    u = haar_random_unitary(1)
    assert perturb_operator(u, DriftParams(0.0, 5), 3, 1) is u


@pytest.mark.parametrize("sigma", [1e-3, 0.1, 1.0, 10.0])
def test_perturbed_operator_is_unitary(sigma):
    u = haar_random_unitary(2)
    for k in range(5):
        for l in range(4):
            assert unitarity_residual(perturb_operator(u, DriftParams(sigma, 9), k, l).matrix) <= 1e-10


def test_perturbation_is_deterministic_and_keyed():
    u = haar_random_unitary(3)
    p = DriftParams(0.2, 4)
    a = perturb_operator(u, p, 1, 2)
    assert np.array_equal(a.matrix, perturb_operator(u, p, 1, 2).matrix)
    assert not np.array_equal(a.matrix, perturb_operator(u, p, 2, 2).matrix)
    assert not np.array_equal(a.matrix, perturb_operator(u, p, 1, 3).matrix)
    assert not np.array_equal(a.matrix, perturb_operator(u, DriftParams(0.2, 5), 1, 2).matrix)


def test_rotation_angle_matches_drawn_magnitude():
    # for R = exp(-i theta/2 n.sigma), tr R = 2 cos(theta/2)
    u = haar_random_unitary(0)
    p = DriftParams(0.3, 1)
    r = perturb_operator(u, p, 0, 0).matrix @ u.matrix.conj().T
    theta = 2 * np.arccos(np.clip(np.trace(r).real / 2, -1, 1))
    z = np.random.default_rng([1, 0, 0])
    z.standard_normal(3)
    assert theta == pytest.approx(0.3 * abs(z.standard_normal()), abs=1e-12)


def test_rotation_helper():
    np.testing.assert_allclose(rotation(np.array([0, 0, 1.0]), np.pi), -1j * np.diag([1, -1]), atol=1e-15)


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        DriftParams(-0.1)


def test_drifted_bank_shape(config):
    bank = drifted_bank(config, DriftParams(0.1, 0))
    assert len(bank) == config.m and all(len(ops) == config.n for ops in bank)


def test_sweep_zero_sigma_is_ideal(config):
    (row,) = drift_fidelity_sweep(config, [0.0], trials=5)
    assert row.mean_fidelity == pytest.approx(1, abs=1e-9)
    assert row.std_fidelity <= 1e-12


def test_sweep_monotone_and_quadratic(config):
    rows = drift_fidelity_sweep(config, [0.0, 0.01, 0.02, 0.05, 0.1], trials=50)
    infid = [r.mean_infidelity for r in rows]
    assert all(a <= b for a, b in zip(infid, infid[1:]))
    assert 1.7 <= loglog_slope(rows[1:]) <= 2.3
    assert max(r.max_norm_error for r in rows) <= 1e-9


def test_sweep_needs_a_trial(config):
    with pytest.raises(ValueError):
        drift_fidelity_sweep(config, [0.1], trials=0)


def test_table_format(config):
    rows = drift_fidelity_sweep(config, [0.0, 0.05], trials=3)
    lines = format_table(rows).splitlines()
    assert lines[0] == "sigma,mean_fidelity,std_fidelity,trials"
    assert len(lines) == 3 and lines[2].startswith("0.05,") and lines[2].endswith(",3")
