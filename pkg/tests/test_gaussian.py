import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import block_diag

from cvrelay.attacks import AttackParams
from cvrelay.errors import InvalidParameterError
from cvrelay.gaussian import (
    condition_on_heterodyne,
    entropy_h,
    epr_cm,
    is_physical,
    symplectic_spectrum,
    two_mode_attack_cm,
    von_neumann_entropy,
)
from cvrelay.rates import post_relay_cm

from conftest import random_physical_cm, random_symplectic


def test_epr_vacuum_limit():
    np.testing.assert_array_equal(epr_cm(1), np.eye(4))


def test_epr_off_diagonal():
    V = epr_cm(2)
    r3 = math.sqrt(3)
    assert V[0, 2] == pytest.approx(r3) and V[1, 3] == pytest.approx(-r3)
    assert V[2, 0] == pytest.approx(r3) and V[3, 1] == pytest.approx(-r3)
    np.testing.assert_allclose(np.diag(V), 2.0)


def test_epr_rejects_mu_below_one():
    with pytest.raises(InvalidParameterError):
        epr_cm(0.5)


@pytest.mark.parametrize("mu", [1.0, 1.5, 5.0, 100.0, 1e4])
def test_epr_is_pure(mu):
    np.testing.assert_allclose(symplectic_spectrum(epr_cm(mu)), [1, 1], atol=1e-9)


def test_attack_cm_examples():
    np.testing.assert_array_equal(two_mode_attack_cm(1, 0, 0), np.eye(4))
    r3 = math.sqrt(3)
    np.testing.assert_allclose(symplectic_spectrum(two_mode_attack_cm(2, r3, -r3)), [1, 1], atol=1e-9)
    np.testing.assert_allclose(symplectic_spectrum(two_mode_attack_cm(2, 0, 0)), [2, 2], atol=1e-12)


def test_attack_cm_rejects_unphysical():
    with pytest.raises(InvalidParameterError):
        two_mode_attack_cm(2, 1.5, 1.5)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_spectrum_identity(n):
    np.testing.assert_allclose(symplectic_spectrum(np.eye(2 * n)), np.ones(n))


def test_spectrum_uncoupled_thermal():
    np.testing.assert_allclose(symplectic_spectrum(np.diag([3.0, 3.0, 2.0, 2.0])), [3, 2])


def test_spectrum_rejects_asymmetric():
    V = np.eye(4)
    V[0, 1] = 0.1
    with pytest.raises(InvalidParameterError):
        symplectic_spectrum(V)


def test_spectrum_large_modulation_asymptote():
    # nu_{1,2} -> sqrt(lam mu / tau), lam = 0.1 * 2
    p = AttackParams(0.9, 2.0)
    nu = symplectic_spectrum(post_relay_cm(1e6, p))
    target = math.sqrt(0.2 * 1e6 / 0.9)
    np.testing.assert_allclose(nu, [target, target], rtol=1e-3)


def test_h_exact_values():
    assert entropy_h(1) == 0.0
    assert entropy_h(3) == pytest.approx(2.0, abs=1e-15)


def test_h_clamps_and_rejects():
    assert entropy_h(1 - 5e-7) == 0.0
    with pytest.raises(InvalidParameterError):
        entropy_h(1 - 2e-6)


def test_h_at_100_against_mpmath():
    mp.mp.dps = 40
    x = mp.mpf(100)
    ref = (x + 1) / 2 * mp.log((x + 1) / 2, 2) - (x - 1) / 2 * mp.log((x - 1) / 2, 2)
    assert entropy_h(100) == pytest.approx(float(ref), abs=1e-12)
    assert abs(float(ref) - float(mp.log(mp.e * 50, 2))) <= 1e-3
    assert abs(entropy_h(100) - math.log2(math.e * 50)) <= 1e-3


@given(st.floats(1.0, 1e4), st.floats(1e-6, 10.0))
def test_h_strictly_increasing(x, d):
    assert entropy_h(x + d) > entropy_h(x)


def test_h_midpoint_concave_on_grid():
    xs = np.linspace(1, 50, 400)
    for a, b in zip(xs[:-2], xs[2:]):
        assert entropy_h(0.5 * (a + b)) >= 0.5 * (entropy_h(a) + entropy_h(b))


def test_entropy_examples():
    assert von_neumann_entropy(epr_cm(10)) == pytest.approx(0.0, abs=1e-8)
    assert von_neumann_entropy(np.diag([3.0] * 4)) == pytest.approx(4.0, abs=1e-14)


def test_entropy_post_relay_asymptote():
    mp.mp.dps = 30
    ref = float(mp.log(mp.e ** 2 * mp.mpf("0.1") * 10 ** 6 / (4 * mp.mpf("0.9")), 2))
    S = von_neumann_entropy(post_relay_cm(1e6, AttackParams(0.9, 1.0)))
    assert abs(S - ref) <= 1e-3


def test_heterodyne_uncorrelated_returns_b():
    B = np.array([[2.0, 0.3], [0.3, 1.5]])
    V = block_diag(np.diag([4.0, 4.0]), B)
    np.testing.assert_allclose(condition_on_heterodyne(V, 0), B, atol=1e-15)


@pytest.mark.parametrize("mu", [1.0, 2.0, 50.0, 1e5])
def test_heterodyne_on_epr_prepares_coherent_state(mu):
    np.testing.assert_allclose(condition_on_heterodyne(epr_cm(mu), 0), np.eye(2), atol=1e-9)


def test_heterodyne_mode_index_checked():
    with pytest.raises(InvalidParameterError):
        condition_on_heterodyne(np.eye(4), 2)


@pytest.mark.parametrize("seed", range(20))
def test_symplectic_invariance(seed):
    rng = np.random.default_rng(seed)
    n = 2 + seed % 2
    V, _ = random_physical_cm(n, rng)
    S = random_symplectic(n, rng)
    a = symplectic_spectrum(V)
    b = symplectic_spectrum(S @ V @ S.T)
    np.testing.assert_allclose(b, a, rtol=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_random_cm_spectrum_recovered(seed):
    rng = np.random.default_rng(100 + seed)
    V, nus = random_physical_cm(3, rng)
    np.testing.assert_allclose(symplectic_spectrum(V), nus, rtol=1e-10)
    assert is_physical(V)


@pytest.mark.parametrize("seed", range(10))
def test_entropy_additivity(seed):
    rng = np.random.default_rng(200 + seed)
    V1, _ = random_physical_cm(1, rng)
    V2, _ = random_physical_cm(2, rng)
    total = von_neumann_entropy(block_diag(V1, V2))
    assert total == pytest.approx(von_neumann_entropy(V1) + von_neumann_entropy(V2), abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_conditioning_never_increases_variances(seed):
    rng = np.random.default_rng(300 + seed)
    n = 2 + seed % 2
    V, _ = random_physical_cm(n, rng)
    mode = int(rng.integers(n))
    rest = [i for i in range(2 * n) if i // 2 != mode]
    out = condition_on_heterodyne(V, mode)
    assert np.all(np.diag(out) <= np.diag(V)[rest] + 1e-12)
    assert is_physical(out)
