import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvrelay.attacks import ATTACK_KINDS
from cvrelay.errors import InvalidParameterError
from cvrelay.rates import RateConfig, named_rate, rate_collective_closed
from cvrelay.thresholds import (
    distance_from_tau,
    optimal_modulation,
    tau_from_distance,
    threshold_curve,
    threshold_omega,
)

REALISTIC = dict(eta=0.98, etap=0.98)
TAU_GRID = np.round(np.arange(0.5, 0.99 + 1e-9, 0.01), 12)


def test_distance_examples():
    assert tau_from_distance(0) == 1.0
    assert tau_from_distance(50) == pytest.approx(0.1, rel=1e-15)
    assert tau_from_distance(10) == pytest.approx(10 ** -0.2, rel=1e-15)
    assert tau_from_distance(10) == pytest.approx(0.63096, abs=5e-6)


def test_distance_domain_errors():
    with pytest.raises(InvalidParameterError):
        tau_from_distance(-1)
    for bad in (0.0, -0.5, 1.2):
        with pytest.raises(InvalidParameterError):
            distance_from_tau(bad)


@given(st.floats(0.0, 500.0))
def test_distance_round_trip(d):
    assert distance_from_tau(tau_from_distance(d)) == pytest.approx(d, rel=1e-10, abs=1e-12)


def bisect_reference(f, a, b, tol=1e-13):
    fa = f(a)
    while b - a > tol:
        m = 0.5 * (a + b)
        if (f(m) > 0) == (fa > 0):
            a, fa = m, f(m)
        else:
            b = m
    return 0.5 * (a + b)


def test_collective_unique_root_against_closed_form():
    pt = threshold_omega(0.9, "collective")
    assert len(pt.roots) == 1
    root = pt.roots[0]
    ref = bisect_reference(lambda w: rate_collective_closed(0.9, w), 1.0, 10.0)
    assert root.omega == pytest.approx(ref, abs=1e-8)
    assert rate_collective_closed(0.9, root.omega - 1e-6) > 0 > rate_collective_closed(0.9, root.omega + 1e-6)
    assert (root.sign_below, root.sign_above) == (1, -1)


def test_epr_positive_inverted_where_rate_starts_negative():
    pt = threshold_omega(0.8, "epr_positive")
    assert len(pt.roots) == 1 and pt.roots[0].inverted


def test_epr_positive_no_threshold_at_tau_09():
    pt = threshold_omega(0.9, "epr_positive")
    assert pt.roots == [] and pt.diagnostic == "positive"
    assert pt.max_tolerable_omega == math.inf


@pytest.mark.parametrize("tau", [0.6, 0.7, 0.8, 0.9])
def test_negative_epr_below_collective(tau):
    neg = threshold_omega(tau, "epr_negative")
    col = threshold_omega(tau, "collective")
    if col.roots:
        assert neg.roots[0].omega < col.roots[0].omega
    else:
        # pure-loss rate already negative: nothing tolerable for either
        assert col.diagnostic == "negative" and neg.diagnostic == "negative"


def test_no_sign_change_diagnostic():
    pt = threshold_omega(0.5, "collective")
    assert pt.roots == [] and pt.diagnostic == "negative"
    assert pt.max_tolerable_omega is None


@pytest.mark.parametrize("kind", ATTACK_KINDS)
@pytest.mark.parametrize("tau", [0.7, 0.8, 0.88, 0.95])
def test_roots_are_genuine(kind, tau):
    pt = threshold_omega(tau, kind)
    for r in pt.roots:
        f = lambda w: named_rate(kind, tau, w).rate
        assert abs(f(r.omega)) <= 1e-6
        assert np.sign(f(r.omega - 1e-6)) == r.sign_below
        assert np.sign(f(r.omega + 1e-6)) == r.sign_above
    assert [r.omega for r in pt.roots] == sorted(r.omega for r in pt.roots)


def test_threshold_dominance():
    neg = threshold_curve("epr_negative", taus=TAU_GRID)
    for kind in ATTACK_KINDS:
        other = threshold_curve(kind, taus=TAU_GRID)
        for a, b in zip(neg.points, other.points):
            standard = [r for r in b.roots if not r.inverted]
            if standard:
                assert a.roots and a.roots[0].omega <= standard[0].omega + 1e-9


@pytest.mark.parametrize("kind", ["collective", "epr_negative", "epr_positive", "sep_pcorr"])
def test_curve_stable_under_finer_scan(kind):
    for tau in (0.75, 0.86, 0.93):
        a = threshold_omega(tau, kind, scan_points=400)
        b = threshold_omega(tau, kind, scan_points=800)
        assert len(a.roots) == len(b.roots)
        for ra, rb in zip(a.roots, b.roots):
            assert abs(ra.omega - rb.omega) <= 1e-6


def test_curve_from_distances_matches_tau_grid():
    ds = np.arange(0, 51, 10.0)
    taus = [tau_from_distance(d) for d in ds]
    by_d = threshold_curve("epr_negative", RateConfig(reference_mu=1e7), distances=ds)
    by_t = threshold_curve("epr_negative", RateConfig(reference_mu=1e7), taus=taus)
    for a, b in zip(by_d.points, by_t.points):
        assert a.tau == b.tau and a.roots == b.roots and a.diagnostic == b.diagnostic


def test_curve_parallel_is_deterministic():
    a = threshold_curve("collective", taus=TAU_GRID[::5], workers=1)
    b = threshold_curve("collective", taus=TAU_GRID[::5], workers=4)
    assert [p.roots for p in a.points] == [p.roots for p in b.points]


def test_curve_rejects_non_monotone_grid():
    with pytest.raises(InvalidParameterError):
        threshold_curve("collective", taus=[0.9, 0.8, 0.85])
    with pytest.raises(InvalidParameterError):
        threshold_curve("collective")


def test_realistic_curve_at_or_below_ideal():
    cfg = RateConfig(mu=70, beta=0.95)
    for tau in (0.88, 0.9, 0.93, 0.96, 0.99):
        ideal = threshold_omega(tau, "epr_negative").max_tolerable_omega
        real = threshold_omega(tau, "epr_negative", cfg, **REALISTIC).max_tolerable_omega
        assert (real or 1.0) <= ideal


def test_optimal_modulation_ideal_prefers_largest_mu():
    grid = np.array([10, 30, 100, 300, 1000.0])
    opt = optimal_modulation(0.9, 1.2, "epr_negative", mu_grid=grid)
    assert np.all(np.diff(opt.rates) >= 0)
    assert opt.mu_star == 1000.0


def test_optimal_modulation_realistic():
    grid = np.arange(10.0, 1001.0, 10.0)
    opt = optimal_modulation(0.9, 1.05, "epr_negative", 0.95, 0.98, 0.98, grid)
    assert 20 <= opt.mu_star <= 100
    r70 = opt.rates[grid == 70.0][0]
    r1000 = opt.rates[grid == 1000.0][0]
    assert r70 > r1000
    assert opt.all_negative  # flagged, argmax still reported


def test_optimal_modulation_grid_checks():
    with pytest.raises(InvalidParameterError):
        optimal_modulation(0.9, 1.2, "collective", mu_grid=[1.0, 10.0])
    with pytest.raises(InvalidParameterError):
        optimal_modulation(0.9, 1.2, "collective", mu_grid=[20.0, 10.0])
