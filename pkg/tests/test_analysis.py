import math

import numpy as np
import pytest

from lifnet import analysis


def test_half_width_value():
    a = analysis.analyze_separated([20.0, 35.0, 50.0], 1.5, 5.0, 0.2, 0.8)
    expected = 0.8 * math.sqrt(2 * math.log(1.5 / (0.8 * math.sqrt(2 * math.pi) * 0.2)))
    assert a.half_width == pytest.approx(expected, rel=1e-14)
    assert a.half_width == pytest.approx(1.30, abs=5e-3)


def test_stable_regime_bounds():
    a = analysis.analyze_separated([20.0, 35.0, 50.0], 1.5, 5.0, 0.2, 0.8)
    assert a.gamma == pytest.approx(1.5)
    assert a.n_max_per_bump == 1
    assert a.count_bounds == (3, 3)
    assert a.separation_ok and a.amplitude_ok


def test_high_gain_bounds():
    a = analysis.analyze_separated([20.0, 35.0, 50.0], 3.0, 5.0, 0.2, 0.8)
    assert a.gamma == pytest.approx(3.0)
    assert a.n_max_per_bump == 2
    assert a.count_bounds == (3, 6)


def test_amplitude_failure_flagged():
    a = analysis.analyze_separated([20.0], 0.1, 5.0, 0.2, 0.8)
    assert not a.amplitude_ok
    assert math.isnan(a.half_width)


def test_empty_presyn_rejected():
    with pytest.raises(ValueError):
        analysis.analyze_separated([], 1.0, 5.0, 0.2, 0.8)


def test_maxima_separated():
    m = analysis.find_maxima([10.0, 12.0], 0.2)
    np.testing.assert_allclose(m.times, [10.0, 12.0], atol=1e-9)


def test_maxima_coincident():
    m = analysis.find_maxima([10.0, 10.0], 0.2)
    assert len(m) == 1
    assert m.times[0] == pytest.approx(10.0, abs=1e-9)
    assert m.values[0] == pytest.approx(2 / (0.2 * math.sqrt(2 * math.pi)))


def _dense_maxima(times, mu):
    t = np.linspace(min(times) - 2, max(times) + 2, 400001)
    j = sum(np.exp(-0.5 * ((t - s) / mu) ** 2) for s in times)
    i = np.flatnonzero((j[1:-1] > j[:-2]) & (j[1:-1] > j[2:])) + 1
    return t[i]


@pytest.mark.parametrize("sep", [0.5, 1.0, 1.9, 2.1, 3.0])
def test_maxima_match_dense_scan(sep):
    mu = 0.4
    times = [10.0, 10.0 + sep * mu]
    found = analysis.find_maxima(times, mu).times
    dense = _dense_maxima(times, mu)
    assert found.size == dense.size == (1 if sep <= 2.0 else 2)
    np.testing.assert_allclose(found, dense, atol=1e-4)


def test_maxima_midpoint_for_spacing_mu():
    m = analysis.find_maxima([10.0, 10.2], 0.2)
    assert len(m) == 1 and m.times[0] == pytest.approx(10.1, abs=1e-9)


def test_maxima_grid_guard():
    with pytest.raises(ValueError):
        analysis.find_maxima([1.0], 0.2, grid_step=0.05)


def test_classify_examples():
    for omega, regime, count in [(1.5, "stable", 3), (3.0, "separated-high-gain", 6)]:
        inst = analysis.three_bump_fixture(omega)
        a = analysis.analyze_separated(inst.presyn, inst.omega, inst.tau, inst.theta, inst.mu)
        m = analysis.find_maxima(inst.presyn, inst.mu)
        observed = analysis.simulate_single(inst.presyn, inst.omega, inst.tau, inst.theta,
                                            inst.mu, inst.T, 1e-3)
        assert observed.size == count
        assert analysis.classify_regime(a, m, observed) == (regime, True)


def test_classify_merged_overlap():
    presyn, mu, tau, theta = [20.0, 20.2], 0.2, 1.0, 0.25
    omega = 1.04 * tau * theta
    a = analysis.analyze_separated(presyn, omega, tau, theta, mu)
    m = analysis.find_maxima(presyn, mu)
    observed = analysis.simulate_single(presyn, omega, tau, theta, mu, 40.0)
    assert len(m) == 1 and observed.size == 1
    assert analysis.classify_regime(a, m, observed) == ("overlap", True)


def test_classify_rejects_mismatched_mu():
    a = analysis.analyze_separated([20.0], 1.5, 5.0, 0.2, 0.8)
    m = analysis.find_maxima([20.0], 0.4)
    with pytest.raises(ValueError):
        analysis.classify_regime(a, m, [])


def test_counterexample_below_sampler_window():
    """Slightly above unit gain ratio the leak can swallow a whole bump.

    The count formula then overstates the lower bound; the randomized
    samplers therefore keep the stable ratio at 1.5 or above.
    """
    presyn, tau, theta, mu = [20.0], 1.0, 0.5, 0.2
    omega = 1.1 * tau * theta
    a = analysis.analyze_separated(presyn, omega, tau, theta, mu)
    observed = analysis.simulate_single(presyn, omega, tau, theta, mu, 40.0)
    assert a.count_bounds == (1, 1) and observed.size == 0


def test_counterexample_leak_free_high_gain():
    """With a very long membrane memory one bump can exceed the per-bump maximum."""
    presyn, tau, theta, mu = [20.0], 1000.0, 0.01, 0.2
    omega = 5.0 * tau * theta
    a = analysis.analyze_separated(presyn, omega, tau, theta, mu)
    observed = analysis.simulate_single(presyn, omega, tau, theta, mu, 40.0)
    assert observed.size > a.count_bounds[1]


@pytest.mark.parametrize("family", ["stable", "separated-high-gain"])
def test_separated_sampler_windows(family):
    rng = np.random.default_rng(7)
    for _ in range(20):
        inst = analysis.random_separated(rng, family)
        a = analysis.analyze_separated(inst.presyn, inst.omega, inst.tau, inst.theta, inst.mu)
        assert a.separation_ok and a.amplitude_ok
        assert (a.gamma >= 2.0) == (family == "separated-high-gain")
        assert inst.presyn[0] > 6 * inst.mu and inst.T - inst.presyn[-1] > 6 * inst.mu


@pytest.mark.parametrize("kind,per_cluster", [("split", 2), ("merged", 1)])
def test_overlap_sampler_maxima(kind, per_cluster):
    rng = np.random.default_rng(8)
    for _ in range(20):
        inst = analysis.random_overlap(rng, kind)
        a = analysis.analyze_separated(inst.presyn, inst.omega, inst.tau, inst.theta, inst.mu)
        m = analysis.find_maxima(inst.presyn, inst.mu, T=inst.T)
        assert not a.separation_ok
        assert len(m) == per_cluster * inst.presyn.size // 2


def test_spikes_inside_bump_windows():
    rng = np.random.default_rng(11)
    for family in ("stable", "separated-high-gain"):
        for _ in range(30):
            inst = analysis.random_separated(rng, family)
            a = analysis.analyze_separated(inst.presyn, inst.omega, inst.tau, inst.theta, inst.mu)
            spikes = analysis.simulate_single(inst.presyn, inst.omega, inst.tau, inst.theta,
                                              inst.mu, inst.T)
            for t_k in inst.presyn:
                assert np.any(np.abs(spikes - t_k) < a.half_width)
            # every spike belongs to some window
            d = np.min(np.abs(spikes[:, None] - inst.presyn[None, :]), axis=1)
            assert np.all(d < a.half_width)


def test_first_spike_can_trail_the_bump_centre():
    """Charge keeps accumulating past the peak of the bump, so with a leaky
    membrane the first crossing may come after the centre."""
    inst = analysis.three_bump_fixture(1.5)
    spikes = analysis.simulate_single(inst.presyn, inst.omega, inst.tau, inst.theta, inst.mu,
                                      inst.T, 1e-3)
    assert np.all(spikes > inst.presyn)
