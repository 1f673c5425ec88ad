import math

import numpy as np
import pytest

from lifnet import _pykernels, kernels

compiled = pytest.mark.skipif(kernels.compiled_backend is None, reason="extension not built")


def _random_case(rng):
    pre = np.sort(rng.uniform(0.0, 40.0, rng.integers(0, 15)))
    return dict(tau=rng.uniform(2, 8), theta=rng.uniform(0.1, 0.5), mode=int(rng.integers(0, 3)),
                zeta=3.0, c0=rng.uniform(0, 0.3), gain=rng.uniform(0, 3), mu=0.3, presyn=pre,
                T=40.0, n_steps=int(rng.integers(100, 900)))


@compiled
@pytest.mark.parametrize("seed", range(10))
def test_backends_agree_bitwise(seed):
    rng = np.random.default_rng(seed)
    case = _random_case(rng)
    a = _pykernels.integrate_neuron(**case)
    b = kernels.compiled_backend.integrate_neuron(**case)
    for u, v in zip(a, b):
        assert np.array_equal(u, v)
    lam = rng.normal(size=a[2].size)
    args = (case["tau"], case["c0"], case["gain"], case["mu"], case["presyn"], case["T"],
            case["n_steps"], a[0], a[1], a[2], a[4], 0.7, lam)
    ga = _pykernels.adjoint_neuron(*args)
    gb = kernels.compiled_backend.adjoint_neuron(*args)
    assert ga[0] == gb[0] and ga[1] == gb[1]
    assert np.array_equal(ga[2], gb[2])


@compiled
def test_gaussian_current_backends_agree():
    t = np.linspace(0, 10, 101)
    pre = [2.0, 2.5, 7.0]
    assert np.array_equal(_pykernels.gaussian_current(pre, 0.4, t),
                          kernels.compiled_backend.gaussian_current(pre, 0.4, t))


def test_event_buffer_grows():
    # fast constant drive: many events, more than the initial buffer
    xs, step, t, pre, post = kernels.integrate_neuron(1.0, 0.5, 1, 0.0, 5.0, 0.0, 0.2, [], 60.0, 6000)
    assert t.size > 64
    assert np.all(np.diff(t) > 0)
    assert np.all(post == 0.0)
    assert np.all(step[1:] >= step[:-1])


def _loss(res, weights, d):
    xs, _, t, _, _ = res
    return float(np.dot(weights, t) + d * xs[-1])


@pytest.mark.parametrize("mode", [1, 2])
def test_adjoint_matches_finite_differences(mode):
    pre = np.array([5.0, 7.0, 12.0, 30.0])
    T, n, tau, theta, mu = 40.0, 800, 3.0, 0.25, 0.3
    c0, gain = 0.1, 2.2

    def run(c0, gain, pre):
        return kernels.integrate_neuron(tau, theta, mode, 3.0, c0, gain, mu, pre, T, n)

    base = run(c0, gain, pre)
    weights = np.random.default_rng(0).normal(size=base[2].size)
    assert weights.size > 5
    g_c0, g_gain, g_pre = kernels.adjoint_neuron(tau, c0, gain, mu, pre, T, n, base[0], base[1],
                                                 base[2], base[4], 0.7, weights)
    eps = 1e-6

    def fd(f):
        a, b = f(eps), f(-eps)
        assert a[2].size == b[2].size == base[2].size
        return (_loss(a, weights, 0.7) - _loss(b, weights, 0.7)) / (2 * eps)

    assert g_c0 == pytest.approx(fd(lambda e: run(c0 + e, gain, pre)), rel=1e-6, abs=1e-8)
    assert g_gain == pytest.approx(fd(lambda e: run(c0, gain + e, pre)), rel=1e-6, abs=1e-8)
    for j in range(pre.size):
        def shifted(e, j=j):
            p = pre.copy()
            p[j] += e
            return run(c0, gain, p)
        assert g_pre[j] == pytest.approx(fd(shifted), rel=1e-5, abs=1e-8)


def test_event_time_is_machine_precise():
    xs, _, t, pre, _ = kernels.integrate_neuron(8.0, 0.8, 1, 0.0, 1.6, 0.0, 0.2, [], 60.0, 600)
    assert np.all(np.abs(pre - 0.8) <= 1e-14)


def test_no_events_without_reset_mode():
    xs, _, t, _, _ = kernels.integrate_neuron(8.0, 0.8, 0, 0.0, 1.6, 0.0, 0.2, [], 60.0, 600)
    assert t.size == 0
    assert xs[-1] == pytest.approx(1.6 * (1 - math.exp(-60 / 8)), rel=1e-3)
