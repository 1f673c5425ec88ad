import math

import numpy as np
import pytest

from lifnet import core
from lifnet.params import SpikeTrain, StructuralParams, TrainableParams


def test_input_below_threshold_is_silent(sp):
    assert len(core.input_spike_times([0.5, 0.0], [1.0, 0.0], sp)) == 0


def test_input_double_threshold_period(sp):
    train = core.input_spike_times([1.6, 0.0], [1.0, 0.0], sp)
    beta = 8 * math.log(2)
    assert len(train) == 10
    np.testing.assert_allclose(train.times, beta * np.arange(1, 11), rtol=0, atol=1e-12)


def test_input_closed_form_example(sp):
    train = core.input_spike_times([1.0, 0.0], [1.0, 0.0], sp)
    np.testing.assert_allclose(train.times, [12.875503299472802, 25.751006598945604,
                                             38.626509898418406, 51.50201319789121], atol=1e-12)


def test_input_rejects_non_finite(sp):
    with pytest.raises(ValueError):
        core.input_spike_times([np.nan, 0.0], [1.0, 0.0], sp)


def test_simulate_input_zero_drive(sp):
    traj = core.simulate_input([0.0, 0.0], [1.0, 1.0], sp, 0.01)
    assert np.all(traj.values == 0.0)
    assert traj.resets == []


def test_simulate_input_matches_closed_form(sp):
    traj = core.simulate_input([1.6, 0.0], [1.0, 0.0], sp, 0.001)
    exact = core.input_spike_times([1.6, 0.0], [1.0, 0.0], sp).times
    assert traj.reset_times.size == exact.size
    assert np.max(np.abs(traj.reset_times - exact)) <= 1e-6


def test_simulate_input_between_resets(sp):
    s = 1.6
    traj = core.simulate_input([s, 0.0], [1.0, 0.0], sp, 0.001)
    resets = np.concatenate([[0.0], traj.reset_times])
    last = resets[np.searchsorted(resets, traj.grid, side="right") - 1]
    exact = s * (1.0 - np.exp(-(traj.grid - last) / sp.tau_v))
    assert np.max(np.abs(traj.values - exact)) <= 1e-7


def test_simulate_input_rejects_large_step(sp):
    with pytest.raises(ValueError):
        core.simulate_input([1.0, 0.0], [1.0, 0.0], sp, 100.0)
    with pytest.raises(ValueError):
        core.simulate_input([1.0, 0.0], [1.0, 0.0], sp, 0.0)


def test_gaussian_current_examples():
    assert core.gaussian_current([], 0.8, 3.0) == 0.0
    assert core.gaussian_current([3.0], 0.8, 3.0) == pytest.approx(1 / (0.8 * math.sqrt(2 * math.pi)))
    assert core.gaussian_current([3.0], 0.8, 3.0) == pytest.approx(0.4987, abs=1e-4)
    t = np.linspace(0.0, 60.0, 60001)
    j = core.gaussian_current([10.0, 20.0, 44.0], 0.8, t)
    assert np.trapezoid(j, t) == pytest.approx(3.0, abs=1e-9)
    with pytest.raises(ValueError):
        core.gaussian_current([1.0], 0.0, 1.0)


def _hidden_sp(omega):
    sp = StructuralParams(tau_hidden=5.0, theta_hidden=0.2, mu=0.8, L=1, P=1, d=1)
    return sp, TrainableParams([1.0], [[omega]], 1.0, [1.0])


@pytest.mark.parametrize("omega,count", [(1.5, 3), (3.0, 6)])
def test_hidden_three_bump_counts(omega, count):
    sp, params = _hidden_sp(omega)
    (traj, train), = core.simulate_hidden(0, SpikeTrain([20.0, 35.0, 50.0]), params, sp, 1e-3)
    assert len(train) == count
    # reset semantics: crossing at threshold, post value 0
    for t, pre, post in traj.resets:
        assert abs(pre - 0.2) <= 1e-12 and post == 0.0


def test_hidden_empty_presyn():
    sp, params = _hidden_sp(3.0)
    (traj, train), = core.simulate_hidden(0, SpikeTrain([]), params, sp)
    assert len(train) == 0 and np.all(traj.values == 0.0)


def test_hidden_rejects_unsorted():
    sp, params = _hidden_sp(3.0)
    with pytest.raises(ValueError):
        core.simulate_hidden(0, [5.0, 3.0], params, sp)


def test_hidden_rejects_non_finite_gain():
    with pytest.raises(ValueError):
        TrainableParams([1.0], [[np.inf]], 1.0, [1.0])


def test_output_empty_presyn(sp, active_params):
    out = core.simulate_output([[]] * sp.P, active_params, sp)
    assert np.all(out.u_final == 0.0)
    expected = sum(active_params.nu) * (1 / (1 + math.exp(0.3)))
    assert out.readout == pytest.approx(expected, rel=1e-14)


def test_output_close_to_delta_model():
    sp = StructuralParams(P=1, d=1, mu=0.2, tau_u=10.0)
    params = TrainableParams([1.0], [[1.0]], 1.0, [1.0])
    spikes = [20.0, 33.0, 47.0]
    out = core.simulate_output([spikes], params, sp, 0.01)
    delta = core.delta_output_final(spikes, 1.0, 10.0, 60.0)
    assert abs(out.u_final[0] - delta) <= 3 * 0.2 * 1.0 / 100


def test_output_grid_convergence():
    sp = StructuralParams(P=1, d=1, mu=0.2)
    params = TrainableParams([1.0], [[1.0]], 1.0, [1.0])
    spikes = [[20.0, 33.0, 47.0]]
    u = [core.simulate_output(spikes, params, sp, h).u_final[0] for h in (0.02, 0.01, 0.005)]
    assert abs(u[2] - u[1]) <= 1e-5
    # second order: successive differences shrink by about four
    assert abs(u[1] - u[0]) / abs(u[2] - u[1]) == pytest.approx(4.0, rel=0.05)


def test_delta_output_examples():
    assert core.delta_output_final([60.0], 2.0, 10.0, 60.0) == pytest.approx(0.2)
    assert core.delta_output_final([0.0], 2.0, 10.0, 60.0) == pytest.approx(0.2 * math.exp(-6))
    assert core.delta_output_final([0.0] * 4, 2.0, 10.0, 60.0) == pytest.approx(
        0.2 * 4 * math.exp(-6))


def test_forward_inactive_input(sp, active_params):
    out = core.forward([-1.0, -1.0], active_params, sp)
    assert np.all(out.u_final == 0.0)
    assert out.readout == pytest.approx(sum(active_params.nu) / (1 + math.exp(0.3)))


def test_forward_cascade_spikes(sp, active_params):
    tape = core.network_forward([1.0, 1.0], active_params, sp, 0.02)
    assert tape.input.ev_t.size > 0
    assert any(rec.ev_t.size for rec in tape.hidden[0])
    assert np.any(tape.u_final != 0.0)
    assert tape.readout == pytest.approx(
        float(np.dot(active_params.nu, core.sigmoid(tape.u_final - sp.theta_u))), abs=1e-15)


def test_forward_permutation_invariance(sp, active_params):
    perm = np.random.default_rng(0).permutation(sp.P)
    permuted = TrainableParams(active_params.a, active_params.omega[:, perm], active_params.w,
                               active_params.nu[perm])
    a = core.forward([1.0, 1.0], active_params, sp, 0.02).readout
    b = core.forward([1.0, 1.0], permuted, sp, 0.02).readout
    assert a == pytest.approx(b, rel=1e-14)


def test_forward_three_bump_single_neuron():
    sp = StructuralParams(tau_hidden=5.0, theta_hidden=0.2, mu=0.8, L=1, P=1, d=1)
    params = TrainableParams([1.0], [[3.0]], 1.0, [1.0])
    tape = core.network_forward([2.0], params, sp, 0.005)
    pool = tape.pools[0][0]
    (_, train), = core.simulate_hidden(0, pool, params, sp, 0.005)
    np.testing.assert_array_equal(train.times, tape.hidden[0][0].ev_t)


def test_pool_coalesces_duplicates():
    times, owners = core.pool_spikes([[1.0, 2.0], [1.0 + 1e-10, 3.0]])
    np.testing.assert_array_equal(times, [1.0, 2.0, 3.0])
    assert owners == [(0, 0), (0, 1), (1, 1)]


def test_default_grid_step(sp):
    assert core.default_grid_step(sp) == pytest.approx(0.006)


def test_tape_limit(sp, active_params):
    with pytest.raises(core.TapeMemoryError) as err:
        core.network_forward([1.0, 1.0], active_params, sp, 0.02, tape_limit=1000)
    assert err.value.required > 1000


def test_structural_validation():
    with pytest.raises(ValueError):
        StructuralParams(tau_v=-1.0)
    with pytest.raises(ValueError):
        StructuralParams(L=0)
    with pytest.raises(ValueError):
        StructuralParams(tau_hidden=[[1.0, 2.0]], P=3)
    sp = StructuralParams(L=2, P=3, d=4)
    assert sp.n_params == 4 + 6 + 1 + 3
    assert sp.tau_hidden.shape == (2, 3)


def test_params_vector_round_trip(sp):
    p = TrainableParams.random(sp, 5)
    q = TrainableParams.from_vector(p.to_vector(), sp)
    np.testing.assert_array_equal(p.to_vector(), q.to_vector())
    assert p.to_vector().size == 19
    assert np.all(np.abs(p.to_vector()) <= 1.0)


def test_spike_train_invariant():
    with pytest.raises(ValueError):
        SpikeTrain([2.0, 1.0])
    with pytest.raises(ValueError):
        SpikeTrain([0.0, 1.0])
