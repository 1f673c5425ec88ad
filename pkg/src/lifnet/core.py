"""Simulation of the input, hidden and output stages and the full network.

Every neuron obeys ``x' = (-x + c0 + gain * J(t)) / tau`` from ``x(0) = 0``:

* input neuron: ``c0 = <a, x>``, ``gain = 0``; hard or mollified reset;
* hidden neuron: ``c0 = 0``, ``gain = omega``, ``J`` built from the pooled
  spikes of the previous layer; hard or mollified reset;
* output neuron: ``c0 = 0``, ``gain = w``, ``J`` built from the spikes of
  the hidden neuron with the same index; no reset.

The network tape keeps everything the reverse sweep needs, so
``network_backward`` returns the exact gradient of the discretized map,
including the sensitivity of every event time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .params import SNNOutput, SpikeTrain, StructuralParams, Trajectory, TrainableParams

COALESCE_TOL = 1e-9
TAPE_LIMIT_BYTES = 1 << 30


class TapeMemoryError(MemoryError):
    """Raised when a recorded forward pass would exceed the tape budget."""

    def __init__(self, required, limit):
        super().__init__(f"tape needs {required} bytes, limit is {limit} bytes")
        self.required = required
        self.limit = limit


def sigmoid(s):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(s, dtype=np.float64)))


def sigmoid_prime(s):
    g = sigmoid(s)
    return g * (1.0 - g)


def default_grid_step(sp: StructuralParams):
    return min(sp.mu / 10.0, sp.tau_min() / 20.0, sp.T / 10000.0)


def n_steps_for(T, grid_step):
    grid_step = float(grid_step)
    if not math.isfinite(grid_step) or grid_step <= 0.0:
        raise ValueError(f"grid_step must be finite and > 0, got {grid_step!r}")
    if grid_step > T:
        raise ValueError(f"grid_step {grid_step} exceeds horizon T={T}")
    # tolerate representation error in T / grid_step
    return max(1, math.ceil(T / grid_step * (1.0 - 1e-12)))


def time_grid(T, n):
    grid = np.arange(n + 1) * (T / n)
    grid[-1] = T
    return grid


def _finite_vector(name, v):
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    return v


def _mode(zeta):
    if zeta is None:
        return kernels.MODE_HARD, 0.0
    zeta = float(zeta)
    if not zeta > 0.0:
        raise ValueError(f"zeta must be > 0, got {zeta!r}")
    return kernels.MODE_MOLLIFIED, zeta


def input_drive(a, x, sp: StructuralParams):
    a = _finite_vector("a", a)
    x = _finite_vector("x", x)
    if a.size != sp.d or x.size != sp.d:
        raise ValueError(f"a and x must have length d={sp.d}")
    return float(np.dot(a, x))


def input_spike_times(a, x, sp: StructuralParams) -> SpikeTrain:
    """Closed-form reset times of the input neuron (period ``beta``)."""
    s = input_drive(a, x, sp)
    if s <= sp.theta_v:
        return SpikeTrain([], (0, 0))
    beta = sp.tau_v * math.log(s / (s - sp.theta_v))
    K = math.floor(sp.T / beta)
    times = [k * beta for k in range(1, K + 1)]
    if times and times[-1] >= sp.T:
        times.pop()
    return SpikeTrain(times, (0, 0))


def gaussian_current(spikes, mu, t):
    """Sum of unit-mass Gaussians of width ``mu`` centred at ``spikes``."""
    mu = float(mu)
    if not mu > 0.0:
        raise ValueError(f"mu must be > 0, got {mu!r}")
    times = np.asarray(getattr(spikes, "times", spikes), dtype=np.float64)
    out = kernels.gaussian_current(times, mu, t)
    return float(out[0]) if np.ndim(t) == 0 else out


@dataclass
class NeuronRecord:
    """Inputs and outputs of one kernel call."""

    tau: float
    theta: float
    c0: float
    gain: float
    presyn: np.ndarray
    xs: np.ndarray
    ev_step: np.ndarray
    ev_t: np.ndarray
    ev_pre: np.ndarray
    ev_post: np.ndarray

    def trajectory(self, T):
        resets = list(zip(self.ev_t.tolist(), self.ev_pre.tolist(), self.ev_post.tolist()))
        return Trajectory(time_grid(T, self.xs.size - 1), self.xs, resets)


def _run(tau, theta, mode, zeta, c0, gain, presyn, mu, T, n):
    presyn = np.ascontiguousarray(presyn, dtype=np.float64)
    xs, ev_step, ev_t, ev_pre, ev_post = kernels.integrate_neuron(
        tau, theta, mode, zeta, c0, gain, mu, presyn, T, n)
    return NeuronRecord(tau, theta, c0, gain, presyn, xs, ev_step, ev_t, ev_pre, ev_post)


def simulate_input(a, x, sp: StructuralParams, grid_step=None, zeta=None) -> Trajectory:
    grid_step = default_grid_step(sp) if grid_step is None else grid_step
    n = n_steps_for(sp.T, grid_step)
    mode, z = _mode(zeta)
    rec = _run(sp.tau_v, sp.theta_v, mode, z, input_drive(a, x, sp), 0.0, [], sp.mu, sp.T, n)
    return rec.trajectory(sp.T)


def pool_spikes(trains):
    """Sorted union of spike trains; times within ``COALESCE_TOL`` are merged.

    Returns ``(times, owners)`` where ``owners[i] = (neuron, event)`` names the
    spike kept for pool entry ``i``.
    """
    entries = sorted(
        (float(t), p, e) for p, times in enumerate(trains) for e, t in enumerate(times))
    times, owners = [], []
    for t, p, e in entries:
        if times and t - times[-1] <= COALESCE_TOL:
            continue
        times.append(t)
        owners.append((p, e))
    return np.array(times, dtype=np.float64), owners


def simulate_hidden(layer, presyn, params: TrainableParams, sp: StructuralParams,
                    grid_step=None, zeta=None):
    """Simulate every neuron of hidden layer ``layer`` (0-based).

    Returns a list of ``(Trajectory, SpikeTrain)`` pairs, one per neuron.
    """
    params.check(sp)
    if not 0 <= layer < sp.L:
        raise ValueError(f"layer must be in [0, {sp.L})")
    grid_step = default_grid_step(sp) if grid_step is None else grid_step
    n = n_steps_for(sp.T, grid_step)
    mode, z = _mode(zeta)
    pre = np.asarray(getattr(presyn, "times", presyn), dtype=np.float64)
    if pre.size > 1 and np.any(np.diff(pre) < 0.0):
        raise ValueError("presynaptic spikes must be sorted")
    out = []
    for p in range(sp.P):
        rec = _run(sp.tau_hidden[layer, p], sp.theta_hidden[layer, p], mode, z,
                   0.0, params.omega[layer, p], pre, sp.mu, sp.T, n)
        out.append((rec.trajectory(sp.T), SpikeTrain(rec.ev_t, (layer + 1, p))))
    return out


def readout(u_final, nu, theta_u):
    return float(np.dot(nu, sigmoid(np.asarray(u_final) - theta_u)))


def simulate_output(presyn, params: TrainableParams, sp: StructuralParams,
                    grid_step=None) -> SNNOutput:
    """``presyn[p]`` drives output neuron ``p``."""
    params.check(sp)
    if len(presyn) != sp.P:
        raise ValueError(f"need {sp.P} presynaptic trains, got {len(presyn)}")
    grid_step = default_grid_step(sp) if grid_step is None else grid_step
    n = n_steps_for(sp.T, grid_step)
    u = np.empty(sp.P)
    for p, train in enumerate(presyn):
        pre = np.asarray(getattr(train, "times", train), dtype=np.float64)
        rec = _run(sp.tau_u, math.inf, kernels.MODE_NONE, 0.0, 0.0, params.w,
                   pre, sp.mu, sp.T, n)
        u[p] = rec.xs[-1]
    return SNNOutput(u, readout(u, params.nu, sp.theta_u))


def delta_output_final(spikes, w, tau_u, T):
    """Output potential at ``T`` when every input bump is a Dirac impulse."""
    times = np.asarray(getattr(spikes, "times", spikes), dtype=np.float64)
    return float(w) / tau_u * float(np.sum(np.exp(-(T - times) / tau_u)))


@dataclass
class NetworkTape:
    x: np.ndarray
    s: float
    n_steps: int
    input: NeuronRecord
    hidden: list      # hidden[l][p] -> NeuronRecord
    pools: list       # pools[l] -> (times, owners) feeding hidden layer l
    output: list      # output[p] -> NeuronRecord
    u_final: np.ndarray
    readout: float

    def spike_trains(self):
        trains = {(0, 0): self.input.ev_t}
        for l, layer in enumerate(self.hidden):
            for p, rec in enumerate(layer):
                trains[(l + 1, p)] = rec.ev_t
        return trains


def tape_bytes(sp: StructuralParams, n):
    neurons = 1 + sp.L * sp.P + sp.P
    return neurons * (n + 1) * 8


def network_forward(x, params: TrainableParams, sp: StructuralParams, grid_step=None,
                    zeta=None, tape_limit=TAPE_LIMIT_BYTES) -> NetworkTape:
    """Full forward pass; hard reset when ``zeta`` is None, else mollified."""
    params.check(sp)
    grid_step = default_grid_step(sp) if grid_step is None else grid_step
    n = n_steps_for(sp.T, grid_step)
    need = tape_bytes(sp, n)
    if need > tape_limit:
        raise TapeMemoryError(need, tape_limit)
    mode, z = _mode(zeta)
    x = _finite_vector("x", x)
    s = input_drive(params.a, x, sp)
    rec_in = _run(sp.tau_v, sp.theta_v, mode, z, s, 0.0, [], sp.mu, sp.T, n)
    pools, hidden = [], []
    prev = [rec_in.ev_t]
    for l in range(sp.L):
        pool = pool_spikes(prev)
        pools.append(pool)
        layer = [
            _run(sp.tau_hidden[l, p], sp.theta_hidden[l, p], mode, z, 0.0,
                 params.omega[l, p], pool[0], sp.mu, sp.T, n)
            for p in range(sp.P)]
        hidden.append(layer)
        prev = [rec.ev_t for rec in layer]
    output = [
        _run(sp.tau_u, math.inf, kernels.MODE_NONE, 0.0, 0.0, params.w, hidden[-1][p].ev_t,
             sp.mu, sp.T, n)
        for p in range(sp.P)]
    u = np.array([rec.xs[-1] for rec in output])
    return NetworkTape(x, s, n, rec_in, hidden, pools, output, u,
                       readout(u, params.nu, sp.theta_u))


def forward(x, params: TrainableParams, sp: StructuralParams, grid_step=None,
            zeta=None) -> SNNOutput:
    tape = network_forward(x, params, sp, grid_step, zeta)
    return SNNOutput(tape.u_final, tape.readout)


def _adjoint(rec, mu, T, n, lam_xT, lam_ev):
    return kernels.adjoint_neuron(rec.tau, rec.c0, rec.gain, mu, rec.presyn, T, n, rec.xs,
                                  rec.ev_step, rec.ev_t, rec.ev_post, lam_xT, lam_ev)


def network_backward(tape: NetworkTape, params: TrainableParams, sp: StructuralParams,
                     d_readout):
    """Gradient of ``d_readout * readout`` in ``to_vector`` order."""
    n = tape.n_steps
    z = tape.u_final - sp.theta_u
    g_nu = d_readout * sigmoid(z)
    lam_u = d_readout * params.nu * sigmoid_prime(z)
    g_w = 0.0
    lam = []
    for p, rec in enumerate(tape.output):
        if lam_u[p] == 0.0 or rec.presyn.size == 0:
            lam.append(np.zeros(rec.presyn.size))
            continue
        _, gg, gpre = _adjoint(rec, sp.mu, sp.T, n, lam_u[p], np.zeros(0))
        g_w += gg
        lam.append(gpre)
    g_omega = np.zeros((sp.L, sp.P))
    for l in range(sp.L - 1, -1, -1):
        times, owners = tape.pools[l]
        src = [tape.input] if l == 0 else tape.hidden[l - 1]
        lam_prev = [np.zeros(rec.ev_t.size) for rec in src]
        for p, rec in enumerate(tape.hidden[l]):
            if rec.ev_t.size == 0 or not np.any(lam[p]):
                continue
            _, gg, gpre = _adjoint(rec, sp.mu, sp.T, n, 0.0, lam[p])
            g_omega[l, p] = gg
            for i, (q, e) in enumerate(owners):
                lam_prev[q][e] += gpre[i]
        lam = lam_prev
    rec = tape.input
    g_s = 0.0
    if rec.ev_t.size and np.any(lam[0]):
        g_s = _adjoint(rec, sp.mu, sp.T, n, 0.0, lam[0])[0]
    g_a = g_s * tape.x
    return np.concatenate([g_a, g_omega.ravel(), [g_w], g_nu])
