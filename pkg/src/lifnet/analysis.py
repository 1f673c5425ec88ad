"""Spike-count predictions for a hidden neuron driven by Gaussian bumps.

``analyze_separated`` evaluates the window half-width, gain ratio and count
bounds for well separated bumps, ``find_maxima`` locates the strict local
maxima of the input current, and ``classify_regime`` checks an observed spike
count against the bound of its regime.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import n_steps_for

SQRT_2PI = math.sqrt(2.0 * math.pi)
SEPARATION_FACTOR = 6.0
REGIMES = ("stable", "separated-high-gain", "overlap", "overlap-high-gain")


@dataclass
class BumpAnalysis:
    separation_ok: bool
    amplitude_ok: bool
    half_width: float
    gamma: float
    n_max_per_bump: int
    count_bounds: tuple
    K: int
    mu: float
    min_gap: float


@dataclass
class MaximaSet:
    times: np.ndarray
    values: np.ndarray
    mu: float

    def __len__(self):
        return self.times.size


def _times(presyn):
    return np.sort(np.asarray(getattr(presyn, "times", presyn), dtype=np.float64))


def gain_ratio(omega, tau, theta):
    return omega / (tau * theta)


def max_spikes_per_bump(gamma):
    if gamma <= 0:
        return 0
    return max(0, math.floor(1.0 + math.log2(gamma)))


def analyze_separated(presyn, omega, tau, theta, mu) -> BumpAnalysis:
    times = _times(presyn)
    if times.size == 0:
        raise ValueError("presyn must be non-empty")
    if omega <= 0 or tau <= 0 or theta <= 0 or mu <= 0:
        raise ValueError("omega, tau, theta and mu must be > 0")
    K = int(times.size)
    min_gap = float(np.min(np.diff(times))) if K > 1 else math.inf
    separation_ok = min_gap > SEPARATION_FACTOR * mu
    ratio = omega / (mu * SQRT_2PI * theta)
    amplitude_ok = ratio > 1.0
    half_width = mu * math.sqrt(2.0 * math.log(ratio)) if amplitude_ok else math.nan
    gamma = gain_ratio(omega, tau, theta)
    n_max = max_spikes_per_bump(gamma)
    if amplitude_ok and n_max >= 1:
        bounds = (K, K * n_max)
    else:
        # without enough charge per bump no spike is forced
        bounds = (0, K * n_max)
    return BumpAnalysis(separation_ok, amplitude_ok, half_width, gamma, n_max, bounds, K,
                        float(mu), min_gap)


def _current_slope(times, mu, t):
    """``J'(t)`` on an array of times."""
    out = np.zeros_like(t)
    reach = kernels.TRUNCATION * mu
    for s in times:
        u = t - s
        m = np.abs(u) <= reach
        out[m] -= u[m] / (mu * mu) * np.exp(-0.5 * (u[m] / mu) ** 2) / (mu * SQRT_2PI)
    return out


def find_maxima(presyn, mu, grid_step=None, T=None) -> MaximaSet:
    """Strict local maxima of the input current on ``(0, T)``.

    Sign changes of the slope on a uniform grid are refined by bisection;
    maxima closer than ``1e-2 * mu`` are merged.
    """
    if mu <= 0:
        raise ValueError("mu must be > 0")
    grid_step = mu / 20.0 if grid_step is None else float(grid_step)
    if not 0 < grid_step <= mu / 10.0:
        raise ValueError("grid_step must be in (0, mu/10]")
    times = _times(presyn)
    if times.size == 0:
        return MaximaSet(np.zeros(0), np.zeros(0), float(mu))
    reach = kernels.TRUNCATION * mu
    lo = max(0.0, times[0] - reach)
    hi = times[-1] + reach if T is None else float(T)
    n = max(2, math.ceil((hi - lo) / grid_step))
    t = np.linspace(lo, hi, n + 1)
    d = _current_slope(times, mu, t)
    found = []
    for i in np.flatnonzero((d[:-1] > 0.0) & (d[1:] <= 0.0)):
        a, b = t[i], t[i + 1]
        for _ in range(80):
            m = 0.5 * (a + b)
            if _current_slope(times, mu, np.array([m]))[0] > 0.0:
                a = m
            else:
                b = m
        tm = 0.5 * (a + b)
        if not 0.0 < tm < hi:
            continue
        if found and tm - found[-1] < 1e-2 * mu:
            continue
        found.append(tm)
    # keep only strict maxima (negative discrete second difference)
    h = grid_step
    keep = []
    for tm in found:
        j = kernels.gaussian_current(times, mu, np.array([tm - h, tm, tm + h]))
        if j[0] - 2 * j[1] + j[2] < 0.0:
            keep.append(tm)
    keep = np.array(keep)
    values = kernels.gaussian_current(times, mu, keep) if keep.size else np.zeros(0)
    return MaximaSet(keep, values, float(mu))


def classify_regime(analysis: BumpAnalysis, maxima: MaximaSet, observed):
    """Return ``(regime, verdict)`` for an observed spike train."""
    if abs(analysis.mu - maxima.mu) > 1e-12 * analysis.mu:
        raise ValueError("analysis and maxima were computed with different mu")
    count = len(getattr(observed, "times", observed))
    high = analysis.gamma >= 2.0
    if analysis.separation_ok:
        if len(maxima) != analysis.K:
            raise ValueError("maxima do not match the presynaptic train")
        regime = "separated-high-gain" if high else "stable"
        lo, up = analysis.count_bounds
        verdict = lo <= count <= up if high else count == analysis.K
    else:
        regime = "overlap-high-gain" if high else "overlap"
        m = len(maxima)
        verdict = m <= count <= m * analysis.n_max_per_bump
    return regime, bool(verdict)


def simulate_single(presyn, omega, tau, theta, mu, T, grid_step=None):
    """Spike times of one hard-reset neuron driven by ``omega * J``."""
    if grid_step is None:
        grid_step = min(mu / 10.0, tau / 20.0)
    n = n_steps_for(T, grid_step)
    pre = np.ascontiguousarray(_times(presyn))
    return kernels.integrate_neuron(tau, theta, kernels.MODE_HARD, 0.0, 0.0, omega, mu,
                                    pre, T, n)[2]


@dataclass
class Instance:
    presyn: np.ndarray
    omega: float
    tau: float
    theta: float
    mu: float
    T: float

    def to_dict(self):
        return {"presyn": self.presyn.tolist(), "omega": self.omega, "tau": self.tau,
                "theta": self.theta, "mu": self.mu, "T": self.T}


def _base(rng, tau_ratio):
    mu = rng.uniform(0.2, 1.0)
    tau = mu * rng.uniform(*tau_ratio)
    theta = rng.uniform(0.1, 1.0)
    return mu, tau, theta


def random_separated(rng, regime):
    """Separated bumps with gain ratio in ``[1.5, 1.95]`` (stable) or ``[2, 2.9]``.

    Bumps are spaced by more than both ``6 mu`` and two membrane time
    constants, so every bump starts from a nearly discharged neuron.
    """
    ranges = {"stable": (1.5, 1.95), "separated-high-gain": (2.0, 2.9)}
    mu, tau, theta = _base(rng, (5.0, 30.0))
    gamma = rng.uniform(*ranges[regime])
    K = int(rng.integers(1, 6))
    spacing = max(SEPARATION_FACTOR * mu * 1.01, 2.0 * tau)
    gaps = spacing * rng.uniform(1.0, 1.5, K + 1)
    times = np.cumsum(gaps)
    return Instance(times[:K], gamma * tau * theta, tau, theta, mu, float(times[-1]))


def random_overlap(rng, kind):
    """Clusters of two overlapping bumps.

    ``"split"``: spacing in ``[2.3, 5.5] mu``, two maxima per cluster.
    ``"merged"``: spacing at most ``1.5 mu``, one maximum per cluster.
    """
    if kind == "split":
        mu, tau, theta = _base(rng, (10.0, 30.0))
        gamma = rng.uniform(1.3, 1.45)
        d_range = (2.3, 5.5)
    elif kind == "merged":
        mu, tau, theta = _base(rng, (4.0, 7.0))
        gamma = rng.uniform(1.0, 1.08)
        d_range = (0.0, 1.5)
    else:
        raise ValueError(f"unknown overlap kind {kind!r}")
    clusters = int(rng.integers(1, 4))
    spacing = max(SEPARATION_FACTOR * mu, 2.0 * tau) * 1.2
    t = spacing * rng.uniform(1.0, 1.5)
    times = []
    for _ in range(clusters):
        d = mu * rng.uniform(*d_range)
        times.extend([t, t + d])
        t += d + spacing * rng.uniform(1.0, 1.5)
    return Instance(np.array(times), gamma * tau * theta, tau, theta, mu, float(t))


def run_trial(inst: Instance, grid_step=None):
    """Simulate one instance and check it against its regime bound."""
    analysis = analyze_separated(inst.presyn, inst.omega, inst.tau, inst.theta, inst.mu)
    maxima = find_maxima(inst.presyn, inst.mu, T=inst.T)
    observed = simulate_single(inst.presyn, inst.omega, inst.tau, inst.theta, inst.mu,
                               inst.T, grid_step)
    regime, verdict = classify_regime(analysis, maxima, observed)
    if regime.startswith("overlap"):
        bounds = (len(maxima), len(maxima) * analysis.n_max_per_bump)
    else:
        bounds = analysis.count_bounds
    return {"regime": regime, "bounds": list(bounds), "observed": int(observed.size),
            "verdict": verdict, "instance": inst.to_dict()}


def sweep(n_trials, seed, grid_step=None):
    """Randomized trials over all four sampler families (``n_trials`` each)."""
    rng = np.random.default_rng(seed)
    out = []
    for family in ("stable", "separated-high-gain"):
        out.extend(run_trial(random_separated(rng, family), grid_step) for _ in range(n_trials))
    for kind in ("split", "merged"):
        k = n_trials // 2 if kind == "split" else n_trials - n_trials // 2
        out.extend(run_trial(random_overlap(rng, kind), grid_step) for _ in range(k))
    return out


def three_bump_fixture(omega):
    return Instance(np.array([20.0, 35.0, 50.0]), float(omega), 5.0, 0.2, 0.8, 60.0)
