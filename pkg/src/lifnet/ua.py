"""Constructive spike encodings that reproduce a shallow sigmoidal network.

A shallow network ``f_P(x) = sum_p nu_p * sigmoid(<alpha_p, x>)`` is fitted
first.  For a given input ``x`` each output neuron ``p`` then receives ``K``
coincident spikes placed so that its Dirac-driven potential at the horizon
equals ``theta_u + <alpha_p, x>``; the readout of those potentials is
``f_P(x)`` exactly.  Replacing the Dirac impulses by Gaussians of width
``mu`` perturbs the readout by at most
``lip * |nu|_1 * K * mu * |w| / tau_u**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import default_grid_step, delta_output_final, n_steps_for, sigmoid, sigmoid_prime
from . import kernels

BOUNDARY_NUDGE = 1e-9
LOGISTIC_LIP = 0.25


class FitFailure(RuntimeError):
    def __init__(self, message, iteration, loss):
        super().__init__(f"{message} (iteration {iteration}, loss {loss!r})")
        self.iteration = iteration
        self.loss = loss


@dataclass
class ShallowTarget:
    nu: np.ndarray
    alpha: np.ndarray
    rms: float = math.nan

    @property
    def P(self):
        return self.nu.size

    def __call__(self, X):
        X = np.asarray(X, dtype=np.float64)
        return sigmoid(X @ self.alpha.T) @ self.nu


def _solve_nu(F, y, ridge):
    n, P = F.shape
    return np.linalg.solve(F.T @ F / n + ridge * np.eye(P), F.T @ y / n)


def fit_shallow(samples, P, iterations=5000, seed=0, lr=0.05, init=None, method="varpro",
                ridge=1e-6) -> ShallowTarget:
    """Least-squares fit of a width-``P`` sigmoidal network.

    ``samples`` is ``(X, y)``.  ``init`` optionally fixes the starting
    ``(nu, alpha)``; otherwise both are drawn uniformly from [-1, 1].

    ``method="gd"`` runs plain full-batch gradient descent on both weight
    sets.  ``method="varpro"`` (default) solves the outer weights exactly by
    ridge-regularized least squares at every iteration and takes gradient
    steps on the directions only; the outer problem is linear, and plain
    descent on it is too slow to reach useful accuracy in a few thousand
    steps.
    """
    if method not in ("gd", "varpro"):
        raise ValueError(f"unknown method {method!r}")
    X, y = samples
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.shape[0] < P:
        raise ValueError(f"need at least P={P} samples, got {X.shape[0]}")
    rng = np.random.default_rng(seed)
    if init is None:
        nu = rng.uniform(-1.0, 1.0, P)
        alpha = rng.uniform(-1.0, 1.0, (P, X.shape[1]))
    else:
        nu = np.array(init[0], dtype=np.float64).reshape(P)
        alpha = np.array(init[1], dtype=np.float64).reshape(P, X.shape[1])
    n = y.size
    with np.errstate(over="ignore", invalid="ignore"):
        return _descend(X, y, nu, alpha, iterations, lr, method, ridge)


def _descend(X, y, nu, alpha, iterations, lr, method, ridge):
    n = y.size
    for it in range(iterations):
        z = X @ alpha.T
        s = sigmoid(z)
        if method == "varpro":
            nu = _solve_nu(s, y, ridge)
        r = s @ nu - y
        loss = float(np.mean(r * r))
        if not math.isfinite(loss):
            raise FitFailure("non-finite loss", it, loss)
        g_alpha = 2.0 / n * ((sigmoid_prime(z) * r[:, None] * nu).T @ X)
        if method == "gd":
            nu = nu - lr * 2.0 / n * (s.T @ r)
        alpha = alpha - lr * g_alpha
    s = sigmoid(X @ alpha.T)
    if method == "varpro":
        nu = _solve_nu(s, y, ridge)
    r = s @ nu - y
    rms = float(np.sqrt(np.mean(r * r)))
    if not math.isfinite(rms):
        raise FitFailure("non-finite loss", iterations, rms)
    return ShallowTarget(nu, alpha, rms)


def charge(times, tau_u, T):
    """``sum_k exp(-(T - t_k) / tau_u)``."""
    times = np.asarray(times, dtype=np.float64)
    return float(np.sum(np.exp(-(T - times) / tau_u)))


@dataclass
class EncodingEntry:
    times: np.ndarray
    S_star: float
    feasible: bool
    boundary: bool = False


def design_spike_times(target_value, K, w, tau_u, theta_u, T) -> EncodingEntry:
    """``K`` coincident spikes whose Dirac response at ``T`` is ``theta_u + target``."""
    if int(K) != K or K < 1:
        raise ValueError(f"K must be an integer >= 1, got {K!r}")
    if w == 0:
        raise ValueError("w must be non-zero")
    K = int(K)
    S = tau_u / w * (theta_u + target_value)
    lo = K * math.exp(-T / tau_u)
    # targets that land on an endpoint up to rounding are still reachable
    slack = 1e-9
    if not lo * (1 - slack) <= S <= K * (1 + slack):
        return EncodingEntry(np.zeros(0), S, False)
    t = T - tau_u * math.log(K / min(max(S, lo), K))
    boundary = False
    if t <= BOUNDARY_NUDGE:
        t = BOUNDARY_NUDGE
        boundary = True
    elif t >= T - BOUNDARY_NUDGE:
        t = T - BOUNDARY_NUDGE
        boundary = True
    return EncodingEntry(np.full(K, t), S, True, boundary)


@dataclass
class UAEncoding:
    spike_trains: list
    K: int
    S_star: np.ndarray
    feasible: bool
    boundary: list = field(default_factory=list)


def encode(target: ShallowTarget, x, K, w, sp) -> UAEncoding:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    entries = [design_spike_times(float(np.dot(a, x)), K, w, sp.tau_u, sp.theta_u, sp.T)
               for a in target.alpha]
    return UAEncoding([e.times for e in entries], int(K), np.array([e.S_star for e in entries]),
                      all(e.feasible for e in entries), [e.boundary for e in entries])


def smallest_feasible_K(target: ShallowTarget, X, w, sp, K_max=1 << 20):
    """Smallest ``K`` (by doubling) for which every point of ``X`` is feasible."""
    K = 1
    while K <= K_max:
        if all(encode(target, x, K, w, sp).feasible for x in np.atleast_2d(X)):
            return K
        K *= 2
    raise ValueError("no feasible K found")


def error_bound(K, mu, w, nu, tau_u, lip=LOGISTIC_LIP):
    return lip * float(np.sum(np.abs(nu))) * K * mu * abs(w) / tau_u ** 2


def gaussian_output_final(trains, w, sp, grid_step=None):
    grid_step = default_grid_step(sp) if grid_step is None else grid_step
    n = n_steps_for(sp.T, grid_step)
    u = np.empty(len(trains))
    for p, times in enumerate(trains):
        pre = np.ascontiguousarray(np.sort(np.asarray(times, dtype=np.float64)))
        xs = kernels.integrate_neuron(sp.tau_u, math.inf, kernels.MODE_NONE, 0.0, 0.0, w,
                                      sp.mu, pre, sp.T, n)[0]
        u[p] = xs[-1]
    return u


@dataclass
class EncodingReport:
    target_value: float
    delta_readout: float
    delta_error: float
    gaussian_readout: float
    gaussian_gap: float
    bound: float
    exact_ok: bool
    within_bound: bool

    @property
    def passed(self):
        return self.exact_ok and self.within_bound


def verify_encoding(enc: UAEncoding, target: ShallowTarget, x, sp, w, grid_step=None,
                    exact_tol=1e-9, lip=LOGISTIC_LIP) -> EncodingReport:
    if not enc.feasible:
        raise ValueError("encoding is not feasible")
    fx = float(target(np.atleast_2d(x))[0])
    u_delta = np.array([delta_output_final(t, w, sp.tau_u, sp.T) for t in enc.spike_trains])
    r_delta = float(np.dot(target.nu, sigmoid(u_delta - sp.theta_u)))
    u_gauss = gaussian_output_final(enc.spike_trains, w, sp, grid_step)
    r_gauss = float(np.dot(target.nu, sigmoid(u_gauss - sp.theta_u)))
    bound = error_bound(enc.K, sp.mu, w, target.nu, sp.tau_u, lip)
    gap = abs(r_gauss - r_delta)
    err = abs(r_delta - fx)
    return EncodingReport(fx, r_delta, err, r_gauss, gap, bound, err <= exact_tol, gap <= bound)


def mu_budget(epsilon, K, w, nu, tau_u, lip_sigma=LOGISTIC_LIP):
    """Largest Gaussian width for which the readout error stays below ``epsilon``."""
    if epsilon < 0 or tau_u <= 0 or K < 0 or lip_sigma < 0:
        raise ValueError("epsilon, K, tau_u and lip_sigma must be non-negative")
    denom = 2.0 * K * abs(w) * float(np.sum(np.abs(nu))) * lip_sigma
    if denom == 0.0:
        raise ValueError("zero denominator: K, w, nu and lip_sigma must be non-zero")
    return epsilon * tau_u ** 2 / denom


# builtin targets for the construct-ua command, all on [-1, 1]^2
TARGETS = {
    "constant": lambda X: np.full(len(X), 0.5),
    "linear": lambda X: 0.5 * X[:, 0] - 0.25 * X[:, 1],
    "sine-product": lambda X: np.sin(np.pi * X[:, 0]) * np.cos(np.pi * X[:, 1]),
}
