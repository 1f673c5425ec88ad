"""Smoothed reset, regularized loss with adjoint gradients, and training."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (
    default_grid_step, forward, gaussian_current, n_steps_for, network_backward,
    network_forward, sigmoid, time_grid,
)
from .data import compute_metrics
from .params import StructuralParams, TrainableParams

PROB_CLIP = 1e-7


def mollifier(s, zeta):
    if not zeta > 0:
        raise ValueError(f"zeta must be > 0, got {zeta!r}")
    out = 0.5 * (1.0 + np.tanh(0.5 * zeta * np.asarray(s, dtype=np.float64)))
    return float(out) if np.ndim(out) == 0 else out


def discharge(s, theta, zeta):
    s = np.asarray(s, dtype=np.float64)
    out = (1.0 - mollifier(s - theta, zeta)) * s
    return float(out) if np.ndim(out) == 0 else out


def zeta_schedule(epoch, epochs, zeta0, zeta1):
    if epochs <= 1:
        return float(zeta0)
    return zeta0 * (zeta1 / zeta0) ** (epoch / (epochs - 1))


@dataclass
class MollifierConfig:
    zeta: float = 3.0
    zeta0: float = 3.0
    zeta1: float = 10.0
    epochs: int = 60

    def __post_init__(self):
        if not (self.zeta > 0 and self.zeta0 > 0 and self.zeta1 > 0):
            raise ValueError("sharpness values must be > 0")
        if self.zeta1 < self.zeta0:
            raise ValueError("zeta1 must be >= zeta0")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ValueError("epochs must be an integer >= 1")
        self.epochs = int(self.epochs)


@dataclass
class LossConfig:
    gamma: float = 1e-4
    loss_kind: str = "bce"

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError("gamma must be >= 0")
        if self.loss_kind != "bce":
            raise ValueError(f"unsupported loss {self.loss_kind!r}")


@dataclass
class GradientReport:
    grad_upsilon: np.ndarray
    grad_nu: np.ndarray
    fd_check: float | None = None

    @property
    def vector(self):
        return np.concatenate([self.grad_upsilon, self.grad_nu])


class NonFiniteLoss(FloatingPointError):
    def __init__(self, index, value):
        super().__init__(f"non-finite loss {value!r} at sample {index}")
        self.index = index


def probability(readout):
    """Class-1 probability: the readout is read as a logit."""
    return sigmoid(readout)


def _bce(readout, y):
    p = float(probability(readout))
    clipped = min(max(p, PROB_CLIP), 1.0 - PROB_CLIP)
    loss = -math.log(clipped) if y == 1 else -math.log(1.0 - clipped)
    d = p - y if clipped == p else 0.0
    return loss, d


def loss_value(batch, params: TrainableParams, sp: StructuralParams, cfg: LossConfig,
               zeta=None, grid_step=None):
    """Regularized mean BCE; forward passes only."""
    xs, ys = batch
    total = 0.0
    for i, (x, y) in enumerate(zip(xs, ys)):
        r = forward(x, params, sp, grid_step, zeta).readout
        li, _ = _bce(r, int(y))
        if not math.isfinite(li) or not math.isfinite(r):
            raise NonFiniteLoss(i, r)
        total += li
    v = params.to_vector()
    return total / len(ys) + cfg.gamma * float(np.dot(v, v))


def loss_and_grad(batch, params: TrainableParams, sp: StructuralParams, cfg: LossConfig,
                  zeta=None, grid_step=None, fd_check=False, fd_rel_step=1e-5):
    """Loss and exact gradient of the discretized, mollified network.

    ``batch`` is ``(X, y)``; ``zeta=None`` uses the hard reset.
    """
    xs, ys = batch
    if len(ys) == 0:
        raise ValueError("batch must be non-empty")
    if any(int(y) not in (0, 1) for y in ys):
        raise ValueError("labels must be 0 or 1")
    grad = np.zeros(sp.n_params)
    total = 0.0
    for i, (x, y) in enumerate(zip(xs, ys)):
        tape = network_forward(x, params, sp, grid_step, zeta)
        li, d = _bce(tape.readout, int(y))
        if not math.isfinite(li) or not math.isfinite(tape.readout):
            raise NonFiniteLoss(i, tape.readout)
        total += li
        if d != 0.0:
            grad += network_backward(tape, params, sp, d)
    N = len(ys)
    v = params.to_vector()
    loss = total / N + cfg.gamma * float(np.dot(v, v))
    grad = grad / N + 2.0 * cfg.gamma * v
    split = sp.d + sp.L * sp.P + 1
    report = GradientReport(grad[:split], grad[split:])
    if fd_check:
        fd = finite_difference_grad(batch, params, sp, cfg, zeta, grid_step, fd_rel_step)
        report.fd_check = float(np.max(np.abs(grad - fd) / np.maximum(1.0, np.abs(fd))))
    return loss, report


def finite_difference_grad(batch, params, sp, cfg, zeta=None, grid_step=None, rel_step=1e-5):
    v = params.to_vector()
    out = np.empty_like(v)
    for i in range(v.size):
        h = rel_step * max(1.0, abs(v[i]))
        vp = v.copy()
        vm = v.copy()
        vp[i] += h
        vm[i] -= h
        lp = loss_value(batch, TrainableParams.from_vector(vp, sp), sp, cfg, zeta, grid_step)
        lm = loss_value(batch, TrainableParams.from_vector(vm, sp), sp, cfg, zeta, grid_step)
        out[i] = (lp - lm) / (2.0 * h)
    return out


def predict(params, sp, X, grid_step=None, zeta=None):
    return np.array([int(probability(forward(x, params, sp, grid_step, zeta).readout) >= 0.5)
                     for x in X], dtype=np.int64)


class TrainingDiverged(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass
class TrainResult:
    params: TrainableParams
    history: list = field(default_factory=list)
    seconds: float = 0.0


def readout_features(params, sp, X, zeta=None, grid_step=None):
    """``sigmoid(u_p(T) - theta_u)`` for every sample; the readout is linear in these."""
    return np.array([sigmoid(forward(x, params, sp, grid_step, zeta).u_final - sp.theta_u)
                     for x in X])


def fit_readout(F, y, gamma, iterations=50):
    """Newton's method for the readout weights with the other parameters fixed.

    The loss is convex in the readout weights, so this returns the exact
    minimizer of mean BCE + ``gamma * |nu|^2``.
    """
    n, P = F.shape
    nu = np.zeros(P)
    ridge = 2.0 * gamma * np.eye(P) + 1e-12 * np.eye(P)
    for _ in range(iterations):
        p = sigmoid(F @ nu)
        g = F.T @ (p - y) / n + 2.0 * gamma * nu
        H = (F * (p * (1.0 - p))[:, None]).T @ F / n + ridge
        delta = np.linalg.solve(H, g)
        nu = nu - delta
        if np.max(np.abs(delta)) <= 1e-12 * max(1.0, np.max(np.abs(nu))):
            break
    return nu


def initialize(config, train_ds):
    """Seeded random search over hidden-layer candidates.

    Each candidate draws an input weight direction with norm in [1, 4],
    hidden gains in [1, 3] and an output gain in [-2, 2]; its readout weights
    are then solved exactly and the candidate with the lowest training loss
    wins.
    """
    sp = config.structural
    opt = config.optimizer
    cfg = LossConfig(gamma=opt["gamma"])
    zeta = config.mollifier.zeta0
    rng = np.random.default_rng(config.init_seed)
    best = None
    for _ in range(int(opt["init_candidates"])):
        direction = rng.normal(size=sp.d)
        a = direction / np.linalg.norm(direction) * rng.uniform(1.0, 4.0)
        omega = rng.uniform(1.0, 3.0, (sp.L, sp.P))
        w = rng.uniform(-2.0, 2.0)
        cand = TrainableParams(a, omega, w, np.zeros(sp.P))
        F = readout_features(cand, sp, train_ds.points, zeta, config.grid_step)
        cand.nu = fit_readout(F, train_ds.labels.astype(np.float64), cfg.gamma)
        v = cand.to_vector()
        loss = (float(np.mean([_bce(r, int(y))[0] for r, y in zip(F @ cand.nu, train_ds.labels)]))
                + cfg.gamma * float(np.dot(v, v)))
        if best is None or loss < best[0]:
            best = (loss, cand)
    return best[1]


def train(config, data, params=None):
    """Full-batch gradient descent with a geometric sharpness schedule.

    ``data`` is ``(train, val, test)``; only train and val are used.  Without
    explicit ``params`` the start point comes from ``initialize``.  The step
    is halved whenever a proposal would raise the loss at the current
    sharpness, so the training loss never increases within an epoch.
    """
    sp = config.structural
    train_ds, val_ds = data[0], data[1]
    if len(train_ds) == 0:
        raise ValueError("empty training split")
    opt = config.optimizer
    moll = config.mollifier
    cfg = LossConfig(gamma=opt["gamma"])
    grid_step = config.grid_step
    start = time.perf_counter()
    if params is None:
        params = initialize(config, train_ds)
    batch = (train_ds.points, train_ds.labels)
    step = float(opt["step"])
    history = []
    for epoch in range(moll.epochs):
        zeta = zeta_schedule(epoch, moll.epochs, moll.zeta0, moll.zeta1)
        try:
            loss, rep = loss_and_grad(batch, params, sp, cfg, zeta, grid_step)
        except NonFiniteLoss as exc:
            raise TrainingDiverged(str(exc), history) from exc
        v = params.to_vector()
        g = rep.vector
        accepted = False
        for _ in range(int(opt["max_halvings"])):
            cand = TrainableParams.from_vector(v - step * g, sp)
            try:
                new_loss = loss_value(batch, cand, sp, cfg, zeta, grid_step)
            except NonFiniteLoss:
                new_loss = math.inf
            if new_loss <= loss:
                params = cand
                accepted = True
                break
            step *= 0.5
        val = compute_metrics(predict(params, sp, val_ds.points, grid_step, zeta),
                              val_ds.labels)
        history.append({"epoch": epoch, "zeta": zeta, "loss": loss, "step": step,
                        "accepted": accepted,
                        **{f"val_{k}": x for k, x in val.to_dict().items()}})
    return TrainResult(params, history, time.perf_counter() - start)


@dataclass
class NeuronInstance:
    """A single resetting neuron driven by a constant and a Gaussian current."""

    tau: float
    theta: float
    presyn: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gain: float = 0.0
    c0: float = 0.0
    mu: float = 0.2
    T: float = 60.0

    def run(self, grid_step, zeta=None):
        n = n_steps_for(self.T, grid_step)
        mode = kernels.MODE_HARD if zeta is None else kernels.MODE_MOLLIFIED
        pre = np.ascontiguousarray(np.sort(np.asarray(self.presyn, dtype=np.float64)))
        xs, _, ev_t, ev_pre, ev_post = kernels.integrate_neuron(
            self.tau, self.theta, mode, 0.0 if zeta is None else float(zeta),
            self.c0, self.gain, self.mu, pre, self.T, n)
        return time_grid(self.T, n), xs, ev_t

    def slope(self, t):
        j = gaussian_current(self.presyn, self.mu, t) if len(self.presyn) else 0.0
        return (-self.theta + self.c0 + self.gain * j) / self.tau


@dataclass
class ConvergenceReport:
    zetas: list
    sup_gaps: list
    spike_gaps: list
    count_match: list
    theta: float
    grid_step: float
    verdict: bool


def verify_mollified_convergence(instance: NeuronInstance, zetas=(3, 10, 30, 100, 300),
                                 grid_step=None, sup_tol=1e-3, min_slope=1e-6):
    """Compare mollified runs against the hard-reset run of the same neuron."""
    if grid_step is None:
        grid_step = min(instance.mu / 10.0, instance.tau / 20.0, instance.T / 10000.0)
    _, ref, ref_t = instance.run(grid_step)
    slopes = [instance.slope(t) for t in ref_t]
    if any(s <= min_slope for s in slopes):
        raise ValueError(f"non-transversal crossing: min slope {min(slopes):.3g}")
    sup_gaps, spike_gaps, matches = [], [], []
    for z in zetas:
        _, xs, ev_t = instance.run(grid_step, z)
        sup_gaps.append(float(np.max(np.abs(xs - ref))))
        match = ev_t.size == ref_t.size
        matches.append(match)
        if match:
            spike_gaps.append(float(np.max(np.abs(ev_t - ref_t))) if ev_t.size else 0.0)
        else:
            spike_gaps.append(math.inf)
    monotone = all(b <= a for a, b in zip(sup_gaps, sup_gaps[1:]))
    verdict = (monotone and sup_gaps[-1] <= sup_tol * instance.theta
               and matches[-1] and spike_gaps[-1] <= grid_step)
    return ConvergenceReport(list(zetas), sup_gaps, spike_gaps, matches, instance.theta,
                             grid_step, bool(verdict))


__all__ = [
    "mollifier", "discharge", "zeta_schedule", "MollifierConfig", "LossConfig",
    "GradientReport", "loss_and_grad", "loss_value", "finite_difference_grad", "predict",
    "train", "initialize", "fit_readout", "readout_features", "TrainResult", "TrainingDiverged", "NeuronInstance",
    "verify_mollified_convergence", "ConvergenceReport", "default_grid_step",
]
