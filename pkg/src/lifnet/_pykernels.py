"""Pure-Python single-neuron kernels.

This is the reference implementation of the hot loops; ``_kernels.pyx`` is a
line-for-line port.  Both expose the same three functions:

``integrate_neuron``
    Fixed-step explicit midpoint integration of
    ``x' = (-x + c0 + gain * J(t)) / tau`` on ``[0, T]`` with threshold events.
``adjoint_neuron``
    Reverse sweep through the recorded steps and events.
``gaussian_current``
    Truncated sum of unit-mass Gaussians centred at presynaptic spikes.

Event handling: a step whose end value reaches ``theta`` contains an event.
The crossing inside the step is located to machine precision (Newton with a
bisection safeguard on the partial-step map), the state jumps to the
post-event value and integration resumes from the event time to the end of
the same step.
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right

import numpy as np

MODE_NONE = 0
MODE_HARD = 1
MODE_MOLLIFIED = 2

TRUNCATION = 8.0
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
MAX_EVENTS_PER_STEP = 10_000
BACKEND = "python"


def _current(pre, mu, t):
    """Return ``(J(t), J'(t))`` for sorted spike list ``pre``."""
    reach = TRUNCATION * mu
    lo = bisect_left(pre, t - reach)
    hi = bisect_right(pre, t + reach)
    amp = INV_SQRT_2PI / mu
    inv2 = 0.5 / (mu * mu)
    j = 0.0
    dj = 0.0
    for i in range(lo, hi):
        u = t - pre[i]
        g = amp * math.exp(-u * u * inv2)
        j += g
        dj -= u / (mu * mu) * g
    return j, dj


def gaussian_current(presyn, mu, t):
    pre = sorted(float(v) for v in presyn)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    return np.array([_current(pre, mu, float(ti))[0] for ti in t])


def _discharge(s, theta, zeta):
    return (1.0 - 0.5 * (1.0 + math.tanh(0.5 * zeta * (s - theta)))) * s


class _Drive:
    __slots__ = ("pre", "mu", "c0", "gain", "empty")

    def __init__(self, pre, mu, c0, gain):
        self.pre = pre
        self.mu = mu
        self.c0 = c0
        self.gain = gain
        self.empty = len(pre) == 0 or gain == 0.0

    def value(self, t):
        if self.empty:
            return self.c0, 0.0
        j, dj = _current(self.pre, self.mu, t)
        return self.c0 + self.gain * j, self.gain * dj


def _phi(xa, s, tau, ia, im):
    """Midpoint partial step of length ``s`` from state ``xa``."""
    c1 = s / tau
    c2 = 0.5 * c1 * c1
    return xa * (1.0 - c1 + c2) - c2 * ia + c1 * im


def _phi_s(xa, s, tau, ia, im, dim):
    return (xa * (-1.0 + s / tau) / tau - s / (tau * tau) * ia + im / tau
            + 0.5 * s / tau * dim)


def _locate(xa, ta, s_end, xb, tau, theta, drive, ia):
    """Root of ``phi(xa, ta, s) = theta`` on ``(0, s_end]``."""
    lo, hi = 0.0, s_end
    s = s_end * (theta - xa) / (xb - xa)
    if not (0.0 < s <= s_end):
        s = 0.5 * s_end
    for _ in range(200):
        im, dim = drive.value(ta + 0.5 * s)
        g = _phi(xa, s, tau, ia, im) - theta
        if g == 0.0:
            return s
        if g < 0.0:
            lo = s
        else:
            hi = s
        gp = _phi_s(xa, s, tau, ia, im, dim)
        s_new = s - g / gp if gp > 0.0 else -1.0
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) <= 1e-15 * (ta + s) or hi - lo <= 1e-15 * (ta + hi):
            return s_new
        s = s_new
    return s


def integrate_neuron(tau, theta, mode, zeta, c0, gain, mu, presyn, T, n_steps):
    pre = [float(v) for v in presyn]
    drive = _Drive(pre, mu, float(c0), float(gain))
    h = T / n_steps
    xs = np.empty(n_steps + 1)
    xs[0] = 0.0
    ev_step, ev_t, ev_pre, ev_post = [], [], [], []
    x = 0.0
    for k in range(n_steps):
        t0 = k * h
        t1 = T if k + 1 == n_steps else (k + 1) * h
        ta, xa = t0, x
        n_ev = 0
        while True:
            s = t1 - ta
            ia, _ = drive.value(ta)
            im, _ = drive.value(ta + 0.5 * s)
            xb = _phi(xa, s, tau, ia, im)
            if mode == MODE_NONE or xb < theta or n_ev >= MAX_EVENTS_PER_STEP:
                x = xb
                break
            r = _locate(xa, ta, s, xb, tau, theta, drive, ia)
            t_ev = ta + r
            if t_ev >= T:
                x = xb
                break
            im, _ = drive.value(ta + 0.5 * r)
            v_pre = _phi(xa, r, tau, ia, im)
            v_post = 0.0 if mode == MODE_HARD else _discharge(v_pre, theta, zeta)
            ev_step.append(k)
            ev_t.append(t_ev)
            ev_pre.append(v_pre)
            ev_post.append(v_post)
            ta, xa = t_ev, v_post
            n_ev += 1
        xs[k + 1] = x
    return (xs, np.array(ev_step, dtype=np.int64), np.array(ev_t),
            np.array(ev_pre), np.array(ev_post))


class _Grad:
    """Accumulates parameter adjoints of one partial step."""

    __slots__ = ("pre", "mu", "gain", "g_c0", "g_gain", "g_pre")

    def __init__(self, pre, mu, gain):
        self.pre = pre
        self.mu = mu
        self.gain = gain
        self.g_c0 = 0.0
        self.g_gain = 0.0
        self.g_pre = np.zeros(len(pre))

    def add(self, weight, ta, s, tau):
        if weight == 0.0:
            return
        c1 = s / tau
        c2 = 0.5 * c1 * c1
        self.g_c0 += weight * (c1 - c2)
        if not self.pre:
            return
        tm = ta + 0.5 * s
        mu = self.mu
        reach = TRUNCATION * mu
        amp = INV_SQRT_2PI / mu
        inv2 = 0.5 / (mu * mu)
        imu2 = 1.0 / (mu * mu)
        for t, c in ((ta, -c2), (tm, c1)):
            lo = bisect_left(self.pre, t - reach)
            hi = bisect_right(self.pre, t + reach)
            for i in range(lo, hi):
                u = t - self.pre[i]
                g = amp * math.exp(-u * u * inv2)
                self.g_gain += weight * c * g
                # d G(t - s_i) / d s_i = (u / mu^2) G
                self.g_pre[i] += weight * c * self.gain * u * imu2 * g


def adjoint_neuron(tau, c0, gain, mu, presyn, T, n_steps, xs, ev_step, ev_t,
                   ev_post, lam_xT, lam_ev):
    pre = [float(v) for v in presyn]
    drive = _Drive(pre, mu, float(c0), float(gain))
    acc = _Grad(pre, mu, float(gain))
    h = T / n_steps
    lam_ev = np.array(lam_ev, dtype=np.float64, copy=True)
    ev_step = np.asarray(ev_step)
    lam_x = float(lam_xT)
    e_hi = len(ev_step)
    for k in range(n_steps - 1, -1, -1):
        t0 = k * h
        t1 = T if k + 1 == n_steps else (k + 1) * h
        e_lo = e_hi
        while e_lo > 0 and ev_step[e_lo - 1] == k:
            e_lo -= 1
        # last segment of the step
        if e_hi > e_lo:
            ta, xa = ev_t[e_hi - 1], ev_post[e_hi - 1]
        else:
            ta, xa = t0, xs[k]
        s = t1 - ta
        acc.add(lam_x, ta, s, tau)
        if e_hi > e_lo:
            ia, dia = drive.value(ta)
            im, dim = drive.value(ta + 0.5 * s)
            c1 = s / tau
            c2 = 0.5 * c1 * c1
            phi_t = -c2 * dia + c1 * dim
            phi_s = _phi_s(xa, s, tau, ia, im, dim)
            lam_ev[e_hi - 1] += lam_x * (phi_t - phi_s)
            lam_x = 0.0
        else:
            c1 = s / tau
            lam_x *= 1.0 - c1 + 0.5 * c1 * c1
        # event segments, newest first
        for e in range(e_hi - 1, e_lo - 1, -1):
            if e > e_lo:
                ta, xa = ev_t[e - 1], ev_post[e - 1]
            else:
                ta, xa = t0, xs[k]
            s = ev_t[e] - ta
            ia, dia = drive.value(ta)
            im, dim = drive.value(ta + 0.5 * s)
            phi_s = _phi_s(xa, s, tau, ia, im, dim)
            factor = -lam_ev[e] / phi_s
            acc.add(factor, ta, s, tau)
            c1 = s / tau
            c2 = 0.5 * c1 * c1
            if e > e_lo:
                phi_t = -c2 * dia + c1 * dim
                lam_ev[e - 1] += lam_ev[e] + factor * phi_t
            else:
                lam_x = factor * (1.0 - c1 + c2)
        e_hi = e_lo
    return acc.g_c0, acc.g_gain, acc.g_pre
