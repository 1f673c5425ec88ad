# cython: language_level=3
"""Compiled single-neuron kernels; mirrors ``_pykernels`` step for step."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, tanh, sqrt, fabs, M_PI

cnp.import_array()

cdef double TRUNCATION = 8.0
cdef Py_ssize_t MAX_EVENTS_PER_STEP = 10000

MODE_NONE = 0
MODE_HARD = 1
MODE_MOLLIFIED = 2
BACKEND = "cython"

cdef double INV_SQRT_2PI = 1.0 / sqrt(2.0 * M_PI)


cdef Py_ssize_t _lower(const double[::1] pre, Py_ssize_t n, double v) noexcept nogil:
    # first index with pre[i] >= v
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if pre[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _upper(const double[::1] pre, Py_ssize_t n, double v) noexcept nogil:
    # first index with pre[i] > v
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if pre[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef struct Drive:
    double c0
    double gain
    double mu
    Py_ssize_t n
    bint empty


cdef inline void _current(const double[::1] pre, Drive* d, double t,
                          double* j, double* dj) noexcept nogil:
    cdef double reach = TRUNCATION * d.mu
    cdef double amp = INV_SQRT_2PI / d.mu
    cdef double inv2 = 0.5 / (d.mu * d.mu)
    cdef double mu2 = d.mu * d.mu
    cdef Py_ssize_t lo = _lower(pre, d.n, t - reach)
    cdef Py_ssize_t hi = _upper(pre, d.n, t + reach)
    cdef Py_ssize_t i
    cdef double u, g
    j[0] = 0.0
    dj[0] = 0.0
    for i in range(lo, hi):
        u = t - pre[i]
        g = amp * exp(-u * u * inv2)
        j[0] += g
        dj[0] -= u / mu2 * g


cdef inline void _drive(const double[::1] pre, Drive* d, double t,
                        double* val, double* dval) noexcept nogil:
    cdef double j, dj
    if d.empty:
        val[0] = d.c0
        dval[0] = 0.0
        return
    _current(pre, d, t, &j, &dj)
    val[0] = d.c0 + d.gain * j
    dval[0] = d.gain * dj


cdef inline double _phi(double xa, double s, double tau, double ia, double im) noexcept nogil:
    cdef double c1 = s / tau
    cdef double c2 = 0.5 * c1 * c1
    return xa * (1.0 - c1 + c2) - c2 * ia + c1 * im


cdef inline double _phi_s(double xa, double s, double tau, double ia, double im,
                          double dim) noexcept nogil:
    return (xa * (-1.0 + s / tau) / tau - s / (tau * tau) * ia + im / tau
            + 0.5 * s / tau * dim)


cdef inline double _discharge(double s, double theta, double zeta) noexcept nogil:
    return (1.0 - 0.5 * (1.0 + tanh(0.5 * zeta * (s - theta)))) * s


cdef double _locate(const double[::1] pre, Drive* d, double xa, double ta,
                    double s_end, double xb, double tau, double theta,
                    double ia) noexcept nogil:
    cdef double lo = 0.0, hi = s_end
    cdef double s = s_end * (theta - xa) / (xb - xa)
    cdef double im, dim, g, gp, s_new
    cdef int it
    if not (0.0 < s <= s_end):
        s = 0.5 * s_end
    for it in range(200):
        _drive(pre, d, ta + 0.5 * s, &im, &dim)
        g = _phi(xa, s, tau, ia, im) - theta
        if g == 0.0:
            return s
        if g < 0.0:
            lo = s
        else:
            hi = s
        gp = _phi_s(xa, s, tau, ia, im, dim)
        if gp > 0.0:
            s_new = s - g / gp
        else:
            s_new = -1.0
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        if fabs(s_new - s) <= 1e-15 * (ta + s) or hi - lo <= 1e-15 * (ta + hi):
            return s_new
        s = s_new
    return s


def gaussian_current(presyn, double mu, t):
    cdef const double[::1] pre = np.ascontiguousarray(np.sort(np.asarray(presyn, dtype=np.float64)))
    cdef double[::1] ts = np.ascontiguousarray(np.atleast_1d(np.asarray(t, dtype=np.float64)))
    cdef Py_ssize_t m = ts.shape[0], i
    out = np.empty(m)
    cdef double[::1] o = out
    cdef Drive d
    cdef double j, dj
    d.c0 = 0.0
    d.gain = 1.0
    d.mu = mu
    d.n = pre.shape[0]
    d.empty = False
    for i in range(m):
        _current(pre, &d, ts[i], &j, &dj)
        o[i] = j
    return out


def integrate_neuron(double tau, double theta, int mode, double zeta, double c0,
                     double gain, double mu, presyn, double T, Py_ssize_t n_steps):
    cdef const double[::1] pre = np.ascontiguousarray(np.asarray(presyn, dtype=np.float64))
    cdef Drive d
    d.c0 = c0
    d.gain = gain
    d.mu = mu
    d.n = pre.shape[0]
    d.empty = d.n == 0 or gain == 0.0
    cdef double h = T / n_steps
    xs_arr = np.empty(n_steps + 1)
    cdef double[::1] xs = xs_arr
    cdef Py_ssize_t cap = 64, n_ev_total = 0
    bufs = [np.empty(cap, dtype=np.int64), np.empty(cap), np.empty(cap), np.empty(cap)]
    cdef cnp.int64_t[::1] ev_step = bufs[0]
    cdef double[::1] ev_t = bufs[1]
    cdef double[::1] ev_pre = bufs[2]
    cdef double[::1] ev_post = bufs[3]
    cdef double x = 0.0, t0, t1, ta, xa, s, ia, dia, im, dim, xb, r, t_ev, v_pre, v_post
    cdef Py_ssize_t k, n_ev
    xs[0] = 0.0
    for k in range(n_steps):
        t0 = k * h
        t1 = T if k + 1 == n_steps else (k + 1) * h
        ta = t0
        xa = x
        n_ev = 0
        while True:
            s = t1 - ta
            _drive(pre, &d, ta, &ia, &dia)
            _drive(pre, &d, ta + 0.5 * s, &im, &dim)
            xb = _phi(xa, s, tau, ia, im)
            if mode == 0 or xb < theta or n_ev >= MAX_EVENTS_PER_STEP:
                x = xb
                break
            r = _locate(pre, &d, xa, ta, s, xb, tau, theta, ia)
            t_ev = ta + r
            if t_ev >= T:
                x = xb
                break
            _drive(pre, &d, ta + 0.5 * r, &im, &dim)
            v_pre = _phi(xa, r, tau, ia, im)
            if mode == 1:
                v_post = 0.0
            else:
                v_post = _discharge(v_pre, theta, zeta)
            if n_ev_total == cap:
                bufs = [np.concatenate([b[:cap], np.empty_like(b[:cap])]) for b in bufs]
                cap *= 2
                ev_step = bufs[0]
                ev_t = bufs[1]
                ev_pre = bufs[2]
                ev_post = bufs[3]
            ev_step[n_ev_total] = k
            ev_t[n_ev_total] = t_ev
            ev_pre[n_ev_total] = v_pre
            ev_post[n_ev_total] = v_post
            n_ev_total += 1
            ta = t_ev
            xa = v_post
            n_ev += 1
        xs[k + 1] = x
    return (xs_arr, bufs[0][:n_ev_total].copy(), bufs[1][:n_ev_total].copy(),
            bufs[2][:n_ev_total].copy(), bufs[3][:n_ev_total].copy())


cdef inline void _accumulate(const double[::1] pre, Drive* d, double weight,
                             double ta, double s, double tau, double* g_c0,
                             double* g_gain, double[::1] g_pre) noexcept nogil:
    cdef double c1, c2, tm, reach, amp, inv2, imu2, t, c, u, g
    cdef Py_ssize_t lo, hi, i
    cdef int side
    if weight == 0.0:
        return
    c1 = s / tau
    c2 = 0.5 * c1 * c1
    g_c0[0] += weight * (c1 - c2)
    if d.n == 0:
        return
    tm = ta + 0.5 * s
    reach = TRUNCATION * d.mu
    amp = INV_SQRT_2PI / d.mu
    inv2 = 0.5 / (d.mu * d.mu)
    imu2 = 1.0 / (d.mu * d.mu)
    for side in range(2):
        if side == 0:
            t = ta
            c = -c2
        else:
            t = tm
            c = c1
        lo = _lower(pre, d.n, t - reach)
        hi = _upper(pre, d.n, t + reach)
        for i in range(lo, hi):
            u = t - pre[i]
            g = amp * exp(-u * u * inv2)
            g_gain[0] += weight * c * g
            g_pre[i] += weight * c * d.gain * u * imu2 * g


def adjoint_neuron(double tau, double c0, double gain, double mu, presyn,
                   double T, Py_ssize_t n_steps, xs_in, ev_step_in, ev_t_in,
                   ev_post_in, double lam_xT, lam_ev_in):
    cdef const double[::1] pre = np.ascontiguousarray(np.asarray(presyn, dtype=np.float64))
    cdef const double[::1] xs = np.ascontiguousarray(xs_in, dtype=np.float64)
    cdef const cnp.int64_t[::1] ev_step = np.ascontiguousarray(ev_step_in, dtype=np.int64)
    cdef const double[::1] ev_t = np.ascontiguousarray(ev_t_in, dtype=np.float64)
    cdef const double[::1] ev_post = np.ascontiguousarray(ev_post_in, dtype=np.float64)
    lam_arr = np.array(lam_ev_in, dtype=np.float64, copy=True)
    cdef double[::1] lam_ev = lam_arr
    g_pre_arr = np.zeros(pre.shape[0])
    cdef double[::1] g_pre = g_pre_arr
    cdef Drive d
    d.c0 = c0
    d.gain = gain
    d.mu = mu
    d.n = pre.shape[0]
    d.empty = d.n == 0 or gain == 0.0
    cdef double h = T / n_steps
    cdef double lam_x = lam_xT, g_c0 = 0.0, g_gain = 0.0
    cdef double t0, t1, ta, xa, s, ia, dia, im, dim, c1, c2, phi_t, phi_s, factor
    cdef Py_ssize_t k, e, e_lo, e_hi = ev_step.shape[0]
    with nogil:
        for k in range(n_steps - 1, -1, -1):
            t0 = k * h
            t1 = T if k + 1 == n_steps else (k + 1) * h
            e_lo = e_hi
            while e_lo > 0 and ev_step[e_lo - 1] == k:
                e_lo -= 1
            if e_hi > e_lo:
                ta = ev_t[e_hi - 1]
                xa = ev_post[e_hi - 1]
            else:
                ta = t0
                xa = xs[k]
            s = t1 - ta
            _accumulate(pre, &d, lam_x, ta, s, tau, &g_c0, &g_gain, g_pre)
            c1 = s / tau
            c2 = 0.5 * c1 * c1
            if e_hi > e_lo:
                _drive(pre, &d, ta, &ia, &dia)
                _drive(pre, &d, ta + 0.5 * s, &im, &dim)
                phi_t = -c2 * dia + c1 * dim
                phi_s = _phi_s(xa, s, tau, ia, im, dim)
                lam_ev[e_hi - 1] += lam_x * (phi_t - phi_s)
                lam_x = 0.0
            else:
                lam_x *= 1.0 - c1 + c2
            for e in range(e_hi - 1, e_lo - 1, -1):
                if e > e_lo:
                    ta = ev_t[e - 1]
                    xa = ev_post[e - 1]
                else:
                    ta = t0
                    xa = xs[k]
                s = ev_t[e] - ta
                _drive(pre, &d, ta, &ia, &dia)
                _drive(pre, &d, ta + 0.5 * s, &im, &dim)
                phi_s = _phi_s(xa, s, tau, ia, im, dim)
                factor = -lam_ev[e] / phi_s
                _accumulate(pre, &d, factor, ta, s, tau, &g_c0, &g_gain, g_pre)
                c1 = s / tau
                c2 = 0.5 * c1 * c1
                if e > e_lo:
                    phi_t = -c2 * dia + c1 * dim
                    lam_ev[e - 1] += lam_ev[e] + factor * phi_t
                else:
                    lam_x = factor * (1.0 - c1 + c2)
            e_hi = e_lo
    return g_c0, g_gain, g_pre_arr
