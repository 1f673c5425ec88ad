"""Time the compiled and pure-Python integration kernels on the same workloads.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import math
import timeit

import numpy as np

from lifnet import kernels


def workloads():
    pre = np.ascontiguousarray(np.sort(np.random.default_rng(0).uniform(1.0, 59.0, 40)))
    yield "input neuron, 10k steps", dict(tau=8.0, theta=0.8, mode=kernels.MODE_HARD, zeta=0.0,
                                          c0=2.0, gain=0.0, mu=0.2, presyn=np.zeros(0),
                                          T=60.0, n_steps=10_000)
    yield "hidden neuron, 40 bumps", dict(tau=6.0, theta=0.25, mode=kernels.MODE_MOLLIFIED,
                                          zeta=3.0, c0=0.0, gain=2.0, mu=0.2, presyn=pre,
                                          T=60.0, n_steps=10_000)
    yield "output neuron, no reset", dict(tau=10.0, theta=math.inf, mode=kernels.MODE_NONE,
                                          zeta=0.0, c0=0.0, gain=1.0, mu=0.2, presyn=pre,
                                          T=60.0, n_steps=10_000)


def bench(backend, kw, repeat):
    def forward():
        return backend.integrate_neuron(kw["tau"], kw["theta"], kw["mode"], kw["zeta"],
                                        kw["c0"], kw["gain"], kw["mu"], kw["presyn"], kw["T"],
                                        kw["n_steps"])

    xs, ev_step, ev_t, _, ev_post = forward()
    lam_ev = np.ones(ev_t.size)

    def backward():
        return backend.adjoint_neuron(kw["tau"], kw["c0"], kw["gain"], kw["mu"], kw["presyn"],
                                      kw["T"], kw["n_steps"], xs, ev_step, ev_t, ev_post, 1.0,
                                      lam_ev)

    return (min(timeit.repeat(forward, number=1, repeat=repeat)),
            min(timeit.repeat(backward, number=1, repeat=repeat)))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    py, cy = kernels.python_backend, kernels.compiled_backend
    if cy is None:
        print("compiled backend not built; only timing the Python kernels")
    print(f"{'workload':<26}{'pass':<10}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, kw in workloads():
        t_py = bench(py, kw, args.repeat)
        t_cy = bench(cy, kw, args.repeat) if cy is not None else (math.nan, math.nan)
        for label, a, b in zip(("forward", "adjoint"), t_py, t_cy):
            print(f"{name:<26}{label:<10}{a * 1e3:>12.2f}{b * 1e3:>12.2f}{a / b:>9.1f}x")


if __name__ == "__main__":
    main()
