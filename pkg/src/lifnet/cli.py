"""Command line entry point: ``lifnet <command> [options]``.

Exit codes: 0 success, 1 property or acceptance failure, 2 usage or parse
error, 3 numerical divergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import analysis, io, kernels
from .config import ExperimentConfig, RunManifest
from .core import network_forward
from .data import compute_metrics, make_moons, split, write_csv
from .mollified import NeuronInstance, TrainingDiverged, predict, train, verify_mollified_convergence
from .params import TrainableParams
from . import ua

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--seed", type=int, help="override every seed in the config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--grid-step", type=float, help="integration step")
    p.add_argument("--print-config", action="store_true",
                   help="print the resolved config as canonical JSON and exit")
    return p


def build_parser():
    parent = _parent()
    parser = argparse.ArgumentParser(prog="lifnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[parent], help="forward pass with trajectory files")
    p.add_argument("--x", type=float, nargs="+", help="input vector (default: seeded random)")
    p.add_argument("--params", help="trainable parameters JSON (default: seeded random)")
    p.add_argument("--zeta", type=float, help="mollified reset sharpness (default: hard reset)")

    p = sub.add_parser("verify-props", parents=[parent], help="randomized spike-count checks")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--mollified", action="store_true",
                   help="also run the mollified-to-hard convergence ladder")

    p = sub.add_parser("construct-ua", parents=[parent], help="spike encoding of a target")
    p.add_argument("--target", choices=sorted(ua.TARGETS), default="sine-product")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--w", type=float, default=1.0)

    sub.add_parser("train", parents=[parent], help="train and evaluate on two moons")

    p = sub.add_parser("eval", parents=[parent], help="evaluate saved parameters")
    p.add_argument("--params", required=True, help="trainable parameters JSON")
    p.add_argument("--zeta", type=float, help="sharpness used at evaluation (default: zeta1)")
    return parser


def load_config(args):
    if args.config:
        try:
            cfg = ExperimentConfig.load(args.config)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}:{exc.lineno}:{exc.colno}: {exc.msg}")
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{args.config}: {exc}")
    else:
        cfg = ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.grid_step is not None:
        if not args.grid_step > 0:
            raise UsageError("--grid-step must be > 0")
        cfg.grid_step = args.grid_step
    if args.out:
        cfg.output_dir = args.out
    return cfg


def load_params(path, sp):
    try:
        with open(path) as fh:
            params = TrainableParams.from_dict(json.load(fh))
        params.check(sp)
    except FileNotFoundError:
        raise UsageError(f"params file not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}")
    return params


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
    return path


def _manifest(command, cfg, stages, artifacts, out):
    seeds = {"init_seed": cfg.init_seed, "dataset_seed": cfg.dataset["seed"]}
    m = RunManifest(command, cfg.to_dict(), cfg.config_hash(), seeds, backend=kernels.BACKEND,
                    stage_seconds=stages, artifacts=sorted(os.path.basename(a) for a in artifacts))
    return m.write(out)


def cmd_simulate(args, cfg, out):
    sp = cfg.structural
    rng = np.random.default_rng(cfg.init_seed)
    params = load_params(args.params, sp) if args.params else TrainableParams.random(sp, cfg.init_seed)
    if args.x is not None:
        if len(args.x) != sp.d:
            raise UsageError(f"--x needs {sp.d} values")
        x = np.array(args.x)
    else:
        x = rng.uniform(-1.0, 2.0, sp.d)
    t0 = time.perf_counter()
    tape = network_forward(x, params, sp, cfg.grid_step, args.zeta)
    elapsed = time.perf_counter() - t0
    artifacts = []

    def dump(name, rec):
        traj = rec.trajectory(sp.T)
        paths = [os.path.join(out, f"{name}.csv"), os.path.join(out, f"{name}.json"),
                 os.path.join(out, f"{name}_spikes.txt")]
        io.write_trajectory_csv(traj, paths[0])
        io.write_trajectory_json(traj, paths[1], rec.ev_t)
        io.write_spikes(rec.ev_t, paths[2])
        artifacts.extend(paths)

    dump("input", tape.input)
    for l, layer in enumerate(tape.hidden):
        for p, rec in enumerate(layer):
            dump(f"hidden_{l + 1}_{p}", rec)
    for p, rec in enumerate(tape.output):
        dump(f"output_{p}", rec)
    summary = {"x": x.tolist(), "params": params.to_dict(), "u_final": tape.u_final.tolist(),
               "readout": tape.readout, "zeta": args.zeta,
               "spike_counts": {f"{k[0]}_{k[1]}": int(len(v))
                                for k, v in tape.spike_trains().items()}}
    artifacts.append(_write_json(os.path.join(out, "summary.json"), summary))
    _manifest("simulate", cfg, {"simulate": elapsed}, artifacts, out)
    return EXIT_OK


def cmd_verify_props(args, cfg, out):
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    t0 = time.perf_counter()
    trials = analysis.sweep(args.trials, cfg.init_seed)
    bumps = {}
    for omega in (1.5, 3.0):
        inst = analysis.three_bump_fixture(omega)
        bumps[str(omega)] = analysis.simulate_single(inst.presyn, inst.omega, inst.tau, inst.theta,
                                                    inst.mu, inst.T, 1e-3).tolist()
    report = {"trials": trials, "three_bump": {k: {"count": len(v), "spikes": v}
                                            for k, v in bumps.items()}}
    summary = {}
    for t in trials:
        s = summary.setdefault(t["regime"], {"trials": 0, "passed": 0})
        s["trials"] += 1
        s["passed"] += int(t["verdict"])
    ok = all(t["verdict"] for t in trials)
    if args.mollified:
        inst = NeuronInstance(5.0, 0.2, np.array([20.0, 35.0, 50.0]), 3.0, 0.0, 0.8, 60.0)
        rep = verify_mollified_convergence(inst, grid_step=cfg.grid_step)
        report["mollified"] = {"zetas": rep.zetas, "sup_gaps": rep.sup_gaps,
                               "spike_gaps": rep.spike_gaps, "verdict": rep.verdict}
        summary["mollified"] = {"trials": 1, "passed": int(rep.verdict)}
        ok = ok and rep.verdict
    report["summary"] = summary
    report["pass"] = ok
    path = _write_json(os.path.join(out, "verify_report.json"), report)
    print(f"{'regime':<22}{'passed':>8}{'trials':>8}")
    for regime, s in summary.items():
        print(f"{regime:<22}{s['passed']:>8}{s['trials']:>8}")
    print("three-bump counts:", {k: v["count"] for k, v in report["three_bump"].items()})
    print("PASS" if ok else "FAIL")
    _manifest("verify-props", cfg, {"verify": time.perf_counter() - t0}, [path], out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_construct_ua(args, cfg, out):
    sp = cfg.structural
    if args.width < 1 or args.points < 1 or args.samples < args.width:
        raise UsageError("need width >= 1, points >= 1 and samples >= width")
    if not args.epsilon > 0:
        raise UsageError("--epsilon must be > 0")
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.init_seed)
    f = ua.TARGETS[args.target]
    X = rng.uniform(-1.0, 1.0, (args.samples, 2))
    target = ua.fit_shallow((X, f(X)), args.width, args.iterations, cfg.init_seed)
    pts = rng.uniform(-1.0, 1.0, (args.points, 2))
    # theta_u cancels in the readout, so it may be raised until every
    # encoded potential is positive on the whole box
    theta_u = max(sp.theta_u, sp.theta_u + float(np.max(np.abs(target.alpha).sum(axis=1))))
    sp = type(sp).from_dict({**sp.to_dict(), "theta_u": theta_u})
    entries = []
    for x in pts:
        K = 1
        enc = ua.encode(target, x, K, args.w, sp)
        # the upper end of the feasible charge range grows with K
        while not enc.feasible and np.all(enc.S_star > 0) and K < (1 << 16):
            K *= 2
            enc = ua.encode(target, x, K, args.w, sp)
        entries.append((x, K, enc))
    feasible = [(x, K, e) for x, K, e in entries if e.feasible]
    K_max = max((K for _, K, _ in feasible), default=1)
    mu = ua.mu_budget(args.epsilon, K_max, args.w, target.nu, sp.tau_u)
    sp_mu = type(sp).from_dict({**sp.to_dict(), "mu": min(sp.mu, mu)})
    gaps = []
    for x, K, enc in feasible:
        rep = ua.verify_encoding(enc, target, x, sp_mu, args.w, min(cfg.grid_step, sp_mu.mu / 10))
        gaps.append({"x": x.tolist(), "K": K, "f_P": rep.target_value,
                     "delta_error": rep.delta_error, "gap": rep.gaussian_gap,
                     "bound": rep.bound, "pass": rep.passed})
    ok = bool(feasible) and all(g["pass"] for g in gaps)
    report = {"target": args.target, "fit_rms": target.rms, "width": args.width,
              "epsilon": args.epsilon, "theta_u": theta_u, "mu": sp_mu.mu, "mu_budget": mu,
              "bound": max((g["bound"] for g in gaps), default=None),
              "infeasible_points": len(entries) - len(feasible), "points": gaps, "pass": ok}
    path = _write_json(os.path.join(out, "ua_report.json"), report)
    print(f"fit rms {target.rms:.4g}, feasible {len(feasible)}/{len(entries)}, "
          f"max gap {max((g['gap'] for g in gaps), default=0):.3g}, {'PASS' if ok else 'FAIL'}")
    _manifest("construct-ua", cfg, {"construct": time.perf_counter() - t0}, [path], out)
    return EXIT_OK if ok else EXIT_FAIL


def _splits(cfg):
    d = cfg.dataset
    ds = make_moons(d["n"], d["noise"], d["seed"])
    return ds, split(ds, tuple(d["fractions"]), d["seed"])


def write_history(history, path):
    fields = ["epoch", "zeta", "loss", "step", "accepted", "val_accuracy", "val_precision",
              "val_recall", "val_f1"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in history:
            writer.writerow([io.fmt(row[k]) if isinstance(row[k], float) else row[k]
                             for k in fields])


def evaluate(params, cfg, test, zeta=None):
    zeta = cfg.mollifier.zeta1 if zeta is None else zeta
    pred = predict(params, cfg.structural, test.points, cfg.grid_step, zeta)
    return compute_metrics(pred, test.labels)


def cmd_train(args, cfg, out):
    stages = {}
    t0 = time.perf_counter()
    ds, (tr, va, te) = _splits(cfg)
    artifacts = [os.path.join(out, "dataset.csv")]
    write_csv(ds, artifacts[0])
    stages["data"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    try:
        result = train(cfg, (tr, va, te))
    except TrainingDiverged as exc:
        path = os.path.join(out, "history.csv")
        write_history(exc.history, path)
        _manifest("train", cfg, stages, artifacts + [path], out)
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    stages["train"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    metrics = evaluate(result.params, cfg, te)
    stages["eval"] = time.perf_counter() - t0
    paths = [os.path.join(out, n) for n in ("history.csv", "params.json", "metrics.json")]
    write_history(result.history, paths[0])
    _write_json(paths[1], result.params.to_dict())
    _write_json(paths[2], metrics.to_dict())
    print(json.dumps(metrics.to_dict()))
    _manifest("train", cfg, stages, artifacts + paths, out)
    return EXIT_OK


def cmd_eval(args, cfg, out):
    params = load_params(args.params, cfg.structural)
    t0 = time.perf_counter()
    _, (_, _, te) = _splits(cfg)
    metrics = evaluate(params, cfg, te, args.zeta)
    path = _write_json(os.path.join(out, "metrics.json"), metrics.to_dict())
    print(json.dumps(metrics.to_dict()))
    _manifest("eval", cfg, {"eval": time.perf_counter() - t0}, [path], out)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "verify-props": cmd_verify_props,
    "construct-ua": cmd_construct_ua,
    "train": cmd_train,
    "eval": cmd_eval,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.print_config:
            print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
            return EXIT_OK
        out = cfg.output_dir
        os.makedirs(out, exist_ok=True)
        return COMMANDS[args.command](args, cfg, out)
    except UsageError as exc:
        print(f"lifnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FloatingPointError as exc:
        print(f"lifnet: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
