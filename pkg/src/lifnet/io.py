"""CSV and JSON serialization of trajectories and spike trains.

CSV floats are written with 17 significant digits and JSON floats with their
shortest exact repr, so a round trip through text is bit-exact.
"""
from __future__ import annotations

import json

import numpy as np

from .params import SpikeTrain, Trajectory


def fmt(value):
    return format(float(value), ".17g")


def write_trajectory_csv(traj: Trajectory, path):
    with open(path, "w") as fh:
        fh.write("t,value\n")
        for t, v in zip(traj.grid, traj.values):
            fh.write(f"{fmt(t)},{fmt(v)}\n")


def read_trajectory_csv(path) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trajectory(data[:, 0], data[:, 1])


def write_spikes(train, path):
    times = getattr(train, "times", train)
    with open(path, "w") as fh:
        for t in times:
            fh.write(fmt(t) + "\n")


def read_spikes(path, neuron_id=(0, 0)) -> SpikeTrain:
    with open(path) as fh:
        times = [float(line) for line in fh if line.strip()]
    return SpikeTrain(times, neuron_id)


def trajectory_record(traj: Trajectory, spikes=None):
    # json writes floats with the shortest exact repr, so numbers stay numbers
    if spikes is None:
        spikes = traj.reset_times
    return {
        "grid": [float(t) for t in traj.grid],
        "values": [float(v) for v in traj.values],
        "resets": [[float(x) for x in r] for r in traj.resets],
        "spikes": [float(t) for t in getattr(spikes, "times", spikes)],
    }


def write_trajectory_json(traj: Trajectory, path, spikes=None):
    with open(path, "w") as fh:
        json.dump(trajectory_record(traj, spikes), fh)


def read_trajectory_json(path):
    """Return ``(Trajectory, SpikeTrain)``."""
    with open(path) as fh:
        rec = json.load(fh)
    traj = Trajectory(rec["grid"], rec["values"], [tuple(r) for r in rec["resets"]])
    return traj, SpikeTrain(rec["spikes"])
