import numpy as np

from lifnet import io
from lifnet.core import simulate_input
from lifnet.params import StructuralParams


def _traj():
    sp = StructuralParams()
    return simulate_input(np.array([1.3, 0.7]), np.array([1.0, 1.0]), sp, 0.01)


def test_csv_round_trip_exact(tmp_path):
    traj = _traj()
    io.write_trajectory_csv(traj, tmp_path / "t.csv")
    back = io.read_trajectory_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.grid, traj.grid)
    np.testing.assert_array_equal(back.values, traj.values)


def test_json_round_trip_exact(tmp_path):
    traj = _traj()
    assert len(traj.reset_times) > 0
    io.write_trajectory_json(traj, tmp_path / "t.json")
    back, spikes = io.read_trajectory_json(tmp_path / "t.json")
    np.testing.assert_array_equal(back.values, traj.values)
    assert back.resets == [tuple(r) for r in traj.resets]
    np.testing.assert_array_equal(spikes.times, traj.reset_times)


def test_spike_file_round_trip(tmp_path):
    times = np.array([0.1, 1.0 / 3.0, 59.999999999])
    io.write_spikes(times, tmp_path / "s.txt")
    np.testing.assert_array_equal(io.read_spikes(tmp_path / "s.txt").times, times)
