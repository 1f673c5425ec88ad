"""Parameter containers and simulation records."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def _positive(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be finite and > 0, got {value!r}")
    return value


def _layer_array(name, value, L, P):
    arr = np.array(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full((L, P), float(arr))
    elif arr.ndim == 1 and arr.shape == (P,):
        arr = np.tile(arr, (L, 1))
    if arr.shape != (L, P):
        raise ValueError(f"{name} must have shape ({L}, {P}), got {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError(f"{name} entries must be finite and > 0")
    return arr


@dataclass
class StructuralParams:
    """Fixed (non-trained) constants of the network.

    ``tau_hidden`` and ``theta_hidden`` accept a scalar, a length-P vector or an
    ``(L, P)`` array and are stored as ``(L, P)``.
    """

    tau_v: float = 8.0
    theta_v: float = 0.8
    tau_hidden: object = 6.0
    theta_hidden: object = 0.25
    tau_u: float = 10.0
    theta_u: float = 0.3
    mu: float = 0.2
    T: float = 60.0
    L: int = 1
    P: int = 8
    d: int = 2

    def __post_init__(self):
        for name in ("tau_v", "theta_v", "tau_u", "theta_u", "mu", "T"):
            setattr(self, name, _positive(name, getattr(self, name)))
        for name in ("L", "P", "d"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
            setattr(self, name, int(value))
        self.tau_hidden = _layer_array("tau_hidden", self.tau_hidden, self.L, self.P)
        self.theta_hidden = _layer_array("theta_hidden", self.theta_hidden, self.L, self.P)

    @property
    def n_params(self):
        return self.d + self.L * self.P + 1 + self.P

    def tau_min(self):
        return min(self.tau_v, self.tau_u, float(self.tau_hidden.min()))

    def to_dict(self):
        return {
            "tau_v": self.tau_v, "theta_v": self.theta_v,
            "tau_hidden": self.tau_hidden.tolist(),
            "theta_hidden": self.theta_hidden.tolist(),
            "tau_u": self.tau_u, "theta_u": self.theta_u,
            "mu": self.mu, "T": self.T, "L": self.L, "P": self.P, "d": self.d,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass
class TrainableParams:
    a: np.ndarray
    omega: np.ndarray
    w: float
    nu: np.ndarray

    def __post_init__(self):
        self.a = np.array(self.a, dtype=np.float64).reshape(-1)
        self.omega = np.array(self.omega, dtype=np.float64)
        if self.omega.ndim == 1:
            self.omega = self.omega.reshape(1, -1)
        self.w = float(self.w)
        self.nu = np.array(self.nu, dtype=np.float64).reshape(-1)
        if self.omega.shape[1] != self.nu.size:
            raise ValueError("omega must be L x P with P = len(nu)")
        values = np.concatenate([self.a, self.omega.ravel(), [self.w], self.nu])
        if not np.all(np.isfinite(values)):
            raise ValueError("trainable parameters must be finite")

    def check(self, sp: StructuralParams):
        if self.a.size != sp.d or self.omega.shape != (sp.L, sp.P) or self.nu.size != sp.P:
            raise ValueError(
                f"parameter shapes a{self.a.shape} omega{self.omega.shape} nu{self.nu.shape} "
                f"do not match d={sp.d}, L={sp.L}, P={sp.P}")

    def to_vector(self):
        """Flatten as ``[a, omega (row-major), w, nu]``."""
        return np.concatenate([self.a, self.omega.ravel(), [self.w], self.nu])

    @classmethod
    def from_vector(cls, vec, sp: StructuralParams):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != sp.n_params:
            raise ValueError(f"expected {sp.n_params} values, got {vec.size}")
        i = sp.d
        j = i + sp.L * sp.P
        return cls(vec[:i], vec[i:j].reshape(sp.L, sp.P), vec[j], vec[j + 1:])

    @classmethod
    def random(cls, sp: StructuralParams, seed):
        rng = np.random.default_rng(seed)
        return cls.from_vector(rng.uniform(-1.0, 1.0, sp.n_params), sp)

    def to_dict(self):
        return {"a": self.a.tolist(), "omega": self.omega.tolist(),
                "w": self.w, "nu": self.nu.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(data["a"], data["omega"], data["w"], data["nu"])


@dataclass
class SpikeTrain:
    times: np.ndarray
    neuron_id: tuple = (0, 0)

    def __post_init__(self):
        self.times = np.array(self.times, dtype=np.float64).reshape(-1)
        if self.times.size and (self.times[0] <= 0.0 or np.any(np.diff(self.times) <= 0.0)):
            raise ValueError("spike times must be positive and strictly increasing")

    def __len__(self):
        return self.times.size

    def __iter__(self):
        return iter(self.times)


@dataclass
class Trajectory:
    grid: np.ndarray
    values: np.ndarray
    resets: list = field(default_factory=list)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values must have equal length")

    @property
    def reset_times(self):
        return np.array([r[0] for r in self.resets], dtype=np.float64)


@dataclass
class SNNOutput:
    u_final: np.ndarray
    readout: float
