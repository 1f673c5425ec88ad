"""Experiment configuration and run manifests."""
from __future__ import annotations

import copy
import hashlib
import json
import os
import platform
from dataclasses import dataclass, field

from .mollified import MollifierConfig
from .params import StructuralParams

VERSION = "0.1.0"

DEFAULT_OPTIMIZER = {
    "step": 0.1,
    "epochs": 20,
    "gamma": 1e-4,
    "max_halvings": 30,
    "init_candidates": 16,
}
DEFAULT_MOLLIFIER = {"zeta0": 3.0, "zeta1": 10.0, "zeta": 3.0}
DEFAULT_DATASET = {"n": 252, "noise": 0.0, "seed": 0, "fractions": [0.70, 0.05, 0.25]}


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class ExperimentConfig:
    structural: StructuralParams = field(default_factory=StructuralParams)
    init_seed: int = 0
    optimizer: dict = field(default_factory=lambda: dict(DEFAULT_OPTIMIZER))
    mollifier: MollifierConfig = None
    dataset: dict = field(default_factory=lambda: dict(DEFAULT_DATASET))
    grid_step: float = 0.02
    output_dir: str = "runs"

    def __post_init__(self):
        opt = dict(DEFAULT_OPTIMIZER)
        opt.update(self.optimizer)
        self.optimizer = opt
        if not opt["step"] > 0 or not opt["gamma"] >= 0:
            raise ValueError("optimizer step must be > 0 and gamma >= 0")
        if int(opt["init_candidates"]) < 1:
            raise ValueError("init_candidates must be >= 1")
        ds = dict(DEFAULT_DATASET)
        ds.update(self.dataset)
        self.dataset = ds
        if self.mollifier is None:
            self.mollifier = MollifierConfig(epochs=opt["epochs"], **DEFAULT_MOLLIFIER)
        elif isinstance(self.mollifier, dict):
            m = dict(DEFAULT_MOLLIFIER)
            m.update(self.mollifier)
            m.pop("epochs", None)
            self.mollifier = MollifierConfig(epochs=opt["epochs"], **m)
        else:
            self.mollifier.epochs = int(opt["epochs"])
        if isinstance(self.structural, dict):
            self.structural = StructuralParams.from_dict(self.structural)
        if not self.grid_step > 0:
            raise ValueError("grid_step must be > 0")

    def to_dict(self):
        return {
            "structural": self.structural.to_dict(),
            "init_seed": self.init_seed,
            "optimizer": self.optimizer,
            "mollifier": {"zeta0": self.mollifier.zeta0, "zeta1": self.mollifier.zeta1,
                          "zeta": self.mollifier.zeta},
            "dataset": self.dataset,
            "grid_step": self.grid_step,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, data):
        data = copy.deepcopy(data)
        known = {"structural", "init_seed", "optimizer", "mollifier", "dataset", "grid_step",
                 "output_dir"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        """Read a config file, or the config stored in a run manifest."""
        with open(path) as fh:
            data = json.load(fh)
        if isinstance(data, dict) and "config_hash" in data and "config" in data:
            data = data["config"]
        return cls.from_dict(data)

    def config_hash(self):
        # output_dir does not influence any numeric result
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(canonical_json(d).encode()).hexdigest()

    def with_seed(self, seed):
        """Same configuration with every seed replaced by ``seed``."""
        d = self.to_dict()
        d["init_seed"] = seed
        d["dataset"]["seed"] = seed
        return ExperimentConfig.from_dict(d)


@dataclass
class RunManifest:
    command: str
    config: dict
    config_hash: str
    seeds: dict
    version: str = VERSION
    backend: str = ""
    stage_seconds: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)

    def to_dict(self):
        return {
            "command": self.command, "config": self.config, "config_hash": self.config_hash,
            "seeds": self.seeds, "version": self.version, "backend": self.backend,
            "python": platform.python_version(), "stage_seconds": self.stage_seconds,
            "artifacts": self.artifacts,
        }

    def write(self, out_dir):
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
        return path
