"""Experiment configuration files (TOML).

Example::

    [problem]
    preset = "hard-decentralized"
    n = 32

    [topology]
    spec = "linear:32"

    [solver]
    names = ["cgd", "dgd_gt", "drone"]
    auto = true

    [run]
    tau = 1.0
    eps = 1e-6
    seed = 0
    out = "results/hard"
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli
import tomli_w

from .numkit import InputError

SOLVERS = ("gd", "cgd", "dgd_gt", "drone")
PROBLEMS = ("hard-decentralized", "ifo-hard", "common-hessian", "theorem2", "dfo-hard", "linreg-synth",
            "logreg-synth", "drivface-scale", "libsvm")


@dataclass
class SolverSection:
    names: list = field(default_factory=lambda: ["cgd", "dgd_gt", "drone"])
    auto: bool = False
    eta: float | None = None
    T_iters: int | None = None
    K: int | None = None
    p: float | None = None
    b: int | None = None


@dataclass
class RunSection:
    tau: float = 1.0
    eps: float = 1e-6
    seed: int = 0
    out: str = "results"
    stop_at_eps: bool = True
    lyapunov: bool = True


@dataclass
class ExperimentConfig:
    problem: dict
    topology: str | None = None
    solver: SolverSection = field(default_factory=SolverSection)
    run: RunSection = field(default_factory=RunSection)

    @property
    def preset(self) -> str:
        return self.problem["preset"]

    def validate(self) -> None:
        preset = self.problem.get("preset")
        if preset is None:
            raise InputError("[problem] needs a 'preset' key")
        base = preset.split(":", 1)[0]
        if base not in PROBLEMS:
            raise InputError(f"unknown problem preset {preset!r}; known: {', '.join(PROBLEMS)}")
        for name in self.solver.names:
            if name not in SOLVERS:
                raise InputError(f"unknown solver {name!r}; known: {', '.join(SOLVERS)}")
        if not self.solver.names:
            raise InputError("[solver] names is empty")
        if not (self.run.eps > 0 and math.isfinite(self.run.eps)):
            raise InputError(f"eps must be positive, got {self.run.eps}")
        if self.run.tau < 0:
            raise InputError(f"tau must be non-negative, got {self.run.tau}")
        if not self.solver.auto and self.solver.eta is None:
            raise InputError("set [solver] eta or auto = true")
        if not self.solver.auto and self.solver.T_iters is None:
            raise InputError("set [solver] T_iters or auto = true")

    def to_dict(self) -> dict:
        def clean(d):
            return {k: v for k, v in d.items() if v is not None}

        out = {"problem": dict(self.problem)}
        if self.topology is not None:
            out["topology"] = {"spec": self.topology}
        out["solver"] = clean(asdict(self.solver))
        out["run"] = clean(asdict(self.run))
        return out


def _section(cls, data: dict, name: str):
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise InputError(f"unknown keys in [{name}]: {', '.join(sorted(extra))}")
    return cls(**data)


def config_from_dict(data: dict) -> ExperimentConfig:
    extra = set(data) - {"problem", "topology", "solver", "run"}
    if extra:
        raise InputError(f"unknown sections: {', '.join(sorted(extra))}")
    if "problem" not in data:
        raise InputError("missing [problem] section")
    topo = data.get("topology", {})
    if set(topo) - {"spec"}:
        raise InputError("[topology] only takes 'spec'")
    cfg = ExperimentConfig(
        problem=dict(data["problem"]),
        topology=topo.get("spec"),
        solver=_section(SolverSection, dict(data.get("solver", {})), "solver"),
        run=_section(RunSection, dict(data.get("run", {})), "run"),
    )
    cfg.validate()
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise InputError(f"config is not valid TOML: {exc}") from None
    return config_from_dict(data)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def dump_config(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())
