"""Run configuration: an INI file with a single ``[run]`` section.

Relative paths resolve against the directory of the config file. An empty
``charges`` value means the vacuum.
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .circuit import ENTANGLERS, ROTATIONS
from .errors import ParseError
from .integrals import CHARGE_MODELS
from .vqe import OBJECTIVES, UPDATES, OptimizerConfig

SECTION = "run"


@dataclass(frozen=True)
class RunConfig:
    scaffold: str
    charges: str = ""
    species: str = ""  # comma list overriding every site's allowed species
    active_orbitals: int = 2
    depth: int = 2
    entangler: str = "full"
    rotations: str = "ry"
    scale: float = 1e3
    iterations: int = 500
    restarts: int = 3
    shots: int = 0
    seed: int = 0
    objective: str = "gap"
    update: str = "joint"
    penalty_weight: float = 0.0
    penalty_target: float = 0.0
    charge_model: str = "all_electron"
    tau: float = 1e-8
    threshold: float = 0.1
    ecp: str = ""
    hardware_mimic: bool = False

    def __post_init__(self):
        checks = [
            (self.entangler in ENTANGLERS, f"entangler must be one of {ENTANGLERS}"),
            (self.rotations in ROTATIONS, f"rotations must be one of {ROTATIONS}"),
            (self.objective in OBJECTIVES, f"objective must be one of {OBJECTIVES}"),
            (self.update in UPDATES, f"update must be one of {UPDATES}"),
            (self.charge_model in CHARGE_MODELS, f"charge_model must be one of {CHARGE_MODELS}"),
            (self.active_orbitals >= 1 and self.depth >= 0, "active_orbitals >= 1 and depth >= 0 required"),
            (self.iterations >= 1 and self.restarts >= 1, "iterations and restarts must be >= 1"),
            (self.shots >= 0 and self.scale > 0 and self.tau > 0, "shots >= 0, scale > 0 and tau > 0 required"),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError(message)

    @property
    def effective(self) -> "RunConfig":
        """Hardware-mimic runs: 100 iterations, 8192 shots, linear entangler."""
        if not self.hardware_mimic:
            return self
        return replace(self, iterations=100, shots=self.shots or 8192, entangler="linear")

    def optimizer(self) -> OptimizerConfig:
        c = self.effective
        return OptimizerConfig(max_iterations=c.iterations, scale=c.scale, restarts=c.restarts, seed=c.seed,
                               objective=c.objective, update=c.update, shots=c.shots,
                               penalty_weight=c.penalty_weight, penalty_target=c.penalty_target)

    def path(self, value: str, base: Path) -> Path | None:
        if not value:
            return None
        p = Path(value).expanduser()
        return p if p.is_absolute() else (base / p)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(name, raw, path):
    kind = _TYPES[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
        return raw.strip()
    except ValueError:
        raise ParseError(f"{name}: cannot read {raw!r} as {kind}", path) from None


def read_config(path) -> tuple[RunConfig, Path]:
    """Parse a run config; returns it with the directory relative paths resolve against."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ParseError(str(exc).splitlines()[0], path) from None
    if not parser.has_section(SECTION):
        raise ParseError(f"missing [{SECTION}] section", path)
    values = {}
    for name, raw in parser.items(SECTION):
        if name not in _TYPES:
            raise ParseError(f"unknown key {name!r}", path)
        values[name] = _convert(name, raw, path)
    if "scaffold" not in values or not values["scaffold"]:
        raise ParseError("the scaffold key is required", path)
    try:
        return RunConfig(**values), path.resolve().parent
    except ValueError as exc:
        raise ParseError(str(exc), path) from None


def write_config(config: RunConfig, path) -> None:
    parser = configparser.ConfigParser(interpolation=None)
    parser[SECTION] = {k: str(v) for k, v in asdict(config).items()}
    with open(path, "w") as fh:
        parser.write(fh)
