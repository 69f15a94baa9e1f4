"""Simulation configuration: ``key = value`` lines, ``#`` comments."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .domain import AABB, DomainError

__all__ = ["ConfigError", "SimConfig", "Scenario", "parse_config", "load_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    kind: str
    args: tuple = ()

    def __str__(self) -> str:
        if not self.args:
            return self.kind
        return f"{self.kind}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class SimConfig:
    partitioning: str = "single"
    box: AABB = field(default_factory=lambda: AABB((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)))
    dt: float = 1e-3
    steps: int = 100
    integrator: str = "vverlet"
    kn: float = 1000.0
    gamma_n: float = 0.0
    g: tuple[float, float, float] = (0.0, 0.0, 0.0)
    scenario: Scenario = Scenario("two_sphere")
    radius: float = 0.1
    mass: float = 1.0
    walls: bool = True
    schema_path: Path | None = None
    output: Path = Path("trajectory.csv")
    ownership: Path | None = None
    metrics: Path = Path("metrics.csv")
    output_interval: int = 1
    vtk: bool = False
    threads: bool = False
    check: bool = False

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")
        if self.integrator not in ("euler", "vverlet"):
            raise ConfigError(f"unknown integrator {self.integrator!r}")
        if self.kn < 0 or self.gamma_n < 0:
            raise ConfigError("kn and gamma_n must be non-negative")
        if self.radius <= 0 or self.mass <= 0:
            raise ConfigError("radius and mass must be positive")
        if self.output_interval < 1:
            raise ConfigError("output_interval must be >= 1")


_SCENARIOS = {"two_sphere": (0, 2), "gas": (2, 3), "settle": (2, 2)}


def parse_scenario(text: str) -> Scenario:
    m = re.fullmatch(r"\s*(\w+)\s*(?:\((.*)\))?\s*", text)
    if m is None or m.group(1) not in _SCENARIOS:
        raise ConfigError(f"unknown scenario {text!r}")
    kind = m.group(1)
    raw = [a.strip() for a in (m.group(2) or "").split(",") if a.strip()]
    lo, hi = _SCENARIOS[kind]
    if not lo <= len(raw) <= hi:
        raise ConfigError(f"scenario {kind} takes {lo}..{hi} arguments, got {len(raw)}")
    args = []
    for k, a in enumerate(raw):
        try:
            # gas/settle: N and seed are integers, everything else real
            args.append(int(a) if kind != "two_sphere" and k < 2 else float(a))
        except ValueError:
            raise ConfigError(f"bad scenario argument {a!r}") from None
    return Scenario(kind, tuple(args))


def _vec3(text: str) -> tuple[float, float, float]:
    body = text.strip()
    if body.startswith("(") and body.endswith(")"):
        body = body[1:-1]
    parts = body.split(",")
    if len(parts) != 3:
        raise ConfigError(f"expected a vec3 literal, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"expected a vec3 literal, got {text!r}") from None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


_KEY_ALIASES = {"gammaN": "gamma_n", "schemaPath": "schema", "outputInterval": "output_interval"}


def parse_config(text: str, base_dir: Path | str = ".") -> SimConfig:
    """Parse config text; relative paths resolve against ``base_dir``."""
    base = Path(base_dir)
    raw: dict[str, tuple[int, str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _KEY_ALIASES.get(key, key)
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = (lineno, value)

    kw: dict = {}
    box_min = box_max = None
    for key, (lineno, value) in raw.items():
        try:
            if key == "box_min":
                box_min = _vec3(value)
            elif key == "box_max":
                box_max = _vec3(value)
            elif key in ("dt", "kn", "gamma_n", "radius", "mass"):
                kw[key] = float(value)
            elif key in ("steps", "output_interval"):
                kw[key] = int(value)
            elif key == "g":
                kw[key] = _vec3(value)
            elif key in ("integrator", "partitioning"):
                kw[key] = value
            elif key == "scenario":
                kw[key] = parse_scenario(value)
            elif key in ("walls", "vtk", "threads", "check"):
                kw[key] = _bool(value)
            elif key == "schema":
                kw["schema_path"] = base / value
            elif key in ("output", "metrics", "ownership"):
                kw[key] = base / value
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    if (box_min is None) != (box_max is None):
        raise ConfigError("box_min and box_max must be given together")
    try:
        if box_min is not None:
            kw["box"] = AABB(box_min, box_max)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    kw.setdefault("output", base / "trajectory.csv")
    kw.setdefault("metrics", base / "metrics.csv")
    return SimConfig(**kw)


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, base_dir=path.parent)
