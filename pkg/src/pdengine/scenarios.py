"""Initial conditions. Every scenario is a pure function of the config."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, SimConfig

__all__ = ["ParticleInit", "build_scenario", "two_sphere", "gas", "settle"]


@dataclass(frozen=True)
class ParticleInit:
    uid: int
    position: tuple[float, float, float]
    velocity: tuple[float, float, float]
    radius: float
    inv_mass: float


def two_sphere(cfg: SimConfig, v0: float = 1.0, gap: float | None = None) -> list[ParticleInit]:
    """Two equal spheres approaching head-on along x through the box centre."""
    r = cfg.radius
    if gap is None:
        gap = 0.1 * r
    cx, cy, cz = cfg.box.center
    offset = r + 0.5 * gap
    inv_m = 1.0 / cfg.mass
    return [
        ParticleInit(0, (cx - offset, cy, cz), (v0, 0.0, 0.0), r, inv_m),
        ParticleInit(1, (cx + offset, cy, cz), (-v0, 0.0, 0.0), r, inv_m),
    ]


def gas(cfg: SimConfig, n: int, seed: int, max_v: float = 1.0) -> list[ParticleInit]:
    """``n`` non-overlapping spheres at uniform random positions and velocities."""
    rng = np.random.default_rng(seed)
    r = cfg.radius
    lo = np.array(cfg.box.min) + r
    hi = np.array(cfg.box.max) - r
    if np.any(hi <= lo):
        raise ConfigError("box too small for the particle radius")
    placed: list[np.ndarray] = []
    attempts = 0
    while len(placed) < n:
        attempts += 1
        if attempts > 1000 * max(n, 1):
            raise ConfigError(f"could not place {n} particles without overlap")
        p = rng.uniform(lo, hi)
        if placed and np.min(np.linalg.norm(np.asarray(placed) - p, axis=1)) < 2 * r:
            continue
        placed.append(p)
    velocities = rng.uniform(-max_v, max_v, size=(n, 3))
    inv_m = 1.0 / cfg.mass
    return [
        ParticleInit(uid, tuple(p.tolist()), tuple(v.tolist()), r, inv_m)
        for uid, (p, v) in enumerate(zip(placed, velocities))
    ]


def settle(cfg: SimConfig, n: int, seed: int) -> list[ParticleInit]:
    """Particles on a jittered lattice at rest, left to fall under gravity."""
    rng = np.random.default_rng(seed)
    r = cfg.radius
    spacing = 2.2 * r
    lo = np.array(cfg.box.min) + 1.1 * r
    counts = np.floor((np.array(cfg.box.max) - 1.1 * r - lo) / spacing).astype(int) + 1
    if counts[0] * counts[1] * counts[2] < n:
        raise ConfigError(f"box holds at most {int(np.prod(counts))} settle particles")
    inv_m = 1.0 / cfg.mass
    out = []
    for uid in range(n):
        k = np.array([uid % counts[0], (uid // counts[0]) % counts[1],
                      uid // (counts[0] * counts[1])])
        jitter = rng.uniform(-0.05 * r, 0.05 * r, size=3)
        p = lo + k * spacing + jitter
        out.append(ParticleInit(uid, tuple(p.tolist()), (0.0, 0.0, 0.0), r, inv_m))
    return out


def build_scenario(cfg: SimConfig) -> list[ParticleInit]:
    kind, args = cfg.scenario.kind, cfg.scenario.args
    if kind == "two_sphere":
        return two_sphere(cfg, *args)
    if kind == "gas":
        return gas(cfg, *args)
    if kind == "settle":
        return settle(cfg, *args)
    raise ConfigError(f"unknown scenario {kind!r}")
