"""Simulation driver: setup, the timestep loop, diagnostics and output.

Per step:

1. ``vv_pre`` on owned particles (nothing for Euler)
2. ghost synchronization and migration
3. gravity, walls and linked-cell pair forces
4. ``vv_post`` or ``explicit_euler`` on owned particles
5. output and metrics
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .codegen import builtin_generated_dir, load_generated, store_class_for
from .config import ConfigError, SimConfig
from .domain import BlockGrid, DomainDecomposition, SphericalShells, parse_partitioning, DomainError
from .output import (
    OWNERSHIP_HEADER,
    TRAJECTORY_HEADER,
    fmt,
    metrics_header,
    owned_rows,
    write_snapshot,
    write_vtk,
)
from .scenarios import ParticleInit, build_scenario
from .schema import SchemaError, load_schema
from .storage import StoreBase
from .sync import SyncMessageKind, global_consistency_check, make_transport, sync_next_neighbors

__all__ = ["Simulation", "ConsistencyError", "run_simulation", "diagnostics"]

logger = logging.getLogger(__name__)

_RUNTIME_PROPERTIES = ("position", "linearVelocity", "interactionRadius", "invMass", "force")


class ConsistencyError(RuntimeError):
    def __init__(self, step: int, violations: list[str]):
        self.step = step
        self.violations = violations
        super().__init__(f"step {step}: {len(violations)} consistency violations, "
                         f"first: {violations[0]}")


def _store_class(cfg: SimConfig) -> type[StoreBase]:
    if cfg.schema_path is None:
        cls = load_generated(builtin_generated_dir())
    else:
        try:
            cls = store_class_for(load_schema(cfg.schema_path))
        except (OSError, SchemaError) as exc:
            raise ConfigError(f"schema: {exc}") from None
    needed = _RUNTIME_PROPERTIES + (("oldForce",) if cfg.integrator == "vverlet" else ())
    missing = [p for p in needed if p not in cls.schema]
    if missing:
        raise ConfigError(f"schema lacks properties required by the runtime: {missing}")
    return cls


def check_reach(domain: DomainDecomposition, box, reach: float) -> None:
    """Reject setups where an inflated box could reach past the neighbour ranks."""
    if isinstance(domain, BlockGrid) and reach >= domain.min_thickness():
        raise ConfigError(
            f"ghost reach {reach} must stay below the smallest block extent "
            f"{domain.min_thickness()}"
        )
    if isinstance(domain, SphericalShells):
        if reach * math.sqrt(3.0) >= 0.5 * domain.min_thickness():
            raise ConfigError(
                f"ghost reach {reach} too large for shell thickness {domain.min_thickness()}"
            )
        far = max(
            math.dist(domain.center, (x, y, z))
            for x in (box.min[0], box.max[0])
            for y in (box.min[1], box.max[1])
            for z in (box.min[2], box.max[2])
        )
        if far >= domain.radii[-1]:
            raise ConfigError(
                f"global box reaches distance {far}, beyond the outer shell {domain.radii[-1]}"
            )


def diagnostics(stores: Sequence[StoreBase], kn: float, box=None) -> dict[str, float]:
    """Total momentum, kinetic energy and elastic potential of owned particles."""
    recs = []
    for s in stores:
        pos, vel = s.array("position"), s.array("linearVelocity")
        rad, inv = s.array("interactionRadius"), s.array("invMass")
        for i in s.owned_indices():
            recs.append((s.get_uid(i), pos[i], vel[i], rad[i], inv[i]))
    recs.sort(key=lambda r: r[0])
    if not recs:
        return {"px": 0.0, "py": 0.0, "pz": 0.0, "kinetic": 0.0, "potential": 0.0}
    x = np.array([r[1] for r in recs])
    v = np.array([r[2] for r in recs])
    rad = np.array([r[3] for r in recs])
    inv = np.array([r[4] for r in recs])
    mass = np.where(inv > 0, 1.0 / np.where(inv > 0, inv, 1.0), 0.0)
    p = (mass[:, None] * v).sum(axis=0)
    kinetic = float(0.5 * np.sum(mass * np.sum(v * v, axis=1)))
    d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
    delta = rad[:, None] + rad[None, :] - d
    iu = np.triu_indices(len(recs), k=1)
    overlap = np.clip(delta[iu], 0.0, None)
    potential = float(0.5 * kn * np.sum(overlap * overlap))
    if box is not None:
        lo = np.clip(rad[:, None] - (x - np.array(box.min)), 0.0, None)
        hi = np.clip(rad[:, None] - (np.array(box.max) - x), 0.0, None)
        potential += float(0.5 * kn * (np.sum(lo * lo) + np.sum(hi * hi)))
    return {"px": float(p[0]), "py": float(p[1]), "pz": float(p[2]),
            "kinetic": kinetic, "potential": potential}


class Simulation:
    """Owns one store per rank, the transport and the timestep loop."""

    def __init__(self, cfg: SimConfig, particles: list[ParticleInit] | None = None):
        self.cfg = cfg
        self.store_cls = _store_class(cfg)
        try:
            self.domain = parse_partitioning(cfg.partitioning, cfg.box)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        self.transport = make_transport(self.domain.num_ranks())
        self.stores = [self.store_cls(rank=r) for r in self.domain.ranks()]
        if particles is None:
            particles = build_scenario(cfg)
        max_r = max((p.radius for p in particles), default=cfg.radius)
        # ghosts reach far enough that every contact partner is visible locally
        self.margin = max_r
        self.cell_size = 2.0 * max_r
        check_reach(self.domain, cfg.box, max_r + self.margin)
        for p in particles:
            owner = self.domain.owner_of_point(p.position)
            if owner is None:
                raise ConfigError(f"particle {p.uid} at {p.position} lies outside the domain")
            store = self.stores[owner]
            i = store.create_particle(p.uid)
            store.set_position(i, p.position)
            store.set_linear_velocity(i, p.velocity)
            store.set_interaction_radius(i, p.radius)
            store.set_inv_mass(i, p.inv_mass)
        self.step_count = 0
        self.pool = ThreadPoolExecutor(max_workers=len(self.stores)) if cfg.threads else None
        self._pair = partial(kernels.spring_dashpot, kn=cfg.kn, gamma_n=cfg.gamma_n)
        self._gravity = any(c != 0.0 for c in cfg.g)

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown()
            self.pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _each_rank(self, fn) -> None:
        if self.pool is None:
            for s in self.stores:
                fn(s)
        else:
            list(self.pool.map(fn, self.stores))

    def _pre(self, store: StoreBase) -> None:
        if self.cfg.integrator == "vverlet":
            dt = self.cfg.dt
            for i in store.owned_indices():
                kernels.vv_pre(i, store, dt)

    def _forces(self, store: StoreBase) -> None:
        cfg = self.cfg
        for i in store.ghost_indices():
            store.reset_never(i)
        for i in store.owned_indices():
            if self._gravity:
                kernels.gravity(i, store, cfg.g)
            if cfg.walls:
                kernels.wall_box(i, store, cfg.box, cfg.kn)
        kernels.linked_cell_for_each_pair(store, self.cell_size, self._pair)

    def _post(self, store: StoreBase) -> None:
        dt = self.cfg.dt
        integrate = kernels.vv_post if self.cfg.integrator == "vverlet" else kernels.explicit_euler
        for i in store.owned_indices():
            integrate(i, store, dt)

    def step(self) -> None:
        self._each_rank(self._pre)
        sync_next_neighbors(self.stores, self.domain, self.transport, self.margin, self.pool)
        if self.cfg.check:
            violations = self.check()
            if violations:
                raise ConsistencyError(self.step_count + 1, violations)
        self._each_rank(self._forces)
        self._each_rank(self._post)
        self.step_count += 1

    def check(self) -> list[str]:
        return global_consistency_check(self.stores, self.domain, self.margin)

    def diagnostics(self) -> dict[str, float]:
        return diagnostics(self.stores, self.cfg.kn, self.cfg.box if self.cfg.walls else None)

    def rows(self):
        return owned_rows(self.stores)

    def run(self) -> None:
        """Run all configured steps, writing trajectory, metrics and optional VTK."""
        cfg = self.cfg
        kinds = list(SyncMessageKind)
        last_counts, last_bytes = Counter(), Counter()
        ownership = open(cfg.ownership, "w", encoding="utf-8", newline="\n") \
            if cfg.ownership else None
        try:
            with open(cfg.output, "w", encoding="utf-8", newline="\n") as traj, \
                    open(cfg.metrics, "w", encoding="utf-8", newline="\n") as met:
                traj.write(TRAJECTORY_HEADER + "\n")
                met.write(metrics_header(kinds) + "\n")
                if ownership:
                    ownership.write(OWNERSHIP_HEADER + "\n")

                def emit(step: int) -> None:
                    nonlocal last_counts, last_bytes
                    counts, nbytes = self.transport.stats.snapshot()
                    d = self.diagnostics()
                    cols = [str(step), fmt(step * cfg.dt), fmt(d["px"]), fmt(d["py"]),
                            fmt(d["pz"]), fmt(d["kinetic"]), fmt(d["potential"])]
                    for k in kinds:
                        cols += [str(counts[k] - last_counts[k]), str(nbytes[k] - last_bytes[k])]
                    met.write(",".join(cols) + "\n")
                    last_counts, last_bytes = counts, nbytes
                    if step % cfg.output_interval == 0:
                        write_snapshot(self.stores, step, traj, ownership)
                        if cfg.vtk:
                            write_vtk(_vtk_path(cfg.output, step), self.stores, step)

                emit(0)
                for _ in range(cfg.steps):
                    self.step()
                    emit(self.step_count)
        finally:
            if ownership:
                ownership.close()


def _vtk_path(output: Path, step: int) -> Path:
    output = Path(output)
    return output.with_name(f"{output.stem}_{step:06d}.vtk")


def run_simulation(cfg: SimConfig) -> int:
    """Run ``cfg`` to completion. Returns 0, or raises ConfigError/ConsistencyError."""
    with Simulation(cfg) as sim:
        sim.run()
    return 0
