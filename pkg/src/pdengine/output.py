"""Trajectory, ownership, metrics and VTK writers.

All numbers use 17 significant digits so every 64-bit real round-trips.
"""

from __future__ import annotations

from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .storage import StoreBase

__all__ = [
    "fmt",
    "owned_rows",
    "write_snapshot",
    "TRAJECTORY_HEADER",
    "OWNERSHIP_HEADER",
    "metrics_header",
    "write_vtk",
]

TRAJECTORY_HEADER = "step,uid,x,y,z,vx,vy,vz"
OWNERSHIP_HEADER = "step,uid,owner"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def owned_rows(stores: Sequence[StoreBase]) -> list[tuple[int, int, np.ndarray, np.ndarray]]:
    """``(uid, owner, position, velocity)`` for every owned particle, sorted by uid."""
    rows = []
    for store in stores:
        pos = store.array("position")
        vel = store.array("linearVelocity")
        for i in store.owned_indices():
            rows.append((store.get_uid(i), store.rank, pos[i].copy(), vel[i].copy()))
    rows.sort(key=lambda r: r[0])
    return rows


def write_snapshot(stores: Sequence[StoreBase], step: int, trajectory: IO[str],
                   ownership: IO[str] | None = None) -> int:
    """Append one row per owned particle; ghosts never appear. Returns row count."""
    rows = owned_rows(stores)
    for uid, owner, p, v in rows:
        trajectory.write(",".join([str(step), str(uid), *map(fmt, p), *map(fmt, v)]) + "\n")
        if ownership is not None:
            ownership.write(f"{step},{uid},{owner}\n")
    return len(rows)


def metrics_header(kinds) -> str:
    cols = ["step", "time", "px", "py", "pz", "kinetic_energy", "potential_energy"]
    for k in kinds:
        cols += [f"count_{k.name}", f"bytes_{k.name}"]
    return ",".join(cols)


def write_vtk(path: Path, stores: Sequence[StoreBase], step: int) -> None:
    """Legacy ASCII VTK point cloud of owned particles (for viewing only)."""
    rows = owned_rows(stores)
    radius = {}
    for store in stores:
        for i in store.owned_indices():
            radius[store.get_uid(i)] = store.get_interaction_radius(i)
    lines = [
        "# vtk DataFile Version 3.0",
        f"particles step {step}",
        "ASCII",
        "DATASET POLYDATA",
        f"POINTS {len(rows)} double",
    ]
    lines += [" ".join(map(fmt, p)) for _, _, p, _ in rows]
    lines += [f"VERTICES {len(rows)} {2 * len(rows)}"]
    lines += [f"1 {k}" for k in range(len(rows))]
    lines += [f"POINT_DATA {len(rows)}", "SCALARS uid double 1", "LOOKUP_TABLE default"]
    lines += [str(uid) for uid, _, _, _ in rows]
    lines += ["SCALARS owner int 1", "LOOKUP_TABLE default"]
    lines += [str(owner) for _, owner, _, _ in rows]
    lines += ["SCALARS radius double 1", "LOOKUP_TABLE default"]
    lines += [fmt(radius[uid]) for uid, _, _, _ in rows]
    lines += ["VECTORS velocity double"]
    lines += [" ".join(map(fmt, v)) for _, _, _, v in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
