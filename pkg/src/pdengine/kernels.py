"""Per-particle and pair kernels.

Kernels see particles only through an accessor: any object offering
``get_<prop>(idx)`` / ``set_<prop>(idx, value)`` for the properties they use.
The generated store is one such object; :class:`PermutedAccessor` is another.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import AABB

__all__ = [
    "KernelParams",
    "explicit_euler",
    "vv_pre",
    "vv_post",
    "gravity",
    "spring_dashpot",
    "wall_box",
    "cell_of",
    "linked_cell_pairs",
    "linked_cell_for_each_pair",
    "PermutedAccessor",
]

logger = logging.getLogger(__name__)

_ZERO = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class KernelParams:
    dt: float
    g: tuple[float, float, float] = _ZERO
    kn: float = 0.0
    gamma_n: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.kn < 0 or self.gamma_n < 0:
            raise ValueError("kn and gamma_n must be non-negative")


def explicit_euler(idx: int, ac, dt: float) -> None:
    """Explicit Euler step; the position update reads the old velocity."""
    ac.set_position(idx, ac.get_inv_mass(idx) * ac.get_force(idx) * dt * dt
                    + ac.get_linear_velocity(idx) * dt
                    + ac.get_position(idx))
    ac.set_linear_velocity(idx, ac.get_inv_mass(idx) * ac.get_force(idx) * dt
                           + ac.get_linear_velocity(idx))
    ac.set_force(idx, _ZERO)


def vv_pre(idx: int, ac, dt: float) -> None:
    ac.set_position(idx, ac.get_position(idx)
                    + ac.get_linear_velocity(idx) * dt
                    + 0.5 * ac.get_inv_mass(idx) * ac.get_old_force(idx) * dt * dt)


def vv_post(idx: int, ac, dt: float) -> None:
    force = ac.get_force(idx)
    ac.set_linear_velocity(idx, ac.get_linear_velocity(idx)
                           + 0.5 * ac.get_inv_mass(idx) * (ac.get_old_force(idx) + force) * dt)
    ac.set_old_force(idx, force)
    ac.set_force(idx, _ZERO)


def gravity(idx: int, ac, g) -> None:
    inv_mass = ac.get_inv_mass(idx)
    if inv_mass > 0:
        ac.set_force(idx, ac.get_force(idx) + np.asarray(g, dtype=np.float64) / inv_mass)


def spring_dashpot(i: int, j: int, ac, kn: float, gamma_n: float) -> None:
    """Linear normal spring plus viscous dashpot, equal and opposite on i and j."""
    xi = ac.get_position(i)
    xj = ac.get_position(j)
    reach = ac.get_interaction_radius(i) + ac.get_interaction_radius(j)
    d = xi - xj
    dist = math.sqrt(float(np.dot(d, d)))
    if dist >= reach:
        return
    if dist == 0.0:
        logger.warning("coincident centres for particles at indices %d and %d; skipped", i, j)
        return
    delta = reach - dist
    n = d / dist
    vrel_n = float(np.dot(ac.get_linear_velocity(i) - ac.get_linear_velocity(j), n))
    f = (kn * delta - gamma_n * vrel_n) * n
    ac.set_force(i, ac.get_force(i) + f)
    ac.set_force(j, ac.get_force(j) - f)


def wall_box(idx: int, ac, box: AABB, kn: float) -> None:
    """Linear repulsion from each face of ``box`` the sphere penetrates."""
    x = ac.get_position(idx)
    r = ac.get_interaction_radius(idx)
    force = None
    for a in range(3):
        lower = r - (x[a] - box.min[a])
        upper = r - (box.max[a] - x[a])
        if lower > 0 or upper > 0:
            if force is None:
                force = ac.get_force(idx)
            if lower > 0:
                force[a] += kn * lower
            if upper > 0:
                force[a] -= kn * upper
    if force is not None:
        ac.set_force(idx, force)


def cell_of(position, cell_size: float) -> tuple[int, int, int]:
    return (math.floor(position[0] / cell_size),
            math.floor(position[1] / cell_size),
            math.floor(position[2] / cell_size))


_OFFSETS = [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)]


def linked_cell_pairs(ac, cell_size: float) -> list[tuple[int, int]]:
    """Candidate pairs from same or adjacent cells, ghost-ghost pairs excluded.

    Returned as ``(i, j)`` index pairs with ``uid(i) < uid(j)``, sorted by
    ``(uid(i), uid(j))``.
    """
    n = len(ac)
    if n == 0:
        return []
    radii = [ac.get_interaction_radius(i) for i in range(n)]
    if cell_size < 2.0 * max(radii):
        raise ValueError(
            f"cell size {cell_size} smaller than twice the largest radius {max(radii)}"
        )
    uids = [ac.get_uid(i) for i in range(n)]
    ghost = [ac.is_ghost(i) for i in range(n)]
    cells = [cell_of(ac.get_position(i).tolist(), cell_size) for i in range(n)]
    grid: dict[tuple[int, int, int], list[int]] = {}
    for i, c in enumerate(cells):
        grid.setdefault(c, []).append(i)

    keyed = []
    for i, (cx, cy, cz) in enumerate(cells):
        ui = uids[i]
        for dx, dy, dz in _OFFSETS:
            for j in grid.get((cx + dx, cy + dy, cz + dz), ()):
                if uids[j] > ui and not (ghost[i] and ghost[j]):
                    keyed.append((ui, uids[j], i, j))
    keyed.sort()
    return [(i, j) for _, _, i, j in keyed]


def linked_cell_for_each_pair(ac, cell_size: float,
                              kernel: Callable[[int, int, object], None]) -> int:
    """Call ``kernel(i, j, ac)`` for every candidate pair; returns the pair count."""
    pairs = linked_cell_pairs(ac, cell_size)
    for i, j in pairs:
        kernel(i, j, ac)
    return len(pairs)


class PermutedAccessor:
    """Accessor over another accessor with indices remapped through ``perm``.

    Index ``k`` here refers to index ``perm[k]`` in the wrapped accessor.
    """

    def __init__(self, base, perm):
        self._base = base
        self._perm = list(perm)
        if sorted(self._perm) != list(range(len(base))):
            raise ValueError("perm must be a permutation of the base indices")

    def __len__(self) -> int:
        return len(self._perm)

    def __getattr__(self, name: str):
        target = getattr(self._base, name)
        if not (name.startswith(("get_", "set_")) or name == "is_ghost"):
            raise AttributeError(name)
        perm = self._perm

        def remapped(idx, *args):
            return target(perm[idx], *args)

        return remapped
