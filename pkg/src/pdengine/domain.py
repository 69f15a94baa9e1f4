"""Domain partitioning behind a small geometric interface.

The synchronization code only ever asks four questions of a partitioning:
who owns a point, does a rank contain a point, does a box touch a rank's
subdomain, and which ranks neighbour a given rank. Anything answering those
can be plugged in.
"""

from __future__ import annotations

import abc
import bisect
import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "AABB",
    "DomainDecomposition",
    "BlockGrid",
    "SphericalShells",
    "SingleDomain",
    "make_block_grid",
    "make_spherical_shells",
    "make_single_domain",
    "parse_partitioning",
    "DomainError",
]


class DomainError(ValueError):
    pass


def _vec(v) -> tuple[float, float, float]:
    x, y, z = (float(c) for c in v)
    return (x, y, z)


@dataclass(frozen=True)
class AABB:
    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def __post_init__(self):
        lo, hi = _vec(self.min), _vec(self.max)
        if any(a > b for a, b in zip(lo, hi)) or any(map(math.isnan, lo + hi)):
            raise DomainError(f"invalid AABB {lo} .. {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def around(cls, center, half_width: float) -> "AABB":
        c = _vec(center)
        return cls(tuple(x - half_width for x in c), tuple(x + half_width for x in c))

    @classmethod
    def point(cls, p) -> "AABB":
        return cls(p, p)

    @property
    def extent(self) -> tuple[float, float, float]:
        return tuple(b - a for a, b in zip(self.min, self.max))

    @property
    def center(self) -> tuple[float, float, float]:
        return tuple(0.5 * (a + b) for a, b in zip(self.min, self.max))

    def contains(self, p) -> bool:
        return all(a <= x <= b for a, x, b in zip(self.min, p, self.max))

    def intersects(self, other: "AABB") -> bool:
        return all(
            a0 <= b1 and b0 <= a1
            for a0, a1, b0, b1 in zip(self.min, self.max, other.min, other.max)
        )


class DomainDecomposition(abc.ABC):
    """Geometric predicates over a partition of the global domain into ranks.

    Implementations must keep ``owner_of_point`` a total function on the
    global domain (exactly one rank per interior point) and may answer
    ``intersects_subdomain`` conservatively, never with a false negative.
    """

    @abc.abstractmethod
    def num_ranks(self) -> int: ...

    @abc.abstractmethod
    def owner_of_point(self, p) -> int | None:
        """Owning rank, or ``None`` outside the global domain."""

    @abc.abstractmethod
    def intersects_subdomain(self, rank: int, box: AABB) -> bool: ...

    @abc.abstractmethod
    def neighbor_ranks(self, rank: int) -> frozenset[int]: ...

    @abc.abstractmethod
    def contains_point(self, rank: int, p) -> bool: ...

    def ranks(self) -> range:
        return range(self.num_ranks())

    def _check_rank(self, rank: int) -> None:
        if not 0 <= rank < self.num_ranks():
            raise DomainError(f"rank {rank} out of range [0, {self.num_ranks()})")


class SingleDomain(DomainDecomposition):
    def __init__(self, box: AABB):
        if any(e <= 0 for e in box.extent):
            raise DomainError("degenerate global box")
        self.box = box

    def num_ranks(self) -> int:
        return 1

    def owner_of_point(self, p) -> int | None:
        return 0 if self.box.contains(p) else None

    def contains_point(self, rank: int, p) -> bool:
        self._check_rank(rank)
        return self.box.contains(p)

    def intersects_subdomain(self, rank: int, box: AABB) -> bool:
        self._check_rank(rank)
        return self.box.intersects(box)

    def neighbor_ranks(self, rank: int) -> frozenset[int]:
        self._check_rank(rank)
        return frozenset()

    def __repr__(self) -> str:
        return f"SingleDomain({self.box})"


class BlockGrid(DomainDecomposition):
    """Regular nx*ny*nz blocks; rank = ix + nx*(iy + ny*iz).

    Cells are half-open per axis and closed on the global upper face. Both the
    point test and the box test go through the same monotone index map, so a
    point's owner always intersects the degenerate box at that point.
    """

    def __init__(self, box: AABB, nx: int, ny: int, nz: int):
        counts = (int(nx), int(ny), int(nz))
        if min(counts) < 1:
            raise DomainError(f"block counts must be >= 1, got {counts}")
        if any(e <= 0 for e in box.extent):
            raise DomainError("degenerate global box")
        self.box = box
        self.counts = counts
        self.cell_extent = tuple(e / n for e, n in zip(box.extent, counts))

    def num_ranks(self) -> int:
        nx, ny, nz = self.counts
        return nx * ny * nz

    def rank_of(self, ix: int, iy: int, iz: int) -> int:
        nx, ny, _ = self.counts
        return ix + nx * (iy + ny * iz)

    def coords_of(self, rank: int) -> tuple[int, int, int]:
        self._check_rank(rank)
        nx, ny, _ = self.counts
        return rank % nx, (rank // nx) % ny, rank // (nx * ny)

    def _index(self, axis: int, x: float) -> int:
        # caller guarantees min <= x <= max on this axis
        i = math.floor((x - self.box.min[axis]) / self.cell_extent[axis])
        return min(max(i, 0), self.counts[axis] - 1)

    def owner_of_point(self, p) -> int | None:
        if not self.box.contains(p):
            return None
        return self.rank_of(*(self._index(a, p[a]) for a in range(3)))

    def contains_point(self, rank: int, p) -> bool:
        idx = self.coords_of(rank)
        return self.box.contains(p) and all(self._index(a, p[a]) == idx[a] for a in range(3))

    def cell_bounds(self, rank: int) -> AABB:
        idx = self.coords_of(rank)
        lo = [self.box.min[a] + idx[a] * self.cell_extent[a] for a in range(3)]
        hi = [
            self.box.max[a] if idx[a] == self.counts[a] - 1
            else self.box.min[a] + (idx[a] + 1) * self.cell_extent[a]
            for a in range(3)
        ]
        return AABB(lo, hi)

    def intersects_subdomain(self, rank: int, box: AABB) -> bool:
        idx = self.coords_of(rank)
        if not self.box.intersects(box):
            return False
        for a in range(3):
            lo = self._index(a, max(box.min[a], self.box.min[a]))
            hi = self._index(a, min(box.max[a], self.box.max[a]))
            if not lo <= idx[a] <= hi:
                return False
        return True

    def neighbor_ranks(self, rank: int) -> frozenset[int]:
        ix, iy, iz = self.coords_of(rank)
        out = set()
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    j = (ix + dx, iy + dy, iz + dz)
                    if all(0 <= j[a] < self.counts[a] for a in range(3)):
                        out.add(self.rank_of(*j))
        out.discard(rank)
        return frozenset(out)

    def min_thickness(self) -> float:
        return min(self.cell_extent)

    def __repr__(self) -> str:
        return f"BlockGrid({self.box}, {self.counts})"


def _distance(p, c) -> float:
    return math.hypot(p[0] - c[0], p[1] - c[1], p[2] - c[2])


class SphericalShells(DomainDecomposition):
    """Concentric shells; rank i owns r[i-1] <= |p - center| < r[i] (r[-1] = 0).

    Points at or beyond the last radius are outside the domain.
    """

    def __init__(self, center, radii: Sequence[float]):
        radii = [float(r) for r in radii]
        if not radii or radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise DomainError(f"shell radii must be positive and strictly ascending: {radii}")
        self.center = _vec(center)
        self.radii = tuple(radii)
        self._inner = (0.0,) + self.radii[:-1]

    def num_ranks(self) -> int:
        return len(self.radii)

    def owner_of_point(self, p) -> int | None:
        i = bisect.bisect_right(self.radii, _distance(p, self.center))
        return i if i < len(self.radii) else None

    def contains_point(self, rank: int, p) -> bool:
        self._check_rank(rank)
        return self._inner[rank] <= _distance(p, self.center) < self.radii[rank]

    def distance_bracket(self, box: AABB) -> tuple[float, float]:
        c = self.center
        near = [min(max(c[a], box.min[a]), box.max[a]) for a in range(3)]
        far = [
            box.min[a] if abs(box.min[a] - c[a]) >= abs(box.max[a] - c[a]) else box.max[a]
            for a in range(3)
        ]
        return _distance(near, c), _distance(far, c)

    def intersects_subdomain(self, rank: int, box: AABB) -> bool:
        self._check_rank(rank)
        near, far = self.distance_bracket(box)
        return near < self.radii[rank] and far >= self._inner[rank]

    def neighbor_ranks(self, rank: int) -> frozenset[int]:
        self._check_rank(rank)
        return frozenset(r for r in (rank - 1, rank + 1) if 0 <= r < len(self.radii))

    def min_thickness(self) -> float:
        return min(b - a for a, b in zip(self._inner, self.radii))

    def __repr__(self) -> str:
        return f"SphericalShells({self.center}, {self.radii})"


def make_block_grid(global_box: AABB, nx: int, ny: int, nz: int) -> BlockGrid:
    return BlockGrid(global_box, nx, ny, nz)


def make_spherical_shells(center, radii: Sequence[float]) -> SphericalShells:
    return SphericalShells(center, radii)


def make_single_domain(global_box: AABB) -> SingleDomain:
    return SingleDomain(global_box)


def parse_partitioning(text: str, global_box: AABB) -> DomainDecomposition:
    """``blockgrid(nx,ny,nz)``, ``shells(r1,...,rk)`` (centred on the box) or ``single``."""
    text = text.strip()
    if text == "single":
        return make_single_domain(global_box)
    m = re.fullmatch(r"(\w+)\s*\((.*)\)", text)
    if m is None:
        raise DomainError(f"cannot parse partitioning {text!r}")
    kind, args = m.group(1), [a.strip() for a in m.group(2).split(",") if a.strip()]
    try:
        if kind == "blockgrid" and len(args) == 3:
            return make_block_grid(global_box, *(int(a) for a in args))
        if kind == "shells" and args:
            return make_spherical_shells(global_box.center, [float(a) for a in args])
    except ValueError as exc:
        raise DomainError(f"bad partitioning arguments in {text!r}: {exc}") from None
    raise DomainError(f"unknown partitioning {text!r}")


def brute_force_owners(domain: DomainDecomposition, p) -> list[int]:
    """Every rank whose ``contains_point`` accepts ``p`` (test oracle)."""
    return [r for r in domain.ranks() if domain.contains_point(r, p)]


def inflated_aabb(position, radius: float) -> AABB:
    p = np.asarray(position, dtype=float)
    return AABB(tuple((p - radius).tolist()), tuple((p + radius).tolist()))
