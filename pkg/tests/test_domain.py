from __future__ import annotations

import math

import numpy as np
import pytest

from pdengine.domain import (
    AABB,
    DomainError,
    brute_force_owners,
    inflated_aabb,
    make_block_grid,
    make_single_domain,
    make_spherical_shells,
    parse_partitioning,
)

UNIT = AABB((0, 0, 0), (1, 1, 1))
SLAB = AABB((0, 0, 0), (2, 1, 1))


def test_block_grid_examples():
    d = make_block_grid(SLAB, 2, 1, 1)
    assert d.num_ranks() == 2
    assert d.owner_of_point((0.5, 0.5, 0.5)) == 0
    assert d.owner_of_point((1.5, 0.5, 0.5)) == 1
    box = AABB((0.9, 0.4, 0.4), (1.1, 0.6, 0.6))
    assert d.intersects_subdomain(0, box) and d.intersects_subdomain(1, box)
    assert d.owner_of_point((1.0, 0.5, 0.5)) == 1
    assert brute_force_owners(d, (1.0, 0.5, 0.5)) == [1]


def test_block_grid_upper_face_is_closed():
    d = make_block_grid(SLAB, 2, 1, 1)
    assert d.owner_of_point((2.0, 1.0, 1.0)) == 1
    assert d.owner_of_point((2.0 + 1e-12, 0.5, 0.5)) is None


def test_block_grid_rank_layout_and_neighbors():
    d = make_block_grid(AABB((0, 0, 0), (3, 2, 2)), 3, 2, 2)
    assert d.rank_of(1, 1, 1) == 1 + 3 * (1 + 2 * 1)
    assert d.coords_of(10) == (1, 1, 1)
    assert d.neighbor_ranks(0) == frozenset(range(12)) - {0, 2, 5, 8, 11}
    assert len(d.neighbor_ranks(d.rank_of(1, 0, 0))) == 11


def test_block_grid_errors():
    with pytest.raises(DomainError):
        make_block_grid(UNIT, 0, 1, 1)
    with pytest.raises(DomainError):
        make_block_grid(AABB((0, 0, 0), (1, 0, 1)), 1, 1, 1)
    with pytest.raises(DomainError):
        AABB((1, 0, 0), (0, 1, 1))


def test_shell_examples():
    d = make_spherical_shells((0, 0, 0), [1, 2, 3])
    assert [d.owner_of_point((r, 0, 0)) for r in (0.5, 1.5, 2.5)] == [0, 1, 2]
    assert d.owner_of_point((3.5, 0, 0)) is None
    assert d.owner_of_point((3.0, 0, 0)) is None
    assert d.owner_of_point((1.0, 0, 0)) == 1
    tiny = AABB.around((1.0, 0, 0), 0.05)
    assert [r for r in d.ranks() if d.intersects_subdomain(r, tiny)] == [0, 1]
    assert d.neighbor_ranks(0) == {1} and d.neighbor_ranks(1) == {0, 2}


def test_shell_errors():
    for radii in ([], [0, 1], [1, 1], [2, 1]):
        with pytest.raises(DomainError):
            make_spherical_shells((0, 0, 0), radii)


def test_single_domain():
    d = make_single_domain(UNIT)
    assert d.owner_of_point((0.3, 0.3, 0.3)) == 0
    assert d.owner_of_point((1.3, 0.3, 0.3)) is None
    assert d.intersects_subdomain(0, AABB.around((0.5, 0.5, 0.5), 0.1))
    assert d.neighbor_ranks(0) == frozenset()


def test_parse_partitioning():
    box = AABB((0, 0, 0), (3, 3, 3))
    assert parse_partitioning("single", box).num_ranks() == 1
    assert parse_partitioning("blockgrid(2, 2, 1)", box).num_ranks() == 4
    shells = parse_partitioning("shells(1,2,3)", box)
    assert shells.center == (1.5, 1.5, 1.5) and shells.radii == (1.0, 2.0, 3.0)
    for bad in ("octree(2)", "blockgrid(2,2)", "blockgrid(a,b,c)", "shells()", "shells(2,1)"):
        with pytest.raises(DomainError):
            parse_partitioning(bad, box)


DOMAINS = {
    "grid": make_block_grid(AABB((-1, 0, 0), (2, 1, 2)), 3, 2, 4),
    "shells": make_spherical_shells((0.5, 0.5, 1.0), [0.3, 0.6, 0.7, 1.2]),
    "single": make_single_domain(AABB((-1, 0, 0), (2, 1, 2))),
}


def _random_points(rng, n):
    pts = rng.uniform((-1, 0, 0), (2, 1, 2), size=(n, 3))
    # include points exactly on internal block faces
    pts[: n // 10, 0] = rng.choice([0.0, 1.0], size=n // 10)
    return pts


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_partition_property(name):
    d = DOMAINS[name]
    rng = np.random.default_rng(11)
    for p in _random_points(rng, 10_000).tolist():
        owners = brute_force_owners(d, p)
        owner = d.owner_of_point(p)
        assert len(owners) <= 1
        if owner is None:
            assert owners == []
        else:
            assert owners == [owner]
            assert d.intersects_subdomain(owner, AABB.point(p))


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_box_test_is_conservative(name):
    d = DOMAINS[name]
    rng = np.random.default_rng(5)
    for _ in range(60):
        c = rng.uniform((-1, 0, 0), (2, 1, 2))
        box = AABB.around(c, rng.uniform(0.01, 0.4))
        samples = rng.uniform(box.min, box.max, size=(1000, 3))
        hit = {d.owner_of_point(p) for p in samples.tolist()} - {None}
        for r in hit:
            assert d.intersects_subdomain(r, box), (r, box)


@pytest.mark.parametrize("name", ["grid", "shells"])
def test_neighbor_superset(name):
    d = DOMAINS[name]
    reach = 0.05
    rng = np.random.default_rng(9)
    for p in _random_points(rng, 3000).tolist():
        owner = d.owner_of_point(p)
        if owner is None:
            continue
        box = inflated_aabb(p, reach)
        for r in d.ranks():
            if r != owner and d.intersects_subdomain(r, box):
                assert r in d.neighbor_ranks(owner)


def test_shell_bracket_matches_sampling():
    d = DOMAINS["shells"]
    rng = np.random.default_rng(2)
    for _ in range(50):
        box = AABB.around(rng.uniform(0, 1, size=3), rng.uniform(0.01, 0.3))
        near, far = d.distance_bracket(box)
        dist = np.linalg.norm(rng.uniform(box.min, box.max, size=(500, 3)) - d.center, axis=1)
        assert near <= dist.min() + 1e-12 and dist.max() <= far + 1e-12
        corners = [math.dist(d.center, (x, y, z)) for x in (box.min[0], box.max[0])
                   for y in (box.min[1], box.max[1]) for z in (box.min[2], box.max[2])]
        assert far == pytest.approx(max(corners))


def test_invalid_rank():
    with pytest.raises(DomainError):
        DOMAINS["grid"].contains_point(99, (0, 0, 0))
