"""Owner-driven ghost synchronization and ownership migration.

Each superstep every rank runs :func:`send_phase` over its owned particles,
the transport exchanges, then every rank runs :func:`receive_phase`. The only
questions asked of the partitioning go through :class:`DomainDecomposition`,
so the protocol runs unchanged on any implementation of it.
"""

from __future__ import annotations

import enum
import logging
import struct
from collections import Counter, defaultdict
from typing import Sequence

from .domain import AABB, DomainDecomposition
from .schema import SyncContext, SyncMode
from .storage import StoreBase, UnknownUidError, WireBuffer, WireError
from .transport import Transport

__all__ = [
    "SyncMessageKind",
    "ProtocolError",
    "send_phase",
    "receive_phase",
    "sync_next_neighbors",
    "synchronize",
    "global_consistency_check",
    "inflated_box",
]

logger = logging.getLogger(__name__)

_UID = struct.Struct("<Q")
_COUNT = struct.Struct("<I")
_RANK = struct.Struct("<i")
_OWNER_CHANGED = struct.Struct("<Qi")


class SyncMessageKind(enum.IntEnum):
    GHOST_CREATE = 1
    GHOST_UPDATE = 2
    GHOST_REMOVE = 3
    MIGRATE = 4
    OWNER_CHANGED = 5


class ProtocolError(RuntimeError):
    """A message that cannot be applied to the receiving store."""


def make_transport(num_ranks: int) -> Transport:
    return Transport(num_ranks, kinds=SyncMessageKind)


def inflated_box(position, radius: float) -> AABB:
    x, y, z = position
    return AABB((x - radius, y - radius, z - radius), (x + radius, y + radius, z + radius))


def _payload(store: StoreBase, idx: int, ctx: SyncContext, tally: Counter,
             copies: int = 1) -> WireBuffer:
    # per-property bytes are measured once and charged for every copy sent
    buf = WireBuffer()
    local: Counter = Counter()
    store.pack(idx, ctx, buf, local)
    for name, n in local.items():
        tally[name] += n * copies
    return buf


def send_phase(store: StoreBase, domain: DomainDecomposition, transport: Transport,
               margin: float = 0.0) -> None:
    """Queue this rank's ghost and migration traffic for the coming exchange.

    ``margin`` widens every inflated box beyond the particle's own
    interaction radius; setting it to the largest radius in the system makes
    every contact partner of an owned particle locally visible.
    """
    rank = store.rank
    neighbors = sorted(domain.neighbor_ranks(rank))
    tally: Counter = Counter()
    send = transport.send
    K = SyncMessageKind
    demote: list[tuple[int, int]] = []
    drop: list[int] = []

    for idx in store.owned_indices():
        uid = store.get_uid(idx)
        pos = store.get_position(idx).tolist()
        box = inflated_box(pos, store.get_interaction_radius(idx) + margin)
        holders = store.ghost_holders(idx)

        new_owner = None
        if not domain.contains_point(rank, pos):
            new_owner = domain.owner_of_point(pos)
            if new_owner is None:
                logger.warning("rank %d: particle %d left the global domain at %s; deleted",
                               rank, uid, pos)
                for r in sorted(holders):
                    send(rank, r, K.GHOST_REMOVE, _UID.pack(uid))
                drop.append(uid)
                continue

        targets = {r for r in neighbors if domain.intersects_subdomain(r, box)}
        stale = holders
        if new_owner is not None:
            # the new owner gets full state via MIGRATE; no ghost traffic for it
            targets.discard(new_owner)
            stale = holders - {new_owner}
        created = sorted(targets - holders)
        updated = sorted(targets & holders)
        removed = sorted(stale - targets)
        if created:
            data = bytes(_payload(store, idx, SyncContext.GHOST_CREATE, tally, len(created)))
            for r in created:
                send(rank, r, K.GHOST_CREATE, data)
        if updated:
            data = bytes(_payload(store, idx, SyncContext.GHOST_UPDATE, tally, len(updated)))
            for r in updated:
                send(rank, r, K.GHOST_UPDATE, data)
        for r in removed:
            send(rank, r, K.GHOST_REMOVE, _UID.pack(uid))
        holders.clear()
        holders.update(targets)

        if new_owner is None:
            continue
        keep_ghost = domain.intersects_subdomain(rank, box)
        moved = (holders | ({rank} if keep_ghost else set())) - {new_owner}
        buf = _payload(store, idx, SyncContext.MIGRATION_TRANSFER, tally)
        buf.write(_COUNT.pack(len(moved)))
        for r in sorted(moved):
            buf.write(_RANK.pack(r))
        send(rank, new_owner, K.MIGRATE, bytes(buf))
        for r in sorted(holders - {new_owner}):
            send(rank, r, K.OWNER_CHANGED, _OWNER_CHANGED.pack(uid, new_owner))
        if keep_ghost:
            demote.append((uid, new_owner))
        else:
            drop.append(uid)

    for uid, owner in demote:
        store.make_ghost(store.index_of(uid), owner)
    for uid in drop:
        store.remove_uid(uid)
    if tally:
        transport.stats.add_property_bytes(tally)


def _expect_consumed(buf: WireBuffer, kind: SyncMessageKind) -> None:
    if buf.remaining:
        raise WireError(f"{kind.name}: {buf.remaining} trailing bytes")


def receive_phase(store: StoreBase, transport: Transport) -> None:
    """Apply delivered messages; MIGRATEs go last so promotions see fresh ghosts."""
    rank = store.rank
    K = SyncMessageKind
    migrations = []
    for msg in transport.recv(rank):
        kind = K(msg.kind)
        buf = WireBuffer(msg.payload)
        if kind is K.MIGRATE:
            migrations.append(buf)
            continue
        if kind is K.GHOST_CREATE:
            store.unpack_apply(SyncContext.GHOST_CREATE, buf)
        elif kind is K.GHOST_UPDATE:
            try:
                store.unpack_apply(SyncContext.GHOST_UPDATE, buf)
            except UnknownUidError as exc:
                raise ProtocolError(f"rank {rank}: {exc}") from None
        elif kind is K.GHOST_REMOVE:
            (uid,) = buf.read_struct(_UID)
            idx = store.find(uid)
            if idx is None:
                raise ProtocolError(f"rank {rank}: GHOST_REMOVE for unknown uid {uid}")
            if not store.is_ghost(idx):
                raise ProtocolError(f"rank {rank}: GHOST_REMOVE for owned uid {uid}")
            store.remove_particle(idx)
        elif kind is K.OWNER_CHANGED:
            uid, owner = buf.read_struct(_OWNER_CHANGED)
            idx = store.find(uid)
            if idx is None or not store.is_ghost(idx):
                raise ProtocolError(f"rank {rank}: OWNER_CHANGED for non-ghost uid {uid}")
            store.set_owner(idx, owner)
        _expect_consumed(buf, kind)

    for buf in migrations:
        idx = store.unpack_apply(SyncContext.MIGRATION_TRANSFER, buf)
        (count,) = buf.read_struct(_COUNT)
        holders = {buf.read_struct(_RANK)[0] for _ in range(count)}
        _expect_consumed(buf, K.MIGRATE)
        holders.discard(rank)
        store.make_owned(idx, holders)
        store.reset_never(idx)


def sync_next_neighbors(stores: Sequence[StoreBase], domain: DomainDecomposition,
                        transport: Transport, margin: float = 0.0, pool=None) -> None:
    """One full superstep of ghost synchronization over all ranks.

    With ``pool`` (a ``concurrent.futures`` executor) the per-rank phases run
    concurrently; the exchange in between is the barrier.
    """
    if pool is None:
        for store in stores:
            send_phase(store, domain, transport, margin)
        transport.exchange()
        for store in stores:
            receive_phase(store, transport)
        return
    list(pool.map(lambda s: send_phase(s, domain, transport, margin), stores))
    transport.exchange()
    list(pool.map(lambda s: receive_phase(s, transport), stores))


synchronize = sync_next_neighbors


def global_consistency_check(stores: Sequence[StoreBase], domain: DomainDecomposition,
                             margin: float = 0.0) -> list[str]:
    """List every violation of ownership and ghost coherence across ranks.

    Meant to be called right after a synchronization, when ghosts should be
    exact copies of their owners' ALWAYS properties.
    """
    violations: list[str] = []
    owned: dict[int, list[tuple[StoreBase, int]]] = defaultdict(list)
    ghosts: dict[int, dict[int, tuple[StoreBase, int]]] = defaultdict(dict)
    for store in stores:
        for problem in store.check_invariants():
            violations.append(f"rank {store.rank}: {problem}")
        for i in range(len(store)):
            uid = store.get_uid(i)
            if store.is_ghost(i):
                ghosts[uid][store.rank] = (store, i)
            else:
                owned[uid].append((store, i))

    for uid, copies in sorted(owned.items()):
        if len(copies) > 1:
            ranks = sorted(s.rank for s, _ in copies)
            violations.append(f"uid {uid} owned by several ranks {ranks}")
    for uid in sorted(set(ghosts) - set(owned)):
        violations.append(f"uid {uid} has ghosts on {sorted(ghosts[uid])} but no owner")

    for uid, copies in sorted(owned.items()):
        store, i = copies[0]
        owner = store.rank
        always = [p for p in store.schema if p.mode is SyncMode.ALWAYS]
        holders = store.ghost_holders(i)
        present = ghosts.get(uid, {})
        if holders != set(present):
            violations.append(
                f"uid {uid}: owner {owner} lists holders {sorted(holders)}, "
                f"ghosts exist on {sorted(present)}"
            )
        for r, (gstore, gi) in sorted(present.items()):
            bad = []
            if gstore.get_owner(gi) != owner:
                bad.append(f"owner field {gstore.get_owner(gi)}")
            for p in always:
                mine = gstore.array(p.name)[gi].tobytes()
                theirs = store.array(p.name)[i].tobytes()
                if mine != theirs:
                    bad.append(p.name)
            if bad:
                violations.append(f"uid {uid}: ghost on rank {r} differs from owner {owner}: "
                                  + ", ".join(bad))
        box = inflated_box(store.get_position(i).tolist(),
                           store.get_interaction_radius(i) + margin)
        for r in sorted(domain.neighbor_ranks(owner)):
            if r not in present and domain.intersects_subdomain(r, box):
                violations.append(f"uid {uid}: rank {r} overlaps but holds no ghost")
    return violations
