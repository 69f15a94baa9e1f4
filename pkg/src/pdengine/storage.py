"""Runtime half of the particle container.

Property columns, accessors and pack/unpack routines are generated from a
schema (see :mod:`pdengine.codegen`); this module holds what does not depend on
the schema: per-particle metadata, the uid index, swap-remove bookkeeping and
the wire buffer.
"""

from __future__ import annotations

import struct
from typing import Iterator

import numpy as np

from .schema import ParticleSchema, SyncContext

__all__ = [
    "StoreBase",
    "WireBuffer",
    "WireError",
    "DuplicateUidError",
    "UnknownUidError",
    "HEADER",
    "INVALID_RANK",
]

# uid (uint64) + owner rank (int32), little-endian
HEADER = struct.Struct("<Qi")
INVALID_RANK = -1


class WireError(ValueError):
    """Malformed or truncated wire data."""


class DuplicateUidError(KeyError):
    pass


class UnknownUidError(KeyError):
    pass


class WireBuffer:
    """Append-only byte buffer with a read cursor."""

    __slots__ = ("data", "pos")

    def __init__(self, data: bytes | bytearray = b""):
        self.data = bytearray(data)
        self.pos = 0

    def __len__(self) -> int:
        return len(self.data)

    def __bytes__(self) -> bytes:
        return bytes(self.data)

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos

    def write(self, chunk: bytes) -> None:
        self.data += chunk

    def read(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise WireError(
                f"truncated buffer: need {n} bytes at offset {self.pos}, have {self.remaining}"
            )
        chunk = bytes(self.data[self.pos:self.pos + n])
        self.pos += n
        return chunk

    def read_struct(self, st: struct.Struct) -> tuple:
        if self.pos + st.size > len(self.data):
            raise WireError(
                f"truncated buffer: need {st.size} bytes at offset {self.pos}, "
                f"have {self.remaining}"
            )
        values = st.unpack_from(self.data, self.pos)
        self.pos += st.size
        return values


def _grown(arr: np.ndarray, capacity: int) -> np.ndarray:
    out = np.zeros((capacity,) + arr.shape[1:], dtype=arr.dtype)
    out[: len(arr)] = arr[: min(len(arr), capacity)]
    return out


class StoreBase:
    """Struct-of-arrays particle store for one rank.

    Subclasses produced by codegen add one column per schema property together
    with ``get_<prop>``/``set_<prop>`` accessors and per-context pack/unpack.
    """

    schema: ParticleSchema

    def __init__(self, rank: int = 0, capacity: int = 16):
        if rank < 0:
            raise ValueError(f"invalid rank {rank}")
        self.rank = rank
        self._n = 0
        self._cap = max(int(capacity), 1)
        self._uid = np.zeros(self._cap, dtype=np.uint64)
        self._owner = np.zeros(self._cap, dtype=np.int32)
        self._ghost = np.zeros(self._cap, dtype=bool)
        self._holders: list[set[int]] = []
        self._uid_index: dict[int, int] = {}
        self._allocate(self._cap)

    # -- hooks filled in by generated code ---------------------------------
    def _allocate(self, capacity: int) -> None:
        raise NotImplementedError

    def _resize_properties(self, capacity: int) -> None:
        raise NotImplementedError

    def _init_defaults(self, idx: int) -> None:
        raise NotImplementedError

    def _move(self, src: int, dst: int) -> None:
        raise NotImplementedError

    # -- size and lookup ------------------------------------------------------
    def __len__(self) -> int:
        return self._n

    def size(self) -> int:
        return self._n

    def _check(self, idx: int) -> int:
        if not 0 <= idx < self._n:
            raise IndexError(f"particle index {idx} out of range for store of size {self._n}")
        return idx

    def find(self, uid: int) -> int | None:
        return self._uid_index.get(int(uid))

    def index_of(self, uid: int) -> int:
        try:
            return self._uid_index[int(uid)]
        except KeyError:
            raise UnknownUidError(f"uid {uid} not present on rank {self.rank}") from None

    def __contains__(self, uid: int) -> bool:
        return int(uid) in self._uid_index

    def uids(self) -> list[int]:
        return self._uid[: self._n].tolist()

    def owned_indices(self) -> list[int]:
        return np.flatnonzero(~self._ghost[: self._n]).tolist()

    def ghost_indices(self) -> list[int]:
        return np.flatnonzero(self._ghost[: self._n]).tolist()

    def array(self, name: str) -> np.ndarray:
        """Live view of the column for property ``name``."""
        prop = self.schema.get(name)
        if prop is None:
            raise KeyError(name)
        return getattr(self, "_arr_" + prop.ident)[: self._n]

    # -- metadata accessors ---------------------------------------------------
    def get_uid(self, idx: int) -> int:
        return int(self._uid[self._check(idx)])

    def get_owner(self, idx: int) -> int:
        return int(self._owner[self._check(idx)])

    def is_ghost(self, idx: int) -> bool:
        return bool(self._ghost[self._check(idx)])

    def ghost_holders(self, idx: int) -> set[int]:
        """Mutable set of ranks holding a ghost of owned particle ``idx``."""
        return self._holders[self._check(idx)]

    def make_owned(self, idx: int, holders=()) -> None:
        self._check(idx)
        self._owner[idx] = self.rank
        self._ghost[idx] = False
        self._holders[idx] = set(holders)

    def make_ghost(self, idx: int, owner: int) -> None:
        self._check(idx)
        if owner == self.rank:
            raise ValueError("a ghost cannot be owned by the local rank")
        self._owner[idx] = owner
        self._ghost[idx] = True
        self._holders[idx] = set()

    def set_owner(self, idx: int, owner: int) -> None:
        """Rewrite the owner of a ghost."""
        if not self.is_ghost(idx):
            raise ValueError("set_owner applies to ghosts only")
        if owner == self.rank:
            raise ValueError("a ghost cannot be owned by the local rank")
        self._owner[idx] = owner

    # -- create / remove ------------------------------------------------------
    def create_particle(self, uid: int, owner: int | None = None, ghost: bool = False) -> int:
        uid = int(uid)
        if owner is None:
            owner = self.rank
        if uid in self._uid_index:
            raise DuplicateUidError(f"uid {uid} already present on rank {self.rank}")
        if ghost == (owner == self.rank):
            raise ValueError(
                f"rank {self.rank}: owner {owner} inconsistent with ghost={ghost}"
            )
        if self._n == self._cap:
            self._reserve(2 * self._cap)
        idx = self._n
        self._n += 1
        self._uid[idx] = uid
        self._owner[idx] = owner
        self._ghost[idx] = ghost
        self._holders.append(set())
        self._uid_index[uid] = idx
        self._init_defaults(idx)
        return idx

    def _reserve(self, capacity: int) -> None:
        self._uid = _grown(self._uid, capacity)
        self._owner = _grown(self._owner, capacity)
        self._ghost = _grown(self._ghost, capacity)
        self._resize_properties(capacity)
        self._cap = capacity

    def remove_particle(self, idx: int) -> None:
        """Remove by swapping the last particle into ``idx``."""
        self._check(idx)
        last = self._n - 1
        del self._uid_index[int(self._uid[idx])]
        if idx != last:
            self._uid[idx] = self._uid[last]
            self._owner[idx] = self._owner[last]
            self._ghost[idx] = self._ghost[last]
            self._holders[idx] = self._holders[last]
            self._move(last, idx)
            self._uid_index[int(self._uid[idx])] = idx
        self._holders.pop()
        self._n = last

    def remove_uid(self, uid: int) -> None:
        self.remove_particle(self.index_of(uid))

    def clear(self) -> None:
        while self._n:
            self.remove_particle(self._n - 1)

    # -- serialization --------------------------------------------------------
    def pack(self, idx: int, ctx: SyncContext, buf: WireBuffer, tally=None) -> None:
        """Append header and the ``ctx`` properties of particle ``idx`` to ``buf``.

        ``tally``, if given, is a mapping incremented by the bytes written for
        each property name.
        """
        self._check(idx)
        getattr(self, "_pack_" + ctx.value.lower())(idx, buf, tally)

    def unpack_apply(self, ctx: SyncContext, buf: WireBuffer) -> int:
        """Apply one packed record from ``buf``; returns the local index."""
        return getattr(self, "_unpack_" + ctx.value.lower())(buf)

    def _acquire(self, uid: int, owner: int) -> int:
        # used by generated unpack code for GHOST_CREATE and MIGRATION_TRANSFER
        idx = self._uid_index.get(uid)
        if idx is not None:
            # the sender is authoritative for ownership
            if owner != self.rank:
                self._owner[idx] = owner
                if not self._ghost[idx]:
                    self._ghost[idx] = True
                    self._holders[idx] = set()
            elif self._ghost[idx]:
                self.make_owned(idx)
            return idx
        if owner == self.rank:
            return self.create_particle(uid, owner, ghost=False)
        return self.create_particle(uid, owner, ghost=True)

    def _require(self, uid: int) -> int:
        idx = self._uid_index.get(uid)
        if idx is None:
            raise UnknownUidError(f"update for unknown uid {uid} on rank {self.rank}")
        return idx

    # -- diagnostics ----------------------------------------------------------
    def check_invariants(self) -> list[str]:
        problems = []
        n = self._n
        if len(self._holders) != n:
            problems.append("holder list length mismatch")
        for prop in self.schema:
            arr = getattr(self, "_arr_" + prop.ident)
            if len(arr) != self._cap:
                problems.append(f"column {prop.name} has wrong capacity")
        if len(self._uid_index) != n:
            problems.append("uid index size mismatch")
        for i in range(n):
            uid = int(self._uid[i])
            if self._uid_index.get(uid) != i:
                problems.append(f"uid index wrong for uid {uid}")
            owner, ghost = int(self._owner[i]), bool(self._ghost[i])
            if ghost == (owner == self.rank):
                problems.append(f"uid {uid}: owner {owner} vs ghost={ghost}")
            if ghost and self._holders[i]:
                problems.append(f"ghost uid {uid} has ghost holders")
        return problems

    def iter_records(self) -> Iterator[dict]:
        """Per-particle dicts of metadata and property values (debug output)."""
        for i in range(self._n):
            rec = {"uid": self.get_uid(i), "owner": self.get_owner(i), "ghost": self.is_ghost(i)}
            for prop in self.schema:
                rec[prop.name] = getattr(self, "get_" + prop.ident)(i)
            yield rec
