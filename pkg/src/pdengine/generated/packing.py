# Generated by pdengine codegen. Do not edit; regenerate from the schema.
"""Pack/unpack routines, one pair per sync context."""

import struct

from pdengine.storage import HEADER

_S_position = struct.Struct("<3d")
_S_linear_velocity = struct.Struct("<3d")
_S_interaction_radius = struct.Struct("<d")
_S_inv_mass = struct.Struct("<d")
_S_force = struct.Struct("<3d")
_S_old_force = struct.Struct("<3d")

PACK_ORDER = {
    "GHOST_CREATE": (
        "position",
        "linearVelocity",
        "interactionRadius",
        "invMass",
    ),
    "GHOST_UPDATE": (
        "position",
        "linearVelocity",
    ),
    "MIGRATION_TRANSFER": (
        "position",
        "linearVelocity",
        "interactionRadius",
        "invMass",
        "oldForce",
    ),
}


class Packing:
    def _pack_ghost_create(self, idx, buf, tally):
        buf.write(HEADER.pack(int(self._uid[idx]), int(self._owner[idx])))
        start = len(buf)
        buf.write(_S_position.pack(*self._arr_position[idx].tolist()))
        if tally is not None:
            tally["position"] += len(buf) - start
        start = len(buf)
        buf.write(_S_linear_velocity.pack(*self._arr_linear_velocity[idx].tolist()))
        if tally is not None:
            tally["linearVelocity"] += len(buf) - start
        start = len(buf)
        buf.write(_S_interaction_radius.pack(self._arr_interaction_radius[idx].item()))
        if tally is not None:
            tally["interactionRadius"] += len(buf) - start
        start = len(buf)
        buf.write(_S_inv_mass.pack(self._arr_inv_mass[idx].item()))
        if tally is not None:
            tally["invMass"] += len(buf) - start

    def _unpack_ghost_create(self, buf):
        uid, owner = buf.read_struct(HEADER)
        v_position = buf.read_struct(_S_position)
        v_linear_velocity = buf.read_struct(_S_linear_velocity)
        (v_interaction_radius,) = buf.read_struct(_S_interaction_radius)
        (v_inv_mass,) = buf.read_struct(_S_inv_mass)
        idx = self._acquire(uid, owner)
        self._arr_position[idx] = v_position
        self._arr_linear_velocity[idx] = v_linear_velocity
        self._arr_interaction_radius[idx] = v_interaction_radius
        self._arr_inv_mass[idx] = v_inv_mass
        return idx

    def _pack_ghost_update(self, idx, buf, tally):
        buf.write(HEADER.pack(int(self._uid[idx]), int(self._owner[idx])))
        start = len(buf)
        buf.write(_S_position.pack(*self._arr_position[idx].tolist()))
        if tally is not None:
            tally["position"] += len(buf) - start
        start = len(buf)
        buf.write(_S_linear_velocity.pack(*self._arr_linear_velocity[idx].tolist()))
        if tally is not None:
            tally["linearVelocity"] += len(buf) - start

    def _unpack_ghost_update(self, buf):
        uid, owner = buf.read_struct(HEADER)
        v_position = buf.read_struct(_S_position)
        v_linear_velocity = buf.read_struct(_S_linear_velocity)
        idx = self._require(uid)
        self._arr_position[idx] = v_position
        self._arr_linear_velocity[idx] = v_linear_velocity
        return idx

    def _pack_migration_transfer(self, idx, buf, tally):
        buf.write(HEADER.pack(int(self._uid[idx]), int(self._owner[idx])))
        start = len(buf)
        buf.write(_S_position.pack(*self._arr_position[idx].tolist()))
        if tally is not None:
            tally["position"] += len(buf) - start
        start = len(buf)
        buf.write(_S_linear_velocity.pack(*self._arr_linear_velocity[idx].tolist()))
        if tally is not None:
            tally["linearVelocity"] += len(buf) - start
        start = len(buf)
        buf.write(_S_interaction_radius.pack(self._arr_interaction_radius[idx].item()))
        if tally is not None:
            tally["interactionRadius"] += len(buf) - start
        start = len(buf)
        buf.write(_S_inv_mass.pack(self._arr_inv_mass[idx].item()))
        if tally is not None:
            tally["invMass"] += len(buf) - start
        start = len(buf)
        buf.write(_S_old_force.pack(*self._arr_old_force[idx].tolist()))
        if tally is not None:
            tally["oldForce"] += len(buf) - start

    def _unpack_migration_transfer(self, buf):
        uid, owner = buf.read_struct(HEADER)
        v_position = buf.read_struct(_S_position)
        v_linear_velocity = buf.read_struct(_S_linear_velocity)
        (v_interaction_radius,) = buf.read_struct(_S_interaction_radius)
        (v_inv_mass,) = buf.read_struct(_S_inv_mass)
        v_old_force = buf.read_struct(_S_old_force)
        idx = self._acquire(uid, owner)
        self._arr_position[idx] = v_position
        self._arr_linear_velocity[idx] = v_linear_velocity
        self._arr_interaction_radius[idx] = v_interaction_radius
        self._arr_inv_mass[idx] = v_inv_mass
        self._arr_old_force[idx] = v_old_force
        return idx
