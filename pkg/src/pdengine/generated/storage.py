# Generated by pdengine codegen. Do not edit; regenerate from the schema.
"""Struct-of-arrays columns and default initialisation."""

import numpy as np

from pdengine.storage import StoreBase, _grown

SCHEMA_TEXT = """\
property position : vec3 = (0.0,0.0,0.0) sync ALWAYS
property linearVelocity : vec3 = (0.0,0.0,0.0) sync ALWAYS
property interactionRadius : real64 = 0.0 sync COPY
property invMass : real64 = 1.0 sync COPY
property force : vec3 = (0.0,0.0,0.0) sync NEVER
property oldForce : vec3 = (0.0,0.0,0.0) sync MIGRATION
"""

COLUMNS = (
    ("position", "_arr_position", "vec3"),
    ("linearVelocity", "_arr_linear_velocity", "vec3"),
    ("interactionRadius", "_arr_interaction_radius", "real64"),
    ("invMass", "_arr_inv_mass", "real64"),
    ("force", "_arr_force", "vec3"),
    ("oldForce", "_arr_old_force", "vec3"),
)


class Storage(StoreBase):
    def _allocate(self, capacity):
        """One zeroed column per property."""
        self._arr_position = np.zeros((capacity, 3), dtype=np.float64)
        self._arr_linear_velocity = np.zeros((capacity, 3), dtype=np.float64)
        self._arr_interaction_radius = np.zeros(capacity, dtype=np.float64)
        self._arr_inv_mass = np.zeros(capacity, dtype=np.float64)
        self._arr_force = np.zeros((capacity, 3), dtype=np.float64)
        self._arr_old_force = np.zeros((capacity, 3), dtype=np.float64)

    def _resize_properties(self, capacity):
        """Grow every column to ``capacity`` rows."""
        self._arr_position = _grown(self._arr_position, capacity)
        self._arr_linear_velocity = _grown(self._arr_linear_velocity, capacity)
        self._arr_interaction_radius = _grown(self._arr_interaction_radius, capacity)
        self._arr_inv_mass = _grown(self._arr_inv_mass, capacity)
        self._arr_force = _grown(self._arr_force, capacity)
        self._arr_old_force = _grown(self._arr_old_force, capacity)

    def _init_defaults(self, idx):
        """Schema defaults for a freshly created particle."""
        self._arr_position[idx] = (0.0,0.0,0.0)
        self._arr_linear_velocity[idx] = (0.0,0.0,0.0)
        self._arr_interaction_radius[idx] = 0.0
        self._arr_inv_mass[idx] = 1.0
        self._arr_force[idx] = (0.0,0.0,0.0)
        self._arr_old_force[idx] = (0.0,0.0,0.0)

    def _move(self, src, dst):
        """Copy row ``src`` over row ``dst`` (swap-remove)."""
        self._arr_position[dst] = self._arr_position[src]
        self._arr_linear_velocity[dst] = self._arr_linear_velocity[src]
        self._arr_interaction_radius[dst] = self._arr_interaction_radius[src]
        self._arr_inv_mass[dst] = self._arr_inv_mass[src]
        self._arr_force[dst] = self._arr_force[src]
        self._arr_old_force[dst] = self._arr_old_force[src]

    def reset_never(self, idx):
        """Restore NEVER-synchronised properties to their defaults."""
        self._check(idx)
        self._arr_force[idx] = (0.0,0.0,0.0)
