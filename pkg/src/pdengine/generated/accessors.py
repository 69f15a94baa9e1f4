# Generated by pdengine codegen. Do not edit; regenerate from the schema.
"""Per-property get/set pairs; kernels reach particle data only through these."""


class Accessors:
    """Generated accessor mixin."""

    def get_position(self, idx):
        return self._arr_position[self._check(idx)].copy()

    def set_position(self, idx, value):
        self._arr_position[self._check(idx)] = value

    def get_linear_velocity(self, idx):
        return self._arr_linear_velocity[self._check(idx)].copy()

    def set_linear_velocity(self, idx, value):
        self._arr_linear_velocity[self._check(idx)] = value

    def get_interaction_radius(self, idx):
        return float(self._arr_interaction_radius[self._check(idx)])

    def set_interaction_radius(self, idx, value):
        self._arr_interaction_radius[self._check(idx)] = value

    def get_inv_mass(self, idx):
        return float(self._arr_inv_mass[self._check(idx)])

    def set_inv_mass(self, idx, value):
        self._arr_inv_mass[self._check(idx)] = value

    def get_force(self, idx):
        return self._arr_force[self._check(idx)].copy()

    def set_force(self, idx, value):
        self._arr_force[self._check(idx)] = value

    def get_old_force(self, idx):
        return self._arr_old_force[self._check(idx)].copy()

    def set_old_force(self, idx, value):
        self._arr_old_force[self._check(idx)] = value
