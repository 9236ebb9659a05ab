"""Physical parameters of the servicer satellite.

Bodies are indexed 0..6: 0 the cuboid base, 1..3 the manipulator links,
4..6 the reaction wheels.  Axis convention: x along the base length l_b,
y along the width w_b, z along the height h_b.  The arm is mounted on the
+x face of the base at [l_b/2, 0, 0] and moves in the xy plane.

Derived inertias use uniform solid-cylinder formulas: each link is a
cylinder of radius rad_i and length L_i with its axis along the link;
each wheel is a cylinder of radius r_rw2 and height h_rw spinning about
one base principal axis, wheel k offset along axis k by (r_rw_x, r_rw_y,
r_rw_z) = (w_b/8, l_b/8, h_b/8).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


def _cuboid_inertia(m, lx, ly, lz):
    return (m / 12.0) * np.diag([ly * ly + lz * lz, lx * lx + lz * lz, lx * lx + ly * ly])


def _cylinder_inertia_principal(m, radius, length):
    """(axial, transverse) moments of a solid cylinder about its CoM."""
    axial = 0.5 * m * radius * radius
    trans = m * (3.0 * radius * radius + length * length) / 12.0
    return axial, trans


@dataclass(frozen=True)
class SatelliteParams:
    """Masses, geometry, and the base inertia matrix (all SI units)."""

    m_b: float = 150.0
    h_b: float = 1.9
    l_b: float = 2.45
    w_b: float = 1.41
    m_links: tuple = (1.0, 3.0, 2.0)
    rad_links: tuple = (0.2, 0.3, 0.4)
    lengths: tuple = (0.2, 0.8, 0.5)
    m_rw: float = 5.0
    r_rw1: float = 0.337 / 3.0
    r_rw2: float = 0.337 / 2.0
    h_rw: float = 0.1
    # base inertia; None means "recompute from the cuboid geometry"
    i_b: np.ndarray = None

    def __post_init__(self):
        if self.i_b is None:
            object.__setattr__(self, "i_b", _cuboid_inertia(self.m_b, self.l_b, self.w_b, self.h_b))
        ib = np.asarray(self.i_b, dtype=float)
        object.__setattr__(self, "i_b", ib)
        self.validate()

    def validate(self):
        if self.m_b <= 0 or self.m_rw <= 0 or any(m <= 0 for m in self.m_links):
            raise ValueError("all masses must be strictly positive")
        if any(v <= 0 for v in (self.h_b, self.l_b, self.w_b, self.h_rw, self.r_rw1, self.r_rw2)):
            raise ValueError("all base/wheel dimensions must be strictly positive")
        if any(l <= 0 for l in self.lengths) or any(r <= 0 for r in self.rad_links):
            raise ValueError("all link lengths and radii must be strictly positive")
        if not np.allclose(self.i_b, self.i_b.T, atol=1e-12):
            raise ValueError("I_b must be symmetric")
        if np.any(np.linalg.eigvalsh(self.i_b) <= 0.0):
            raise ValueError("I_b must be positive definite")

    # -- derived quantities (cached on first use) ---------------------------

    @property
    def arm_mount(self):
        return np.array([self.l_b / 2.0, 0.0, 0.0])

    @property
    def masses(self):
        """Masses of bodies 0..6."""
        return np.array([self.m_b, *self.m_links, self.m_rw, self.m_rw, self.m_rw])

    @property
    def m_total(self):
        return float(np.sum(self.masses))

    @property
    def wheel_coms(self):
        """Wheel CoM positions in the base frame, wheel k on axis k."""
        off = np.array([self.w_b / 8.0, self.l_b / 8.0, self.h_b / 8.0])
        return np.diag(off)

    @property
    def wheel_inertias(self):
        """(3,3,3) inertia matrices of wheels x,y,z in the base frame."""
        axial, trans = _cylinder_inertia_principal(self.m_rw, self.r_rw2, self.h_rw)
        out = np.empty((3, 3, 3))
        for k in range(3):
            d = np.full(3, trans)
            d[k] = axial
            out[k] = np.diag(d)
        return out

    @property
    def wheel_spin_inertia(self):
        axial, _ = _cylinder_inertia_principal(self.m_rw, self.r_rw2, self.h_rw)
        return axial

    @property
    def link_inertia_principal(self):
        """(3,2) array of (axial, transverse) moments per link."""
        out = np.empty((3, 2))
        for i in range(3):
            out[i] = _cylinder_inertia_principal(self.m_links[i], self.rad_links[i], self.lengths[i])
        return out

    def with_values(self, **kwargs):
        return replace(self, **kwargs)


NOMINAL = SatelliteParams()
