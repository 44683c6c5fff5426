"""Exterior trace states and penalty fluxes for every supported boundary
condition.

Each boundary kind supplies three maps evaluated pointwise at boundary face
quadrature nodes: an exterior conservative state for the inviscid interface
flux, an exterior entropy-variable trace for the gradient lift, and exterior
viscous-flux traces.  The mirror constructions make the semi-discrete viscous
entropy balance reduce to the per-condition boundary terms exactly.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BoundarySpecError
from . import physics

INVISCID_WALL = "inviscid_wall"
ADIABATIC_NOSLIP = "adiabatic_noslip"
ISOTHERMAL_NOSLIP = "isothermal_noslip"
SYMMETRY = "symmetry"
FREESTREAM = "freestream"
EXTRAPOLATION = "extrapolation"

KINDS = (INVISCID_WALL, ADIABATIC_NOSLIP, ISOTHERMAL_NOSLIP, SYMMETRY,
         FREESTREAM, EXTRAPOLATION)
WALL_KINDS = (INVISCID_WALL, ADIABATIC_NOSLIP, ISOTHERMAL_NOSLIP, SYMMETRY)


@dataclass
class BoundarySpec:
    """Per-tag boundary condition descriptor."""

    kind: str
    u_wall: tuple = (0.0, 0.0)
    T_wall: Optional[float] = None
    g: Optional[Callable] = None          # heat entropy flow g(x, y, t)
    freestream_state: Optional[np.ndarray] = None
    penalty_on: Optional[bool] = None     # None inherits the global setting

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BoundarySpecError(f"unknown boundary kind {self.kind!r}")
        if self.kind == ISOTHERMAL_NOSLIP:
            if self.T_wall is None or not (self.T_wall > 0.0):
                raise BoundarySpecError("isothermal wall requires T_wall > 0")
        if self.kind == FREESTREAM and self.freestream_state is None:
            raise BoundarySpecError("freestream requires a freestream_state")

    def heat_entropy_flow(self, x, y, t):
        if self.g is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.broadcast_to(np.asarray(self.g(x, y, t), dtype=float),
                               np.shape(x)).copy()


def inviscid_wall_state(u, n):
    """Mirror state: density, pressure, energy kept; normal velocity negated."""
    un = (u[..., 1] * n[..., 0] + u[..., 2] * n[..., 1]) / u[..., 0]
    out = u.copy()
    out[..., 1] = u[..., 1] - 2.0 * (u[..., 0] * un) * n[..., 0]
    out[..., 2] = u[..., 2] - 2.0 * (u[..., 0] * un) * n[..., 1]
    return out


def inviscid_exterior(spec, u, n, x, y, t, gas):
    """Exterior conservative state for the inviscid interface flux."""
    if spec.kind in WALL_KINDS:
        return inviscid_wall_state(u, n)
    if spec.kind == FREESTREAM:
        return np.broadcast_to(spec.freestream_state, u.shape).copy()
    if spec.kind == EXTRAPOLATION:
        return u.copy()
    raise BoundarySpecError(f"unknown boundary kind {spec.kind!r}")


def v_exterior(spec, v, n, gas):
    """Exterior entropy-variable trace for the viscous gradient lift."""
    v4 = v[..., 3]
    out = v.copy()
    if spec.kind in (ADIABATIC_NOSLIP, INVISCID_WALL):
        # inviscid_wall reuses the adiabatic mirror with its configured u_wall
        uw1, uw2 = spec.u_wall
        out[..., 1] = -2.0 * uw1 * v4 - v[..., 1]
        out[..., 2] = -2.0 * uw2 * v4 - v[..., 2]
    elif spec.kind == ISOTHERMAL_NOSLIP:
        cvT = gas.cv * spec.T_wall
        uw1, uw2 = spec.u_wall
        out[..., 1] = 2.0 * uw1 / cvT - v[..., 1]
        out[..., 2] = 2.0 * uw2 / cvT - v[..., 2]
        out[..., 3] = -2.0 / cvT - v4
    elif spec.kind == SYMMETRY:
        vn = v[..., 1] * n[..., 0] + v[..., 2] * n[..., 1]
        out[..., 1] = v[..., 1] - 2.0 * vn * n[..., 0]
        out[..., 2] = v[..., 2] - 2.0 * vn * n[..., 1]
    elif spec.kind == FREESTREAM:
        vf = physics.entropy_vars(spec.freestream_state[None, :], gas)[0]
        out[...] = vf
    elif spec.kind == EXTRAPOLATION:
        pass
    else:
        raise BoundarySpecError(f"unknown boundary kind {spec.kind!r}")
    return out


def sigma_exterior(spec, sigma1, sigma2, v, n, x, y, t, gas):
    """Exterior viscous-flux traces (per direction)."""
    out1 = sigma1.copy()
    out2 = sigma2.copy()
    if spec.kind in (ADIABATIC_NOSLIP, INVISCID_WALL):
        uw1, uw2 = spec.u_wall
        g = spec.heat_entropy_flow(x, y, t)
        v4 = v[..., 3]
        for out, sig, ni in ((out1, sigma1, n[..., 0]), (out2, sigma2, n[..., 1])):
            out[..., 3] = 2.0 * (uw1 * sig[..., 1] + uw2 * sig[..., 2]
                                 + gas.cv * g * ni / v4) - sig[..., 3]
    elif spec.kind == SYMMETRY:
        n1, n2 = n[..., 0], n[..., 1]
        sn1 = sigma1[..., 1] * n1 + sigma1[..., 2] * n2   # normal stress, direction 1
        sn2 = sigma2[..., 1] * n1 + sigma2[..., 2] * n2
        out1[..., 1] = 2.0 * n1 * sn1 - sigma1[..., 1]
        out1[..., 2] = 2.0 * n2 * sn1 - sigma1[..., 2]
        out2[..., 1] = 2.0 * n1 * sn2 - sigma2[..., 1]
        out2[..., 2] = 2.0 * n2 * sn2 - sigma2[..., 2]
        out1[..., 3] = -sigma1[..., 3]
        out2[..., 3] = -sigma2[..., 3]
    elif spec.kind in (ISOTHERMAL_NOSLIP, FREESTREAM, EXTRAPOLATION):
        pass
    else:
        raise BoundarySpecError(f"unknown boundary kind {spec.kind!r}")
    return out1, out2


def boundary_penalty_flux(v, v_ext, tau):
    """Boundary penalty contribution to the viscous divergence equation.

    Rows act on the jump [[v]] = v+ - v so that the entropy contribution
    <penalty, v> equals -(tau/2)([[v2]]^2 + [[v3]]^2 + [[v4]]^2) <= 0
    pointwise (tau = -1/(Re*v4) > 0 uses the interior v4).
    """
    jump = v_ext - v
    v4 = v[..., 3]
    avg = 0.5 * (v_ext + v)
    out = np.zeros_like(v)
    out[..., 1] = tau * jump[..., 1]
    out[..., 2] = tau * jump[..., 2]
    out[..., 3] = -tau * (avg[..., 1] * jump[..., 1] + avg[..., 2] * jump[..., 2]
                          + 0.5 * jump[..., 3] ** 2) / v4
    return out


def interior_penalty_flux(v, v_ext, tau):
    """Interface penalty: tau * diag(0, I3) acting on [[v]], dissipative when
    accumulated over both sides of each face."""
    jump = v_ext - v
    out = np.zeros_like(v)
    out[..., 1:] = tau[..., None] * jump[..., 1:]
    return out


def wall_penalty_tau(v, Re):
    """tau = -1/(Re * v4) evaluated with the interior trace."""
    return -1.0 / (Re * v[..., 3])


@dataclass
class BoundaryData:
    """Precomputed per-tag arrays for applying conditions at face points."""

    spec: BoundarySpec
    idx: np.ndarray          # flat indices into (K*Nfq) face-point arrays
    n: np.ndarray            # (npts, 2) outward unit normals
    x: np.ndarray            # (npts,)
    y: np.ndarray
    wJf: np.ndarray          # (npts,) face quadrature weight * face Jacobian
    elems: np.ndarray = field(default=None)  # owning element per point
