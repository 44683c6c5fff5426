"""LDG discretization of the symmetrized viscous terms: entropy-variable
gradients Theta, viscous fluxes sigma, the viscous divergence g_visc, and
penalty dissipation.

The three phases share the projected entropy variables from the inviscid
entropy projection; all inner products are quadrature-evaluated so the
semi-discrete entropy identities hold to roundoff.
"""

from dataclasses import dataclass, field

import numpy as np

from . import boundary as bc
from . import physics


@dataclass
class ViscousWork:
    """Gradient/flux arrays and face traces from one viscous evaluation."""

    theta: np.ndarray            # (2, K, Np, 4) modal coefficients
    v_face: np.ndarray           # (K, Nfq, 4) interior trace of projected v
    v_ext: np.ndarray            # (K, Nfq, 4) exterior trace (neighbor or BC)
    sigma: np.ndarray = None     # (2, K, Np, 4)
    sigma_face: np.ndarray = None    # (2, K, Nfq, 4)
    sigma_ext: np.ndarray = None     # (2, K, Nfq, 4)
    ktt: float = 0.0             # sum_k sum_ij (K_ij Theta_j, Theta_i)
    gv: float = 0.0              # sum_k (g_visc, v)
    boundary_terms: dict = field(default_factory=dict)


def _lift(face_vals, ops):
    return np.einsum("kfc,fp->kpc", face_vals, ops.Vf, optimize=True)


def _grad_contraction(coeffs, ops, G, row):
    """sum_j G[row, j] Qhat_j applied per element."""
    a1 = np.einsum("nm,kmc->knc", ops.Qhat1, coeffs, optimize=True)
    a2 = np.einsum("nm,kmc->knc", ops.Qhat2, coeffs, optimize=True)
    return G[:, row, 0, None, None] * a1 + G[:, row, 1, None, None] * a2


def _grad_transpose_contraction(coeffs, ops, G, row):
    a1 = np.einsum("mn,kmc->knc", ops.Qhat1, coeffs, optimize=True)
    a2 = np.einsum("mn,kmc->knc", ops.Qhat2, coeffs, optimize=True)
    return G[:, row, 0, None, None] * a1 + G[:, row, 1, None, None] * a2


def compute_theta(v_coeffs, v_face, v_ext, plan, ops, mesh):
    """DG gradients of the entropy variables.

    (Theta_i, w) = (dv/dx_i, w) + (1/2) <[[v]] n_i, w> per element.
    """
    jump = v_ext - v_face
    K = v_coeffs.shape[0]
    theta = np.empty((2, K, ops.Np, 4))
    for i, nrm in enumerate((plan.n1, plan.n2)):
        vol = _grad_contraction(v_coeffs, ops, mesh.G, i)
        lift = _lift(0.5 * plan.wJf[..., None] * nrm[..., None] * jump, ops)
        theta[i] = np.einsum("pn,knc->kpc", ops.Minv, vol + lift,
                             optimize=True) / mesh.J[:, None, None]
    return theta


def compute_sigma(theta, v_coeffs, ops, mesh, gas):
    """sigma_i = L2 projection of sum_j K_ij(v) Theta_j; also returns the
    quadrature value of the viscous dissipation sum_ij (K_ij Theta_j, Theta_i)."""
    v_q = np.einsum("qn,knc->kqc", ops.Vq, v_coeffs, optimize=True)
    K11, K12, K21, K22 = physics.viscous_K(v_q, gas, check=True)
    th_q = np.einsum("qn,iknc->ikqc", ops.Vq, theta, optimize=True)
    kth1 = (np.einsum("kqab,kqb->kqa", K11, th_q[0], optimize=True)
            + np.einsum("kqab,kqb->kqa", K12, th_q[1], optimize=True))
    kth2 = (np.einsum("kqab,kqb->kqa", K21, th_q[0], optimize=True)
            + np.einsum("kqab,kqb->kqa", K22, th_q[1], optimize=True))
    sigma = np.stack([
        np.einsum("pq,kqc->kpc", ops.Pq, kth1, optimize=True),
        np.einsum("pq,kqc->kpc", ops.Pq, kth2, optimize=True),
    ])
    ktt = float(np.einsum("k,q,kqc,kqc->", mesh.J, ops.wq, th_q[0], kth1, optimize=True)
                + np.einsum("k,q,kqc,kqc->", mesh.J, ops.wq, th_q[1], kth2, optimize=True))
    return sigma, ktt


def penalty_pointwise(v_face, v_ext, plan, Re, interior_on, boundary_specs,
                      global_boundary_on):
    """Per-face-point penalty flux entering the viscous divergence equation.

    Interior faces use tau * diag(0, I3) [[v]] with tau = -1/(Re * avg(v4));
    boundary faces use the entropy-dissipative wall penalty matrix.
    """
    out = np.zeros_like(v_face)
    if interior_on:
        tau = -2.0 / (Re * (v_face[..., 3] + v_ext[..., 3]))
        pen = bc.interior_penalty_flux(v_face, v_ext, tau)
        out[plan.is_interior] = pen[plan.is_interior]
    flat_v = v_face.reshape(-1, 4)
    flat_ext = v_ext.reshape(-1, 4)
    flat_out = out.reshape(-1, 4)
    for tag, bdata in plan.bdata.items():
        spec = boundary_specs[tag]
        on = spec.penalty_on if spec.penalty_on is not None else global_boundary_on
        if not on:
            continue
        vi = flat_v[bdata.idx]
        ve = flat_ext[bdata.idx]
        tau = bc.wall_penalty_tau(vi, Re)
        flat_out[bdata.idx] = bc.boundary_penalty_flux(vi, ve, tau)
    return out


def viscous_rhs(work, plan, ops, mesh, penalty_pt):
    """Assemble g_visc coefficients and the entropy contribution (g_visc, v).

    (g_visc, w) = sum_i [-(sigma_i, dw/dx_i) + <{sigma_i} n_i, w>]
                  + <penalty, w>.
    """
    sig_avg1 = 0.5 * (work.sigma_ext[0] + work.sigma_face[0])
    sig_avg2 = 0.5 * (work.sigma_ext[1] + work.sigma_face[1])
    face_pt = (plan.n1[..., None] * sig_avg1 + plan.n2[..., None] * sig_avg2
               + penalty_pt)
    pre = _lift(plan.wJf[..., None] * face_pt, ops)
    pre -= _grad_transpose_contraction(work.sigma[0], ops, mesh.G, 0)
    pre -= _grad_transpose_contraction(work.sigma[1], ops, mesh.G, 1)
    return pre


def apply_mass_inverse(pre, ops, J):
    return np.einsum("pn,knc->kpc", ops.Minv, pre, optimize=True) / J[:, None, None]


def entropy_contribution(pre, v_coeffs):
    """sum_k (g_visc, v) evaluated as v' (J M g) from the pre-inversion arrays."""
    return float(np.einsum("knc,knc->", v_coeffs, pre, optimize=True))


def boundary_entropy_terms(work, plan, boundary_specs, gas, t):
    """Per-tag boundary contributions predicted by the wall-condition theory.

    Adiabatic-type walls contribute <cv g, 1>; isothermal walls contribute
    <q_n / (cv T_wall), 1> with q_i = -sigma_4i + u_wall . (sigma_2i, sigma_3i).
    """
    terms = {}
    s1 = work.sigma_face[0].reshape(-1, 4)
    s2 = work.sigma_face[1].reshape(-1, 4)
    for tag, bdata in plan.bdata.items():
        spec = boundary_specs[tag]
        if spec.kind in (bc.ADIABATIC_NOSLIP, bc.INVISCID_WALL):
            g = spec.heat_entropy_flow(bdata.x, bdata.y, t)
            terms[tag] = float(np.sum(bdata.wJf * gas.cv * g))
        elif spec.kind == bc.ISOTHERMAL_NOSLIP:
            uw1, uw2 = spec.u_wall
            q1 = -s1[bdata.idx, 3] + uw1 * s1[bdata.idx, 1] + uw2 * s1[bdata.idx, 2]
            q2 = -s2[bdata.idx, 3] + uw1 * s2[bdata.idx, 1] + uw2 * s2[bdata.idx, 2]
            qn = q1 * bdata.n[:, 0] + q2 * bdata.n[:, 1]
            terms[tag] = float(np.sum(bdata.wJf * qn / (gas.cv * spec.T_wall)))
        else:
            terms[tag] = 0.0
    return terms
