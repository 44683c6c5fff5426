"""Entropy-stable inviscid semi-discretization: entropy projection,
flux-differencing volume kernel, and interface coupling with
entropy-conservative fluxes plus Lax-Friedrichs dissipation.
"""

from dataclasses import dataclass

import numpy as np

from . import physics
from .errors import InadmissibleStateError

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False


@dataclass
class SolutionField:
    """Modal coefficients of the conservative variables, (K, Np, 4)."""

    coeffs: np.ndarray
    degree: int

    @property
    def num_elements(self):
        return self.coeffs.shape[0]

    def copy(self):
        return SolutionField(self.coeffs.copy(), self.degree)


@dataclass
class EntropyProjection:
    """Projected entropy variables and entropy-projected states.

    v_coeffs are modal; v_h and u_tilde are point values at the stacked
    volume+face quadrature nodes.
    """

    v_coeffs: np.ndarray     # (K, Np, 4)
    v_h: np.ndarray          # (K, Nq+Nfq, 4)
    u_tilde: np.ndarray      # (K, Nq+Nfq, 4)


def _report_bad_elements(mask_per_elem, what):
    bad = np.where(~mask_per_elem)[0]
    shown = ", ".join(map(str, bad[:8]))
    more = "" if len(bad) <= 8 else f" (+{len(bad) - 8} more)"
    raise InadmissibleStateError(f"{what} in element(s) {shown}{more}")


def entropy_project(coeffs, ops, gas):
    """v_coeffs = Pq v(Vq u); u_tilde = u(Vh v_coeffs) rowwise."""
    u_q = np.einsum("qn,knc->kqc", ops.Vq, coeffs, optimize=True)
    ok = physics.admissible_mask(u_q)
    if not np.all(ok):
        _report_bad_elements(ok.all(axis=1), "inadmissible state at volume points")
    v_q = physics.entropy_vars(u_q, gas, check=False)
    v_coeffs = np.einsum("pq,kqc->kpc", ops.Pq, v_q, optimize=True)
    v_h = np.einsum("np,kpc->knc", ops.Vh, v_coeffs, optimize=True)
    if not np.all(v_h[..., 3] < 0.0):
        _report_bad_elements((v_h[..., 3] < 0.0).all(axis=1),
                             "entropy projection produced nonnegative v4")
    u_tilde = physics.conservative_from_entropy(v_h, gas, check=False)
    return EntropyProjection(v_coeffs=v_coeffs, v_h=v_h, u_tilde=u_tilde)


class FluxDifferencingPattern:
    """Sparsity-exploiting layout of the hybridized operators.

    Off-diagonal entries of Qh_i are antisymmetric, so two-point fluxes are
    evaluated once per unordered pair (j < l) wherever either operator has a
    structurally nonzero entry, then scattered with opposite signs.  Only the
    face-face block contributes diagonal entries.
    """

    def __init__(self, ops):
        Qh1, Qh2 = ops.Qh1, ops.Qh2
        Nh = Qh1.shape[0]
        upper = np.triu(np.ones((Nh, Nh), dtype=bool), k=1)
        nz = upper & ((Qh1 != 0.0) | (Qh2 != 0.0))
        self.jj, self.ll = np.nonzero(nz)
        self.q1 = Qh1[self.jj, self.ll]
        self.q2 = Qh2[self.jj, self.ll]
        P = len(self.jj)
        Z = np.zeros((Nh, P))
        Z[self.jj, np.arange(P)] = 1.0
        Z[self.ll, np.arange(P)] = -1.0
        self.scatter = Z
        d1 = Qh1.diagonal().copy()
        d2 = Qh2.diagonal().copy()
        (self.diag_idx,) = np.nonzero((d1 != 0.0) | (d2 != 0.0))
        self.diag1 = d1[self.diag_idx]
        self.diag2 = d2[self.diag_idx]
        self.Nh = Nh


def volume_flux_differencing(proj, pattern, G, ops, gas):
    """Vh' * sum_i (2 Qh^k_i o F_i) 1 for every element, (K, Np, 4).

    Qh^k_i = sum_j G^k_ij Qh_j with constant affine geometric factors.
    Dispatches to a compiled pairwise kernel when numba is available; the
    vectorized numpy path below is the reference implementation.
    """
    if HAVE_NUMBA:
        acc = np.zeros_like(proj.u_tilde)
        _fd_kernel(proj.u_tilde, G, pattern.jj, pattern.ll,
                   pattern.q1, pattern.q2, pattern.diag_idx,
                   pattern.diag1, pattern.diag2, gas.gamma, acc)
        return np.einsum("knc,np->kpc", acc, ops.Vh, optimize=True)
    return volume_flux_differencing_numpy(proj, pattern, G, ops, gas)


def volume_flux_differencing_numpy(proj, pattern, G, ops, gas):
    ut = proj.u_tilde
    uj = ut[:, pattern.jj, :]
    ul = ut[:, pattern.ll, :]
    f1, f2 = physics.ec_flux(uj, ul, gas, check=False)
    # per-pair combined operator weights in each physical direction
    w1 = G[:, 0, 0, None] * pattern.q1[None, :] + G[:, 0, 1, None] * pattern.q2[None, :]
    w2 = G[:, 1, 0, None] * pattern.q1[None, :] + G[:, 1, 1, None] * pattern.q2[None, :]
    contrib = 2.0 * (w1[..., None] * f1 + w2[..., None] * f2)
    acc = np.einsum("np,kpc->knc", pattern.scatter, contrib, optimize=True)

    ud = ut[:, pattern.diag_idx, :]
    fd1, fd2 = physics.ec_flux(ud, ud, gas, check=False)
    wd1 = G[:, 0, 0, None] * pattern.diag1[None, :] + G[:, 0, 1, None] * pattern.diag2[None, :]
    wd2 = G[:, 1, 0, None] * pattern.diag1[None, :] + G[:, 1, 1, None] * pattern.diag2[None, :]
    acc[:, pattern.diag_idx, :] += 2.0 * (wd1[..., None] * fd1 + wd2[..., None] * fd2)

    return np.einsum("knc,np->kpc", acc, ops.Vh, optimize=True)


if HAVE_NUMBA:
    @numba.njit(cache=True)
    def _fd_kernel(ut, G, jj, ll, q1, q2, diag_idx, d1, d2, gamma, out):
        K = ut.shape[0]
        P = jj.shape[0]
        D = diag_idx.shape[0]
        gm1 = gamma - 1.0
        for k in range(K):
            g11 = G[k, 0, 0]
            g12 = G[k, 0, 1]
            g21 = G[k, 1, 0]
            g22 = G[k, 1, 1]
            for p in range(P):
                j = jj[p]
                l = ll[p]
                w1 = g11 * q1[p] + g12 * q2[p]
                w2 = g21 * q1[p] + g22 * q2[p]
                rL = ut[k, j, 0]
                m1L = ut[k, j, 1]
                m2L = ut[k, j, 2]
                EL = ut[k, j, 3]
                rR = ut[k, l, 0]
                m1R = ut[k, l, 1]
                m2R = ut[k, l, 2]
                ER = ut[k, l, 3]
                u1L = m1L / rL
                u2L = m2L / rL
                u1R = m1R / rR
                u2R = m2R / rR
                pL = gm1 * (EL - 0.5 * (m1L * u1L + m2L * u2L))
                pR = gm1 * (ER - 0.5 * (m1R * u1R + m2R * u2R))
                bL = 0.5 * rL / pL
                bR = 0.5 * rR / pR
                zr = rL / rR
                fr = (zr - 1.0) / (zr + 1.0)
                ur = fr * fr
                if ur < 1e-4:
                    rln = (rL + rR) / (2.0 * (1.0 + ur * (1.0 / 3.0 + ur * (1.0 / 5.0 + ur / 7.0))))
                else:
                    rln = (rL - rR) / (np.log(rL) - np.log(rR))
                zb = bL / bR
                fb = (zb - 1.0) / (zb + 1.0)
                ub = fb * fb
                if ub < 1e-4:
                    bln = (bL + bR) / (2.0 * (1.0 + ub * (1.0 / 3.0 + ub * (1.0 / 5.0 + ub / 7.0))))
                else:
                    bln = (bL - bR) / (np.log(bL) - np.log(bR))
                ra = 0.5 * (rL + rR)
                ba = 0.5 * (bL + bR)
                u1a = 0.5 * (u1L + u1R)
                u2a = 0.5 * (u2L + u2R)
                phat = ra / (2.0 * ba)
                usq = 0.5 * (u1L * u1L + u1R * u1R) + 0.5 * (u2L * u2L + u2R * u2R)
                f1r = rln * u1a
                f2r = rln * u2a
                f1m1 = u1a * f1r + phat
                f1m2 = u2a * f1r
                f2m1 = u1a * f2r
                f2m2 = u2a * f2r + phat
                et = 1.0 / (2.0 * gm1 * bln) - 0.5 * usq
                f1E = et * f1r + u1a * f1m1 + u2a * f1m2
                f2E = et * f2r + u1a * f2m1 + u2a * f2m2
                c0 = 2.0 * (w1 * f1r + w2 * f2r)
                c1 = 2.0 * (w1 * f1m1 + w2 * f2m1)
                c2 = 2.0 * (w1 * f1m2 + w2 * f2m2)
                c3 = 2.0 * (w1 * f1E + w2 * f2E)
                out[k, j, 0] += c0
                out[k, j, 1] += c1
                out[k, j, 2] += c2
                out[k, j, 3] += c3
                out[k, l, 0] -= c0
                out[k, l, 1] -= c1
                out[k, l, 2] -= c2
                out[k, l, 3] -= c3
            for d in range(D):
                i = diag_idx[d]
                w1 = g11 * d1[d] + g12 * d2[d]
                w2 = g21 * d1[d] + g22 * d2[d]
                r = ut[k, i, 0]
                m1 = ut[k, i, 1]
                m2 = ut[k, i, 2]
                E = ut[k, i, 3]
                u1 = m1 / r
                u2 = m2 / r
                p = gm1 * (E - 0.5 * (m1 * u1 + m2 * u2))
                out[k, i, 0] += 2.0 * (w1 * m1 + w2 * m2)
                out[k, i, 1] += 2.0 * (w1 * (m1 * u1 + p) + w2 * m1 * u2)
                out[k, i, 2] += 2.0 * (w1 * m2 * u1 + w2 * (m2 * u2 + p))
                out[k, i, 3] += 2.0 * (w1 * u1 * (E + p) + w2 * u2 * (E + p))


def surface_terms(u_face, u_ext, plan, ops, gas, dissipation=True, lf_per_face=False):
    """Vf' [B^k_i (f_iS(u+, u) - f_i(u)) - Wf Jf (lambda/2) [[u]]], (K, Np, 4)."""
    fS1, fS2 = physics.ec_flux(u_ext, u_face, gas, check=False)
    f1, f2 = physics.inviscid_flux(u_face, gas, check=False)
    flux_pt = (plan.n1[..., None] * (fS1 - f1) + plan.n2[..., None] * (fS2 - f2))
    if dissipation:
        nvec = np.stack([plan.n1, plan.n2], axis=-1)
        lam = physics.max_wavespeed(u_ext, u_face, nvec, gas, check=False)
        if lf_per_face:
            m = ops.n_face_pts
            K = lam.shape[0]
            lam = lam.reshape(K, 3, m).max(axis=2, keepdims=True)
            lam = np.broadcast_to(lam, (K, 3, m)).reshape(K, -1)
        flux_pt = flux_pt - 0.5 * lam[..., None] * (u_ext - u_face)
    flux_pt = plan.wJf[..., None] * flux_pt
    return np.einsum("kfc,fp->kpc", flux_pt, ops.Vf, optimize=True)


def inviscid_rhs_from_parts(vol, surf, ops, J):
    """du/dt = -(J M)^{-1} (volume + surface contributions)."""
    rhs = np.einsum("pn,knc->kpc", ops.Minv, vol + surf, optimize=True)
    return -rhs / J[:, None, None]
