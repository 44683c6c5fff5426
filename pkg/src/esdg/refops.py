"""Reference-element operators on the bi-unit right triangle.

The reference triangle has vertices (-1,-1), (1,-1), (-1,1) and area 2.
Faces are ordered counterclockwise: face 1 is the bottom edge, face 2 the
hypotenuse, face 3 the left edge.  This ordering is part of the operator
contract relied on by the mesh connectivity.
"""

import os
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import InvalidDegreeError, OperatorConstructionError

# local face -> reference vertex pair, ccw
FACE_VERTICES = ((0, 1), (1, 2), (2, 0))
REF_VERTICES = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])

# per-face outward unit normal and face Jacobian (length / 2)
REF_NORMALS = np.array([[0.0, -1.0],
                        [1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)],
                        [-1.0, 0.0]])
REF_FACE_JAC = np.array([1.0, np.sqrt(2.0), 1.0])


def _jacobi_norm2(n, alpha, beta):
    # squared L2 norm of P_n^(alpha,beta) under weight (1-x)^alpha (1+x)^beta
    num = special.gammaln(n + alpha + 1) + special.gammaln(n + beta + 1)
    den = special.gammaln(n + alpha + beta + 1) + special.gammaln(n + 1)
    return 2.0 ** (alpha + beta + 1) / (2 * n + alpha + beta + 1) * np.exp(num - den)


def _njacobi(n, alpha, beta, x):
    """Jacobi polynomial normalized to unit L2 norm on [-1,1]."""
    return special.eval_jacobi(n, alpha, beta, x) / np.sqrt(_jacobi_norm2(n, alpha, beta))


def _dnjacobi(n, alpha, beta, x):
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.zeros_like(x)
    return np.sqrt(n * (n + alpha + beta + 1)) * _njacobi(n - 1, alpha + 1, beta + 1, x)


def _collapsed_coords(x, y):
    # Duffy-type map; the top vertex y=1 gets a=-1 by convention
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.full_like(y, -1.0)
    ok = np.abs(1.0 - y) > 1e-14
    a[ok] = 2.0 * (1.0 + x[ok]) / (1.0 - y[ok]) - 1.0
    return a, y


def basis_indices(N):
    """Index pairs (i, j) of the degree-N orthonormal basis, i+j <= N."""
    return [(i, j) for i in range(N + 1) for j in range(N - i + 1)]


class TriangleBasis:
    """Orthonormal (Koornwinder-Dubiner) basis for total-degree-N polynomials."""

    def __init__(self, N):
        if not isinstance(N, (int, np.integer)) or N < 1:
            raise InvalidDegreeError(f"degree must be an integer >= 1, got {N!r}")
        self.N = int(N)
        self.indices = basis_indices(self.N)
        self.Np = len(self.indices)

    def vandermonde(self, x, y):
        """Matrix of basis values at the given points, shape (npts, Np)."""
        a, b = _collapsed_coords(x, y)
        cols = []
        for (i, j) in self.indices:
            P = (np.sqrt(2.0) * _njacobi(i, 0, 0, a)
                 * _njacobi(j, 2 * i + 1, 0, b) * (1.0 - b) ** i)
            cols.append(P)
        return np.stack(cols, axis=-1)

    def grad_vandermonde(self, x, y):
        """Matrices of basis x- and y-derivatives at the given points."""
        a, b = _collapsed_coords(x, y)
        dxs, dys = [], []
        for (i, j) in self.indices:
            fa = _njacobi(i, 0, 0, a)
            dfa = _dnjacobi(i, 0, 0, a)
            gb = _njacobi(j, 2 * i + 1, 0, b)
            dgb = _dnjacobi(j, 2 * i + 1, 0, b)
            scale = 2.0 ** (i + 0.5)
            if i >= 1:
                h1 = ((1.0 - b) / 2.0) ** (i - 1)
                dphidx = scale * dfa * gb * h1
                t = dfa * gb * ((1.0 + a) / 2.0) * h1 - (i / 2.0) * fa * gb * h1
            else:
                dphidx = np.zeros_like(b)
                t = np.zeros_like(b)
            t2 = fa * dgb * ((1.0 - b) / 2.0) ** i
            dphidy = scale * (t + t2)
            dxs.append(dphidx)
            dys.append(dphidy)
        return np.stack(dxs, axis=-1), np.stack(dys, axis=-1)

    def equispaced_nodes(self):
        """Equispaced interpolation/plotting nodes, shape (Np, 2)."""
        N = self.N
        pts = [(-1.0 + 2.0 * i / N, -1.0 + 2.0 * j / N)
               for j in range(N + 1) for i in range(N + 1 - j)]
        return np.array(pts)

    def interp_condition(self):
        """Condition number of the Vandermonde matrix on the equispaced nodes."""
        nodes = self.equispaced_nodes()
        V = self.vandermonde(nodes[:, 0], nodes[:, 1])
        return np.linalg.cond(V)


def build_basis(N):
    """Basis evaluator for total-degree-N polynomials on the reference triangle."""
    return TriangleBasis(N)


@dataclass
class QuadratureRule:
    points: np.ndarray          # (n, 2)
    weights: np.ndarray         # (n,)
    exactness_degree: int


def build_volume_quadrature(N):
    """Volume rule exact for total degree 2N (collapsed Gauss x Gauss-Jacobi)."""
    if N < 1:
        raise InvalidDegreeError(f"degree must be >= 1, got {N}")
    m = N + 1
    ra, wa = special.roots_legendre(m)
    rb, wb = special.roots_jacobi(m, 1.0, 0.0)
    A, B = np.meshgrid(ra, rb, indexing="ij")
    X = (1.0 + A) * (1.0 - B) / 2.0 - 1.0
    Y = B
    W = np.outer(wa, wb) / 2.0
    return QuadratureRule(points=np.column_stack([X.ravel(), Y.ravel()]),
                          weights=W.ravel(),
                          exactness_degree=2 * m - 1)


def face_quadrature_1d(N):
    """Gauss points/weights on [-1,1] used on every reference face."""
    if N < 1:
        raise InvalidDegreeError(f"degree must be >= 1, got {N}")
    m = int(np.ceil((2 * N + 1) / 2))
    return special.roots_legendre(m)


def _face_points(r):
    """Stack the 1D parameter r onto the three faces, ccw traversal."""
    m = len(r)
    x = np.concatenate([r, -r, -np.ones(m)])
    y = np.concatenate([-np.ones(m), r, -r])
    return x, y


def build_face_quadrature(N):
    """Surface rule: the 1D Gauss rule replicated on the three faces."""
    r, w = face_quadrature_1d(N)
    x, y = _face_points(r)
    return QuadratureRule(points=np.column_stack([x, y]),
                          weights=np.tile(w, 3),
                          exactness_degree=2 * len(r) - 1)


@dataclass
class ReferenceOperators:
    """All degree-N operator matrices on the reference triangle.

    B1/B2 are the diagonals of the reference boundary matrices
    diag(wf * nhat_i * Jfhat).  Qh1/Qh2 are the hybridized SBP operators on
    the stacked volume+face quadrature nodes and satisfy
    Qh_i + Qh_i^T = [[0,0],[0,diag(B_i)]] bitwise by construction.
    """

    N: int
    Np: int
    basis: TriangleBasis
    xq: np.ndarray              # (Nq,) volume quadrature
    yq: np.ndarray
    wq: np.ndarray
    xf: np.ndarray              # (Nfq,) stacked face quadrature
    yf: np.ndarray
    wf: np.ndarray
    rf: np.ndarray              # (m,) 1D Gauss parameter per face
    n_face_pts: int             # points per face
    nhat: np.ndarray            # (Nfq, 2) reference outward unit normals
    Jfhat: np.ndarray           # (Nfq,)
    Vq: np.ndarray              # (Nq, Np)
    Vf: np.ndarray              # (Nfq, Np)
    Vh: np.ndarray              # (Nq+Nfq, Np)
    M: np.ndarray               # (Np, Np)
    Minv: np.ndarray
    Pq: np.ndarray              # (Np, Nq)
    E: np.ndarray               # (Nfq, Nq)
    Qhat1: np.ndarray           # (Np, Np)
    Qhat2: np.ndarray
    B1: np.ndarray              # (Nfq,) diagonal of reference boundary matrix
    B2: np.ndarray
    Qh1: np.ndarray             # (Nq+Nfq, Nq+Nfq)
    Qh2: np.ndarray
    interp_cond: float
    plot_nodes: np.ndarray = field(repr=False, default=None)
    V_plot: np.ndarray = field(repr=False, default=None)

    @property
    def Nq(self):
        return len(self.wq)

    @property
    def Nfq(self):
        return len(self.wf)


def _hybridized(Q, E, b):
    nq, nf = E.shape[1], E.shape[0]
    skew = 0.5 * (Q - Q.T)
    top_right = 0.5 * (E.T * b[None, :])
    Qh = np.zeros((nq + nf, nq + nf))
    Qh[:nq, :nq] = skew
    Qh[:nq, nq:] = top_right
    Qh[nq:, :nq] = -top_right.T
    Qh[nq:, nq:] = np.diag(0.5 * b)
    return Qh


def build_operators(N):
    """Construct all degree-N reference operators."""
    basis = build_basis(N)
    vol = build_volume_quadrature(N)
    r, w1 = face_quadrature_1d(N)
    xf, yf = _face_points(r)
    m = len(r)

    xq, yq, wq = vol.points[:, 0], vol.points[:, 1], vol.weights
    wf = np.tile(w1, 3)
    nhat = np.repeat(REF_NORMALS, m, axis=0)
    Jfhat = np.repeat(REF_FACE_JAC, m)

    Vq = basis.vandermonde(xq, yq)
    Vf = basis.vandermonde(xf, yf)
    Vqx, Vqy = basis.grad_vandermonde(xq, yq)

    M = Vq.T @ (wq[:, None] * Vq)
    M = 0.5 * (M + M.T)
    try:
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > 1e12:
            raise OperatorConstructionError(
                f"mass matrix ill-conditioned (cond={cond:.3e}) for N={N}")
        Minv = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise OperatorConstructionError(f"singular mass matrix for N={N}") from exc

    Qhat1 = Vq.T @ (wq[:, None] * Vqx)
    Qhat2 = Vq.T @ (wq[:, None] * Vqy)
    Pq = Minv @ (Vq.T * wq[None, :])
    E = Vf @ Pq

    # scaled reference normals nhat_i * Jfhat are exact small integers per face
    b1 = wf * nhat[:, 0] * Jfhat
    b2 = wf * nhat[:, 1] * Jfhat
    Q1 = Pq.T @ Qhat1 @ Pq
    Q2 = Pq.T @ Qhat2 @ Pq
    Qh1 = _hybridized(Q1, E, b1)
    Qh2 = _hybridized(Q2, E, b2)

    nodes = basis.equispaced_nodes()
    V_plot = basis.vandermonde(nodes[:, 0], nodes[:, 1])

    return ReferenceOperators(
        N=N, Np=basis.Np, basis=basis,
        xq=xq, yq=yq, wq=wq, xf=xf, yf=yf, wf=wf, rf=r, n_face_pts=m,
        nhat=nhat, Jfhat=Jfhat,
        Vq=Vq, Vf=Vf, Vh=np.vstack([Vq, Vf]),
        M=M, Minv=Minv, Pq=Pq, E=E,
        Qhat1=Qhat1, Qhat2=Qhat2, B1=b1, B2=b2, Qh1=Qh1, Qh2=Qh2,
        interp_cond=basis.interp_condition(),
        plot_nodes=nodes, V_plot=V_plot,
    )


def dump_operators_csv(ops, directory):
    """Write every operator matrix as CSV, 17 significant digits."""
    os.makedirs(directory, exist_ok=True)
    arrays = {
        "Vq": ops.Vq, "Vf": ops.Vf, "Vh": ops.Vh, "M": ops.M, "Pq": ops.Pq,
        "E": ops.E, "Qhat1": ops.Qhat1, "Qhat2": ops.Qhat2,
        "Qh1": ops.Qh1, "Qh2": ops.Qh2,
        "wq": ops.wq, "wf": ops.wf, "B1": ops.B1, "B2": ops.B2,
        "xq": ops.xq, "yq": ops.yq, "xf": ops.xf, "yf": ops.yf,
        "nhat": ops.nhat, "Jfhat": ops.Jfhat,
    }
    for name, arr in arrays.items():
        path = os.path.join(directory, f"{name}.csv")
        np.savetxt(path, np.atleast_2d(arr), delimiter=",", fmt="%.17g")
    return sorted(arrays)
