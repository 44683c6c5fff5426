"""Legacy-VTK ASCII snapshots: nodal field values on a per-element
sub-triangulation of the degree-N plotting nodes.
"""

import numpy as np

from . import physics


def _subtriangulation(N):
    """Connectivity of the N^2 sub-triangles of the equispaced node lattice."""
    # node (i, j) with i + j <= N, ordered j-major (matches equispaced_nodes)
    index = {}
    c = 0
    for j in range(N + 1):
        for i in range(N + 1 - j):
            index[(i, j)] = c
            c += 1
    tris = []
    for j in range(N):
        for i in range(N - j):
            tris.append((index[(i, j)], index[(i + 1, j)], index[(i, j + 1)]))
            if i + j <= N - 2:
                tris.append((index[(i + 1, j)], index[(i + 1, j + 1)], index[(i, j + 1)]))
    return np.array(tris, dtype=np.int64)


def plot_points(ops, mesh):
    """Physical coordinates of the plotting nodes, (K, Np, 2)."""
    nodes = ops.plot_nodes
    l1 = -(nodes[:, 0] + nodes[:, 1]) / 2.0
    l2 = (1.0 + nodes[:, 0]) / 2.0
    l3 = (1.0 + nodes[:, 1]) / 2.0
    a = mesh.vertices[mesh.elements[:, 0]]
    b = mesh.vertices[mesh.elements[:, 1]]
    c = mesh.vertices[mesh.elements[:, 2]]
    x = np.einsum("k,n->kn", a[:, 0], l1) + np.einsum("k,n->kn", b[:, 0], l2) \
        + np.einsum("k,n->kn", c[:, 0], l3)
    y = np.einsum("k,n->kn", a[:, 1], l1) + np.einsum("k,n->kn", b[:, 1], l2) \
        + np.einsum("k,n->kn", c[:, 1], l3)
    return x, y


def write_snapshot(coeffs, time, ops, mesh, gas, path):
    """Write rho, u1, u2, p, |u|^2, and S(u) as VTK point data."""
    K = coeffs.shape[0]
    Np = ops.Np
    u_nodes = np.einsum("pn,knc->kpc", ops.V_plot, coeffs, optimize=True)
    physics.assert_admissible(u_nodes, context="snapshot")
    rho, u1, u2, p = physics.conservative_to_primitive(u_nodes, gas, check=False)
    S = physics.entropy_and_potentials(u_nodes, gas, check=False)[0]
    x, y = plot_points(ops, mesh)

    tris = _subtriangulation(ops.N)
    offsets = (np.arange(K) * Np)[:, None, None]
    cells = (tris[None, :, :] + offsets).reshape(-1, 3)

    npts = K * Np
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write(f"esdg snapshot t={time:.17g}\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {npts} double\n")
        for xi, yi in zip(x.ravel(), y.ravel()):
            fh.write(f"{xi:.17g} {yi:.17g} 0\n")
        fh.write(f"CELLS {len(cells)} {4 * len(cells)}\n")
        for tri in cells:
            fh.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n")
        fh.write(f"CELL_TYPES {len(cells)}\n")
        fh.write("5\n" * len(cells))
        fh.write(f"POINT_DATA {npts}\n")
        fields = {
            "rho": rho, "u1": u1, "u2": u2, "p": p,
            "velocity_norm2": u1 ** 2 + u2 ** 2, "entropy": S,
        }
        for name, vals in fields.items():
            fh.write(f"SCALARS {name} double\n")
            fh.write("LOOKUP_TABLE default\n")
            for v in vals.ravel():
                fh.write(f"{v:.17g}\n")
    return path
