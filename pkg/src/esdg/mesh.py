"""Straight-sided triangular meshes: generators, connectivity with face
orientation, affine geometric factors, boundary tagging, periodic pairing,
and a plain-text mesh file format (TRIMESH2D).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import MeshError
from .refops import FACE_VERTICES

INTERIOR = -1
PERIODIC = -2


@dataclass
class MeshGeometry:
    """Triangle mesh with affine per-element geometry.

    elements are counterclockwise vertex triples.  EToE/EToF self-reference
    on boundary faces.  All shared faces (including periodic pairs) match
    with reversed traversal, so the face-point permutation is index reversal.
    G[k] holds the scaled geometric terms G_ij = J * dxhat_j/dx_i (constant
    per element); normals are outward unit normals per face and Jf the face
    length over 2.  btag[k, f] is an index into tag_names, INTERIOR, or
    PERIODIC.
    """

    vertices: np.ndarray        # (Nv, 2)
    elements: np.ndarray        # (K, 3) int
    EToE: np.ndarray            # (K, 3) int
    EToF: np.ndarray            # (K, 3) int
    G: np.ndarray               # (K, 2, 2)
    J: np.ndarray               # (K,)
    normals: np.ndarray         # (K, 3, 2)
    Jf: np.ndarray              # (K, 3)
    btag: np.ndarray            # (K, 3) int
    tag_names: list = field(default_factory=list)
    periodic_pairs: list = field(default_factory=list)  # ((k,f),(k2,f2), shift)

    @property
    def num_elements(self):
        return self.elements.shape[0]

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    def boundary_faces(self, tag=None):
        """(k, f) pairs of boundary faces, optionally restricted to one tag."""
        if tag is None:
            ks, fs = np.where(self.btag >= 0)
        else:
            ks, fs = np.where(self.btag == self.tag_names.index(tag))
        return list(zip(ks.tolist(), fs.tolist()))

    def face_endpoints(self, k, f):
        a, b = FACE_VERTICES[f]
        return self.vertices[self.elements[k, a]], self.vertices[self.elements[k, b]]

    def face_centroid(self, k, f):
        a, b = self.face_endpoints(k, f)
        return 0.5 * (a + b)


def _signed_area2(verts, elems):
    a = verts[elems[:, 0]]
    b = verts[elems[:, 1]]
    c = verts[elems[:, 2]]
    return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])


def compute_geometry(vertices, elements):
    """Affine geometric factors: G, J, outward unit normals, face Jacobians."""
    a = vertices[elements[:, 0]]
    b = vertices[elements[:, 1]]
    c = vertices[elements[:, 2]]
    # Jacobian of the map from the bi-unit reference triangle
    dxdr = 0.5 * (b - a)            # d(x,y)/dxhat1
    dxds = 0.5 * (c - a)            # d(x,y)/dxhat2
    J = dxdr[:, 0] * dxds[:, 1] - dxds[:, 0] * dxdr[:, 1]
    if np.any(J <= 0.0):
        bad = int(np.argmin(J))
        raise MeshError(f"element {bad} has nonpositive Jacobian {J[bad]:.3e} "
                        "(zero area or inverted orientation)")
    # G_ij = J * dxhat_j/dx_i (adjugate of the Jacobian matrix)
    G = np.empty((elements.shape[0], 2, 2))
    G[:, 0, 0] = dxds[:, 1]
    G[:, 0, 1] = -dxdr[:, 1]
    G[:, 1, 0] = -dxds[:, 0]
    G[:, 1, 1] = dxdr[:, 0]

    K = elements.shape[0]
    normals = np.empty((K, 3, 2))
    Jf = np.empty((K, 3))
    for f, (i0, i1) in enumerate(FACE_VERTICES):
        e = vertices[elements[:, i1]] - vertices[elements[:, i0]]
        scaled = np.column_stack([e[:, 1], -e[:, 0]]) / 2.0
        Jf[:, f] = np.hypot(scaled[:, 0], scaled[:, 1])
        normals[:, f, :] = scaled / Jf[:, f][:, None]
    return G, J, normals, Jf


def build_connectivity(vertices, elements):
    """EToE/EToF from shared vertex pairs; boundary faces self-reference."""
    K = elements.shape[0]
    EToE = np.tile(np.arange(K)[:, None], (1, 3))
    EToF = np.tile(np.arange(3)[None, :], (K, 1))
    facemap = {}
    for k in range(K):
        for f, (i0, i1) in enumerate(FACE_VERTICES):
            key = tuple(sorted((int(elements[k, i0]), int(elements[k, i1]))))
            if key in facemap:
                k2, f2 = facemap.pop(key)
                EToE[k, f], EToF[k, f] = k2, f2
                EToE[k2, f2], EToF[k2, f2] = k, f
            else:
                facemap[key] = (k, f)
    return EToE, EToF


def from_vertices_elements(vertices, elements, tag_names=None, btag=None):
    """Assemble a MeshGeometry from raw arrays (ccw orientation enforced)."""
    vertices = np.asarray(vertices, dtype=float)
    elements = np.asarray(elements, dtype=np.int64)
    if np.any(_signed_area2(vertices, elements) <= 0.0):
        raise MeshError("elements must be counterclockwise with positive area")
    EToE, EToF = build_connectivity(vertices, elements)
    G, J, normals, Jf = compute_geometry(vertices, elements)
    if btag is None:
        btag = np.where(EToE == np.arange(elements.shape[0])[:, None], 0, INTERIOR)
        # boundary faces initially untagged: mark with a sentinel "untagged" 0
        tag_names = ["untagged"]
    return MeshGeometry(vertices=vertices, elements=elements, EToE=EToE, EToF=EToF,
                        G=G, J=J, normals=normals, Jf=Jf,
                        btag=btag, tag_names=list(tag_names or []))


def bisected_quad_mesh(Kx, Ky, bounds):
    """Uniform rectangle mesh of 2*Kx*Ky triangles.

    Each quad is split along its lower-left to upper-right diagonal.
    bounds = (x0, x1, y0, y1).
    """
    if Kx < 1 or Ky < 1:
        raise MeshError(f"need Kx, Ky >= 1, got ({Kx}, {Ky})")
    x0, x1, y0, y1 = map(float, bounds)
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate rectangle bounds {bounds}")
    xs = np.linspace(x0, x1, Kx + 1)
    ys = np.linspace(y0, y1, Ky + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (Ky + 1) + j

    elems = []
    for i in range(Kx):
        for j in range(Ky):
            a = vid(i, j)
            b = vid(i + 1, j)
            c = vid(i + 1, j + 1)
            d = vid(i, j + 1)
            elems.append((a, b, c))
            elems.append((a, c, d))
    return from_vertices_elements(vertices, np.array(elems, dtype=np.int64))


def apply_grading(mesh, transform):
    """Move vertices through (x, y) -> transform(x, y); edges stay straight.

    Raises MeshError if any element inverts.
    """
    newv = np.asarray(transform(mesh.vertices[:, 0], mesh.vertices[:, 1]))
    if newv.shape[0] == 2 and newv.shape != mesh.vertices.shape:
        newv = np.column_stack(newv)
    elif newv.shape != mesh.vertices.shape:
        newv = np.column_stack([newv[..., 0], newv[..., 1]])
    G, J, normals, Jf = compute_geometry(newv, mesh.elements)
    return replace(mesh, vertices=newv, G=G, J=J, normals=normals, Jf=Jf)


def tag_boundaries(mesh, predicates):
    """Assign tags via (tag, predicate(x, y)) applied to face centroids.

    Every non-periodic boundary face must satisfy exactly one predicate.
    """
    names = [t for t, _ in predicates]
    btag = mesh.btag.copy()
    for (k, f) in zip(*np.where(mesh.btag >= 0)):
        cx, cy = mesh.face_centroid(k, f)
        hits = [i for i, (_, pred) in enumerate(predicates) if pred(cx, cy)]
        if len(hits) != 1:
            what = "untagged" if not hits else "multiply-tagged " + str([names[i] for i in hits])
            raise MeshError(f"{what} boundary face of element {int(k)} "
                            f"with centroid ({cx:.6g}, {cy:.6g})")
        btag[k, f] = hits[0]
    return replace(mesh, btag=btag, tag_names=names)


def make_periodic(mesh, axis, tol_rel=1e-10):
    """Pair boundary faces on opposite sides of the domain along an axis.

    Faces are matched by the coordinate transverse to `axis` (0 = pair in x,
    1 = pair in y).  Matched faces become interior-like (btag PERIODIC).
    """
    coords = mesh.vertices[:, axis]
    lo, hi = coords.min(), coords.max()
    extent = hi - lo
    tol = tol_rel * max(extent, 1.0)
    other = 1 - axis

    lo_faces, hi_faces = [], []
    for (k, f) in zip(*np.where(mesh.btag != INTERIOR)):
        a, b = mesh.face_endpoints(k, f)
        if abs(a[axis] - lo) < tol and abs(b[axis] - lo) < tol:
            lo_faces.append((int(k), int(f), a[other], b[other]))
        elif abs(a[axis] - hi) < tol and abs(b[axis] - hi) < tol:
            hi_faces.append((int(k), int(f), a[other], b[other]))
    if len(lo_faces) != len(hi_faces) or not lo_faces:
        raise MeshError(f"cannot pair periodic faces along axis {axis}: "
                        f"{len(lo_faces)} vs {len(hi_faces)} candidates")

    def key(rec):
        return (min(rec[2], rec[3]), max(rec[2], rec[3]))

    hi_lookup = {}
    for rec in hi_faces:
        hi_lookup[tuple(np.round(np.array(key(rec)) / tol).astype(np.int64))] = rec

    EToE = mesh.EToE.copy()
    EToF = mesh.EToF.copy()
    btag = mesh.btag.copy()
    pairs = list(mesh.periodic_pairs)
    shift = np.zeros(2)
    shift[axis] = extent
    for rec in lo_faces:
        kk = tuple(np.round(np.array(key(rec)) / tol).astype(np.int64))
        if kk not in hi_lookup:
            raise MeshError(f"no periodic partner for face {rec[:2]} along axis {axis}")
        mate = hi_lookup.pop(kk)
        k, f = rec[:2]
        k2, f2 = mate[:2]
        EToE[k, f], EToF[k, f] = k2, f2
        EToE[k2, f2], EToF[k2, f2] = k, f
        btag[k, f] = PERIODIC
        btag[k2, f2] = PERIODIC
        pairs.append(((k, f), (k2, f2), shift.copy()))
    return replace(mesh, EToE=EToE, EToF=EToF, btag=btag, periodic_pairs=pairs)


def min_edge_length(mesh):
    lengths = 2.0 * mesh.Jf
    return float(lengths.min())


def mesh_info(mesh):
    return {
        "vertices": mesh.num_vertices,
        "elements": mesh.num_elements,
        "boundary_faces": int(np.count_nonzero(mesh.btag >= 0)),
        "periodic_face_pairs": len(mesh.periodic_pairs),
        "J_min": float(mesh.J.min()),
        "J_max": float(mesh.J.max()),
        "min_edge_length": min_edge_length(mesh),
        "total_area": float(2.0 * mesh.J.sum()),
        "tags": {t: len(mesh.boundary_faces(t)) for t in mesh.tag_names
                 if len(mesh.boundary_faces(t)) > 0},
    }


def write_trimesh2d(mesh, path):
    """Plain-text mesh format; coordinates round-trip exactly (17 digits)."""
    with open(path, "w") as fh:
        fh.write("TRIMESH2D\n")
        fh.write(f"{mesh.num_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        fh.write(f"{mesh.num_elements}\n")
        for tri in mesh.elements:
            fh.write(f"{tri[0] + 1} {tri[1] + 1} {tri[2] + 1}\n")
        tags = [t for t in mesh.tag_names if mesh.boundary_faces(t)]
        fh.write(f"{len(tags)}\n")
        for t in tags:
            faces = mesh.boundary_faces(t)
            fh.write(f"{t} {len(faces)}\n")
            for (k, f) in faces:
                fh.write(f"{k + 1} {f + 1}\n")


def read_trimesh2d(path):
    with open(path) as fh:
        tokens = fh.read().split()
    it = iter(tokens)

    def next_tok():
        try:
            return next(it)
        except StopIteration:
            raise MeshError(f"truncated TRIMESH2D file {path}") from None

    header = next_tok()
    if header != "TRIMESH2D":
        raise MeshError(f"{path}: expected TRIMESH2D header, got {header!r}")
    nv = int(next_tok())
    verts = np.array([[float(next_tok()), float(next_tok())] for _ in range(nv)])
    ne = int(next_tok())
    elems = np.array([[int(next_tok()) - 1 for _ in range(3)] for _ in range(ne)],
                     dtype=np.int64)
    mesh = from_vertices_elements(verts, elems)
    ntags = int(next_tok())
    if ntags:
        names = []
        btag = np.where(mesh.btag >= 0, -100, mesh.btag)
        for _ in range(ntags):
            name = next_tok()
            nf = int(next_tok())
            names.append(name)
            for _ in range(nf):
                k = int(next_tok()) - 1
                f = int(next_tok()) - 1
                if btag[k, f] == INTERIOR:
                    raise MeshError(f"{path}: tagged face ({k + 1},{f + 1}) is interior")
                btag[k, f] = len(names) - 1
        if np.any(btag == -100):
            k, f = map(int, np.argwhere(btag == -100)[0])
            cx, cy = mesh.face_centroid(k, f)
            raise MeshError(f"{path}: untagged boundary face of element {k} "
                            f"with centroid ({cx:.6g}, {cy:.6g})")
        mesh = replace(mesh, btag=btag, tag_names=names)
    return mesh
