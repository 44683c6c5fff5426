"""Built-in case presets: meshes, initial data, and boundary conditions for
the periodic graded channel, the lid-driven cavity, the shock channel with
symmetry walls, a square-cylinder demo, and user meshes.
"""

from dataclasses import dataclass

import numpy as np

from . import boundary as bc
from . import mesh as meshmod
from .config import RunConfig
from .errors import ConfigError
from .physics import GasParams, primitive_to_conservative


@dataclass
class CaseSetup:
    mesh: object
    gas: GasParams
    boundary_specs: dict
    initial_prim: object           # (x, y) -> (rho, u1, u2, p)
    wall_tags: tuple


def _gas(cfg):
    return GasParams(Re=cfg.Re, Ma=cfg.Ma, gamma=cfg.gamma, Pr=cfg.Pr,
                     mu_star=cfg.mu_star)


def converge_channel(cfg):
    """Periodic channel with graded mesh and resting adiabatic walls."""
    gas = _gas(cfg)
    m = meshmod.bisected_quad_mesh(2 * cfg.K1D, cfg.K1D, (-2, 2, -1, 1))
    m = meshmod.apply_grading(m, lambda x, y: (x, y + 0.25 * np.sin(np.pi * y)))
    m = meshmod.make_periodic(m, axis=0)
    m = meshmod.tag_boundaries(m, [
        ("bottom", lambda x, y: y < 0),
        ("top", lambda x, y: y > 0),
    ])
    specs = {t: bc.BoundarySpec(bc.ADIABATIC_NOSLIP) for t in ("bottom", "top")}
    p0 = 1.0 / (gas.Ma ** 2 * gas.gamma)

    def ic(x, y):
        u1 = 0.1 * np.sin(np.pi * x / 2) * np.cos(np.pi * y / 2)
        u2 = 0.1 * np.cos(np.pi * x / 2) * np.sin(np.pi * y)
        return np.ones_like(x), u1, u2, p0 * np.ones_like(x)

    return CaseSetup(m, gas, specs, ic, wall_tags=("bottom", "top"))


def cavity(cfg):
    """Lid-driven cavity with adiabatic or isothermal walls."""
    gas = _gas(cfg)
    m = meshmod.bisected_quad_mesh(cfg.K1D, cfg.K1D, (-1, 1, -1, 1))
    m = meshmod.tag_boundaries(m, [
        ("lid", lambda x, y: abs(y - 1) < 1e-12),
        ("wall", lambda x, y: abs(y - 1) >= 1e-12),
    ])
    lid_u = (cfg.lid_velocity, 0.0)
    if cfg.cavity_bc == "isothermal":
        specs = {
            "lid": bc.BoundarySpec(bc.ISOTHERMAL_NOSLIP, u_wall=lid_u,
                                   T_wall=cfg.T_wall),
            "wall": bc.BoundarySpec(bc.ISOTHERMAL_NOSLIP, T_wall=cfg.T_wall),
        }
    else:
        g = None
        if cfg.g_amp != 0.0:
            amp = cfg.g_amp
            g = lambda x, y, t: amp * np.sin(4 * np.pi * x)
        specs = {
            "lid": bc.BoundarySpec(bc.ADIABATIC_NOSLIP, u_wall=lid_u, g=g),
            "wall": bc.BoundarySpec(bc.ADIABATIC_NOSLIP),
        }
    p0 = 1.0 / (gas.Ma ** 2 * gas.gamma)

    def ic(x, y):
        z = np.zeros_like(x)
        return np.ones_like(x), z, z, p0 * np.ones_like(x)

    return CaseSetup(m, gas, specs, ic, wall_tags=("lid", "wall"))


def shock_channel(cfg):
    """Density jump in a channel: adiabatic bottom wall, symmetry elsewhere."""
    gas = _gas(cfg)
    m = meshmod.bisected_quad_mesh(2 * cfg.K1D, cfg.K1D, (-2, 2, -1, 1))
    m = meshmod.tag_boundaries(m, [
        ("bottom", lambda x, y: abs(y + 1) < 1e-12),
        ("sym", lambda x, y: abs(y + 1) >= 1e-12),
    ])
    specs = {
        "bottom": bc.BoundarySpec(bc.ADIABATIC_NOSLIP),
        "sym": bc.BoundarySpec(bc.SYMMETRY),
    }
    scale = 1.0 / (gas.Ma ** 2 * gas.gamma)

    def ic(x, y):
        rho = np.where(x < 0, 5.0, 1.0)
        z = np.zeros_like(x)
        return rho, z, z, scale * rho

    return CaseSetup(m, gas, specs, ic, wall_tags=("bottom",))


def cylinder_demo(cfg):
    """Supersonic flow past a unit square obstacle (demo scale only).

    Structured multi-block grid: uniform quads covering the channel with the
    obstacle cells removed, then bisected.
    """
    gas = _gas(cfg)
    h = 0.5 / max(1, cfg.K1D // 8)        # obstacle edges must be grid lines
    x0, x1, y0, y1 = -4.0, 8.0, -4.0, 4.0
    nx = int(round((x1 - x0) / h))
    ny = int(round((y1 - y0) / h))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    elems = []
    for i in range(nx):
        for j in range(ny):
            cx = 0.5 * (xs[i] + xs[i + 1])
            cy = 0.5 * (ys[j] + ys[j + 1])
            if abs(cx) < 0.5 and abs(cy) < 0.5:
                continue
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            elems.append((a, b, c))
            elems.append((a, c, d))
    elems = np.array(elems, dtype=np.int64)
    used = np.unique(elems)
    remap = -np.ones(verts.shape[0], dtype=np.int64)
    remap[used] = np.arange(len(used))
    m = meshmod.from_vertices_elements(verts[used], remap[elems])
    m = meshmod.tag_boundaries(m, [
        ("outflow", lambda x, y: abs(x - x1) < 1e-12),
        ("farfield", lambda x, y: abs(x - x0) < 1e-12 or abs(y - y0) < 1e-12
            or abs(y - y1) < 1e-12),
        ("obstacle", lambda x, y: max(abs(x), abs(y)) < 0.5 + 1e-12),
    ])
    freestream = primitive_to_conservative(
        1.0, 1.0, 0.0, 1.0 / (gas.Ma ** 2 * gas.gamma), gas)
    specs = {
        "obstacle": bc.BoundarySpec(bc.ADIABATIC_NOSLIP),
        "farfield": bc.BoundarySpec(bc.FREESTREAM, freestream_state=freestream),
        "outflow": bc.BoundarySpec(bc.EXTRAPOLATION),
    }
    p0 = 1.0 / (gas.Ma ** 2 * gas.gamma)

    def ic(x, y):
        return (np.ones_like(x), np.ones_like(x), np.zeros_like(x),
                p0 * np.ones_like(x))

    return CaseSetup(m, gas, specs, ic, wall_tags=("obstacle",))


def custom(cfg):
    """User-supplied TRIMESH2D mesh with one boundary kind on every tag."""
    gas = _gas(cfg)
    m = meshmod.read_trimesh2d(cfg.mesh_file)
    if cfg.periodic_x:
        m = meshmod.make_periodic(m, axis=0)
    if cfg.periodic_y:
        m = meshmod.make_periodic(m, axis=1)
    kind = cfg.custom_bc
    kwargs = {}
    if kind == bc.ISOTHERMAL_NOSLIP:
        kwargs["T_wall"] = cfg.T_wall
    specs = {t: bc.BoundarySpec(kind, **kwargs) for t in m.tag_names
             if m.boundary_faces(t)}
    p0 = cfg.rho0 / (gas.Ma ** 2 * gas.gamma)

    def ic(x, y):
        ones = np.ones_like(x)
        return (cfg.rho0 * ones, cfg.u10 * ones, cfg.u20 * ones, p0 * ones)

    walls = tuple(t for t, s in specs.items() if s.kind in bc.WALL_KINDS)
    return CaseSetup(m, gas, specs, ic, wall_tags=walls)


_CASES = {
    "converge_channel": converge_channel,
    "cavity": cavity,
    "shock_channel": shock_channel,
    "cylinder_demo": cylinder_demo,
    "custom": custom,
}


def preset_case(cfg: RunConfig) -> CaseSetup:
    try:
        builder = _CASES[cfg.case]
    except KeyError:
        raise ConfigError(f"unknown case {cfg.case!r}") from None
    return builder(cfg)
