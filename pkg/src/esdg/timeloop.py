"""Adaptive Dormand-Prince 5(4) time integration with per-step entropy and
conservation diagnostics.
"""

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InadmissibleStateError, StepSizeError

# Dormand-Prince 5(4) tableau; the last stage row equals the 5th-order
# weights (FSAL), so an accepted step reuses its final evaluation.
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
DP_ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                   -17253 / 339200, 22 / 525, -1 / 40])
NUM_STAGES = 7


@dataclass
class IntegratorConfig:
    t_final: float
    abs_tol: float = 1e-7
    rel_tol: float = 1e-7
    dt_init: Optional[float] = None
    dt_max: float = np.inf
    safety: float = 0.9
    diagnostics_stride: int = 1
    dt_fixed: Optional[float] = None
    dt_min_factor: float = 1e-14   # underflow threshold relative to t_final

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.dt_init is not None and self.dt_init <= 0:
            raise ValueError("dt_init must be positive")
        if self.dt_max <= 0:
            raise ValueError("dt_max must be positive")


@dataclass
class DiagnosticsRecord:
    t: float
    r: float
    boundary_term: float
    entropy: float
    mass: float
    mom1: float
    mom2: float
    energy: float
    e_wall: float
    dt: float
    rejections: int
    gv: float = 0.0
    ktt: float = 0.0

    CSV_FIELDS = ("t", "r", "boundary_term", "entropy", "mass", "mom1",
                  "mom2", "energy", "e_wall", "dt", "rejections")

    def csv_row(self):
        vals = [getattr(self, f) for f in self.CSV_FIELDS]
        return [f"{v:.17g}" if isinstance(v, float) else str(v) for v in vals]


def write_diagnostics_csv(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DiagnosticsRecord.CSV_FIELDS)
        for rec in records:
            writer.writerow(rec.csv_row())


def dp54_step(f, t, y, dt, k1):
    """One embedded 5(4) step; returns (y5, error_estimate, k_last).

    k1 = f(t, y) must be supplied (FSAL reuse); k_last = f(t+dt, y5).
    """
    ks = [k1]
    with np.errstate(invalid="ignore", over="ignore"):
        for s in range(1, NUM_STAGES):
            ys = y + dt * sum(a * k for a, k in zip(DP_A[s], ks))
            ks.append(f(t + DP_C[s] * dt, ys))
        y5 = ys  # stage 7 state equals the 5th-order solution (FSAL row)
        err = dt * sum(e * k for e, k in zip(DP_ERR, ks))
    return y5, err, ks[-1]


def error_norm(err, y, abs_tol, rel_tol):
    """Weighted RMS norm over all solution entries."""
    w = abs_tol + rel_tol * np.abs(y)
    with np.errstate(invalid="ignore", over="ignore"):
        return float(np.sqrt(np.mean((err / w) ** 2)))


def _new_dt(dt, norm, safety, dt_max):
    if not np.isfinite(norm):
        return min(0.2 * dt, dt_max)
    with np.errstate(divide="ignore", over="ignore"):
        factor = safety * norm ** (-0.2) if norm > 0 else 5.0
    return min(dt * min(5.0, max(0.2, factor)), dt_max)


def dataclasses_replace_dt(cfg, dt_init):
    import dataclasses
    return dataclasses.replace(cfg, dt_init=float(dt_init))


@dataclass
class IntegrationResult:
    t: float
    y: np.ndarray
    steps: int
    rejections: int
    evals: int
    status: str = "finished"


def estimate_initial_dt(f, t0, y0, cfg):
    """Crude first-step guess from the RHS magnitude; refined by the
    controller within a few steps."""
    k1 = f(t0, y0)
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((k1 / scale) ** 2))
    dt = 0.01 * d0 / d1 if d0 > 1e-10 and d1 > 1e-10 else 1e-6
    return min(dt, cfg.t_final - t0, cfg.dt_max), k1


def integrate(f, y0, t0, cfg, on_accept=None, dt_cap_fn=None):
    """Advance y' = f(t, y) from t0 to cfg.t_final.

    on_accept(t, y, dt_used, rejections) is called after every accepted
    step.  Rejected steps never mutate the state.  Raises StepSizeError on
    dt underflow.  dt_cap_fn(y), when given, bounds the step size from the
    current state (a stability cap for method-of-lines systems whose error
    estimate vanishes on near-steady data).
    """
    t = t0
    y = np.array(y0, dtype=float, copy=True)
    if cfg.dt_fixed is not None:
        k1 = f(t, y)
        steps = rejections = 0
        evals = 1
        while t < cfg.t_final - 1e-14 * max(1.0, abs(cfg.t_final)):
            dt = min(cfg.dt_fixed, cfg.t_final - t)
            y, _, k_last = dp54_step(f, t, y, dt, k1)
            evals += NUM_STAGES - 1
            t += dt
            k1 = k_last
            steps += 1
            if on_accept is not None:
                on_accept(t, y, dt, 0)
        return IntegrationResult(t=t, y=y, steps=steps, rejections=0, evals=evals)

    if cfg.dt_init is not None:
        dt = min(cfg.dt_init, cfg.t_final - t0, cfg.dt_max)
        k1 = f(t, y)
    else:
        dt, k1 = estimate_initial_dt(f, t0, y0, cfg)
    evals = 1
    steps = rejections = 0
    dt_floor = cfg.dt_min_factor * max(abs(cfg.t_final - t0), 1e-30)
    dt_cap = dt_cap_fn(y) if dt_cap_fn is not None else np.inf
    while t < cfg.t_final - 1e-14 * max(1.0, abs(cfg.t_final)):
        dt = min(dt, cfg.t_final - t, dt_cap)
        if dt < dt_floor:
            raise StepSizeError(
                f"time step underflow: dt={dt:.3e} at t={t:.6e} "
                f"({rejections} rejections); likely stiffness or positivity loss")
        try:
            y_new, err, k_last = dp54_step(f, t, y, dt, k1)
        except InadmissibleStateError:
            # positivity loss within a trial stage aborts the step; the run
            # aborts (no limiting) once dt underflows
            rejections += 1
            dt *= 0.2
            continue
        evals += NUM_STAGES - 1
        norm = error_norm(err, y, cfg.abs_tol, cfg.rel_tol)
        if norm <= 1.0:
            t += dt
            y = y_new
            k1 = k_last
            steps += 1
            dt_used = dt
            dt = _new_dt(dt, norm, cfg.safety, cfg.dt_max)
            if dt_cap_fn is not None:
                dt_cap = dt_cap_fn(y)
            if on_accept is not None:
                on_accept(t, y, dt_used, rejections)
        else:
            rejections += 1
            dt = _new_dt(dt, norm, cfg.safety, cfg.dt_max)
    return IntegrationResult(t=t, y=y, steps=steps, rejections=rejections, evals=evals)


@dataclass
class SimulationOutput:
    records: list
    final_state: np.ndarray
    t_final: float
    status: str
    steps: int = 0
    rejections: int = 0


def run_simulation(disc, coeffs0, cfg, wall_tags=(), snapshot_times=(),
                   snapshot_writer=None, assert_identity_tol=None):
    """Integrate the semi-discretization, collecting diagnostics per stride.

    The entropy residual r(t) is read from the final RHS evaluation of each
    accepted step (the FSAL stage, evaluated at the accepted state).  If
    assert_identity_tol is set, |r - boundary_term| is checked against
    tol * scale after every record and violations abort the run.
    """
    records = []
    pending_snapshots = sorted(snapshot_times)
    state = {"count": 0, "rej_prev": 0}
    if cfg.dt_init is None:
        cfg = dataclasses_replace_dt(cfg, disc.stable_dt_estimate(coeffs0))

    def rhs(t, y):
        return disc.rhs(t, y)

    # explicit method-of-lines stability cap: keeps the controller from
    # drifting past the acoustic CFL bound on quiescent states, where the
    # embedded error estimate vanishes
    def dt_cap(y):
        return 1.3 * disc.stable_dt_estimate(y)

    def on_accept(t, y, dt_used, rejections):
        state["count"] += 1
        while pending_snapshots and t >= pending_snapshots[0] - 1e-12:
            if snapshot_writer is not None:
                snapshot_writer(pending_snapshots[0], y)
            pending_snapshots.pop(0)
        if state["count"] % cfg.diagnostics_stride:
            return
        d = disc.last_diag
        totals = disc.conservation_totals(y)
        e_wall = disc.wall_error(y, wall_tags) if wall_tags else 0.0
        rec = DiagnosticsRecord(
            t=t, r=d.residual, boundary_term=d.boundary_term,
            entropy=disc.total_entropy(y),
            mass=float(totals[0]), mom1=float(totals[1]),
            mom2=float(totals[2]), energy=float(totals[3]),
            e_wall=float(e_wall), dt=dt_used,
            rejections=rejections - state["rej_prev"],
            gv=d.gv, ktt=d.ktt)
        state["rej_prev"] = rejections
        if not np.isfinite([rec.r, rec.entropy, rec.mass, rec.energy]).all():
            raise StepSizeError(f"non-finite diagnostics at t={t:.6e}")
        records.append(rec)
        if assert_identity_tol is not None and disc.entropy_identity_valid:
            mismatch = abs(rec.r - rec.boundary_term)
            if disc.viscous_penalty:
                ok = rec.r <= rec.boundary_term + assert_identity_tol * d.scale
            else:
                ok = mismatch <= assert_identity_tol * d.scale
            if not ok:
                raise StepSizeError(
                    f"entropy-identity violation at t={t:.6e}: "
                    f"r={rec.r:.3e} boundary={rec.boundary_term:.3e}")

    result = integrate(rhs, coeffs0, 0.0, cfg, on_accept=on_accept,
                       dt_cap_fn=dt_cap)
    return SimulationOutput(records=records, final_state=result.y,
                            t_final=result.t, status=result.status,
                            steps=result.steps, rejections=result.rejections)
