"""Pointwise gas-dynamics kernels for the nondimensional compressible
Navier-Stokes equations.

States are arrays with a trailing axis of length 4 holding the conservative
variables (rho, rho*u1, rho*u2, E); all kernels broadcast over leading axes.
Entropy variables follow the normalization v4 = -1/e (e = internal energy per
unit mass).  The flux potential psi_i = rho*u_i and entropy flux
F_i = -s*rho*u_i/(gamma-1) pair with the rescaled variables v/(gamma-1) in the
identity F_i = (v/(gamma-1))' f_i - psi_i; the factor cancels in all
scheme-level entropy balances.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InadmissibleStateError

LOG_MEAN_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class GasParams:
    """Nondimensional physical constants.

    mu = mu_star/Re and kappa = gamma*cv*mu/Pr are derived; cv is fixed by
    the Mach-number nondimensionalization.
    """

    Re: float
    Ma: float
    gamma: float = 1.4
    Pr: float = 0.72
    mu_star: float = 1.0

    def __post_init__(self):
        if not (self.gamma > 1.0):
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        for name in ("Re", "Ma", "Pr"):
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.mu_star < 0.0:
            raise ValueError(f"mu_star must be nonnegative, got {self.mu_star}")

    @property
    def mu(self):
        return self.mu_star / self.Re

    @property
    def lambda_bulk(self):
        return 2.0 * self.mu / 3.0

    @property
    def cv(self):
        return 1.0 / (self.gamma * (self.gamma - 1.0) * self.Ma ** 2)

    @property
    def kappa(self):
        return self.gamma * self.cv * self.mu / self.Pr


def admissible_mask(u):
    """True where density and internal energy are both positive."""
    rho = u[..., 0]
    rhoe = u[..., 3] - 0.5 * (u[..., 1] ** 2 + u[..., 2] ** 2) / rho
    return (rho > 0.0) & (rhoe > 0.0)


def assert_admissible(u, context=""):
    ok = admissible_mask(u)
    if not np.all(ok):
        nbad = int(np.size(ok) - np.count_nonzero(ok))
        where = f" ({context})" if context else ""
        raise InadmissibleStateError(
            f"{nbad} inadmissible state(s): nonpositive density or internal energy{where}")


def internal_energy_density(u):
    return u[..., 3] - 0.5 * (u[..., 1] ** 2 + u[..., 2] ** 2) / u[..., 0]


def pressure(u, gas):
    return (gas.gamma - 1.0) * internal_energy_density(u)


def temperature(u, gas):
    return internal_energy_density(u) / (u[..., 0] * gas.cv)


def specific_entropy(u, gas):
    """s = log(p / rho^gamma)."""
    rho = u[..., 0]
    return np.log(pressure(u, gas)) - gas.gamma * np.log(rho)


def primitive_to_conservative(rho, u1, u2, p, gas):
    rho = np.asarray(rho, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(rho <= 0.0) or np.any(p <= 0.0):
        raise InadmissibleStateError("density and pressure must be positive")
    E = p / (gas.gamma - 1.0) + 0.5 * rho * (u1 ** 2 + u2 ** 2)
    return np.stack([rho, rho * u1, rho * u2, E], axis=-1)


def conservative_to_primitive(u, gas, check=True):
    if check:
        assert_admissible(u)
    rho = u[..., 0]
    u1 = u[..., 1] / rho
    u2 = u[..., 2] / rho
    return rho, u1, u2, pressure(u, gas)


def entropy_vars(u, gas, check=True):
    """Entropy variables v = dS/du for S = -rho*s, with v4 = -1/e."""
    if check:
        assert_admissible(u)
    rho = u[..., 0]
    rhoe = internal_energy_density(u)
    s = np.log((gas.gamma - 1.0) * rhoe) - gas.gamma * np.log(rho)
    v1 = (rhoe * (gas.gamma + 1.0 - s) - u[..., 3]) / rhoe
    return np.stack([v1, u[..., 1] / rhoe, u[..., 2] / rhoe, -rho / rhoe], axis=-1)


def conservative_from_entropy(v, gas, check=True):
    v = np.asarray(v, dtype=float)
    v4 = v[..., 3]
    if check and np.any(v4 >= 0.0):
        raise InadmissibleStateError("entropy variable v4 must be negative")
    g = gas.gamma
    s = g - v[..., 0] + (v[..., 1] ** 2 + v[..., 2] ** 2) / (2.0 * v4)
    rhoe = ((g - 1.0) / (-v4) ** g) ** (1.0 / (g - 1.0)) * np.exp(-s / (g - 1.0))
    rho = -rhoe * v4
    m1 = rhoe * v[..., 1]
    m2 = rhoe * v[..., 2]
    E = rhoe * (1.0 - (v[..., 1] ** 2 + v[..., 2] ** 2) / (2.0 * v4))
    return np.stack([rho, m1, m2, E], axis=-1)


def inviscid_flux(u, gas, check=True):
    if check:
        assert_admissible(u)
    rho, u1, u2, p = conservative_to_primitive(u, gas, check=False)
    E = u[..., 3]
    f1 = np.stack([u[..., 1], u[..., 1] * u1 + p, u[..., 2] * u1, u1 * (E + p)], axis=-1)
    f2 = np.stack([u[..., 2], u[..., 1] * u2, u[..., 2] * u2 + p, u2 * (E + p)], axis=-1)
    return f1, f2


def entropy_and_potentials(u, gas, check=True):
    """Entropy S = -rho*s, entropy fluxes F_i = -s*rho*u_i/(gamma-1), and
    flux potentials psi_i = rho*u_i."""
    if check:
        assert_admissible(u)
    s = specific_entropy(u, gas)
    S = -u[..., 0] * s
    F1 = -s * u[..., 1] / (gas.gamma - 1.0)
    F2 = -s * u[..., 2] / (gas.gamma - 1.0)
    return S, F1, F2, u[..., 1], u[..., 2]


def log_mean(a, b):
    """Logarithmic mean (a-b)/(log a - log b), series branch near a == b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise InadmissibleStateError("log_mean requires positive arguments")
    zeta = a / b
    f = (zeta - 1.0) / (zeta + 1.0)
    usq = f * f
    series = (a + b) / (2.0 * (1.0 + usq * (1.0 / 3.0 + usq * (1.0 / 5.0 + usq / 7.0))))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (a - b) / (np.log(a) - np.log(b))
    out = np.where(usq < LOG_MEAN_SERIES_CUTOFF, series, direct)
    if out.ndim == 0:
        return float(out)
    return out


def ec_flux(uL, uR, gas, check=True):
    """Entropy-conservative, kinetic-energy-preserving two-point flux.

    Symmetric and consistent; satisfies the entropy-conservation condition
    (w_L - w_R)' f_i = psi_i(u_L) - psi_i(u_R) with w = v/(gamma-1).
    """
    if check:
        assert_admissible(uL)
        assert_admissible(uR)
    rL, u1L, u2L, pL = conservative_to_primitive(uL, gas, check=False)
    rR, u1R, u2R, pR = conservative_to_primitive(uR, gas, check=False)
    bL = rL / (2.0 * pL)
    bR = rR / (2.0 * pR)

    r_ln = log_mean(rL, rR)
    b_ln = log_mean(bL, bR)
    r_avg = 0.5 * (rL + rR)
    b_avg = 0.5 * (bL + bR)
    u1_avg = 0.5 * (u1L + u1R)
    u2_avg = 0.5 * (u2L + u2R)
    p_hat = r_avg / (2.0 * b_avg)
    usq_avg = 0.5 * (u1L ** 2 + u1R ** 2) + 0.5 * (u2L ** 2 + u2R ** 2)

    f1_rho = r_ln * u1_avg
    f2_rho = r_ln * u2_avg
    f1_m1 = u1_avg * f1_rho + p_hat
    f1_m2 = u2_avg * f1_rho
    f2_m1 = u1_avg * f2_rho
    f2_m2 = u2_avg * f2_rho + p_hat
    e_term = 1.0 / (2.0 * (gas.gamma - 1.0) * b_ln) - 0.5 * usq_avg
    f1_E = e_term * f1_rho + u1_avg * f1_m1 + u2_avg * f1_m2
    f2_E = e_term * f2_rho + u1_avg * f2_m1 + u2_avg * f2_m2
    f1 = np.stack([f1_rho, f1_m1, f1_m2, f1_E], axis=-1)
    f2 = np.stack([f2_rho, f2_m1, f2_m2, f2_E], axis=-1)
    return f1, f2


def viscous_K(v, gas, check=True):
    """Symmetrized viscous coefficient blocks K11, K12, K21, K22.

    Each block maps entropy-variable gradients to viscous fluxes; the
    assembled 8x8 matrix is symmetric positive semi-definite and its first
    row/column per block vanish (no mass diffusion).
    """
    v = np.asarray(v, dtype=float)
    v4 = v[..., 3]
    if check and np.any(v4 >= 0.0):
        raise InadmissibleStateError("viscous_K requires v4 < 0")
    v2 = v[..., 1]
    v3 = v[..., 2]
    mu = gas.mu
    lam = gas.lambda_bulk
    l2m = lam + 2.0 * mu
    inv_v43 = 1.0 / v4 ** 3
    v4sq = v4 ** 2

    shape = v.shape[:-1] + (4, 4)
    K11 = np.zeros(shape)
    K12 = np.zeros(shape)
    K22 = np.zeros(shape)

    K11[..., 1, 1] = -l2m * v4sq
    K11[..., 1, 3] = l2m * v2 * v4
    K11[..., 2, 2] = -mu * v4sq
    K11[..., 2, 3] = mu * v3 * v4
    K11[..., 3, 1] = l2m * v2 * v4
    K11[..., 3, 2] = mu * v3 * v4
    K11[..., 3, 3] = -(l2m * v2 ** 2 + mu * v3 ** 2 - gas.gamma * mu * v4 / gas.Pr)

    K12[..., 1, 2] = -lam * v4sq
    K12[..., 1, 3] = lam * v3 * v4
    K12[..., 2, 1] = -mu * v4sq
    K12[..., 2, 3] = mu * v2 * v4
    K12[..., 3, 1] = mu * v3 * v4
    K12[..., 3, 2] = lam * v2 * v4
    K12[..., 3, 3] = -(lam + mu) * v2 * v3

    K22[..., 1, 1] = -mu * v4sq
    K22[..., 1, 3] = mu * v2 * v4
    K22[..., 2, 2] = -l2m * v4sq
    K22[..., 2, 3] = l2m * v3 * v4
    K22[..., 3, 1] = mu * v2 * v4
    K22[..., 3, 2] = l2m * v3 * v4
    K22[..., 3, 3] = -(l2m * v3 ** 2 + mu * v2 ** 2 - gas.gamma * mu * v4 / gas.Pr)

    K11 *= inv_v43[..., None, None]
    K12 *= inv_v43[..., None, None]
    K22 *= inv_v43[..., None, None]
    K21 = np.swapaxes(K12, -1, -2).copy()
    return K11, K12, K21, K22


def sound_speed(u, gas):
    return np.sqrt(gas.gamma * pressure(u, gas) / u[..., 0])


def max_wavespeed(uL, uR, n, gas, check=True):
    """max over both states of |u.n| + c."""
    if check:
        assert_admissible(uL)
        assert_admissible(uR)
    n = np.asarray(n, dtype=float)
    n1, n2 = n[..., 0], n[..., 1]

    def one_side(u):
        rho = u[..., 0]
        un = (u[..., 1] * n1 + u[..., 2] * n2) / rho
        return np.abs(un) + sound_speed(u, gas)

    return np.maximum(one_side(uL), one_side(uR))
