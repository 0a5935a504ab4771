"""Mapping of the spin model onto the extended Dicke Hamiltonian.

The Fe subsystem is described by two magnon modes (qFM at k = 0 and qAFM at
k = pi) about the canted reference state, and the Er spins by collective
operators. The closed-form quantities here follow the usual two-sublattice
spin-wave treatment; the spin-wave coefficients a, b, c, d are in Tesla
(energies divided by ``g_Fe_x mu_B``).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .constants import HBAR
from .errors import NegativeDiscriminant
from .params import ModelParams
from .resonance import _two_fold, linearization_matrix, transverse_basis
from .spin_model import Environment, MeanFieldState, self_consistent_solve


@dataclass
class DickeParams:
    omega_qFM: float  # THz
    omega_qAFM: float  # THz
    E_x: float  # meV
    E_y: float  # meV
    g_x: float  # meV
    g_y: float
    g_yp: float
    g_z: float
    g_zp: float
    dilution_x: float
    beta0: float  # rad
    abcd: tuple[float, float, float, float]  # T

    def as_dict(self) -> dict:
        d = asdict(self)
        a, b, c, dd = d.pop("abcd")
        d.update(a=a, b=b, c=c, d=dd)
        return d


def canting_angle(params: ModelParams) -> float:
    """Equilibrium canting of the Fe sublattices from the antiferromagnetic axis."""
    p = params
    den = p.z_Fe * p.J_Fe - p.A_Fe_x + p.A_Fe_z
    if den == 0:
        raise ValueError("z_Fe J_Fe - A_Fe_x + A_Fe_z must be nonzero")
    return -0.5 * math.atan(p.z_Fe * p.D_Fe_y / den)


def spin_wave_coefficients(params: ModelParams) -> tuple[float, float, float, float]:
    p = params
    beta = canting_angle(p)
    pre = p.S_Fe / (p.g_Fe_x * p.mu_B)
    zJ, zD = p.z_Fe * p.J_Fe, p.z_Fe * p.D_Fe_y
    c2, s2 = math.cos(2 * beta), math.sin(2 * beta)
    a = pre * (-p.A_Fe_z - p.A_Fe_x - (zJ + p.A_Fe_z - p.A_Fe_x) * c2 + zD * s2)
    b = pre * zJ
    c = pre * ((zJ + 2 * p.A_Fe_z - 2 * p.A_Fe_x) * c2 + zD * s2)
    d = pre * (-zJ * c2 - zD * s2)
    return a, b, c, d


def magnon_dispersion(params: ModelParams, k: float) -> float:
    """Magnon frequency (THz) at wave number ``k``; k = 0 is qFM, k = pi is qAFM."""
    a, b, c, d = spin_wave_coefficients(params)
    ck = math.cos(k)
    rad = (b * ck - a) * (d * ck + c)
    if rad < 0:
        raise NegativeDiscriminant(f"negative spin-wave discriminant {rad:.3e} T^2 at k={k}")
    omega = params.g_Fe_x * params.mu_B * math.sqrt(rad) / HBAR
    return omega / (2 * math.pi)


def exchange_energies(params: ModelParams) -> tuple[float, float]:
    """(E_x, E_y) in meV: the static Fe exchange fields acting on the Er spins."""
    p = params
    beta = canting_angle(p)
    S = p.S_Fe
    E_x = 4 * S * (p.J * math.sin(beta) + p.D_y * math.cos(beta))
    E_y = -4 * S * p.D_x * math.cos(beta)
    return E_x, E_y


def dilution(params: ModelParams, env: Environment) -> float:
    """Thermal dilution factor ``tanh(|E_x + mu_B g_Er_x B| / 2 k_B T)``."""
    E_x, _ = exchange_energies(params)
    num = abs(E_x + params.mu_B * params.g_Er_x * env.B_dc)
    if env.temperature == 0:
        return 1.0 if num > 0 else 0.0
    return math.tanh(num / (2 * params.k_B * env.temperature))


def _fourth_root(num: float, den: float, name: str) -> float:
    if den == 0 or num / den < 0:
        raise NegativeDiscriminant(f"{name}: ratio {num}/{den} is not positive")
    return (num / den) ** 0.25


def dicke_parameters(params: ModelParams, env: Environment) -> DickeParams:
    p = params
    x = dilution(p, env)
    beta = canting_angle(p)
    a, b, c, d = spin_wave_coefficients(p)
    E_x, E_y = exchange_energies(p)
    sb, cb = math.sin(beta), math.cos(beta)
    pre = math.sqrt(x * p.S_Fe)
    r_pi = _fourth_root(b + a, d - c, "(b+a)/(d-c)")
    r_0 = _fourth_root(d + c, b - a, "(d+c)/(b-a)")
    return DickeParams(
        omega_qFM=magnon_dispersion(p, 0.0),
        omega_qAFM=magnon_dispersion(p, math.pi),
        E_x=E_x,
        E_y=E_y,
        g_x=pre * (p.J * cb - p.D_y * sb) * r_pi,
        g_y=pre * p.J * r_0,
        g_yp=pre * p.D_x * sb * r_pi,
        g_z=pre * p.D_x / r_pi,
        g_zp=pre * (-p.J * sb - p.D_y * cb) / r_0,
        dilution_x=x,
        beta0=beta,
        abcd=(a, b, c, d),
    )


def normalized_coupling(dp: DickeParams) -> float:
    """eta = g_z / (hbar omega_qAFM).

    ``g_z`` couples the qAFM mode to the staggered Er z component, the
    operator that orders in the superradiant phase.
    """
    return dp.g_z / (HBAR * 2 * math.pi * dp.omega_qAFM)


def bare_er_frequency(params: ModelParams, env: Environment, state: MeanFieldState | None = None) -> float:
    """Er out-of-phase frequency (THz) with the Fe fluctuations frozen.

    The linearized dynamics are restricted to the two Er sublattices
    (Zeeman, static Fe exchange field and Er anisotropy and exchange, all
    evaluated on the mean-field state). Of the two Er modes the one even
    under the A <-> B two-fold operation is returned.
    """
    if state is None:
        state = self_consistent_solve(params, env)
    M = linearization_matrix(state, params, env)
    P = transverse_basis(state)[:6, :4]
    lam, vec = np.linalg.eig(P.T @ M[:6, :6] @ P)
    vec = P @ vec
    best, best_par = float("nan"), -np.inf
    for k in np.flatnonzero(lam.imag > 0):
        v = np.concatenate([vec[:, k], np.zeros(6)])
        par = np.real(np.vdot(v, _two_fold(v))) / np.vdot(v, v).real
        if par > best_par:
            best, best_par = lam[k].imag / HBAR / (2 * math.pi), par
    return float(best)


def mapped_ratio(params: ModelParams, env: Environment, state: MeanFieldState | None = None) -> float:
    """nu = omega_a / omega_0 with omega_a from :func:`bare_er_frequency` and
    omega_0 the bare qAFM frequency."""
    return bare_er_frequency(params, env, state) / magnon_dispersion(params, math.pi)
