"""Standard Dicke model with an optional diamagnetic term.

    H = w0 a^dag a + wa (J_z + N/2) + (2 g / sqrt(N)) (a + a^dag) J_x + D (a + a^dag)^2

In the thermodynamic limit the polariton branches follow from the quadratic
boson problem about the mean-field state; for small N the model is
diagonalized exactly in the symmetric (j = N/2) spin multiplet.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import CutoffNotConverged

BOUNDARY_TOL = 1e-9  # omega_minus / omega0 below which a point counts as critical
CUTOFF_TOL = 1e-6
CRITICAL_RTOL = 1e-12


class Phase(str, enum.Enum):
    NORMAL = "Normal"
    SUPERRADIANT = "Superradiant"


@dataclass(frozen=True)
class DickeInput:
    omega0: float
    omega_a: float
    g: float
    a2_coefficient: float = 0.0
    n_atoms: int | None = None

    def __post_init__(self) -> None:
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if not self.omega_a >= 0:
            raise ValueError("omega_a must be >= 0")
        if not self.g >= 0:
            raise ValueError("g must be >= 0")
        if not self.a2_coefficient >= 0:
            raise ValueError("a2_coefficient must be >= 0")
        if self.n_atoms is not None and (int(self.n_atoms) != self.n_atoms or self.n_atoms < 1):
            raise ValueError("n_atoms must be a positive integer")

    @property
    def omega0_dressed(self) -> float:
        """Photon 'stiffness' w0 + 4D entering the position quadrature."""
        return self.omega0 + 4 * self.a2_coefficient


@dataclass(frozen=True)
class PolaritonPair:
    omega_minus: float
    omega_plus: float
    phase: Phase
    order_photon: float = 0.0
    order_spin: float = 0.0
    at_boundary: bool = False


def srpt_critical_coupling(omega0: float, omega_a: float) -> float:
    """Critical collective coupling sqrt(omega_a omega0) / 2 (no diamagnetic term)."""
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    if not omega_a >= 0:
        raise ValueError("omega_a must be >= 0")
    return 0.5 * math.sqrt(omega_a * omega0)


def _criticality(inp: DickeInput) -> float:
    """4 g^2 - wa w0' with rounding noise (1e-12 relative) mapped to exactly 0."""
    lhs, rhs = 4 * inp.g**2, inp.omega_a * inp.omega0_dressed
    d = lhs - rhs
    return 0.0 if abs(d) <= CRITICAL_RTOL * max(lhs, rhs) else d


def is_superradiant(inp: DickeInput) -> bool:
    return _criticality(inp) > 0


def normal_branches(inp: DickeInput) -> tuple[float, float]:
    """Positive roots of W^4 - (w0 w0' + wa^2) W^2 + w0 wa (wa w0' - 4 g^2) = 0."""
    w0, wa, w0p = inp.omega0, inp.omega_a, inp.omega0_dressed
    s = w0 * w0p + wa**2
    prod = -w0 * wa * _criticality(inp)
    disc = math.sqrt(max(s * s - 4 * prod, 0.0))
    wp2 = 0.5 * (s + disc)
    # the smaller root from the product avoids cancellation
    wm2 = prod / wp2 if wp2 > 0 else 0.0
    return math.sqrt(max(wm2, 0.0)), math.sqrt(wp2)


def mean_field(inp: DickeInput) -> tuple[float, float]:
    """(photon displacement per sqrt(N), spin tilt angle theta from -z).

    The branch with <J_x> >= 0 is returned; the other is its parity image.
    """
    if not is_superradiant(inp):
        return 0.0, 0.0
    c = inp.omega_a * inp.omega0_dressed / (4 * inp.g**2)
    theta = math.acos(c)
    return inp.g * math.sin(theta) / inp.omega0_dressed, theta


def linearized_matrix(inp: DickeInput, theta: float) -> np.ndarray:
    """Jacobian of the classical equations about the mean-field point.

    Variables are (q, p, u_x, u_y, u_z) with a = sqrt(N)(q + ip)/sqrt(2) and
    u the unit collective spin; the energy per atom is
    w0 (q^2 + p^2)/2 + 2 D q^2 + wa u_z / 2 + sqrt(2) g q u_x.
    """
    w0, wa, g, w0p = inp.omega0, inp.omega_a, inp.g, inp.omega0_dressed
    s, c = math.sin(theta), math.cos(theta)
    q0 = -math.sqrt(2) * g * s / w0p
    u0 = np.array([s, 0.0, -c])
    G0 = np.array([math.sqrt(2) * g * q0, 0.0, 0.5 * wa])
    A = np.zeros((5, 5))
    A[0, 1] = w0
    A[1, 0] = -w0p
    A[1, 2] = -math.sqrt(2) * g
    # du/dt = 2 G x u
    dG_dq = np.array([math.sqrt(2) * g, 0.0, 0.0])
    A[2:, 0] = 2 * np.cross(dG_dq, u0)
    A[2:, 2:] = 2 * np.array([np.cross(G0, e) for e in np.eye(3)]).T
    return A


def _frequencies_from_matrix(A: np.ndarray) -> tuple[float, float]:
    lam = np.linalg.eigvals(A)
    w = np.sort(lam.imag[lam.imag > -1e-14])
    # three non-negative members: the longitudinal zero and the two branches
    w = np.sort(np.abs(w))[-2:]
    return float(w[0]), float(w[1])


def polariton_branches(inp: DickeInput) -> PolaritonPair:
    """Lower and upper polariton frequencies in the thermodynamic limit."""
    scale = inp.omega0
    if not is_superradiant(inp):
        wm, wp = normal_branches(inp)
        boundary = wm < BOUNDARY_TOL * scale
        return PolaritonPair(0.0 if boundary else wm, wp, Phase.NORMAL, at_boundary=boundary)
    alpha, theta = mean_field(inp)
    wm, wp = _frequencies_from_matrix(linearized_matrix(inp, theta))
    boundary = wm < BOUNDARY_TOL * scale
    return PolaritonPair(
        0.0 if boundary else wm,
        wp,
        Phase.SUPERRADIANT,
        order_photon=alpha,
        order_spin=math.sin(theta),
        at_boundary=boundary,
    )


def branches_vs_nu(eta: float, nu_grid, a2: bool = False) -> list[tuple[float, PolaritonPair]]:
    """Branches in units of omega0 along omega_a/omega0 at fixed g/omega0.

    With ``a2`` the diamagnetic coefficient is D = g^2/omega_a.
    """
    out = []
    for nu in nu_grid:
        nu = float(nu)
        D = eta**2 / nu if (a2 and nu > 0) else 0.0
        out.append((nu, polariton_branches(DickeInput(1.0, nu, eta, D))))
    return out


def dicke_hamiltonian(inp: DickeInput, boson_cutoff: int) -> np.ndarray:
    """Dense Hamiltonian on Fock(0..cutoff-1) x {|N/2, m>}, photon index slow."""
    N = inp.n_atoms
    if N is None:
        raise ValueError("n_atoms is required for exact diagonalization")
    j = N / 2
    m = np.arange(-j, j + 1)
    jp = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))  # <m+1|J+|m>
    Jx = np.zeros((N + 1, N + 1))
    Jx[np.arange(1, N + 1), np.arange(N)] = 0.5 * jp
    Jx += Jx.T
    n = np.arange(boson_cutoff)
    a = np.diag(np.sqrt(n[1:]), 1)
    X = a + a.T
    Is, Ib = np.eye(N + 1), np.eye(boson_cutoff)
    H = np.kron(np.diag(inp.omega0 * n), Is)
    H += np.kron(Ib, np.diag(inp.omega_a * (m + j)))
    H += (2 * inp.g / math.sqrt(N)) * np.kron(X, Jx)
    if inp.a2_coefficient:
        H += inp.a2_coefficient * np.kron(X @ X, Is)
    return H


def photon_parity(inp: DickeInput, boson_cutoff: int) -> np.ndarray:
    """Diagonal of exp(i pi (a^dag a + J_z + N/2)) in the product basis."""
    N = inp.n_atoms
    n = np.arange(boson_cutoff)[:, None]
    k = np.arange(N + 1)[None, :]
    return ((-1.0) ** (n + k)).ravel()


def _low_levels(inp: DickeInput, cutoff: int, k: int) -> np.ndarray:
    from scipy.linalg import eigh

    H = dicke_hamiltonian(inp, cutoff)
    return eigh(H, eigvals_only=True, subset_by_index=[0, min(k, H.shape[0] - 1)])


def ed_oracle(inp: DickeInput, boson_cutoff: int = 40, k: int = 4) -> np.ndarray:
    """First ``k`` excitation energies E_n - E_0 from exact diagonalization.

    The cutoff is checked by doubling: if any returned level moves by more
    than 1e-6 omega0, :class:`CutoffNotConverged` is raised.
    """
    if inp.n_atoms is None or inp.n_atoms > 12:
        raise ValueError("n_atoms must be given and at most 12")
    if boson_cutoff < 2:
        raise ValueError("boson_cutoff must be >= 2")
    e1 = _low_levels(inp, boson_cutoff, k)
    e2 = _low_levels(inp, 2 * boson_cutoff, k)
    shift = float(np.max(np.abs(e1 - e2)))
    if shift > CUTOFF_TOL * inp.omega0:
        raise CutoffNotConverged(
            f"doubling the boson cutoff {boson_cutoff} shifts levels by {shift:.3e} "
            f"(> {CUTOFF_TOL:g} omega0)"
        )
    return e2[1:] - e2[0]
