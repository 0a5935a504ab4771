"""Mean-field treatment of the two-sublattice Fe / Er spin Hamiltonian.

The state is the 12-vector ``m = (s_A, s_B, S_A, S_B)`` with components
ordered (x, y, z), x along a, y along b and z along c. The mean-field energy
per unit cell is the quadratic form

    E(m) = 1/2 m.K.m + h0.m

with ``K`` assembled by :func:`interaction_matrix` and ``h0`` the Zeeman
term of a field applied along x. The effective (exchange) field on each
sublattice is ``h = dE/dm = K m + h0`` in meV and each spin points
antiparallel to it.

Conventions, fixed so that the closed-form canting angle and spin-wave
coefficients of the Fe subsystem are reproduced exactly:

* Fe-Fe: ``z_Fe J_Fe S_A.S_B - z_Fe D_Fe_y (S_A x S_B)_y - sum A_Fe S^2``.
* Er-Er: ``2 z_Er J_Er s_A.s_B``.
* Er single-ion anisotropy is summed over both Fe sublattices, so it enters
  twice: ``-2 sum A_Er s^2``.
* Er-Fe: ``2 sum_{s,s'} [J s^s.S^s' + D^{ss'}.(s^s x S^s')]`` with
  ``D^{ss'} = (+-D_x, +-D_y, 0)``; the x sign is + for equal sublattice
  labels, the y sign is + when the Fe sublattice is A.
* The Lande tensors enter through the Zeeman term only, so the dynamics
  stay Hamiltonian.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import NonConvergence
from .params import ModelParams

log = logging.getLogger(__name__)

ER_A, ER_B, FE_A, FE_B = 0, 1, 2, 3
SUBLATTICES = ("s_A", "s_B", "S_A", "S_B")

# Damped fixed point tolerances
TOL = 1e-10
MAX_ITER = 100_000
# Order-parameter threshold separating the two phases.
OP_THRESHOLD = 1e-4


@dataclass(frozen=True)
class Environment:
    temperature: float  # K
    B_dc: float = 0.0  # T, along x

    def __post_init__(self) -> None:
        if not self.temperature >= 0:
            raise ValueError("temperature must be >= 0")


@dataclass
class MeanFieldState:
    s_A: np.ndarray
    s_B: np.ndarray
    S_A: np.ndarray
    S_B: np.ndarray
    converged: bool = False
    residual: float = float("inf")
    iterations: int = 0
    free_energy: float = float("nan")
    multi_minima: bool = False
    candidates: list = field(default_factory=list, repr=False)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.s_A, self.s_B, self.S_A, self.S_B])

    @classmethod
    def from_vector(cls, m: np.ndarray, **kw) -> "MeanFieldState":
        m = np.asarray(m, dtype=float)
        return cls(m[0:3].copy(), m[3:6].copy(), m[6:9].copy(), m[9:12].copy(), **kw)


def _skew(v: np.ndarray) -> np.ndarray:
    """Matrix of the cross product, ``_skew(v) @ u == v x u``."""
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _block(i: int) -> slice:
    return slice(3 * i, 3 * i + 3)


@lru_cache(maxsize=256)
def _interaction_matrix_cached(params: ModelParams) -> np.ndarray:
    p = params
    K = np.zeros((12, 12))
    I3 = np.eye(3)

    # Fe-Fe exchange and DM, written as S_A^T X S_B
    fefe = p.z_Fe * p.J_Fe * I3
    c = -p.z_Fe * p.D_Fe_y
    fefe[2, 0] += c
    fefe[0, 2] -= c
    K[_block(FE_A), _block(FE_B)] += fefe

    fe_aniso = -2.0 * np.array([[p.A_Fe_x, 0, p.A_Fe_xz], [0, 0, 0], [p.A_Fe_xz, 0, p.A_Fe_z]])
    er_aniso = -4.0 * np.array([[p.A_Er_x, 0, p.A_Er_xz], [0, 0, 0], [p.A_Er_xz, 0, p.A_Er_z]])
    for f in (FE_A, FE_B):
        K[_block(f), _block(f)] += fe_aniso
    for e in (ER_A, ER_B):
        K[_block(e), _block(e)] += er_aniso

    K[_block(ER_A), _block(ER_B)] += 2.0 * p.z_Er * p.J_Er * I3

    # D.(s x S) = s^T (-[D]x) S
    for e in (ER_A, ER_B):
        for f in (FE_A, FE_B):
            same = (e == ER_A) == (f == FE_A)
            D = np.array([p.D_x if same else -p.D_x, p.D_y if f == FE_A else -p.D_y, 0.0])
            K[_block(e), _block(f)] += 2.0 * (p.J * I3 - _skew(D))

    # mirror the upper off-diagonal blocks
    for i in range(4):
        for j in range(i + 1, 4):
            K[_block(j), _block(i)] = K[_block(i), _block(j)].T
    K.setflags(write=False)
    return K


def interaction_matrix(params: ModelParams) -> np.ndarray:
    """Symmetric 12x12 Hessian of the mean-field energy (meV)."""
    return _interaction_matrix_cached(params)


def zeeman_vector(params: ModelParams, B_dc: float) -> np.ndarray:
    h0 = np.zeros(12)
    h0[[0, 3]] = params.mu_B * params.g_Er_x * B_dc
    h0[[6, 9]] = params.mu_B * params.g_Fe_x * B_dc
    return h0


def spin_lengths(params: ModelParams) -> np.ndarray:
    return np.array([params.s_Er, params.s_Er, params.S_Fe, params.S_Fe])


def mean_field_energy(m: np.ndarray, params: ModelParams, env: Environment) -> float:
    """Classical energy per unit cell (meV) of the state vector ``m``."""
    K = interaction_matrix(params)
    return float(0.5 * m @ K @ m + zeeman_vector(params, env.B_dc) @ m)


def effective_fields(m: np.ndarray, params: ModelParams, env: Environment) -> np.ndarray:
    """Energy gradient dE/dm (meV), one 3-vector per sublattice, shape (4, 3)."""
    h = interaction_matrix(params) @ m + zeeman_vector(params, env.B_dc)
    return h.reshape(4, 3)


def local_fields(state: MeanFieldState, params: ModelParams, env: Environment):
    """Local fields in Tesla on (Er A, Er B, Fe A, Fe B).

    The meV effective field is divided by ``mu_B g_x`` of the species so that
    a bare applied field is returned unchanged.
    """
    h = effective_fields(state.vector, params, env)
    scale = params.mu_B * np.array([params.g_Er_x, params.g_Er_x, params.g_Fe_x, params.g_Fe_x])
    B = h / scale[:, None]
    return tuple(B[i] for i in range(4))


def brillouin(S: float, x):
    """Brillouin function B_S(x); odd, with a series branch near zero."""
    x = np.asarray(x, dtype=float)
    a = (2 * S + 1) / (2 * S)
    b = 1 / (2 * S)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    with np.errstate(over="ignore"):
        full = a / np.tanh(a * xs) - b / np.tanh(b * xs)
    series = (S + 1) / (3 * S) * x
    out = np.where(small, series, full)
    return out if out.ndim else float(out)


def _magnitudes(hn: np.ndarray, lengths: np.ndarray, params: ModelParams, T: float) -> np.ndarray:
    if T == 0:
        return lengths.copy()
    kT = params.k_B * T
    mags = np.empty(4)
    # Er: S B_{1/2}(S|h|/kT) = 1/2 tanh(|h|/2kT)
    mags[:2] = lengths[:2] * np.tanh(lengths[:2] * hn[:2] / kT)
    mags[2:] = lengths[2:] * brillouin(params.S_Fe, lengths[2:] * hn[2:] / kT)
    return mags


def _brillouin_slope(S: float, x: np.ndarray) -> np.ndarray:
    a = (2 * S + 1) / (2 * S)
    b = 1 / (2 * S)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    with np.errstate(over="ignore"):
        full = b**2 / np.sinh(b * xs) ** 2 - a**2 / np.sinh(a * xs) ** 2
    return np.where(small, (S + 1) / (3 * S), full)


def _magnitude_slopes(hn: np.ndarray, lengths: np.ndarray, params: ModelParams, T: float) -> np.ndarray:
    """d|m_i| / d|h_i| for the closure magnitudes."""
    if T == 0:
        return np.zeros(4)
    kT = params.k_B * T
    out = np.empty(4)
    # sech^2 x = 4 e^{-2|x|} / (1 + e^{-2|x|})^2 does not overflow
    q = np.exp(-2 * np.abs(lengths[:2] * hn[:2] / kT))
    out[:2] = lengths[:2] ** 2 / kT * 4 * q / (1 + q) ** 2
    out[2:] = lengths[2:] ** 2 / kT * _brillouin_slope(params.S_Fe, lengths[2:] * hn[2:] / kT)
    return out


class _Closure:
    """Self-consistency map with K and h0 precomputed for one (params, env)."""

    def __init__(self, params: ModelParams, env: Environment):
        self.params = params
        self.T = env.temperature
        self.K = interaction_matrix(params)
        self.h0 = zeeman_vector(params, env.B_dc)
        self.lengths = spin_lengths(params)

    def __call__(self, m: np.ndarray) -> np.ndarray:
        h = (self.K @ m + self.h0).reshape(4, 3)
        hn = np.sqrt(np.einsum("ij,ij->i", h, h))
        mags = _magnitudes(hn, self.lengths, self.params, self.T)
        safe = np.where(hn > 0, hn, 1.0)
        return (-(mags / safe)[:, None] * h).ravel()

    def jacobian(self, m: np.ndarray) -> np.ndarray:
        """d closure / d m, exact."""
        h = (self.K @ m + self.h0).reshape(4, 3)
        hn = np.sqrt(np.einsum("ij,ij->i", h, h))
        mags = _magnitudes(hn, self.lengths, self.params, self.T)
        slopes = _magnitude_slopes(hn, self.lengths, self.params, self.T)
        J = np.zeros((12, 12))
        for i in range(4):
            rows = slice(3 * i, 3 * i + 3)
            if hn[i] == 0:
                # isotropic linear response at zero field
                D = -slopes[i] * np.eye(3)
            else:
                u = h[i] / hn[i]
                uu = np.outer(u, u)
                D = -(slopes[i] * uu + mags[i] / hn[i] * (np.eye(3) - uu))
            J[rows] = D @ self.K[rows]
        return J


def closure(m: np.ndarray, params: ModelParams, env: Environment) -> np.ndarray:
    """One self-consistency step: each spin antiparallel to its local field."""
    return _Closure(params, env)(np.asarray(m, dtype=float))


def _log_sinh_ratio(y: np.ndarray, S: np.ndarray) -> np.ndarray:
    """ln[sinh((2S+1) y) / sinh(y)] for y >= 0, stable at both ends."""
    n = 2 * S + 1
    out = np.empty_like(y)
    small = y < 1e-6
    # ratio -> n (1 + (n^2 - 1) y^2 / 6)
    out[small] = np.log(n[small]) + (n[small] ** 2 - 1) * y[small] ** 2 / 6

    def lsinh(u):
        return u + np.log1p(-np.exp(-2 * u)) - np.log(2.0)

    yl = y[~small]
    out[~small] = lsinh(n[~small] * yl) - lsinh(yl)
    return out


def free_energy(state: MeanFieldState | np.ndarray, params: ModelParams, env: Environment) -> float:
    """Mean-field free energy per unit cell (meV).

    ``F = E(m) - h.m - k_B T sum_i ln Z_i(|h_i|)``, which equals
    ``-1/2 m.K.m - k_B T sum ln Z_i`` at self-consistency. At T = 0 this
    reduces to the classical energy.
    """
    m = state.vector if isinstance(state, MeanFieldState) else np.asarray(state, float)
    E = mean_field_energy(m, params, env)
    T = env.temperature
    if T == 0:
        return E
    h = effective_fields(m, params, env)
    hn = np.linalg.norm(h, axis=1)
    kT = params.k_B * T
    lnZ = _log_sinh_ratio(hn / (2 * kT), spin_lengths(params))
    return float(E - h.ravel() @ m - kT * lnZ.sum())


def order_parameters(state: MeanFieldState) -> tuple[float, float]:
    """(fe_op, er_op) = (<S_y^A>, <s_z^A - s_z^B>)."""
    return float(state.S_A[1]), float(state.s_A[2] - state.s_B[2])


def mirror(m: np.ndarray) -> np.ndarray:
    """Exact symmetry of the Hamiltonian for a field along x.

    Exchanges the two Er sublattices and flips every y component. On the
    canted states it reverses both order parameters, mapping one
    superradiant domain onto the other.
    """
    m = np.asarray(m, dtype=float).reshape(4, 3)
    out = m[[ER_B, ER_A, FE_A, FE_B]].copy()
    out[:, 1] *= -1
    return out.ravel()


def _canted_fe(params: ModelParams, rot: float) -> np.ndarray:
    """Fe sublattices canted toward +x and rotated by ``rot`` toward y."""
    S = params.S_Fe
    beta = 0.01
    SA = S * np.array([np.sin(beta), np.sin(rot) * np.cos(beta), -np.cos(rot) * np.cos(beta)])
    SB = S * np.array([np.sin(beta), -np.sin(rot) * np.cos(beta), np.cos(rot) * np.cos(beta)])
    return np.concatenate([SA, SB])


def default_seeds(params: ModelParams, seed: int = 0) -> list[np.ndarray]:
    """Gamma_2, Gamma_12, mirrored Gamma_12 and three random states."""
    s = params.s_Er
    g2 = np.concatenate([[-s, 0, 0, -s, 0, 0], _canted_fe(params, 0.0)])
    g12 = np.concatenate([[0.1 * s, 0, 0.9 * s, 0.1 * s, 0, -0.9 * s], _canted_fe(params, 0.5)])
    seeds = [g2, g12, mirror(g12)]
    rng = np.random.default_rng(seed)
    lengths = np.repeat(spin_lengths(params), 3)
    for _ in range(3):
        v = rng.normal(size=(4, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        seeds.append(v.ravel() * lengths)
    return seeds


def _fixed_point(m, step, tol, max_iter, first_polish=20):
    """Damped iteration with mixing 0.5, halved when successive steps reverse.

    Near a second-order boundary the contraction rate of the plain iteration
    tends to one, so at iterations 20, 40, 80, ... a Newton polish is
    attempted from the current iterate and accepted if it satisfies the same
    step criterion. Returns (m, residual, iterations).
    """
    mix = 0.5
    last = None
    d = np.inf
    next_polish = first_polish
    for it in range(1, max_iter + 1):
        new = step(m)
        delta = new - m
        d = float(np.max(np.abs(delta)))
        if d < tol:
            return new, d, it
        if last is not None and delta @ last < 0 and mix > 1 / 64:
            mix *= 0.5
        last = delta
        m = m + mix * delta
        if it == next_polish:
            next_polish *= 2
            mp = _newton(m, step, tol)
            if mp is not None:
                return mp[0], mp[1], it + mp[2]
    return m, d, max_iter


def _newton(m, step, tol, max_iter=50):
    """Undamped Newton iteration on closure(m) - m with the exact Jacobian.

    Converges quadratically away from a critical point and linearly at it.
    Returns (m, residual, iterations) on success, otherwise None.
    """
    I = np.eye(m.size)
    for k in range(1, max_iter + 1):
        G = step(m) - m
        r = float(np.max(np.abs(G)))
        if not np.isfinite(r) or r > 1e3:
            return None
        if r < tol:
            # returning the closure image keeps every spin exactly antiparallel to its field
            return step(m), r, k
        try:
            m = m + np.linalg.solve(step.jacobian(m) - I, -G)
        except np.linalg.LinAlgError:
            return None
    return None


def _gauge_key(m: np.ndarray) -> tuple:
    er_op = m[2] - m[5]
    return (round(er_op, 6), round(m[6] + m[9], 6), round(m[7], 6))


def self_consistent_solve(
    params: ModelParams,
    env: Environment,
    seed_set: Sequence[np.ndarray] | None = None,
    *,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    seed: int = 0,
) -> MeanFieldState:
    """Solve the self-consistency equations from every seed.

    Returns the converged state with the lowest free energy. Degenerate
    minima (free-energy difference below 1e-8 meV with different order
    parameters) set ``multi_minima``; the representative with positive Er
    order parameter is returned.
    """
    if seed_set is None:
        seed_set = default_seeds(params, seed)
    seed_set = list(seed_set)
    if not seed_set:
        raise ValueError("seed_set must not be empty")

    step = _Closure(params, env)
    results = []
    worst = (np.inf, 0)
    for s0 in seed_set:
        m, res, it = _fixed_point(np.asarray(s0, float).copy(), step, tol, max_iter)
        if res < tol:
            results.append((free_energy(m, params, env), m, res, it))
        elif res < worst[0] or not np.isfinite(worst[0]):
            worst = (res, it)
    if not results:
        raise NonConvergence("self-consistent solve failed from every seed", worst[0], worst[1])

    F_min = min(r[0] for r in results)
    degenerate = [r for r in results if r[0] - F_min < 1e-8]
    distinct = {(round(r[1][2] - r[1][5], 4), round(r[1][7], 4)) for r in degenerate}
    multi = len(distinct) > 1
    if multi:
        log.debug("degenerate mean-field minima at %s: %s", env, sorted(distinct))
    F, m, res, it = max(degenerate, key=lambda r: _gauge_key(r[1]))
    return MeanFieldState.from_vector(
        m,
        converged=True,
        residual=res,
        iterations=it,
        free_energy=F,
        multi_minima=multi,
        candidates=[(r[0], r[1]) for r in results],
    )


def warm_seeds(params: ModelParams, previous: MeanFieldState | None) -> list[np.ndarray]:
    """Seeds for a continuation step.

    The previous solution and its mirror image, plus the symmetric and the
    canted reference seeds so that a phase entered mid-path is still found.
    """
    fixed = default_seeds(params)[:2]
    if previous is None:
        return fixed
    m = previous.vector
    return [m, mirror(m)] + fixed


def solve_many(params: ModelParams, envs: Iterable[Environment]) -> list[MeanFieldState]:
    """Sequential warm-started solves along a path of environments."""
    out = []
    prev = None
    for env in envs:
        prev = self_consistent_solve(params, env, warm_seeds(params, prev))
        out.append(prev)
    return out
