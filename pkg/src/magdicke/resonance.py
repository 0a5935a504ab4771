"""Linearized spin dynamics about a mean-field state.

Each sublattice obeys ``hbar dm_i/dt = h_i x m_i`` with ``h = K m + h0`` the
effective field of :mod:`magdicke.spin_model`. Linearizing about a
self-consistent state gives

    hbar d(dm)/dt = M dm,   M_ii = [h_i]x - [m_i]x K_ii,   M_ij = -[m_i]x K_ij,

with ``M`` in meV. Its eigenvalues come in pairs +-i hbar omega plus four
zeros that belong to changes of the spin lengths; the latter are removed by
restricting ``M`` to the plane transverse to each static spin.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import MEV_TO_THZ
from .errors import NumericalError
from .params import ModelParams
from .spin_model import (
    Environment,
    MeanFieldState,
    _skew,
    effective_fields,
    interaction_matrix,
    self_consistent_solve,
    warm_seeds,
)

log = logging.getLogger(__name__)

LABELS = ("qFM", "qAFM", "Er_in_phase", "Er_out_of_phase", "mixed")
UNRELIABLE_REAL = 1e-6
ZERO_MODE = 1e-9


@dataclass
class ResonanceSet:
    """Positive resonance frequencies (THz, ascending) with eigenvectors.

    ``eigenvectors[k]`` is the unit-norm complex 12-vector of mode ``k`` in
    the order (s_A, s_B, S_A, S_B) x (x, y, z).
    """

    frequencies: np.ndarray
    eigenvectors: np.ndarray
    env: Environment | None = None
    labels: list[str] = field(default_factory=list)
    fe_weight: np.ndarray | None = None
    er_weight: np.ndarray | None = None
    parity: np.ndarray | None = None
    unreliable: np.ndarray | None = None
    at_boundary: bool = False
    max_real_ratio: float = 0.0

    def frequency_of(self, label: str) -> float:
        """Frequency of the lowest mode carrying ``label`` (nan if absent)."""
        for f, lab in zip(self.frequencies, self.labels):
            if lab == label:
                return float(f)
        return float("nan")


def transverse_basis(state: MeanFieldState) -> np.ndarray:
    """12x8 orthonormal basis of fluctuations perpendicular to each static spin."""
    P = np.zeros((12, 8))
    for i, v in enumerate((state.s_A, state.s_B, state.S_A, state.S_B)):
        n = np.linalg.norm(v)
        u = v / n if n > 1e-300 else np.array([1.0, 0.0, 0.0])
        # any vector not parallel to u
        trial = np.eye(3)[np.argmin(np.abs(u))]
        e1 = np.cross(u, trial)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(u, e1)
        P[3 * i : 3 * i + 3, 2 * i] = e1
        P[3 * i : 3 * i + 3, 2 * i + 1] = e2
    return P


def linearization_matrix(state: MeanFieldState, params: ModelParams, env: Environment) -> np.ndarray:
    """Real 12x12 evolution matrix ``M`` (meV) of the linearized dynamics."""
    if state.converged and state.residual > 1e-9:
        log.warning("state residual %.2e: frequencies may acquire spurious real parts", state.residual)
    m = state.vector
    K = interaction_matrix(params)
    h = effective_fields(m, params, env)
    M = np.zeros((12, 12))
    for i in range(4):
        rows = slice(3 * i, 3 * i + 3)
        M[rows, rows] += _skew(h[i])
        M[rows, :] -= _skew(m[rows]) @ K[rows, :]
    return M


def resonance_frequencies(M: np.ndarray, state: MeanFieldState | None = None, env: Environment | None = None) -> ResonanceSet:
    """Eigen-decompose ``M`` and keep one member of each +-i omega pair.

    With ``state`` given the problem is projected on the transverse plane of
    every static spin (8 dimensions, four modes) which removes the
    longitudinal zero modes exactly. Without it the four eigenvalues of
    smallest modulus are discarded instead.
    """
    if state is not None:
        P = transverse_basis(state)
        lam, vec = np.linalg.eig(P.T @ M @ P)
        vec = P @ vec
    else:
        lam, vec = np.linalg.eig(M)
        keep = np.argsort(np.abs(lam))[4:]
        lam, vec = lam[keep], vec[:, keep]

    scale = float(np.max(np.abs(lam.imag))) if lam.size else 0.0
    # one member of each conjugate pair: the half with the larger imaginary parts
    order = np.argsort(lam.imag)[::-1][: lam.size // 2]
    lam, vec = lam[order], vec[:, order]
    freqs = np.abs(lam.imag) * MEV_TO_THZ
    at_boundary = False
    if scale > 0:
        zero = np.abs(lam) < ZERO_MODE * scale
        if zero.any():
            freqs[zero] = 0.0
            at_boundary = True
    ratio = float(np.max(np.abs(lam.real)) / scale) if scale > 0 else 0.0
    unreliable = np.abs(lam.real) > UNRELIABLE_REAL * max(scale, 1e-300)
    if unreliable.any():
        log.warning("modes with |Re lambda| > %.0e max|Im lambda| flagged as unreliable", UNRELIABLE_REAL)

    idx = np.argsort(freqs, kind="stable")
    vecs = vec[:, idx].T
    vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    return ResonanceSet(
        frequencies=freqs[idx],
        eigenvectors=vecs,
        env=env,
        unreliable=unreliable[idx],
        at_boundary=at_boundary,
        max_real_ratio=ratio,
    )


def _two_fold(v: np.ndarray) -> np.ndarray:
    """Two-fold operation exchanging A and B of both species and flipping y, z."""
    w = v.reshape(4, 3)[[1, 0, 3, 2]].copy()
    w[:, 1:] *= -1
    return w.ravel()


def sublattice_weights(v: np.ndarray, state: MeanFieldState) -> np.ndarray:
    """Magnon number carried by each sublattice for the mode vector ``v``.

    For a spin of length ``m`` precessing with transverse complex amplitudes
    ``(u1, u2)`` the symplectic norm is ``2 |Im(conj(u1) u2)| / m``. Unlike
    ``|dm|^2`` it is insensitive to the ellipticity of the precession.
    """
    P = transverse_basis(state)
    lengths = np.array([np.linalg.norm(x) for x in (state.s_A, state.s_B, state.S_A, state.S_B)])
    u = P.T @ v
    w = 2 * np.abs(np.imag(np.conj(u[0::2]) * u[1::2])) / np.maximum(lengths, 1e-300)
    return w


def classify_modes(rs: ResonanceSet, state: MeanFieldState, params: ModelParams | None = None) -> ResonanceSet:
    """Attach labels from species weight and sublattice parity.

    The species weight is the fraction of the mode's magnon number carried
    by the Fe sublattices (:func:`sublattice_weights`). The parity is the
    expectation value of the two-fold operation mapping sublattice A onto B.
    Even (A and B precess with opposite transverse components) is
    out-of-phase for Er and qAFM for Fe; odd is in-phase for Er and qFM for
    Fe. A weight of exactly one half in either test gives ``mixed``.
    """
    lengths = np.array([np.linalg.norm(x) for x in (state.s_A, state.s_B, state.S_A, state.S_B)])
    scale = np.repeat(1.0 / np.sqrt(np.maximum(lengths, 1e-300)), 3)
    labels, fe_w, par = [], [], []
    for v in rs.eigenvectors:
        sw = sublattice_weights(v, state)
        tot = sw.sum()
        fe = sw[2:].sum() / tot if tot > 0 else 0.5
        w = v * scale
        p = float(np.real(np.vdot(w, _two_fold(w))) / np.vdot(w, w).real)
        fe_w.append(fe)
        par.append(p)
        even = (1 + p) / 2
        if abs(fe - 0.5) < 1e-12 or abs(even - 0.5) < 1e-12:
            labels.append("mixed")
        elif fe > 0.5:
            labels.append("qAFM" if even > 0.5 else "qFM")
        else:
            labels.append("Er_out_of_phase" if even > 0.5 else "Er_in_phase")
    rs.labels = labels
    rs.fe_weight = np.array(fe_w)
    rs.er_weight = 1 - rs.fe_weight
    rs.parity = np.array(par)
    return rs


def resonances(params: ModelParams, env: Environment, state: MeanFieldState | None = None, seeds=None) -> tuple[MeanFieldState, ResonanceSet]:
    """Solve (unless ``state`` is given), linearize and label at one point."""
    if state is None:
        state = self_consistent_solve(params, env, seeds)
    M = linearization_matrix(state, params, env)
    rs = resonance_frequencies(M, state, env)
    return state, classify_modes(rs, state, params)


@dataclass
class SweepPoint:
    B: float
    state: MeanFieldState | None
    modes: ResonanceSet | None
    error: str | None = None


def field_sweep(params: ModelParams, T: float, B_grid: Sequence[float], first_seeds=None) -> list[SweepPoint]:
    """Warm-started resonance sweep along a monotone field grid.

    A point whose solve fails is recorded with its error message and the
    chain continues from the last good state.
    """
    B_grid = np.asarray(B_grid, dtype=float)
    if B_grid.size > 1:
        steps = np.diff(B_grid)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("B_grid must be strictly monotone")
    out = []
    prev = None
    for B in B_grid:
        env = Environment(T, float(B))
        seeds = first_seeds if (prev is None and first_seeds is not None) else (None if prev is None else warm_seeds(params, prev))
        try:
            state, rs = resonances(params, env, seeds=seeds)
        except NumericalError as exc:
            log.warning("field sweep point B=%g T failed: %s", B, exc)
            out.append(SweepPoint(float(B), None, None, str(exc)))
            continue
        prev = state
        out.append(SweepPoint(float(B), state, rs))
    return out


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    """Long-format CSV: one row per mode per field point."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["B_T", "mode_label", "freq_THz", "fe_weight", "er_weight"])
    for pt in points:
        if pt.modes is None:
            w.writerow([f"{pt.B:.6g}", "failed", "nan", "nan", "nan"])
            continue
        for f, lab, fe, er in zip(pt.modes.frequencies, pt.modes.labels, pt.modes.fe_weight, pt.modes.er_weight):
            w.writerow([f"{pt.B:.6g}", lab, f"{f:.9f}", f"{fe:.6f}", f"{er:.6f}"])
    return buf.getvalue()
