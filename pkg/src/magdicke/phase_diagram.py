"""Temperature-field phase diagram from the mean-field order parameters."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import NoBracket, NumericalError
from .params import ModelParams
from .spin_model import (
    OP_THRESHOLD,
    Environment,
    MeanFieldState,
    order_parameters,
    self_consistent_solve,
    warm_seeds,
)

log = logging.getLogger(__name__)

WORKERS_ENV = "MAGDICKE_WORKERS"


def max_workers() -> int:
    """Worker cap from the environment (default 1, i.e. serial)."""
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class PhaseBoundary:
    points: list[tuple[float, float]]  # (T in K, H_c in T)
    order_param_used: str  # "Er" or "Fe"
    tolerance: float  # T


@dataclass
class ScanResult:
    T_grid: np.ndarray
    H_grid: np.ndarray
    er_op: np.ndarray  # shape (nT, nH)
    fe_op: np.ndarray
    free_energy: np.ndarray
    boundary: PhaseBoundary
    boundary_fe: PhaseBoundary
    failures: list[tuple[float, float, str]] = field(default_factory=list)

    @property
    def superradiant(self) -> np.ndarray:
        return np.abs(self.er_op) > OP_THRESHOLD


def _op(state: MeanFieldState, which: str) -> float:
    fe, er = order_parameters(state)
    return abs(er) if which == "Er" else abs(fe)


def _solve(params, env, prev):
    return self_consistent_solve(params, env, warm_seeds(params, prev))


def _bisect(params, make_env, lo, hi, which, tol, threshold):
    """Root of op^2 - threshold^2 between an ordered and a normal bracket end.

    Near a continuous transition op^2 is close to linear in the control on the
    ordered side, so Brent's method needs only a few solves and the located
    boundary varies smoothly with the model parameters. Each solve is warm
    started from the nearest ordered state found so far.
    """
    s_lo = _solve(params, make_env(lo), None)
    s_hi = _solve(params, make_env(hi), None)
    o_lo, o_hi = _op(s_lo, which) > threshold, _op(s_hi, which) > threshold
    if o_lo == o_hi:
        raise NoBracket(f"both bracket ends [{lo}, {hi}] are in the {'ordered' if o_lo else 'normal'} phase")
    ordered = {"x": lo if o_lo else hi, "s": s_lo if o_lo else s_hi}

    def phi(x):
        st = _solve(params, make_env(x), ordered["s"])
        op = _op(st, which)
        if op > threshold:
            ordered["x"], ordered["s"] = x, st
        return op * op - threshold * threshold

    return float(optimize.brentq(phi, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps))


def critical_field(
    params: ModelParams,
    T: float,
    H_bracket: tuple[float, float] = (0.0, 4.0),
    *,
    tol: float = 1e-3,
    threshold: float = OP_THRESHOLD,
    which: str = "Er",
) -> float:
    """Field (T) at which the order parameter vanishes at temperature ``T``."""
    return _bisect(params, lambda H: Environment(T, H), H_bracket[0], H_bracket[1], which, tol, threshold)


def critical_temperature(
    params: ModelParams,
    H: float = 0.0,
    T_bracket: tuple[float, float] = (0.5, 10.0),
    *,
    tol: float = 1e-3,
    threshold: float = OP_THRESHOLD,
    which: str = "Er",
) -> float:
    """Temperature (K) at which the order parameter vanishes at field ``H``."""
    return _bisect(params, lambda T: Environment(T, H), T_bracket[0], T_bracket[1], which, tol, threshold)


def _scan_row(args):
    params, T, H_grid = args
    er, fe, F, fails = [], [], [], []
    prev = None
    for H in H_grid:
        try:
            st = _solve(params, Environment(float(T), float(H)), prev)
        except NumericalError as exc:
            fails.append((float(T), float(H), str(exc)))
            er.append(np.nan)
            fe.append(np.nan)
            F.append(np.nan)
            continue
        prev = st
        f_op, e_op = order_parameters(st)
        er.append(e_op)
        fe.append(f_op)
        F.append(st.free_energy)
    return np.array(er), np.array(fe), np.array(F), fails


def _row_boundary(params, T, H_grid, ordered, which, tol):
    """Refined critical field for one temperature row, or None."""
    if not ordered[0]:
        return None
    normal = np.flatnonzero(~ordered)
    if normal.size == 0:
        return None
    j = normal[0]
    try:
        return critical_field(params, T, (H_grid[j - 1], H_grid[j]), tol=tol, which=which)
    except NoBracket:
        return None


def boundary_scan(
    params: ModelParams,
    T_grid: Sequence[float],
    H_grid: Sequence[float],
    *,
    refine: bool = True,
    tol: float = 1e-3,
    workers: int | None = None,
) -> ScanResult:
    """Order parameters on a T x H grid and the refined critical line.

    Rows of constant temperature are solved with warm starts along the field
    axis and may run in parallel (``workers`` or the ``MAGDICKE_WORKERS``
    environment variable); the result does not depend on the worker count.
    """
    T_grid = np.asarray(T_grid, dtype=float)
    H_grid = np.asarray(H_grid, dtype=float)
    for g in (T_grid, H_grid):
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise ValueError("grids must be strictly increasing")
    workers = max_workers() if workers is None else workers
    jobs = [(params, T, H_grid) for T in T_grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_scan_row, jobs))
    else:
        rows = [_scan_row(j) for j in jobs]

    er = np.vstack([r[0] for r in rows])
    fe = np.vstack([r[1] for r in rows])
    F = np.vstack([r[2] for r in rows])
    failures = [f for r in rows for f in r[3]]

    boundaries = {}
    for which, op in (("Er", er), ("Fe", fe)):
        pts = []
        for i, T in enumerate(T_grid):
            ordered = np.abs(op[i]) > OP_THRESHOLD
            if refine:
                Hc = _row_boundary(params, T, H_grid, ordered, which, tol)
            else:
                Hc = None
                if ordered[0] and (~ordered).any():
                    j = np.flatnonzero(~ordered)[0]
                    Hc = 0.5 * (H_grid[j - 1] + H_grid[j])
            if Hc is not None:
                pts.append((float(T), float(Hc)))
        step = float(np.min(np.diff(H_grid))) if H_grid.size > 1 else 0.0
        boundaries[which] = PhaseBoundary(pts, which, tol if refine else step / 2)
    return ScanResult(T_grid, H_grid, er, fe, F, boundaries["Er"], boundaries["Fe"], failures)
