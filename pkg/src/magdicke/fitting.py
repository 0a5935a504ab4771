"""Least-relative-squares fit of the spin-model parameters to resonance data.

The cost is

    C = sum_i (w_i / N_i) sum_j (f_ij - F_ij)^2 / F_ij^2

with F the measured and f the modelled observable. Four curves are mode
frequencies versus field at fixed temperature, the fifth is the zero-field
critical temperature.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import NumericalError
from .params import FIT_PARAMETERS, ModelParams
from .phase_diagram import critical_temperature
from .resonance import field_sweep

log = logging.getLogger(__name__)

DEFAULT_WEIGHTS = {
    "omega_plus_2K": 0.2,
    "omega_minus_2K": 0.2,
    "er_inphase": 0.1,
    "fe_qfm": 0.3,
    "Tc_zero_field": 0.2,
}
# mode label each frequency curve is matched against
CURVE_LABELS = {
    "omega_plus_2K": "qAFM",
    "omega_minus_2K": "Er_out_of_phase",
    "er_inphase": "Er_in_phase",
    "fe_qfm": "qFM",
}
DEFAULT_T = 2.0  # K, temperature of the field sweeps unless a file says otherwise
PENALTY = 1e3
TC_BRACKET = (0.5, 10.0)
# fine enough that the T_c term is smooth on the scale of a converged simplex
TC_TOL = 1e-6


@dataclass
class Dataset:
    curve_id: str
    points: list[tuple[float, float]]  # (field in T or 0, frequency in THz or T_c in K)
    weight: float | None = None
    temperature: float = DEFAULT_T

    def __post_init__(self) -> None:
        if self.curve_id not in DEFAULT_WEIGHTS:
            raise ValueError(f"unknown curve_id {self.curve_id!r}; expected one of {sorted(DEFAULT_WEIGHTS)}")
        if self.weight is None:
            self.weight = DEFAULT_WEIGHTS[self.curve_id]
        if not self.weight > 0:
            raise ValueError("weight must be positive")
        if not self.points:
            raise ValueError(f"dataset {self.curve_id} has no points")
        self.points = [(float(c), float(f)) for c, f in self.points]
        if any(f == 0 for _, f in self.points):
            raise ValueError("measured values must be nonzero (relative error)")


@dataclass
class FitResult:
    params: dict[str, float]
    cost: float
    n_evals: int
    converged: bool
    init_cost: float = float("nan")
    trace: list[tuple[int, float, dict[str, float]]] = field(default_factory=list, repr=False)

    def to_json(self, trace_path: str | None = None) -> dict:
        return {
            "params": self.params,
            "cost": self.cost,
            "n_evals": self.n_evals,
            "converged": self.converged,
            "init_cost": self.init_cost,
            "trace_path": trace_path,
        }


def load_dataset(path: str | Path) -> Dataset:
    """Read a ``control,freq`` CSV with ``# key=value`` metadata lines.

    Recognised keys: ``curve_id`` (required), ``weight`` and ``T`` (K).
    """
    meta: dict[str, str] = {}
    points = []
    header_seen = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            cells = [c.strip() for c in line.split(",")]
            if not header_seen and cells[:2] == ["control", "freq"]:
                header_seen = True
                continue
            if len(cells) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
            try:
                points.append((float(cells[0]), float(cells[1])))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value in {line!r}") from None
    if "curve_id" not in meta:
        raise ValueError(f"{path}: missing '# curve_id=' metadata")
    try:
        weight = float(meta["weight"]) if "weight" in meta else None
        T = float(meta.get("T", DEFAULT_T))
    except ValueError as exc:
        raise ValueError(f"{path}: bad metadata value ({exc})") from None
    return Dataset(meta["curve_id"], points, weight, T)


def save_dataset(ds: Dataset, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# curve_id={ds.curve_id}\n# weight={ds.weight:g}\n# T={ds.temperature:g}\n")
        fh.write("control,freq\n")
        for c, f in ds.points:
            fh.write(f"{c:.6g},{f:.12g}\n")


def load_datasets(directory: str | Path) -> list[Dataset]:
    files = sorted(Path(directory).glob("*.csv"))
    if not files:
        raise ValueError(f"no .csv datasets in {directory}")
    return [load_dataset(f) for f in files]


def _sweeps(params: ModelParams, datasets: Sequence[Dataset]) -> dict[float, dict[float, object]]:
    """One warm-started sweep per temperature over the union of its fields.

    Fields are visited in sorted order so the result does not depend on how
    the points are ordered in the files.
    """
    wanted: dict[float, set[float]] = {}
    for ds in datasets:
        if ds.curve_id != "Tc_zero_field":
            wanted.setdefault(ds.temperature, set()).update(c for c, _ in ds.points)
    out = {}
    for T, fields in sorted(wanted.items()):
        table = {}
        for pt in field_sweep(params, T, sorted(fields)):
            if pt.modes is None:
                log.warning("no converged state at T=%g K, B=%g T: %s", T, pt.B, pt.error)
            table[pt.B] = pt.modes
        out[T] = table
    return out


def model_observables(params: ModelParams, datasets: Sequence[Dataset]) -> list[list[float | None]]:
    """Modelled value for every data point (None where the model fails).

    Frequencies are matched by mode label first, then by proximity to the
    measured value among modes carrying that label.
    """
    sweeps = _sweeps(params, datasets)
    out = []
    for ds in datasets:
        vals = []
        if ds.curve_id == "Tc_zero_field":
            for H, _ in ds.points:
                try:
                    vals.append(critical_temperature(params, H, TC_BRACKET, tol=TC_TOL))
                except NumericalError as exc:
                    log.warning("T_c at H=%g T failed: %s", H, exc)
                    vals.append(None)
            out.append(vals)
            continue
        label = CURVE_LABELS[ds.curve_id]
        for B, f_meas in ds.points:
            modes = sweeps[ds.temperature].get(B)
            cands = [] if modes is None else [f for f, lab in zip(modes.frequencies, modes.labels) if lab == label]
            if not cands:
                log.warning("no %s mode at T=%g K, B=%g T", label, ds.temperature, B)
                vals.append(None)
            else:
                vals.append(float(min(cands, key=lambda f: abs(f - f_meas))))
        out.append(vals)
    return out


def cost_from_observables(datasets: Sequence[Dataset], model: Sequence[Sequence[float | None]]) -> float:
    total = 0.0
    for ds, vals in zip(datasets, model):
        s = 0.0
        for (_, meas), f in zip(ds.points, vals):
            if f is None or not math.isfinite(f):
                s += PENALTY
            else:
                s += (f - meas) ** 2 / meas**2
        total += ds.weight / len(ds.points) * s
    return total


def cost(free_params: dict[str, float] | ModelParams, datasets: Sequence[Dataset], base: ModelParams | None = None) -> float:
    """Weighted relative squared error of the model against ``datasets``.

    ``free_params`` is either a full parameter set or a mapping of fitted
    names applied on top of ``base`` (shipped defaults when omitted).
    """
    if not datasets:
        raise ValueError("at least one dataset is required")
    if isinstance(free_params, ModelParams):
        params = free_params
    else:
        params = (base or ModelParams()).replace(**free_params)
    return cost_from_observables(datasets, model_observables(params, datasets))


def default_bounds(init: dict[str, float], rel: float = 0.5) -> dict[str, tuple[float, float]]:
    return {k: (v * (1 - rel), v * (1 + rel)) if v > 0 else (v * (1 + rel), v * (1 - rel)) for k, v in init.items()}


def fit(
    datasets: Sequence[Dataset],
    init: dict[str, float] | None = None,
    bounds: dict[str, tuple[float, float]] | None = None,
    *,
    base: ModelParams | None = None,
    max_evals: int = 5000,
    restarts: int = 5,
    seed: int = 0,
    xatol: float = 1e-5,
    fatol: float = 1e-12,
) -> FitResult:
    """Nelder-Mead in log-parameter space with restarts.

    The first run starts from ``init``. Each restart begins at the best point
    found so far with a freshly drawn random simplex (edge lengths up to 10 %),
    which undoes a collapsed simplex; restarts stop once one fails to improve.
    All runs share the ``max_evals`` budget. Parameters must be positive.
    """
    if not datasets:
        raise ValueError("at least one dataset is required")
    base = base or ModelParams()
    if init is None:
        init = {k: getattr(base, k) for k in FIT_PARAMETERS}
    names = list(init)
    x0 = np.array([init[k] for k in names], dtype=float)
    if np.any(x0 <= 0):
        raise ValueError("fitted parameters must be positive (log transform)")
    bounds = bounds or default_bounds(init)
    lo = np.array([bounds[k][0] for k in names], dtype=float)
    hi = np.array([bounds[k][1] for k in names], dtype=float)
    if np.any(lo <= 0) or np.any(x0 < lo) or np.any(x0 > hi):
        raise ValueError("init must lie inside positive bounds")
    llo, lhi = np.log(lo), np.log(hi)

    trace: list[tuple[int, float, dict[str, float]]] = []
    best = {"c": np.inf, "y": np.log(x0)}

    class _Budget(Exception):
        pass

    def f(y):
        if len(trace) >= max_evals:
            raise _Budget
        y = np.clip(y, llo, lhi)
        vals = dict(zip(names, np.exp(y).tolist()))
        c = cost(vals, datasets, base)
        trace.append((len(trace) + 1, c, vals))
        if c < best["c"]:
            best["c"], best["y"] = c, y.copy()
        return c

    rng = np.random.default_rng(seed)
    converged = False
    init_cost = None
    for run in range(restarts + 1):
        start = best["y"].copy()
        simplex = None
        if run > 0:
            steps = rng.uniform(0.02, 0.1, size=len(names)) * rng.choice([-1, 1], size=len(names))
            simplex = np.vstack([start, start + np.diag(steps)])
            simplex = np.clip(simplex, llo, lhi)
        prev = best["c"]
        try:
            res = optimize.minimize(
                f,
                start,
                method="Nelder-Mead",
                bounds=list(zip(llo, lhi)),
                options={"xatol": xatol, "fatol": fatol, "maxfev": max_evals, "initial_simplex": simplex, "adaptive": True},
            )
            converged = bool(res.success)
        except _Budget:
            converged = False
            break
        if init_cost is None:
            init_cost = trace[0][1]
        if run > 0 and not best["c"] < prev * (1 - 1e-6):
            break
    params = dict(zip(names, np.exp(best["y"]).tolist()))
    return FitResult(params, float(best["c"]), len(trace), converged, trace[0][1] if trace else float("nan"), trace)


def synthetic_datasets(
    params: ModelParams | None = None,
    *,
    fields: Sequence[float] = (0.0, 0.5, 1.0, 2.5, 3.0),
    T: float = DEFAULT_T,
    noise: float = 0.0,
    seed: int = 0,
) -> list[Dataset]:
    """The five curves generated from the model itself.

    With ``noise`` > 0 each value is multiplied by (1 + noise * N(0, 1)).
    """
    params = params or ModelParams()
    rng = np.random.default_rng(seed)
    out = []
    for cid, label in CURVE_LABELS.items():
        ds = Dataset(cid, [(b, 1.0) for b in fields], temperature=T)
        vals = model_observables(params, [ds])[0]
        if any(v is None for v in vals):
            raise NumericalError(f"model has no {label} mode at some synthetic field point")
        ds.points = [(b, v * (1 + noise * rng.standard_normal())) for b, v in zip(fields, vals)]
        out.append(ds)
    tc = critical_temperature(params, 0.0, TC_BRACKET, tol=TC_TOL)
    out.append(Dataset("Tc_zero_field", [(0.0, tc * (1 + noise * rng.standard_normal()))]))
    return out


def text_anchor_datasets() -> list[Dataset]:
    """A few resonance positions stated numerically in the experimental report.

    Not a figure digitization: the upper polariton at 0.8 THz in zero field,
    the lower polariton near 150 GHz in zero field and at 33 GHz 0.1 T either
    side of the 1.8 T critical field, and the 4 K zero-field transition.
    Uncertainty is taken as +-0.01 THz / +-0.05 T / +-0.5 K.
    """
    return [
        Dataset("omega_plus_2K", [(0.0, 0.80)]),
        Dataset("omega_minus_2K", [(0.0, 0.150), (1.7, 0.033), (1.9, 0.033)]),
        Dataset("Tc_zero_field", [(0.0, 4.0)]),
    ]


def write_trace(result: FitResult, path: str | Path) -> None:
    with open(path, "w") as fh:
        for i, c, vals in result.trace:
            fh.write(json.dumps({"eval": i, "cost": c, **vals}, sort_keys=True) + "\n")
