"""Plot-ready tables behind the reproduced figures.

Every builder returns ``{filename: csv_text}`` plus a column legend so the
output can be written verbatim. Numbers are formatted with a fixed number of
significant digits, which keeps reruns byte-identical.
"""

from __future__ import annotations

import numpy as np

from .dicke_core import branches_vs_nu
from .params import ModelParams
from .phase_diagram import boundary_scan
from .resonance import field_sweep, sweep_csv
from .spin_model import OP_THRESHOLD, order_parameters

FIGURES = ("fig1c", "fig3a", "fig3b", "figS4", "figS7")


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _branches_rows(eta: float, nus) -> list[str]:
    rows = []
    for nu, pp in branches_vs_nu(eta, nus):
        rows.append(",".join([_fmt(eta), _fmt(nu), _fmt(pp.omega_minus), _fmt(pp.omega_plus), pp.phase.value]))
    return rows


def fig1c(grid: int | None = None, **_) -> tuple[dict[str, str], str]:
    n = grid or 201
    nus = np.linspace(0.0, 0.2, n)
    text = "nu,omega_minus,omega_plus,phase\n" + "\n".join(r.split(",", 1)[1] for r in _branches_rows(0.1, nus)) + "\n"
    legend = (
        "fig1c.csv: polariton branches of the Dicke model without the diamagnetic term at g/omega0 = 0.1\n"
        "  nu           omega_a / omega0\n"
        "  omega_minus  lower polariton / omega0 (0 at the phase boundary nu = 4 eta^2)\n"
        "  omega_plus   upper polariton / omega0\n"
        "  phase        Normal or Superradiant\n"
    )
    return {"fig1c.csv": text}, legend


def figS4(grid: int | None = None, **_) -> tuple[dict[str, str], str]:
    n = grid or 201
    out = {}
    for eta, hi, tag in ((0.5, 2.0, "A"), (0.1, 0.2, "B")):
        nus = np.linspace(0.0, hi, n)
        out[f"figS4{tag}.csv"] = "eta,nu,omega_minus,omega_plus,phase\n" + "\n".join(_branches_rows(eta, nus)) + "\n"
    legend = (
        "figS4A.csv / figS4B.csv: Dicke branches without the diamagnetic term at g/omega0 = 0.5 and 0.1\n"
        "  eta          g / omega0\n"
        "  nu           omega_a / omega0\n"
        "  omega_minus  lower polariton / omega0\n"
        "  omega_plus   upper polariton / omega0\n"
        "  phase        Normal or Superradiant\n"
    )
    return out, legend


def fig3a(params: ModelParams, grid: int | None = None, workers: int | None = None) -> tuple[dict[str, str], str]:
    n = grid or 61
    T = np.linspace(0.0, 6.0, n)
    H = np.linspace(0.0, 3.0, n)
    scan = boundary_scan(params, T, H, workers=workers)
    lines = ["T_K,H_T,er_op,fe_op,phase"]
    for i, t in enumerate(T):
        for j, h in enumerate(H):
            er, fe = scan.er_op[i, j], scan.fe_op[i, j]
            phase = "failed" if np.isnan(er) else ("SR" if abs(er) > OP_THRESHOLD else "N")
            lines.append(",".join([_fmt(t), _fmt(h), _fmt(er), _fmt(fe), phase]))
    bnd = ["T_K,Hc_T,which"]
    for which, b in (("Er", scan.boundary), ("Fe", scan.boundary_fe)):
        bnd += [f"{_fmt(t)},{_fmt(h)},{which}" for t, h in b.points]
    legend = (
        "fig3a_grid.csv: mean-field order parameters on the T-H grid\n"
        "  T_K, H_T   temperature (K) and field along a (T)\n"
        "  er_op      s_A_z - s_B_z (Er antiferromagnetic component)\n"
        "  fe_op      S_A_y (Fe Neel-vector rotation toward b)\n"
        "  phase      SR (superradiant, |er_op| > 1e-4), N (normal) or failed\n"
        "fig3a_boundary.csv: refined critical field per temperature row\n"
        "  T_K, Hc_T  boundary point; which = order parameter used (Er or Fe)\n"
    )
    return {"fig3a_grid.csv": "\n".join(lines) + "\n", "fig3a_boundary.csv": "\n".join(bnd) + "\n"}, legend


def fig3b(params: ModelParams, grid: int | None = None, **_) -> tuple[dict[str, str], str]:
    n = grid or 141
    B = np.linspace(0.0, 7.0, n)
    out = {}
    for T in (2.0, 10.0):
        out[f"fig3b_{int(T)}K.csv"] = sweep_csv(field_sweep(params, T, B))
    legend = (
        "fig3b_2K.csv / fig3b_10K.csv: resonance frequencies versus field at 2 K and 10 K\n"
        "  B_T         field along a (T)\n"
        "  mode_label  qFM, qAFM, Er_in_phase, Er_out_of_phase or mixed\n"
        "  freq_THz    resonance frequency (THz)\n"
        "  fe_weight   fraction of the mode carried by the Fe sublattices\n"
        "  er_weight   1 - fe_weight\n"
    )
    return out, legend


def figS7(params: ModelParams, grid: int | None = None, **_) -> tuple[dict[str, str], str]:
    n = grid or 121
    B = np.linspace(0.0, 3.0, n)
    lines = ["H_T,fe_op,er_op"]
    for pt in field_sweep(params, 2.0, B):
        if pt.state is None:
            lines.append(f"{_fmt(pt.B)},nan,nan")
            continue
        fe, er = order_parameters(pt.state)
        lines.append(",".join([_fmt(pt.B), _fmt(fe), _fmt(er)]))
    legend = (
        "figS7.csv: the two order parameters at 2 K versus field along a\n"
        "  H_T    field (T)\n"
        "  fe_op  S_A_y, Fe Neel-vector component along b\n"
        "  er_op  s_A_z - s_B_z, Er antiferromagnetic polarization\n"
    )
    return {"figS7.csv": "\n".join(lines) + "\n"}, legend


def build(name: str, params: ModelParams, grid: int | None = None, workers: int | None = None):
    if name == "fig1c":
        return fig1c(grid)
    if name == "figS4":
        return figS4(grid)
    if name == "fig3a":
        return fig3a(params, grid, workers)
    if name == "fig3b":
        return fig3b(params, grid)
    if name == "figS7":
        return figS7(params, grid)
    raise ValueError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
