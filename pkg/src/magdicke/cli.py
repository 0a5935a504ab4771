"""Command-line entry point.

Exit codes: 0 success, 1 numerical failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import figures
from .dicke_core import branches_vs_nu
from .dicke_map import dicke_parameters, mapped_ratio, normalized_coupling
from .errors import NumericalError
from .fitting import fit, load_datasets, write_trace
from .params import FIT_PARAMETERS, load_params
from .phase_diagram import WORKERS_ENV, boundary_scan
from .resonance import field_sweep, sweep_csv
from .spectroscopy import (
    constants_csv,
    extract_optical_constants,
    read_trace,
    transfer_function,
)
from .spin_model import OP_THRESHOLD, Environment, order_parameters, self_consistent_solve

log = logging.getLogger("magdicke")


class UsageError(Exception):
    pass


def _range(text: str) -> np.ndarray:
    """Parse ``a:b:n`` into ``n`` evenly spaced points from a to b."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("n must be >= 1")
    return np.linspace(a, b, n)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


def _emit(text: str, out: str | None) -> None:
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _kv(pairs, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({k: (v if isinstance(v, str) else float(v)) for k, v in pairs}, indent=2) + "\n"
    return "key,value\n" + "".join(f"{k},{v if isinstance(v, str) else _fmt(v)}\n" for k, v in pairs)


def cmd_dicke(args) -> int:
    if args.action != "branches":
        raise UsageError(f"unknown dicke action {args.action!r}")
    rows = ["nu,omega_minus,omega_plus,phase"]
    for nu, pp in branches_vs_nu(args.eta, args.nu_range, a2=args.a2):
        rows.append(f"{_fmt(nu)},{_fmt(pp.omega_minus)},{_fmt(pp.omega_plus)},{pp.phase.value}")
    _emit("\n".join(rows) + "\n", args.out)
    return 0


def cmd_meanfield(args) -> int:
    params = load_params(args.params)
    env = Environment(args.T, args.B)
    st = self_consistent_solve(params, env)
    fe, er = order_parameters(st)
    pairs = []
    for name in ("s_A", "s_B", "S_A", "S_B"):
        for c, v in zip("xyz", getattr(st, name)):
            pairs.append((f"{name}_{c}", v))
    pairs += [("fe_op", fe), ("er_op", er), ("free_energy_meV", st.free_energy), ("residual", st.residual)]
    pairs += [("phase", "SR" if abs(er) > OP_THRESHOLD else "N")]
    _emit(_kv(pairs, args.format), args.out)
    return 0


def cmd_resonance(args) -> int:
    params = load_params(args.params)
    pts = field_sweep(params, args.T, args.B_range)
    _emit(sweep_csv(pts), args.out)
    return 0 if all(p.modes is not None for p in pts) else 1


def cmd_dicke_map(args) -> int:
    params = load_params(args.params)
    env = Environment(args.T, args.B)
    dp = dicke_parameters(params, env)
    pairs = list(dp.as_dict().items())
    pairs += [("eta", normalized_coupling(dp)), ("nu", mapped_ratio(params, env))]
    _emit(_kv(pairs, args.format), args.out)
    return 0


def cmd_phase_diagram(args) -> int:
    params = load_params(args.params)
    scan = boundary_scan(params, args.T_range, args.H_range, refine=not args.no_refine, workers=args.workers)
    lines = ["T_K,H_T,er_op,fe_op,phase"]
    for i, t in enumerate(scan.T_grid):
        for j, h in enumerate(scan.H_grid):
            er, fe = scan.er_op[i, j], scan.fe_op[i, j]
            phase = "failed" if np.isnan(er) else ("SR" if abs(er) > OP_THRESHOLD else "N")
            lines.append(f"{_fmt(t)},{_fmt(h)},{_fmt(er)},{_fmt(fe)},{phase}")
    _emit("\n".join(lines) + "\n", args.out)
    if args.boundary_out:
        b = ["T_K,Hc_T"] + [f"{_fmt(t)},{_fmt(h)}" for t, h in scan.boundary.points]
        Path(args.boundary_out).write_text("\n".join(b) + "\n")
    return 1 if scan.failures else 0


def cmd_fit(args) -> int:
    datasets = load_datasets(args.data)
    base = load_params(args.params)
    init_params = load_params(args.init) if args.init else base
    init = {k: getattr(init_params, k) for k in FIT_PARAMETERS}
    res = fit(datasets, init, base=init_params, max_evals=args.max_evals, restarts=args.restarts, seed=args.seed)
    out = Path(args.out)
    trace_path = out.with_suffix(".trace.jsonl")
    write_trace(res, trace_path)
    out.write_text(json.dumps(res.to_json(str(trace_path)), indent=2, sort_keys=True) + "\n")
    print(f"cost {res.cost:.6g} after {res.n_evals} evaluations (converged={res.converged})", file=sys.stderr)
    return 0


def cmd_extract_alpha(args) -> int:
    sample = read_trace(args.sample, "sample")
    ref = read_trace(args.ref, "reference")
    window = None
    if args.window_end is not None:
        window = (ref.t < args.window_end).astype(float)
    spec = transfer_function(sample, ref, window)
    oc = extract_optical_constants(spec, args.thickness_um, complex_fresnel=args.complex_fresnel)
    _emit(constants_csv(oc), args.out)
    if oc.has_negative_alpha:
        print(f"warning: {int(oc.negative_alpha.sum())} bins with negative alpha", file=sys.stderr)
    return 0


def cmd_reproduce(args) -> int:
    params = load_params(args.params)
    files, legend = figures.build(args.figure, params, args.grid, args.workers)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (outdir / name).write_text(text)
        print(outdir / name)
    (outdir / f"{args.figure}.legend.txt").write_text(legend)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magdicke", description="Magnonic Dicke-model laboratory for ErFeO3.")
    p.add_argument("--params", help="parameter JSON (default: the shipped parameter set)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    d = sub.add_parser("dicke", help="standard Dicke model")
    d.add_argument("action", choices=["branches"])
    d.add_argument("--eta", type=float, required=True, help="g / omega0")
    d.add_argument("--nu-range", type=_range, required=True, help="omega_a/omega0 grid a:b:n")
    d.add_argument("--a2", action="store_true", help="add the diamagnetic term D = g^2/omega_a")
    d.add_argument("-o", "--out")
    d.set_defaults(func=cmd_dicke)

    m = sub.add_parser("meanfield", help="self-consistent mean-field state")
    m.add_argument("action", choices=["solve"])
    m.add_argument("--T", type=float, required=True, help="temperature (K)")
    m.add_argument("--B", type=float, default=0.0, help="field along a (T)")
    m.add_argument("--format", choices=["csv", "json"], default="csv")
    m.add_argument("-o", "--out")
    m.set_defaults(func=cmd_meanfield)

    r = sub.add_parser("resonance", help="resonance frequencies")
    r.add_argument("action", choices=["sweep"])
    r.add_argument("--T", type=float, required=True)
    r.add_argument("--B-range", type=_range, required=True, help="field grid a:b:n (T)")
    r.add_argument("-o", "--out")
    r.set_defaults(func=cmd_resonance)

    dm = sub.add_parser("dicke-map", help="extended Dicke parameters")
    dm.add_argument("--T", type=float, required=True)
    dm.add_argument("--B", type=float, default=0.0)
    dm.add_argument("--format", choices=["csv", "json"], default="csv")
    dm.add_argument("-o", "--out")
    dm.set_defaults(func=cmd_dicke_map)

    pd = sub.add_parser("phase-diagram", help="T-H scan of the order parameters")
    pd.add_argument("--T-range", type=_range, default=_range("0:6:61"))
    pd.add_argument("--H-range", type=_range, default=_range("0:3:61"))
    pd.add_argument("--no-refine", action="store_true", help="grid-resolution boundary only")
    pd.add_argument("--boundary-out", help="write T_K,Hc_T here")
    pd.add_argument("--workers", type=int, help=f"parallel rows (default ${WORKERS_ENV} or 1)")
    pd.add_argument("-o", "--out")
    pd.set_defaults(func=cmd_phase_diagram)

    f = sub.add_parser("fit", help="fit the six free parameters")
    f.add_argument("--data", required=True, help="directory of dataset CSV files")
    f.add_argument("--init", help="initial parameter JSON (default: --params)")
    f.add_argument("--out", required=True, help="fit result JSON")
    f.add_argument("--max-evals", type=int, default=5000)
    f.add_argument("--restarts", type=int, default=5)
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("extract-alpha", help="optical constants from THz-TDS traces")
    e.add_argument("--sample", required=True)
    e.add_argument("--ref", required=True)
    e.add_argument("--thickness-um", type=float, required=True)
    e.add_argument("--window-end", type=float, help="zero both traces from this time (ps) on")
    e.add_argument("--complex-fresnel", action="store_true")
    e.add_argument("-o", "--out")
    e.set_defaults(func=cmd_extract_alpha)

    rp = sub.add_parser("reproduce", help="CSV data behind a figure")
    rp.add_argument("figure", choices=figures.FIGURES)
    rp.add_argument("--grid", type=int, help="grid size (figure-specific default)")
    rp.add_argument("--out-dir", default=".")
    rp.add_argument("--workers", type=int)
    rp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 1
    except (UsageError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
