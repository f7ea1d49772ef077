"""Batch command line front end.

Every command writes canonical JSON (sorted keys, floats as %.17g, non-finite
values as null) that embeds the tool version, the seed, the tolerances in
effect and the strictness flag. Validation errors are reported as a JSON
object on stderr with exit status 2.

Subcommands: chars, check-dnmr, check-bdnk, residuals, evolve1d, norms, bjorken.
"""

from __future__ import annotations

import os

_threads = os.environ.get("RELFLUID_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import csv  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402
from pathlib import Path  # noqa: E402
from typing import Any, Optional, Sequence  # noqa: E402

import numpy as np  # noqa: E402

from . import __version__  # noqa: E402
from .errors import ConfigError, RelfluidError, SchemaError  # noqa: E402

EXIT_OK, EXIT_INVALID = 0, 2


def canonical_json(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, floats as %.17g, NaN and inf as null."""

    def enc(o: Any) -> str:
        if o is None or isinstance(o, (bool, np.bool_)):
            return "null" if o is None else ("true" if o else "false")
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            x = float(o)
            if not math.isfinite(x):
                return "null"
            s = "%.17g" % x
            return s if any(c in s for c in ".en") else s + ".0"
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            items = sorted((str(k), v) for k, v in o.items())
            return "{" + ",".join(json.dumps(k) + ":" + enc(v) for k, v in items) + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            return "[" + ",".join(enc(v) for v in (o.tolist() if isinstance(o, np.ndarray) else o)) + "]"
        if isinstance(o, complex):
            return enc([o.real, o.imag])
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj) + "\n"


def emit(report: dict, out: Optional[str]) -> None:
    text = canonical_json(report)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def envelope(args: argparse.Namespace, tolerances: dict, body: dict, strict: bool = False) -> dict:
    return {"tool": "relfluid", "version": __version__, "command": args.command, "seed": args.seed,
            "tolerances": tolerances, "strict": strict, **body}


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _floats(text: str, n: Optional[int] = None) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} comma-separated numbers, got {len(vals)}")
    return vals


# chars ---------------------------------------------------------------------

def cmd_chars(args: argparse.Namespace) -> dict:
    from .characteristics import (classify_causality, euler_char_det, euler_char_det_closed, scan_causality,
                                  sound_cone_roots, sphere_directions)
    from .kinematics import FluidState
    from .thermo import EquationOfState, ThermoState, derived_scalars

    cfg = _load_json(args.state)
    if "u_spatial" not in cfg or "rho" not in cfg:
        raise SchemaError("state JSON needs u_spatial and rho")
    if "cs2" in cfg and "p" in cfg:
        thermo = ThermoState.simple(cfg["rho"], cfg["p"], cfg["cs2"])
    else:
        eos = EquationOfState.from_config(cfg.get("eos", {"kind": "conformal"}))
        thermo = derived_scalars(eos, float(cfg["rho"]), cfg.get("n"), cfg.get("s"))
    state = FluidState.from_spatial(cfg["u_spatial"], thermo)
    xi = np.asarray(_floats(args.xi, 4))

    def root_json(rs):
        return {"status": rs.status, "degree": rs.degree,
                "roots": [{"value": [r.value.real, r.value.imag], "multiplicity": r.multiplicity, "kind": r.kind}
                          for r in rs.roots]}

    roots = sound_cone_roots(state, xi[1:])
    verdict = classify_causality(roots, xi[1:])
    checks = []
    dirs = [xi] + list(sphere_directions(args.det_samples, 4, args.seed))
    for d in dirs:
        num, ref = euler_char_det(state, d), euler_char_det_closed(state, d)
        checks.append({"xi": d, "numeric": num, "closed": ref,
                       "rel_err": abs(num - ref) / max(abs(ref), 1e-300) if ref != 0 else abs(num)})
    body = {"state": {"u": state.u, "rho": thermo.rho, "p": thermo.p, "cs2": thermo.cs2},
            "xi": xi, "roots": root_json(roots), "verdict": {"status": verdict.status, "witness": verdict.witness},
            "det_checks": checks}
    if args.all_dirs:
        v = scan_causality(state, args.all_dirs, args.seed)
        body["all_dirs"] = {"count": args.all_dirs, "status": v.status, "witness": v.witness}
    return envelope(args, {"det_rel": 1e-10, "lightcone": 1e-10}, body)


# check-dnmr / check-bdnk ---------------------------------------------------

def _read_cells(path: str):
    from .viscous_causality import cells_from_rows

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: missing header")
        rows = list(reader)
    return cells_from_rows(rows, start_row=2)


def cmd_check(args: argparse.Namespace) -> dict:
    from .viscous_causality import batch_audit

    theory = "dnmr" if args.command == "check-dnmr" else "bdnk"
    coeffs = _load_json(args.coeffs) if args.coeffs else {}
    if theory in coeffs and isinstance(coeffs[theory], dict):
        coeffs = coeffs[theory]
    report = batch_audit(_read_cells(args.cells), coeffs, theory, args.strict, args.tol_constraint,
                         args.project_constraints)
    return envelope(args, {"constraint": args.tol_constraint}, report.to_dict(), args.strict)


# residuals -----------------------------------------------------------------

def cmd_residuals(args: argparse.Namespace) -> dict:
    from .formulation import CHECKS, sample_from_field, sample_from_sim
    from .grid import GridField, GridField4
    from .thermo import EquationOfState

    field = GridField.load(args.field)
    eos_cfg = json.loads(args.eos) if args.eos else field.meta.get("eos")
    if not eos_cfg:
        raise ConfigError("no eos given and none recorded in the snapshot sidecar")
    eos = EquationOfState.from_config(eos_cfg)
    if len(field.dims) == 2:
        sample = sample_from_sim(field, eos, args.h_ref, order=2)
    else:
        sample = sample_from_field(GridField4.from_field(field), eos, args.h_ref, order=2)
    checks = list(CHECKS) if args.check == "all" else [args.check]
    out = {}
    for name in checks:
        _, norm = CHECKS[name](sample)
        out[name] = {"max_norm": norm}
    body = {"field": Path(args.field).name, "dims": list(sample.grid.dims), "eos": eos.to_config(),
            "residuals": out}
    return envelope(args, {"fd_order": 2}, body)


# evolve1d ------------------------------------------------------------------

def _dnmr_audit(eos, cfg: dict, strict: bool):
    from .viscous_causality import Cell, batch_audit

    coeffs = dict(cfg.get("dnmr", {}))
    bulk = cfg.get("coeffs") or {}
    for k in ("zeta", "tau_P", "delta_PP"):
        if k in bulk:
            coeffs.setdefault(k, bulk[k])
    zero_pi = (0.0,) * 10

    def audit(t, prim):
        p = eos.pressure(prim.rho, prim.n)
        cs2 = eos.sound_speed_sq(prim.rho, prim.n)
        cells = [Cell(str(i), float(prim.rho[i]), float(p[i]), float(prim.P_bulk[i]), zero_pi,
                      (float(prim.lorentz[i] * prim.v[i]), 0.0, 0.0), {"cs2": float(cs2[i])})
                 for i in range(prim.rho.size)]
        rep = batch_audit(cells, coeffs, "dnmr", strict)
        return {"t": t, **rep.summary}

    return audit


def cmd_evolve1d(args: argparse.Namespace) -> dict:
    from .sim1d import BulkCoefficients, Grid1D, evolve, initial_condition
    from .thermo import EquationOfState

    cfg = _load_json(args.config)
    try:
        g = cfg.get("grid", {})
        grid = Grid1D(int(g.get("n_cells", 128)), float(g.get("length", 1.0)), bool(g.get("periodic", True)))
        eos = EquationOfState.from_config(cfg.get("eos", {"kind": "conformal"}))
        ic = cfg.get("ic", {"kind": "bump"})
        coeffs = BulkCoefficients.from_mapping(cfg.get("coeffs"))
        t_end = float(cfg.get("t_end", 0.1))
        cfl = float(cfg.get("cfl", 0.4))
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"bad run config: {exc}") from exc
    prim = initial_condition(grid, eos, ic.get("kind", "bump"), ic.get("params"))
    audit = _dnmr_audit(eos, cfg, args.strict) if args.audit == "dnmr" else None
    traj = evolve(grid, prim, eos, coeffs, t_end, cfl, cfg.get("limiter", "minmod"),
                  int(cfg.get("output_every", 0)), audit)
    totals = np.array(traj.totals)
    drift = np.max(np.abs(totals - totals[0]), axis=0)
    body = {"config": cfg, "steps": traj.steps, "dt": traj.dt, "times": traj.times,
            "totals_initial": totals[0], "totals_final": totals[-1], "max_drift": drift,
            "max_drift_per_step": drift / max(traj.steps, 1)}
    if audit is not None:
        body["audits"] = traj.audits
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        traj.to_gridfield({"config": cfg}).save(out / "trajectory.bin")
        body["snapshot"] = "trajectory.bin"
    return envelope(args, {"con2prim": 1e-12}, body, args.strict)


# norms ---------------------------------------------------------------------

def _read_field_csv(path: str, cols: Sequence[str]) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in cols):
            raise SchemaError(f"{path}: header must contain {', '.join(cols)}")
        data = {c: [] for c in cols}
        for k, row in enumerate(reader):
            try:
                for c in cols:
                    data[c].append(float(row[c]))
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: row {k + 2}: {exc}") from exc
    return {c: np.asarray(v) for c, v in data.items()}


def _state_from_csv(path: str, kappa: float):
    from .vacuum1d import DiagonalState

    d = _read_field_csv(path, ("x", "r", "v1", "v2", "v3"))
    return DiagonalState(d["r"], np.stack([d["v1"], d["v2"], d["v3"]]), kappa, d["x"])


def cmd_norms(args: argparse.Namespace) -> dict:
    from . import vacuum1d as V

    st = _state_from_csv(args.field, args.kappa)
    kind, _, param = args.norm.partition(",")
    tol = {"quadrature": "trapezoid", "pairwise_cap": V.PAIRWISE_CAP}
    if kind == "H":
        N = float(param or 0)
        body = {"norm": "H", "N": N, "exponents": V.script_exponents(args.kappa, N),
                "value": V.script_H_norm(st.r, st.v, st.r, st.x, args.kappa, N)}
    elif kind == "energy":
        if not args.pair:
            raise ConfigError("energy needs --pair with columns x, s, w1, w2, w3")
        d = _read_field_csv(args.pair, ("x", "s", "w1", "w2", "w3"))
        res = V.linearized_energy(V.LinearizedPair(d["s"], np.stack([d["w1"], d["w2"], d["w3"]])), st)
        body = {"norm": "energy", "E": res.E, "bracket": res.bracket, "h0_norm_sq": res.h0_norm_sq,
                "bracket_holds": res.holds, "excluded_measure": res.excluded_measure}
    elif kind == "distance":
        if not args.other:
            raise ConfigError("distance needs --other")
        body = {"norm": "distance", "value": V.distance_functional(st, _state_from_csv(args.other, args.kappa))}
    elif kind == "control":
        A, B = V.control_norms(st)
        body = {"norm": "control", "A": A, "B": B}
    else:
        raise ConfigError(f"unknown norm {args.norm!r}; use H,N | energy | distance | control")
    body["kappa"] = args.kappa
    return envelope(args, tol, body)


# bjorken -------------------------------------------------------------------

def cmd_bjorken(args: argparse.Namespace) -> dict:
    from .sim1d import BulkCoefficients, bjorken_oracle

    tau = np.linspace(args.tau0, args.tau_end, args.n_out)
    coeffs = BulkCoefficients(args.zeta, args.tau_P, args.delta_PP)
    rho, P = bjorken_oracle(args.rho0, args.tau0, tau, coeffs, args.mode, args.P0, rtol=args.rtol)
    body = {"mode": args.mode, "rho0": args.rho0, "tau0": args.tau0, "P0": args.P0,
            "coeffs": {"zeta": coeffs.zeta, "tau_P": coeffs.tau_P, "delta_PP": coeffs.delta_PP},
            "tau": tau, "rho": rho, "P_bulk": P}
    if args.mode == "bulk":
        ideal = args.rho0 * (args.tau0 / tau) ** (4.0 / 3.0)
        body["max_rel_dev_from_ideal"] = float(np.max(np.abs(rho / ideal - 1.0)))
    return envelope(args, {"rtol": args.rtol}, body)


# dispatch ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relfluid", description="Relativistic fluid diagnostics.")
    p.add_argument("--version", action="version", version=f"relfluid {__version__}")
    sub = p.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("--seed", type=int, default=0, help="seed for any sampling (recorded in the output)")
        sp.add_argument("--out", default=None, help="report path (default stdout)")

    sp = sub.add_parser("chars", help="characteristic roots and causality at one state")
    common(sp)
    sp.add_argument("--state", required=True)
    sp.add_argument("--xi", required=True, help="covector xi_0,xi_1,xi_2,xi_3")
    sp.add_argument("--all-dirs", type=int, default=0, help="also scan this many spatial directions")
    sp.add_argument("--det-samples", type=int, default=8, help="extra directions for the determinant check")
    sp.set_defaults(func=cmd_chars)

    for name in ("check-dnmr", "check-bdnk"):
        sp = sub.add_parser(name, help=f"batch causality audit ({name[6:].upper()})")
        common(sp)
        sp.add_argument("--cells", required=True)
        sp.add_argument("--coeffs", default=None)
        sp.add_argument("--strict", action="store_true")
        sp.add_argument("--tol-constraint", type=float, default=1e-8)
        sp.add_argument("--project-constraints", action="store_true")
        sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("residuals", help="formulation residuals on a grid snapshot")
    common(sp)
    sp.add_argument("--field", required=True)
    sp.add_argument("--check", default="all", choices=["lichnerowicz", "vort-evo", "hhat-wave", "all"])
    sp.add_argument("--eos", default=None, help="eos JSON, overrides the sidecar")
    sp.add_argument("--h-ref", type=float, default=1.0)
    sp.set_defaults(func=cmd_residuals)

    sp = sub.add_parser("evolve1d", help="1D periodic run")
    common(sp)
    sp.add_argument("--config", required=True)
    sp.add_argument("--audit", choices=["none", "dnmr"], default="none")
    sp.add_argument("--strict", action="store_true")
    sp.add_argument("--out-dir", default=None, help="directory for the binary trajectory")
    sp.set_defaults(func=cmd_evolve1d)

    sp = sub.add_parser("norms", help="vacuum-boundary norms of a 1D field")
    common(sp)
    sp.add_argument("--field", required=True)
    sp.add_argument("--kappa", type=float, required=True)
    sp.add_argument("--norm", required=True, help="H,N | energy | distance | control")
    sp.add_argument("--other", default=None)
    sp.add_argument("--pair", default=None)
    sp.set_defaults(func=cmd_norms)

    sp = sub.add_parser("bjorken", help="boost-invariant flow")
    common(sp)
    sp.add_argument("--rho0", type=float, default=1.0)
    sp.add_argument("--tau0", type=float, default=1.0)
    sp.add_argument("--tau-end", type=float, default=10.0)
    sp.add_argument("--n-out", type=int, default=11)
    sp.add_argument("--mode", choices=["ideal-conformal", "bulk"], default="bulk")
    sp.add_argument("--zeta", type=float, default=0.0)
    sp.add_argument("--tau-P", type=float, default=1.0)
    sp.add_argument("--delta-PP", type=float, default=0.0)
    sp.add_argument("--P0", type=float, default=0.0)
    sp.add_argument("--rtol", type=float, default=1e-12)
    sp.set_defaults(func=cmd_bjorken)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_INVALID
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INVALID
    try:
        report = args.func(args)
        emit(report, args.out)
    except (RelfluidError, OSError, ValueError) as exc:
        kind = "FileNotFound" if isinstance(exc, FileNotFoundError) else type(exc).__name__
        sys.stderr.write(canonical_json({"error": kind, "message": str(exc), "command": args.command}))
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
