"""Command-line entry point.

One executable, six subcommands: `algebra` and `classical` run the
verification suites, `rep` builds and checks the bound-state matrices,
`check` evaluates the controllability conditions, `simulate` propagates
a schedule, `optimize` synthesizes one.  Every run prints a JSON report
to stdout; with --out DIR the same report lands in DIR/report.json next
to any artifacts (trajectory.csv, schedule.json, matrices/).

Reports are versioned (schema_version) and embed the fully resolved
configuration.  The report subtree is deterministic for a fixed config
and seed; the timestamp lives outside it.  Option precedence is
command-line flags, then a flat JSON config file (--config), then
built-in defaults.

Exit codes: 0 success or all checks passed, 1 a verification or check
suite failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import algebra, classical, controllability, representation, simulator
from .generators import NAMES, parse_generator

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# plumbing


def _jsonable(x):
    """Recursively coerce to JSON-serializable values; non-finite floats
    become strings so the emitted document is strict JSON."""
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        f = float(x)
        if np.isfinite(f):
            return f
        return "inf" if f > 0 else ("-inf" if f < 0 else "nan")
    return x


def _load_config_file(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise UsageError(f"config file is not valid JSON: {e}")
    if not isinstance(doc, dict) or any(
        isinstance(v, (dict, list)) for v in doc.values()
    ):
        raise UsageError("config file must be a flat JSON object")
    return doc


def _resolve(ns, cfg, defaults):
    """flags > config file > defaults, for the keys in `defaults`."""
    out = {}
    for key, default in defaults.items():
        flag = getattr(ns, key, None)
        out[key] = flag if flag is not None else cfg.get(key, default)
    return out


def _int(config, key, minimum=None):
    try:
        v = int(config[key])
    except (TypeError, ValueError):
        raise UsageError(f"--{key} must be an integer, got {config[key]!r}")
    if minimum is not None and v < minimum:
        raise UsageError(f"--{key} must be >= {minimum}, got {v}")
    config[key] = v
    return v


def _control_names(text):
    try:
        return tuple(NAMES[parse_generator(t)]
                     for t in str(text).split(",") if t.strip())
    except KeyError as e:
        raise UsageError(f"unknown generator name: {e.args[0]}")


def _state_vector(rep, text, what):
    parts = str(text).split(",")
    if len(parts) != 3:
        raise UsageError(f'{what} must be "n,l,m", got {text!r}')
    try:
        nlm = tuple(int(p) for p in parts)
    except ValueError:
        raise UsageError(f'{what} must be three integers "n,l,m", got {text!r}')
    if nlm not in rep.index:
        raise UsageError(
            f"{what} state {nlm} is outside the n_max={rep.n_max} basis"
        )
    psi = np.zeros(rep.dim, dtype=complex)
    psi[rep.index[nlm]] = 1.0
    return psi


# ---------------------------------------------------------------------------
# subcommands


def _cmd_algebra(ns, cfg):
    config = _resolve(ns, cfg, {"verify": True, "export": None, "out": None})
    report = {}
    ok = True
    if config["export"]:
        algebra.export_structure_constants(config["export"])
        report["exported_to"] = str(config["export"])
    if config["verify"] or not config["export"]:
        config["verify"] = True
        table = algebra.verify_table()
        sub = algebra.generated_subalgebra_names(algebra.REMARK_FIVE_SET)
        report["table"] = table
        report["five_generator_closure"] = {
            "seeds": list(algebra.REMARK_FIVE_SET),
            "dim": sub.dim,
            "depth": sub.depth,
        }
        report["killing_form_nondegenerate"] = algebra.killing_nondegeneracy()
        ok = (
            table["ok"]
            and sub.dim == 15
            and report["killing_form_nondegenerate"]
        )
        report["ok"] = ok
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), config, report, []


def _cmd_classical(ns, cfg):
    config = _resolve(ns, cfg, {
        "sign": "both", "samples": 120, "seed": 0, "h": 1e-5,
        "tol": 1e-5, "out": None,
    })
    if config["sign"] not in ("negative", "positive", "both"):
        raise UsageError('--sign must be "negative", "positive" or "both"')
    _int(config, "samples", minimum=1)
    _int(config, "seed")
    signs = (("negative", "positive") if config["sign"] == "both"
             else (config["sign"],))
    report = {}
    ok = True
    for sign in signs:
        rr = classical.verify_relations(
            sign, n_samples=config["samples"], seed=config["seed"],
            h=float(config["h"]), tol=float(config["tol"]),
        )
        report[sign] = rr.to_dict()
        ok = ok and rr.ok
    report["ok"] = ok
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), config, report, []


def _cmd_rep(ns, cfg):
    config = _resolve(ns, cfg, {
        "nmax": 6, "check": None, "export": None, "out": None,
        "tol_comm": 1e-9, "tol_herm": 1e-12, "tol_casimir": 1e-9,
        "tol_coeff": 1e-10,
    })
    n_max = _int(config, "nmax", minimum=3)
    do_check = bool(config["check"]) or not config["export"]
    config["check"] = do_check
    rep = representation.build_rep(n_max)
    report = {"n_max": n_max, "dim": rep.dim}
    code = EXIT_OK
    artifacts = []

    if do_check:
        herm = max(
            float(np.abs(G - G.conj().T).max()) for G in rep.generators
        )
        comm = representation.check_commutators(rep, tol=float(config["tol_comm"]))
        cas = representation.casimir_check(rep)
        coeff = rep.tables.residual
        ok = (
            herm < float(config["tol_herm"])
            and comm.ok
            and cas["ok"]
            and coeff < float(config["tol_coeff"])
        )
        report.update({
            "hermiticity_max": herm,
            "commutator_residual_max": comm.max_residual,
            "commutator_worst_pair": list(comm.worst),
            "casimir": cas,
            "coefficient_residual": coeff,
            "ok": ok,
        })
        code = EXIT_OK if ok else EXIT_CHECK_FAILED

    if config["export"]:
        representation.export_matrices(rep, config["export"])
        report["exported_to"] = str(config["export"])
    elif config["out"]:
        artifacts.append(
            lambda outdir: representation.export_matrices(rep, outdir / "matrices")
        )
        report["exported_to"] = "matrices/"
    return code, config, report, artifacts


def _cmd_check(ns, cfg):
    config = _resolve(ns, cfg, {
        "nmax": 4, "controls": ",".join(NAMES), "probes": 20, "seed": 0,
        "out": None,
    })
    n_max = _int(config, "nmax", minimum=3)
    _int(config, "probes", minimum=1)
    _int(config, "seed")
    names = _control_names(config["controls"])
    config["controls"] = ",".join(names)
    sysm = controllability.ControlSystem(representation.build_rep(n_max), names)
    rpt = controllability.controllability_report(
        sysm, probes=config["probes"], seed=config["seed"]
    )
    code = EXIT_OK if rpt.verdict == "conditions-satisfied" else EXIT_CHECK_FAILED
    return code, config, rpt.to_dict(), []


def _cmd_simulate(ns, cfg):
    config = _resolve(ns, cfg, {
        "nmax": 4, "schedule": None, "psi0": "1,0,0", "target": None,
        "out": None,
    })
    n_max = _int(config, "nmax", minimum=3)
    if not config["schedule"]:
        raise UsageError("--schedule FILE is required")
    spath = Path(config["schedule"])
    if not spath.is_file():
        raise UsageError(f"schedule file not found: {spath}")
    try:
        sched = simulator.PulseSchedule.from_json(spath)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise UsageError(f"could not parse schedule {spath}: {e}")

    sysm = controllability.full_system(n_max)
    psi0 = _state_vector(sysm.rep, config["psi0"], "--psi0")
    traj = simulator.propagate(sysm, sched, psi0)
    report = {
        "n_max": n_max,
        "segments": sched.n_segments,
        "total_duration": sched.total_duration,
        "final_shell_populations": traj.shell_populations[-1],
        "final_energy": traj.energy[-1],
        "max_norm_defect": float(traj.norm_defects.max()),
        "max_boundary_population": float(traj.boundary_population.max()),
        "truncation_unreliable": traj.truncation_unreliable,
    }
    if config["target"]:
        tgt = _state_vector(sysm.rep, config["target"], "--target")
        report["fidelity"] = simulator.fidelity(traj.final_state, tgt)
    artifacts = [
        lambda outdir: simulator.trajectory_to_csv(traj, outdir / "trajectory.csv")
    ]
    return EXIT_OK, config, report, artifacts


def _cmd_optimize(ns, cfg):
    config = _resolve(ns, cfg, {
        "nmax": 4, "psi0": "1,0,0", "target": "2,1,0",
        "controls": "A3,B3,G3,S,C,D", "segments": 20, "budget": 50000,
        "seed": 0, "out": None,
    })
    n_max = _int(config, "nmax", minimum=3)
    _int(config, "segments", minimum=1)
    _int(config, "budget", minimum=1)
    _int(config, "seed")
    names = _control_names(config["controls"])
    config["controls"] = ",".join(names)
    rep = representation.build_rep(n_max)
    sysm = controllability.ControlSystem(rep, names)
    psi0 = _state_vector(rep, config["psi0"], "--psi0")
    target = _state_vector(rep, config["target"], "--target")
    sched, fid, info = simulator.optimize_pulse(
        sysm, psi0, target,
        n_segments=config["segments"], budget=config["budget"],
        seed=config["seed"], return_info=True,
    )
    traj = simulator.propagate(sysm, sched, psi0)
    report = {
        "n_max": n_max,
        "fidelity": fid,
        "evaluations_used": info["evals"],
        "budget": config["budget"],
        "segments": sched.n_segments,
        "total_duration": sched.total_duration,
        "max_boundary_population": float(traj.boundary_population.max()),
        "truncation_unreliable": traj.truncation_unreliable,
        "final_shell_populations": traj.shell_populations[-1],
    }

    def _write(outdir):
        sched.to_json(outdir / "schedule.json")
        simulator.trajectory_to_csv(traj, outdir / "trajectory.csv")

    return EXIT_OK, config, report, [_write]


_DISPATCH = {
    "algebra": _cmd_algebra,
    "classical": _cmd_classical,
    "rep": _cmd_rep,
    "check": _cmd_check,
    "simulate": _cmd_simulate,
    "optimize": _cmd_optimize,
}


# ---------------------------------------------------------------------------
# parser


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="so42hydrogen",
        description="so(4,2) hydrogen toolkit: algebra verification, "
                    "bound-state representation, controllability checks, "
                    "and pulse-level state transfer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--out", help="write report.json and artifacts here")

    p = sub.add_parser("algebra", parents=[common],
                       help="verify structure constants and Jacobi identities")
    p.add_argument("--verify", action="store_const", const=True,
                   help="run the bracket and Jacobi suite (default)")
    p.add_argument("--export", metavar="FILE",
                   help="write the structure table as JSON")

    p = sub.add_parser("classical", parents=[common],
                       help="verify the classical Poisson realizations")
    p.add_argument("--sign", choices=["negative", "positive", "both"])
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--h", type=float, help="finite-difference step")
    p.add_argument("--tol", type=float)

    p = sub.add_parser("rep", parents=[common],
                       help="build and check the bound-state matrices")
    p.add_argument("--nmax", type=int)
    p.add_argument("--check", action="store_const", const=True,
                   help="run Hermiticity/commutator/Casimir checks")
    p.add_argument("--export", metavar="DIR",
                   help="export matrices as JSON triplets")

    p = sub.add_parser("check", parents=[common],
                       help="evaluate the controllability conditions")
    p.add_argument("--nmax", type=int)
    p.add_argument("--controls", help="comma-separated generator names")
    p.add_argument("--probes", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("simulate", parents=[common],
                       help="propagate a piecewise-constant schedule")
    p.add_argument("--nmax", type=int)
    p.add_argument("--schedule", metavar="FILE")
    p.add_argument("--psi0", metavar="N,L,M")
    p.add_argument("--target", metavar="N,L,M")

    p = sub.add_parser("optimize", parents=[common],
                       help="synthesize a transfer schedule")
    p.add_argument("--nmax", type=int)
    p.add_argument("--psi0", metavar="N,L,M")
    p.add_argument("--target", metavar="N,L,M")
    p.add_argument("--controls", help="comma-separated generator names")
    p.add_argument("--segments", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        cfg = _load_config_file(ns.config)
        code, config, report, artifacts = _DISPATCH[ns.command](ns, cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    config["subcommand"] = ns.command
    doc = {
        "schema_version": 1,
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": _jsonable(config),
        "report": _jsonable(report),
    }
    text = json.dumps(doc, indent=1, sort_keys=True)
    print(text)
    if config.get("out"):
        outdir = Path(config["out"])
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "report.json").write_text(text + "\n")
        for writer in artifacts:
            writer(outdir)
    return code


if __name__ == "__main__":
    sys.exit(main())
