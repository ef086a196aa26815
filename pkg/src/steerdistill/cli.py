"""Command-line entry point.

Subcommands: ``assemblage``, ``inequality``, ``distill``, ``figures``.
Artifacts go to ``--out-dir`` (default: ``$STEERDISTILL_OUTPUT_DIR`` or
``./steerdistill-out``). Each run appends one line to ``manifest.jsonl`` in
that directory, and every JSON artifact carries the matching ``manifest_id``.

Exit status: 0 on success, 2 for invalid input (including parameter domain
errors), 3 when ``--check`` finds a broken invariant.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import analytics as an
from . import assemblage as asm
from . import inequalities as ineq
from . import states as st
from .distill import kernel
from .distill import protocol as proto
from .filters import Strategy

OUTPUT_ENV = "STEERDISTILL_OUTPUT_DIR"
DEFAULT_OUTPUT = "steerdistill-out"
MANIFEST_NAME = "manifest.jsonl"
SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CHECK = 3

FIGURE_COPIES = (2, 3, 5, 7, 10, 20, 50)
FIGURE_POINTS = 200
FIGURE_EPSILONS = (1e-3, 1e-4, 1e-5)
W_PANELS = {"a": 0.15, "b": 0.30, "c": 0.45}
FIDELITY_AGREEMENT_TOL = 1e-9


class CheckFailed(RuntimeError):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    tool_version: str = __version__
    outputs: list[str] = field(default_factory=list)
    wall_clock_seconds: float = 0.0
    backend: str = kernel.BACKEND

    @property
    def manifest_id(self) -> str:
        # derived from the resolved configuration so reruns produce identical artifacts
        blob = json.dumps({"command": self.command, "config": self.config, "version": self.tool_version}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "manifest_id": self.manifest_id,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "backend": self.backend,
            "outputs": self.outputs,
            "wall_clock_seconds": self.wall_clock_seconds,
        }

    def append_to(self, out_dir: Path) -> None:
        with open(out_dir / MANIFEST_NAME, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(self.as_dict(), sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    path = Path(args.out_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, doc: dict, manifest: RunManifest) -> None:
    doc = dict(doc)
    doc["manifest_id"] = manifest.manifest_id
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    manifest.outputs.append(str(path))


def _write_text(path: Path, text: str, manifest: RunManifest) -> None:
    path.write_text(text, encoding="utf-8")
    manifest.outputs.append(str(path))


def _family_params(args) -> dict:
    names = {"gghz": ("theta",), "gw": ("c0", "c1"), "opgw": ("d0",)}.get(args.family, ())
    params = {}
    for n in names:
        v = getattr(args, n)
        if v is None:
            raise ValueError(f"family {args.family} needs --{n}")
        params[n] = float(v)
    return params


def _add_family_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", required=True, choices=["gghz", "ghz", "gw", "w", "opgw"])
    p.add_argument("--theta", type=float, help="GGHZ angle in radians")
    p.add_argument("--c0", type=float)
    p.add_argument("--c1", type=float)
    p.add_argument("--d0", type=float)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-dir", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    p.add_argument("--check", action="store_true", help="run invariant checks on produced objects before writing")


def _param_tag(params: dict) -> str:
    return "_".join(f"{k}{v!r}" for k, v in sorted(params.items())) or "target"


# checks


def _check_assemblage(a, what: str) -> list[str]:
    problems = [f"{what}: {f}" for f in a.invariants().failures()]
    self_fid = an.assemblage_fidelity(a, a).minimum
    if abs(self_fid - 1.0) > 1e-9:
        problems.append(f"{what}: F_A(X, X) = {self_fid!r}")
    return problems


def _raise_if(problems: list[str]) -> None:
    if problems:
        raise CheckFailed("; ".join(problems))


# assemblage


def cmd_assemblage(args) -> int:
    params = _family_params(args)
    if args.path == "closed-form":
        a = asm.closed_form(args.scenario, args.family, **params)
    else:
        a = asm.build(args.scenario, st.make_state(args.family, **params))
    if args.check:
        _raise_if(_check_assemblage(a, a.label))
    config = {"scenario": args.scenario, "family": args.family, "params": params, "path": args.path}
    manifest = RunManifest("assemblage", config)
    out = _out_dir(args)
    report = a.invariants()
    doc = a.to_dict()
    doc["invariants"] = report.as_dict()
    path = out / f"assemblage_{args.scenario}_{args.family}_{_param_tag(params)}_{args.path}.json"
    _write_json(path, doc, manifest)
    manifest.append_to(out)
    zeros = sum(1 for m in a.elements.values() if not np.any(m))
    print(f"wrote {path}")
    print(f"elements: {len(a.elements)} ({zeros} zero)")
    print(f"no-signaling residual: {report.no_signaling_residual:.3e}")
    print(f"min eigenvalue: {report.min_eigenvalue:.3e}")
    print(f"invariants ok: {report.ok}")
    return EXIT_OK if report.ok else EXIT_CHECK


# inequality


def cmd_inequality(args) -> int:
    params = _family_params(args)
    scenario = ineq.SCENARIO[args.name]
    a = asm.build(scenario, st.make_state(args.family, **params))
    if args.check:
        _raise_if(_check_assemblage(a, a.label))
    val = ineq.evaluate(args.name, a)
    if args.check:
        bad = [t.name for t in val.terms if abs(t.correlator) > 1 + 1e-10]
        _raise_if([f"correlator {n} outside [-1, 1]" for n in bad])
    if args.json:
        doc = val.as_dict()
        doc.update({"schema_version": SCHEMA_VERSION, "family": args.family, "params": params, "scenario": scenario})
        print(json.dumps(doc, indent=2))
    else:
        print(f"{val.name} on {a.label}: {val.value:.6f}  violated={str(val.violated).lower()}")
        print(f"  constant: {val.constant:+.6f}")
        for t in val.terms:
            print(f"  {t.coefficient:+.4f} * {t.name:<14} = {t.coefficient:+.4f} * {t.correlator:+.6f} = {t.contribution:+.6f}")
    return EXIT_OK


# distill


def _protocol_config(args) -> proto.ProtocolConfig:
    return proto.ProtocolConfig(
        scenario=args.scenario,
        family=args.family,
        params=_family_params(args),
        copies=args.copies,
        strategy=args.strategy,
        trials=args.trials,
        seed=args.seed,
    )


def _check_report(r: proto.DistillationReport) -> list[str]:
    problems = _check_assemblage(r.average_assemblage, "average assemblage")
    a = r.analytic
    if abs(a.p_success - (1 - (1 - a.p_nd) ** (r.config.copies - 1))) > 1e-12:
        problems.append("p_success != 1 - (1 - p_nd)^(N-1)")
    if not (0.0 <= r.fidelity_to_target <= 1.0 + 1e-9):
        problems.append(f"fidelity {r.fidelity_to_target!r} outside [0, 1]")
    if abs(r.fidelity_to_target - r.fidelity_closed) > FIDELITY_AGREEMENT_TOL:
        problems.append(f"closed-form fidelity {r.fidelity_closed!r} vs direct {r.fidelity_to_target!r}")
    if abs(r.outcome_distribution[tuple(0 for _ in next(iter(r.outcome_distribution)))] - a.p_nd) > 1e-12:
        problems.append("keep probability from the filter plan differs from the analytic p_nd")
    if r.empirical is not None and not r.empirical.within_4_sigma:
        problems.append(f"empirical success frequency {r.empirical.deviation_sigmas:.2f} sigma from analytic")
    return problems


def cmd_distill(args) -> int:
    config = _protocol_config(args)
    start = time.perf_counter()
    report = proto.run_monte_carlo(config, workers=args.workers)
    if args.check:
        _raise_if(_check_report(report))
    manifest = RunManifest("distill", config.as_dict(), seed=config.seed)
    out = _out_dir(args)
    stem = f"distill_{config.scenario}_{config.family}_{_param_tag(config.params)}_N{config.copies}_{config.strategy.value}_s{config.seed}"
    _write_json(out / f"{stem}.json", report.to_dict(), manifest)
    p = list(config.params.values()) + ["", ""]
    row = {
        "scenario": config.scenario, "family": config.family, "param1": p[0], "param2": p[1], "N": config.copies,
        "fidelity_closed": report.fidelity_closed, "fidelity_direct": report.fidelity_to_target,
        "p_success": report.analytic.p_success,
    }
    _write_text(out / f"{stem}_fidelity.csv", an.write_csv([row], an.FIDELITY_COLUMNS), manifest)
    manifest.wall_clock_seconds = time.perf_counter() - start
    manifest.append_to(out)
    a = report.analytic
    print(f"protocol {config.variant} N={config.copies} strategy={config.strategy.value} domain={report.domain['status']}")
    print(f"p_nd={a.p_nd:.12g} p_fail={a.p_fail:.12g} p_success={a.p_success:.12g}")
    if report.empirical is not None:
        e = report.empirical
        print(f"monte carlo: trials={e.trials} success_frequency={e.success_frequency:.6f} "
              f"({e.deviation_sigmas:.2f} sigma) mean_retained={e.mean_retained_copies:.4f} "
              f"zero_survivor_frequency={e.zero_survivor_frequency:.6f}")
    print(f"fidelity_closed={report.fidelity_closed:.12g} fidelity_direct={report.fidelity_to_target:.12g}")
    for path in manifest.outputs:
        print(f"wrote {path}")
    return EXIT_OK


# figures


def _open_grid(lo: float, hi: float, n: int, extra: Sequence[float] = ()) -> list[float]:
    pts = list(np.linspace(lo, hi, n + 2)[1:-1]) + [float(x) for x in extra if lo < x < hi]
    return sorted({float(x) for x in pts})


def _fidelity_rows(scenario: str, family: str, params: dict, copies: Sequence[int], direct: bool) -> list[dict]:
    rows = []
    pv = list(params.values()) + ["", ""]
    for N in copies:
        cfg = proto.ProtocolConfig(scenario, family, params, copies=N)
        closed = an.closed_form_fidelity(family, params, scenario, N)
        row = {
            "scenario": scenario, "family": family, "param1": pv[0], "param2": pv[1], "N": N,
            "fidelity_closed": closed, "fidelity_direct": "", "p_success": proto.analytic_probabilities(cfg).p_success,
        }
        if direct:
            avg = proto.average_output_assemblage(cfg)
            row["fidelity_direct"] = an.assemblage_fidelity(avg, proto.target_assemblage(cfg)).minimum
        rows.append(row)
    return rows


def _nmin_rows(scenario: str, family: str, params: dict, epsilons: Sequence[float]) -> list[dict]:
    pv = list(params.values()) + ["", ""]
    return [
        {"scenario": scenario, "family": family, "param1": pv[0], "param2": pv[1], "epsilon": eps,
         "convention": "one_minus_F", "n_min": an.n_min(an.NminQuery(family, params, scenario, eps))}
        for eps in epsilons
    ]


def _w1_domain(c0: float, c1_grid: Sequence[float]) -> list[float]:
    keep = []
    for c1 in c1_grid:
        if 1 - c0 * c0 - 2 * c1 * c1 < 0 or 1 - 2 * c0 * c0 - c1 * c1 < 0:
            continue
        if ineq.evaluate_W1(asm.build_1sdi(st.gw(c0, c1))).violated:
            keep.append(c1)
    return keep


def figure_tables(points: int = FIGURE_POINTS, copies: Sequence[int] = FIGURE_COPIES, direct: bool = True) -> dict[str, tuple]:
    """CSV rows per figure: name -> (columns, rows)."""
    tables = {}
    theta_grid = _open_grid(0.185, math.pi / 4, points, extra=(0.25, 0.3, 0.5))
    rows = []
    for th in theta_grid:
        rows += _fidelity_rows("1sdi", "gghz", {"theta": th}, copies, direct)
    tables["fig1"] = (an.FIDELITY_COLUMNS, rows)
    tables["n_min_gghz"] = (an.NMIN_COLUMNS, [r for th in theta_grid for r in _nmin_rows("1sdi", "gghz", {"theta": th}, FIGURE_EPSILONS)])
    c1_grid = _open_grid(0.0, st.SQRT3_INV, points)
    for panel, c0 in W_PANELS.items():
        dom = _w1_domain(c0, c1_grid)
        rows, nrows = [], []
        for c1 in dom:
            p = {"c0": c0, "c1": c1}
            rows += _fidelity_rows("1sdi", "gw", p, copies, direct)
            nrows += _nmin_rows("1sdi", "gw", p, FIGURE_EPSILONS)
        tables[f"af_w_{panel}"] = (an.FIDELITY_COLUMNS, rows)
        tables[f"n_min_w_{panel}"] = (an.NMIN_COLUMNS, nrows)
    d_grid = _open_grid(3 / 25, st.SQRT3_INV, points)
    rows = []
    for d0 in d_grid:
        rows += _fidelity_rows("2sdi", "opgw", {"d0": d0}, copies, direct)
    tables["w2s_af"] = (an.FIDELITY_COLUMNS, rows)
    tables["n_min_w2s"] = (an.NMIN_COLUMNS, [r for d0 in d_grid for r in _nmin_rows("2sdi", "opgw", {"d0": d0}, FIGURE_EPSILONS)])
    return tables


def _check_tables(tables: dict) -> list[str]:
    problems = []
    for name, (cols, rows) in tables.items():
        if "fidelity_direct" in cols:
            for r in rows:
                if r["fidelity_direct"] != "" and abs(r["fidelity_direct"] - r["fidelity_closed"]) > FIDELITY_AGREEMENT_TOL:
                    problems.append(f"{name}: closed vs direct mismatch at {r['param1']},{r['param2']},N={r['N']}")
                if not (0.0 <= r["fidelity_closed"] <= 1.0 + 1e-9):
                    problems.append(f"{name}: fidelity outside [0, 1]")
    return problems


def cmd_figures(args) -> int:
    copies = tuple(args.copies) if args.copies else FIGURE_COPIES
    start = time.perf_counter()
    tables = figure_tables(args.points, copies, direct=not args.no_direct)
    if args.check:
        _raise_if(_check_tables(tables))
    config = {"points": args.points, "copies": list(copies), "epsilons": list(FIGURE_EPSILONS),
              "direct": not args.no_direct, "w_panels": W_PANELS}
    manifest = RunManifest("figures", config)
    out = _out_dir(args)
    for name, (cols, rows) in tables.items():
        _write_text(out / f"{name}.csv", an.write_csv(rows, cols), manifest)
    manifest.wall_clock_seconds = time.perf_counter() - start
    manifest.append_to(out)
    for path in manifest.outputs:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steerdistill", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assemblage", help="build an assemblage and write it as JSON")
    p.add_argument("--scenario", choices=["1sdi", "2sdi"], default="1sdi")
    _add_family_flags(p)
    p.add_argument("--path", choices=["tomographic", "closed-form"], default="tomographic")
    _add_common(p)
    p.set_defaults(func=cmd_assemblage)

    p = sub.add_parser("inequality", help="evaluate a steering witness on a state's assemblage")
    p.add_argument("name", choices=sorted(ineq.EVALUATORS))
    _add_family_flags(p)
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")
    p.add_argument("--check", action="store_true")
    p.set_defaults(func=cmd_inequality)

    p = sub.add_parser("distill", help="run the N-copy protocol (analytic + Monte Carlo)")
    p.add_argument("--scenario", choices=["1sdi", "2sdi"], default="1sdi")
    _add_family_flags(p)
    p.add_argument("--copies", "-N", type=int, required=True)
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default=None)
    p.add_argument("--trials", type=int, default=0, help="Monte Carlo trials; 0 skips the simulation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("figures", help="emit the figure data as CSV")
    p.add_argument("--points", type=int, default=FIGURE_POINTS)
    p.add_argument("--copies", type=int, nargs="+", help=f"curve N values (default {FIGURE_COPIES})")
    p.add_argument("--no-direct", action="store_true", help="skip the direct fidelity column")
    _add_common(p)
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except st.DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CheckFailed, asm.AssemblageInvariantError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
