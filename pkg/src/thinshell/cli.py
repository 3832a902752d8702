"""Command line driver: ``thinshell verify | operator | convergence | catalog``."""

from __future__ import annotations

import argparse
import difflib
import json
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fields as F
from . import geometry as G
from . import oracle as O
from . import shell as SH
from .checks import run_suite, surface_label
from .config import (
    DEFAULT_TOLERANCES,
    ConfigError,
    field_shorthand,
    load,
    merged,
    points_shorthand,
    surface_shorthand,
)
from .expr import ExprError
from .report import records_csv, report_document, rows_csv, to_json

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--surface", action="append", help="e.g. sphere:R=1 or ellipsoid:a=1,b=1.3,c=2")
    p.add_argument("--profile", action="append", help="slip | hodge | alpha:<value>")
    p.add_argument("--alpha", action="append", help="alpha value(s), comma separated")
    p.add_argument("--field", action="append", help="'expr1;expr2' or random:count=3,seed=0")
    p.add_argument("--points", help="'u1,u2;u1,u2' or sobol:count=5,seed=0")
    p.add_argument("--seed", type=int, help="seed for random fields and Sobol points")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--out", type=Path, help="write output here instead of stdout")
    p.add_argument("--dump-config", action="store_true", help="print the compiled config and exit")
    p.add_argument("--timing", action="store_true", help="record wall time in the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thinshell",
        description="Verify thin-shell vector Laplacian identities on parametrised hypersurfaces.",
        epilog="Tolerance overrides: --tol.<check>=<value>, checks: " + ", ".join(DEFAULT_TOLERANCES),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("verify", help="run the identity checks"))
    op = sub.add_parser("operator", help="tabulate Delta_alpha V and friends")
    _add_run_flags(op)
    op.add_argument(
        "--op",
        action="append",
        choices=("alpha", "deformation", "hodge", "bochner", "ambient"),
        help="operators to tabulate (default: alpha)",
    )
    _add_run_flags(sub.add_parser("convergence", help="observed orders of the r and h expansions"))
    cat = sub.add_parser("catalog", help="list built-in surfaces")
    cat.add_argument("--describe", metavar="NAME")
    return parser


def _split_tol_args(extra: Sequence[str]) -> tuple[dict[str, float], list[str]]:
    tol, rest = {}, []
    it = iter(extra)
    for arg in it:
        if arg.startswith("--tol."):
            name, eq, value = arg[len("--tol.") :].partition("=")
            if not eq:
                value = next(it, "")
            try:
                tol[name] = float(value)
            except ValueError:
                raise ConfigError(f"tolerance for {name!r} is not a number: {value!r}", f"/tolerances/{name}") from None
        else:
            rest.append(arg)
    return tol, rest


def compile_config(args: argparse.Namespace, tol: dict[str, float]) -> dict:
    doc: dict = {}
    if args.config is not None:
        try:
            doc = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}", "") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object", "")
    doc = merged(doc)
    doc["command"] = args.command
    if args.seed is not None:
        doc["seed"] = args.seed
        if args.field is None and args.config is None:
            doc["fields"] = [{"random": {"count": 3, "seed": args.seed}}]
        if args.points is None and args.config is None:
            doc["samples"] = {"sobol": {"count": 5, "seed": args.seed}, "margin": 0.05}
    if args.surface:
        doc["surfaces"] = [surface_shorthand(s) for s in args.surface]
    alphas = [float(a) for chunk in (args.alpha or []) for a in chunk.split(",") if a.strip()]
    if args.command == "operator":
        if alphas:
            doc["operator"] = {**doc["operator"], "alphas": alphas}
        if getattr(args, "op", None):
            doc["operator"] = {**doc["operator"], "operators": list(args.op)}
    if args.profile or (alphas and args.command != "operator"):
        profiles = list(args.profile or [])
        profiles += [f"alpha:{a}" for a in alphas] if args.command != "operator" else []
        doc["profiles"] = profiles
    if args.field:
        doc["fields"] = [field_shorthand(f) for f in args.field]
    if args.points:
        doc["samples"] = {**points_shorthand(args.points), "margin": doc["samples"].get("margin", 0.05)}
    if tol:
        doc["tolerances"] = {**doc["tolerances"], **tol}
    if args.format:
        doc["output"] = {**doc["output"], "format": args.format}
    if args.out is not None:
        doc["output"] = {**doc["output"], "path": str(args.out)}
    return doc


def _emit(text: str, doc: dict) -> None:
    path = doc["output"].get("path")
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _surface_labels(doc: dict) -> list[str]:
    s = doc["surfaces"]
    return [surface_label(x) for x in ([s] if isinstance(s, dict) else s)]


def cmd_verify(doc: dict, timing: bool = False) -> int:
    t0 = time.perf_counter()
    cfg = load(doc)
    records = run_suite(cfg)
    wall = time.perf_counter() - t0
    meta = {"command": "verify", "seed": doc.get("seed"), "config_hash": cfg.hash}
    if timing:
        meta["wall_time_s"] = round(wall, 3)
    if doc["output"]["format"] == "csv":
        text = records_csv(records)
    else:
        text = to_json(report_document(records, meta))
    _emit(text, doc)
    failed = [r for r in records if not r.passed]
    print(f"{len(records) - len(failed)}/{len(records)} checks passed in {wall:.2f} s", file=sys.stderr)
    for r in failed[:20]:
        print(f"FAIL {r.check_id} {r.surface} {r.profile} {r.field} u={list(r.point)} residual={r.residual:.3e} {r.error or ''}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_FAIL


def _point_cols(u) -> dict:
    return {f"u{k + 1}": float(x) for k, x in enumerate(u)}


def _vec_cols(name: str, v) -> dict:
    return {f"{name}_{k + 1}": float(x) for k, x in enumerate(v)}


def cmd_operator(doc: dict) -> int:
    cfg = load(doc)
    alphas = [float(a) for a in doc["operator"]["alphas"]]
    ops = doc["operator"].get("operators") or ["alpha"]
    rows = []
    for k, (chart, label) in enumerate(zip(cfg.charts, _surface_labels(doc))):
        for u in cfg.points[k]:
            for V in cfg.fields[k]:
                for a in alphas:
                    row = {"surface": label, "field": V.label, "alpha": a, **_point_cols(u)}
                    vals = {}
                    if "alpha" in ops:
                        vals["alpha_op"] = F.alpha_operator(V, chart, u, a)
                    if "deformation" in ops:
                        vals["deformation"] = F.deformation(V, chart, u)
                    if "hodge" in ops:
                        vals["hodge"] = F.hodge(V, chart, u)
                    if "bochner" in ops:
                        vals["bochner"] = F.bochner(V, chart, u)
                    if "ambient" in ops:
                        vals["ambient"] = SH.ambient_bochner_tangential(
                            SH.shell_field(V, SH.BoundaryProfile.interpolating(a)), chart, u
                        )
                    for name, v in vals.items():
                        row.update(_vec_cols(name, v))
                    rows.append(row)
    if doc["output"]["format"] == "csv":
        text = rows_csv(rows)
    else:
        text = to_json({"metadata": {"command": "operator", "seed": doc.get("seed"), "config_hash": cfg.hash}, "rows": rows})
    _emit(text, doc)
    return EXIT_OK


def convergence_rows(doc: dict) -> list[dict]:
    cfg = load(doc)
    conv = doc.get("convergence", {})
    rows = []
    for k, (chart, label) in enumerate(zip(cfg.charts, _surface_labels(doc))):
        for u in cfg.points[k]:
            base = {"surface": label, **_point_cols(u)}
            focal = min(G.extrinsic_at(chart, u).focal_radius, 1.0)
            r = conv.get("r") or 0.1 * focal
            rep = SH.metric_expansion_check(chart, u, [r])
            rows.append(
                {"study": "metric_expansion", **base, "profile": "-", "field": "-", "h": r,
                 "error_h": rep.residuals[0], "error_h2": None, "order": rep.orders[0]}
            )
            sr = G.shape_radial_convergence(chart, u, conv.get("h") or 0.05 * focal)
            rows.append(
                {"study": "shape_radial", **base, "profile": "-", "field": "-", "h": sr["h"],
                 "error_h": sr["error_h"], "error_h2": sr["error_h2"], "order": sr["order"]}
            )
            for V in cfg.fields[k]:
                for profile in cfg.profiles:
                    oc = O.oracle_convergence(SH.shell_field(V, profile), chart, u, conv.get("oracle_h"))
                    rows.append(
                        {"study": "oracle", **base, "profile": str(profile), "field": V.label, "h": oc["h"],
                         "error_h": oc["error_h"], "error_h2": oc["error_h2"], "order": oc["order"]}
                    )
    return rows


def cmd_convergence(doc: dict) -> int:
    rows = convergence_rows(doc)
    if doc["output"]["format"] == "csv":
        text = rows_csv(rows)
    else:
        clean = [{k: (v if not isinstance(v, float) or np.isfinite(v) else str(v)) for k, v in r.items()} for r in rows]
        text = to_json({"metadata": {"command": "convergence", "seed": doc.get("seed")}, "rows": clean})
    _emit(text, doc)
    return EXIT_OK


def cmd_catalog(describe: str | None = None) -> int:
    if describe is None:
        for name, entry in G.CATALOG.items():
            params = ", ".join(f"{k}={v}" for k, v in entry["params"].items() if v is not None)
            print(f"{name:10s} {params}")
        return EXIT_OK
    if describe not in G.CATALOG:
        hint = difflib.get_close_matches(describe, list(G.CATALOG), n=1)
        msg = f"unknown surface {describe!r}" + (f"; did you mean {hint[0]!r}?" if hint else "")
        print(msg, file=sys.stderr)
        return EXIT_CONFIG
    entry = G.CATALOG[describe]
    if describe == "custom":
        info = {
            "name": "custom",
            "variables": ["u1", "...", "un"],
            "params": {"components": "n+1 expressions in u1..un", "domain": "n intervals", "seed": "or seed/n"},
            "notes": "user expressions; without components a seeded random surface is generated",
        }
    else:
        info = G.catalog_chart(describe).describe()
    info["chart"] = "(" + ", ".join(entry["variables"]) + ")"
    info["margin"] = "5% of each interval trimmed per side when sampling"
    print(json.dumps(info, indent=2))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        tol, rest = _split_tol_args(argv)
        args = parser.parse_args(rest)
        if args.command == "catalog":
            return cmd_catalog(args.describe)
        doc = compile_config(args, tol)
        if args.dump_config:
            sys.stdout.write(to_json(doc))
            return EXIT_OK
        if args.command == "verify":
            return cmd_verify(doc, args.timing)
        if args.command == "operator":
            return cmd_operator(doc)
        return cmd_convergence(doc)
    except (ConfigError, ExprError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
