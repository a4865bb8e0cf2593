"""Command line workbench: the planning pipeline as artifact-writing steps.

Each subcommand reads what the previous one wrote, so a basin study is a
sequence of plain commands that leaves auditable files behind:

    riverplan screen   --config config.json --out study/
    riverplan design   --config config.json --out study/
    riverplan filter   --config config.json --out study/
    riverplan optimize --config config.json --out study/
    riverplan whatif   --out study/ --min-free-flowing 164.4
    riverplan audit    --out study/
    riverplan serve    --config config.json --out study/

Stage artifacts land in the workspace directory.  ``optimize`` and
``whatif`` additionally record immutable runs under ``<out>/runs/``;
what-if runs link back to their baseline and carry the revenue-loss
ledger.  Every config key can be overridden on the command line with
the matching ``--key value`` flag.  On any module error the command
prints a one-line JSON error document to stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys

from ..basin import NetworkError
from ..engineering import EngineeringError, dump_variants, load_variants
from ..hydrology import HydrologyError
from ..metrics import MetricsError
from ..optimizer import (
    LPError,
    ProblemError,
    audit,
    dump_pool,
    dump_problem,
    load_pool,
    load_problem,
)
from ..screening import ScreeningError
from .config import ConfigError, apply_overrides, config_flags, dump_config, load_config
from .files import (
    AUDIT_FILE,
    CANDIDATES_FILE,
    CONFIG_FILE,
    CONFLICTS_FILE,
    DESIGNS_FILE,
    LOG_FILE,
    POOL_FILE,
    PROBLEM_FILE,
    SITES_FILE,
    dump_conflicts,
    dump_sites,
    load_conflicts,
    load_sites,
)
from .pipeline import (
    design_step,
    filter_step,
    load_inputs,
    optimize_step,
    screen_step,
    whatif_step,
)
from .runs import LedgerEntry, RunError, RunStore

_MODULE_ERRORS = (
    ConfigError,
    RunError,
    NetworkError,
    HydrologyError,
    MetricsError,
    EngineeringError,
    ScreeningError,
    ProblemError,
    LPError,
)


# ---------------------------------------------------------------------------
# workspace helpers


def _workspace(args) -> str:
    out = os.path.abspath(args.out)
    os.makedirs(out, exist_ok=True)
    return out


def _log(out: str, line: str) -> None:
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    with open(os.path.join(out, LOG_FILE), "a", encoding="utf-8") as fh:
        fh.write(f"{stamp} {line}\n")


def _write(out: str, name: str, text: str) -> str:
    path = os.path.join(out, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def _read(out: str, name: str, produced_by: str) -> str:
    path = os.path.join(out, name)
    if not os.path.exists(path):
        raise ConfigError(f"missing {name} in {out}; run `riverplan {produced_by}` first")
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _config_from(args):
    overrides = {key: val for key, val in (args.config_overrides or {}).items() if val is not None}
    cfg = load_config(args.config)
    return apply_overrides(cfg, overrides)


def _musd(x: float) -> str:
    return f"{round(x / 1e6, 3) + 0.0:.3f}M USD/yr"


# ---------------------------------------------------------------------------
# subcommands


def _cmd_screen(args) -> int:
    out = _workspace(args)
    cfg = _config_from(args)
    inputs = load_inputs(cfg)
    sites = screen_step(cfg, inputs)
    path = _write(out, SITES_FILE, dump_sites(sites))
    _log(out, f"screen: {len(sites)} sites from {len(inputs.net.segments)} segments")
    print(f"{len(sites)} candidate sites -> {path}")
    return 0


def _cmd_design(args) -> int:
    out = _workspace(args)
    cfg = _config_from(args)
    inputs = load_inputs(cfg)
    sites = load_sites(_read(out, SITES_FILE, "screen"))
    designs = design_step(cfg, inputs, sites)
    path = _write(out, DESIGNS_FILE, dump_variants(designs))
    _log(out, f"design: {len(designs)} variants on {len(sites)} sites")
    print(f"{len(designs)} designed variants -> {path}")
    return 0


def _cmd_filter(args) -> int:
    out = _workspace(args)
    cfg = _config_from(args)
    inputs = load_inputs(cfg)
    designs = load_variants(_read(out, DESIGNS_FILE, "design"))
    candidates, conflicts = filter_step(cfg, inputs.net, designs)
    cpath = _write(out, CANDIDATES_FILE, dump_variants(candidates))
    _write(out, CONFLICTS_FILE, dump_conflicts(conflicts))
    _log(out, f"filter: {len(candidates)} of {len(designs)} variants kept, {len(conflicts)} conflicts")
    print(f"{len(candidates)} candidates ({len(conflicts)} conflicts) -> {cpath}")
    return 0


def _progress_printer(quiet: bool):
    def cb(ev: dict) -> None:
        if quiet:
            return
        if ev["event"] == "incumbent":
            gap = ev["gap"]
            print(
                f"  incumbent {ev['pool_size']}: {_musd(ev['objective'])}"
                f" (gap {gap:.2%}, {ev['lp_solves']} LPs)",
                file=sys.stderr,
            )
        elif ev["event"] == "done":
            print(f"  search {ev['status']} after {ev['lp_solves']} LPs", file=sys.stderr)

    return cb


def _pool_lines(pool) -> list[str]:
    lines = [f"status: {pool.status}, {len(pool.alternatives)} alternatives"]
    for i, alt in enumerate(pool.alternatives):
        s = alt.summary
        lines.append(
            f"  [{i}] {_musd(s['net_revenue_usd_per_yr'])}, {s['project_count']} projects, "
            f"{s['installed_mw']:.1f} MW, {s['free_flowing_km']:.1f} km free, "
            f"{s['flooded_km2']:.2f} km2 flooded"
        )
    return lines


def _cmd_optimize(args) -> int:
    out = _workspace(args)
    cfg = _config_from(args)
    inputs = load_inputs(cfg)
    candidates = load_variants(_read(out, CANDIDATES_FILE, "filter"))
    conflicts = load_conflicts(_read(out, CONFLICTS_FILE, "filter"))

    store = RunStore(out)
    rec = store.create_run()
    try:
        problem, pool = optimize_step(
            cfg, inputs, candidates, conflicts, on_progress=_progress_printer(args.quiet)
        )
        store.write_artifact(rec.run_id, CONFIG_FILE, dump_config(cfg))
        store.write_artifact(rec.run_id, CANDIDATES_FILE, dump_variants(candidates))
        store.write_artifact(rec.run_id, PROBLEM_FILE, dump_problem(problem))
        store.write_artifact(rec.run_id, POOL_FILE, dump_pool(pool))
        store.complete(rec.run_id)
    except _MODULE_ERRORS as exc:
        store.fail(rec.run_id, f"{type(exc).__name__}: {exc}")
        raise
    _log(out, f"optimize: {rec.run_id} {pool.status}, {len(pool.alternatives)} alternatives")
    print(f"run {rec.run_id}")
    for line in _pool_lines(pool):
        print(line)
    return 0


def _plan_overrides(args) -> dict:
    doc: dict = {}
    if args.min_free_flowing is not None:
        doc["min_free_flowing_km"] = args.min_free_flowing
    if args.energy_price is not None:
        doc["energy_price_usd_per_kwh"] = args.energy_price
    if args.capacity_price is not None:
        doc["capacity_price_usd_per_kw_yr"] = args.capacity_price
    bounds = []
    for mid, value in args.max or ():
        bounds.append({"id": mid, "bound_kind": "max", "bound": float(value)})
    for mid, value in args.min or ():
        bounds.append({"id": mid, "bound_kind": "min", "bound": float(value)})
    if bounds:
        doc["metric_bounds"] = bounds
    if args.force:
        doc["force"] = tuple(args.force)
    if args.forbid:
        doc["forbid"] = tuple(args.forbid)
    if args.satisfaction is not None:
        doc["satisfaction"] = json.loads(args.satisfaction)
    return doc


def _cmd_whatif(args) -> int:
    out = _workspace(args)
    store = RunStore(out)
    base = store.record(args.run) if args.run else store.latest(status="complete")
    if base is None:
        raise RunError(f"no completed run in {out}; run `riverplan optimize` first")

    cfg = load_config(store.artifact_path(base.run_id, CONFIG_FILE))
    if args.gap_tol is not None:
        cfg = apply_overrides(cfg, {"gap_tol": args.gap_tol})
    if args.time_limit_s is not None:
        cfg = apply_overrides(cfg, {"time_limit_s": args.time_limit_s})
    problem = load_problem(store.read_artifact(base.run_id, PROBLEM_FILE))
    baseline_pool = load_pool(store.read_artifact(base.run_id, POOL_FILE))
    if baseline_pool.incumbent() is None:
        raise RunError(f"baseline {base.run_id} has an empty pool; nothing to compare against")

    overrides = _plan_overrides(args)
    if not overrides:
        raise ConfigError("whatif needs at least one override flag")
    outcome = whatif_step(
        problem,
        baseline_pool,
        cfg.solver_options(on_progress=_progress_printer(args.quiet)),
        overrides,
    )

    rec = store.create_run(parent_run_id=base.run_id, overrides=overrides)
    inc = outcome.pool.incumbent()
    entry = LedgerEntry(
        run_id=rec.run_id,
        baseline_run_id=base.run_id,
        baseline_objective_usd_per_yr=outcome.baseline_objective_usd_per_yr,
        objective_usd_per_yr=None if inc is None else inc.objective_usd_per_yr,
        revenue_delta_usd_per_yr=outcome.revenue_delta_usd_per_yr,
        overrides=overrides,
    )
    store.write_artifact(rec.run_id, CONFIG_FILE, dump_config(cfg))
    store.write_artifact(rec.run_id, PROBLEM_FILE, dump_problem(outcome.problem))
    store.write_artifact(rec.run_id, POOL_FILE, dump_pool(outcome.pool))
    store.complete(rec.run_id, ledger=base.ledger + (entry,))

    _log(out, f"whatif: {rec.run_id} from {base.run_id}, {outcome.pool.status}")
    print(f"run {rec.run_id} (baseline {base.run_id})")
    for line in _pool_lines(outcome.pool):
        print(line)
    if inc is None:
        print("infeasible under the amended controls; no revenue figure")
    else:
        delta = outcome.revenue_delta_usd_per_yr
        word = "loss" if delta >= 0 else "gain"
        print(
            f"objective {_musd(outcome.baseline_objective_usd_per_yr)} -> "
            f"{_musd(inc.objective_usd_per_yr)}; revenue {word} {_musd(abs(delta))}"
        )
    return 0


def _cmd_audit(args) -> int:
    out = _workspace(args)
    store = RunStore(out)
    rec = store.record(args.run) if args.run else store.latest(status="complete")
    if rec is None:
        raise RunError(f"no completed run in {out}; run `riverplan optimize` first")

    problem = load_problem(store.read_artifact(rec.run_id, PROBLEM_FILE))
    pool = load_pool(store.read_artifact(rec.run_id, POOL_FILE))
    rows = []
    n_bad = 0
    for i, alt in enumerate(pool.alternatives):
        violations = audit(problem, alt, tol=args.tol)
        n_bad += bool(violations)
        rows.append(
            {
                "index": i,
                "objective_usd_per_yr": alt.objective_usd_per_yr,
                "violations": violations,
            }
        )
    doc = {
        "run_id": rec.run_id,
        "pool_status": pool.status,
        "tolerance": args.tol,
        "alternatives_checked": len(rows),
        "alternatives_failing": n_bad,
        "alternatives": rows,
    }
    path = _write(out, AUDIT_FILE, json.dumps(doc, indent=2) + "\n")
    _log(out, f"audit: {rec.run_id} {len(rows)} alternatives, {n_bad} failing")
    if n_bad:
        print(f"audit FAILED for {n_bad} of {len(rows)} alternatives -> {path}")
        return 1
    print(f"audit passed for all {len(rows)} alternatives -> {path}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import build_app

    out = _workspace(args)
    cfg = _config_from(args)
    app = build_app(cfg, out)
    _log(out, f"serve: listening on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# parser


class _ConfigFlag(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        if getattr(namespace, "config_overrides", None) is None:
            namespace.config_overrides = {}
        namespace.config_overrides[self.dest_key] = values


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="path to the planning config JSON")
    group = sub.add_argument_group("config overrides (mirror config keys)")
    for key, (_, help_text) in config_flags().items():
        flag = "--" + key.replace("_", "-")
        action = group.add_argument(flag, metavar="VALUE", action=_ConfigFlag, help=help_text)
        action.dest_key = key
    sub.set_defaults(config_overrides=None)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", default=".", help="workspace directory (default: current)")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="riverplan",
        description="basin-scale hydropower portfolio planning workbench",
    )
    subs = ap.add_subparsers(dest="command", required=True)

    sc = subs.add_parser("screen", help="find candidate sites on the network")
    _add_common(sc)
    _add_config_flags(sc)
    sc.set_defaults(func=_cmd_screen)

    de = subs.add_parser("design", help="size and cost project variants at screened sites")
    _add_common(de)
    _add_config_flags(de)
    de.set_defaults(func=_cmd_design)

    fi = subs.add_parser("filter", help="apply ex-ante filters and detect conflicts")
    _add_common(fi)
    _add_config_flags(fi)
    fi.set_defaults(func=_cmd_filter)

    op = subs.add_parser("optimize", help="solve the portfolio problem, record a run")
    _add_common(op)
    _add_config_flags(op)
    op.add_argument("--quiet", action="store_true", help="suppress progress lines on stderr")
    op.set_defaults(func=_cmd_optimize)

    wi = subs.add_parser("whatif", help="re-solve a recorded run under amended controls")
    _add_common(wi)
    wi.add_argument("--run", help="baseline run id (default: latest completed)")
    wi.add_argument("--min-free-flowing", type=float, metavar="KM",
                    help="minimum river length kept free-flowing")
    wi.add_argument("--energy-price", type=float, metavar="USD_PER_KWH")
    wi.add_argument("--capacity-price", type=float, metavar="USD_PER_KW_YR")
    wi.add_argument("--max", nargs=2, action="append", metavar=("METRIC", "BOUND"),
                    help="cap a plan metric, e.g. --max households 0")
    wi.add_argument("--min", nargs=2, action="append", metavar=("METRIC", "BOUND"),
                    help="floor a plan metric")
    wi.add_argument("--force", action="append", metavar="VARIANT",
                    help="require a variant in the plan (repeatable)")
    wi.add_argument("--forbid", action="append", metavar="VARIANT",
                    help="exclude a variant from the plan (repeatable)")
    wi.add_argument("--satisfaction", metavar="JSON",
                    help="stakeholder satisfaction settings as a JSON object")
    wi.add_argument("--gap-tol", metavar="REL", help="solver gap tolerance for this run")
    wi.add_argument("--time-limit-s", metavar="S", help="solver wall clock limit for this run")
    wi.add_argument("--quiet", action="store_true", help="suppress progress lines on stderr")
    wi.set_defaults(func=_cmd_whatif)

    au = subs.add_parser("audit", help="re-check a recorded pool against raw data")
    _add_common(au)
    au.add_argument("--run", help="run id to audit (default: latest completed)")
    au.add_argument("--tol", type=float, default=1e-6, help="feasibility tolerance")
    au.set_defaults(func=_cmd_audit)

    se = subs.add_parser("serve", help="start the HTTP planning API")
    _add_common(se)
    _add_config_flags(se)
    se.add_argument("--host", default="127.0.0.1")
    se.add_argument("--port", type=int, default=8000)
    se.set_defaults(func=_cmd_serve)

    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except _MODULE_ERRORS as exc:
        doc = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(doc), file=sys.stderr)
        try:
            _log(_workspace(args), f"error: {type(exc).__name__}: {exc}")
        except OSError:
            pass
        return 1


if __name__ == "__main__":
    sys.exit(main())
