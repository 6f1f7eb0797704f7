"""Command-line interface: ``arqradio {rib,simulate,validate,sweep,examples}``."""

from __future__ import annotations

import argparse
import csv
import inspect
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .channel import Scenario, builtin_scenario, load_scenario, require_valid
from .errors import ArqRadioError
from .harness import aggregate, empirical_validity, rate_vs_budget_sweep, run_episode, run_episodes
from .protocols import ProtocolParams, default_params
from .rib import budget_sweep

SCHEMA = "arqradio.{kind}/1"

OVERRIDE_FLAGS = {
    "K": int,
    "kappa": int,
    "C_n": int,
    "gamma": float,
    "delta_tilde": float,
    "rule": str,
    "lambda_smooth": float,
    "memory_cap": int,
}


@dataclass
class RunConfig:
    """Resolved command-line request."""

    command: str
    scenario: Scenario | None = None
    strategy: str | None = None
    overrides: dict = field(default_factory=dict)
    replications: int = 1
    seed: int = 0
    output: str | None = None
    fmt: str = "csv"


# ---------------------------------------------------------------------------
# output


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    return v


def render(kind: str, rows: list[dict], fmt: str, meta: dict | None = None) -> str:
    """CSV with a schema comment line, or a JSON document."""
    schema = SCHEMA.format(kind=kind)
    meta = meta or {}
    if fmt == "json":
        doc = {"schema": schema, **meta, "rows": [{k: _plain(v) for k, v in r.items()} for r in rows]}
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    head = " ".join(f"{k}={v}" for k, v in meta.items())
    buf.write(f"# {schema}" + (f" {head}" if head else "") + "\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def _cell(v):
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return " ".join(map(str, v))
    if v is None:
        return ""
    return v


def _emit(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


# ---------------------------------------------------------------------------
# argument helpers


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _add_scenario(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--scenario", help="scenario JSON file")
    g.add_argument("--builtin", help="built-in scenario, e.g. example1:P=3,eps0=0,eps1=1")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--output", "-o", help="output path (default stdout)")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")


def _add_protocol(p: argparse.ArgumentParser, strategies=("threshold", "fixed", "adaptive")) -> None:
    p.add_argument("--strategy", choices=strategies, default="fixed")
    p.add_argument("--n", type=int, help="horizon")
    for name, typ in OVERRIDE_FLAGS.items():
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None)
    p.add_argument("--code-seed", type=int, default=None, help="codebook seed (default: --seed)")


def _scenario(args) -> Scenario:
    sc = load_scenario(args.scenario) if args.scenario else builtin_scenario(args.builtin)
    require_valid(sc)
    return sc


def _overrides(args) -> dict:
    return {k: getattr(args, k) for k in OVERRIDE_FLAGS if getattr(args, k, None) is not None}


def build_params(scenario: Scenario, n: int, overrides: dict, seed: int) -> ProtocolParams:
    """Default schedule for ``n`` with the given overrides applied."""
    ov = dict(overrides)
    dt = ov.pop("delta_tilde", 0.15)
    ov.setdefault("seed", seed)
    return default_params(n, float(scenario.R_p), float(scenario.nu), dt, **ov)


def config_from_args(args) -> RunConfig:
    sc = _scenario(args) if getattr(args, "scenario", None) or getattr(args, "builtin", None) else None
    return RunConfig(
        command=args.command,
        scenario=sc,
        strategy=getattr(args, "strategy", None),
        overrides=_overrides(args),
        replications=getattr(args, "replications", 1),
        seed=args.seed,
        output=args.output,
        fmt=args.fmt,
    )


# ---------------------------------------------------------------------------
# commands


def cmd_rib(args) -> int:
    cfg = config_from_args(args)
    sc = cfg.scenario
    eps = sc.profile.eps_block(np.arange(sc.dmc.input_size), args.at_time)
    grid = args.rp if args.rp else [float(sc.R_p)]
    rows = budget_sweep(sc.dmc, eps, grid)
    _emit(render("rib", rows, cfg.fmt, {"scenario": sc.name or args.scenario}), cfg.output)
    return 0


def _horizon(args) -> int:
    if args.n is None:
        raise ArqRadioError("--n is required")
    return args.n


def cmd_simulate(args) -> int:
    cfg = config_from_args(args)
    n = _horizon(args)
    seed_code = cfg.seed if args.code_seed is None else args.code_seed
    params = None if cfg.strategy == "threshold" and not cfg.overrides else build_params(
        cfg.scenario, n, cfg.overrides, seed_code)
    if args.trace:
        trace, rep = run_episode(cfg.scenario, cfg.strategy, params, cfg.seed, 0, n)
        with open(args.trace, "w", newline="") as fh:
            trace.to_csv(fh)
        reports = [rep] + run_episodes(cfg.scenario, cfg.strategy, params, cfg.seed,
                                       cfg.replications - 1, n=n, jobs=args.jobs, first_replication=1)
    else:
        reports = run_episodes(cfg.scenario, cfg.strategy, params, cfg.seed, cfg.replications,
                               n=n, jobs=args.jobs)
    rows = [r.to_dict() for r in reports]
    meta = {"strategy": cfg.strategy, "seed": cfg.seed, "n": n}
    if params is not None:
        meta.update(K=params.K, kappa=params.kappa, gamma=params.gamma,
                    delta_tilde=params.delta_tilde, C_n=params.C_n)
    text = render("metrics", rows, cfg.fmt, meta)
    if args.summary and cfg.fmt == "csv":
        text += render("summary", [aggregate(reports).as_row()], "csv")
    _emit(text, cfg.output)
    return 0


def cmd_validate(args) -> int:
    cfg = config_from_args(args)
    n = _horizon(args)
    params = None if cfg.strategy == "threshold" else build_params(cfg.scenario, n, cfg.overrides,
                                                                   cfg.seed)
    grid = args.k_grid or sorted({max(1, n // d) for d in (100, 30, 10, 3, 1)})
    rows = empirical_validity(cfg.scenario, cfg.strategy, params, grid, cfg.replications,
                              seed=cfg.seed, confidence=args.confidence, n=n)
    out = [dict(k=r.k, p_hat=r.p_hat, ci_lo=r.ci_lo, ci_hi=r.ci_hi, bound=r.bound) for r in rows]
    _emit(render("validity", out, cfg.fmt, {"strategy": cfg.strategy, "seed": cfg.seed, "n": n,
                                            "replications": cfg.replications}), cfg.output)
    return 0


def cmd_sweep(args) -> int:
    if not args.builtin:
        raise ArqRadioError("sweep needs --builtin so R_p can be varied")
    cfg = config_from_args(args)
    n = _horizon(args)
    base = args.builtin

    def scenario_for(R_p):
        name, _, rest = base.partition(":")
        kv = [p for p in rest.split(",") if p and not p.startswith(("rp=", "nu="))]
        eps0 = float(cfg.scenario.eps_off)
        kv += [f"rp={R_p}", f"nu={min(0.2, (1 - eps0 - R_p) / 2)}"]
        return builtin_scenario(f"{name}:{','.join(kv)}")

    def params_for(sc):
        if cfg.strategy == "threshold":
            return None
        return build_params(sc, n, cfg.overrides, cfg.seed)

    rows = rate_vs_budget_sweep(scenario_for, args.rp, cfg.strategy, params_for, cfg.replications,
                                seed=cfg.seed, n=n, jobs=args.jobs)
    out = [dict(R_p=r.R_p, **{"lambda": r.lam}, rate_mean=r.rate_mean, rate_ci=r.rate_ci, rib=r.rib,
                fixed_lower_bound=r.fixed_lower_bound) for r in rows]
    _emit(render("sweep", out, cfg.fmt, {"strategy": cfg.strategy, "seed": cfg.seed, "n": n}),
          cfg.output)
    return 0


def cmd_examples(args) -> int:
    from .experiments import RUNNERS

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    wanted = args.only.split(",") if args.only else list(RUNNERS)
    unknown = [w for w in wanted if w not in RUNNERS]
    if unknown:
        raise ArqRadioError(f"unknown criteria {unknown}; choose from {list(RUNNERS)}")
    manifest = {"schema": SCHEMA.format(kind="manifest"), "quick": args.quick, "seed": args.seed,
                "criteria": {cid: {"run": False} for cid in RUNNERS}}
    for cid in wanted:
        fn = RUNNERS[cid]
        kwargs = {"seed": args.seed} if "seed" in inspect.signature(fn).parameters else {}
        outcome = fn(quick=args.quick, **kwargs)
        name = f"{cid.lower()}.{args.fmt}"
        (out_dir / name).write_text(render(cid.lower(), outcome.rows, args.fmt, {"seed": args.seed}))
        manifest["criteria"][cid] = {
            "run": True,
            "file": name,
            "title": outcome.title,
            "passed": outcome.passed,
            "checks": {k: bool(v) for k, v in outcome.checks.items()},
            "notes": outcome.notes,
            "seconds": round(outcome.seconds, 3),
        }
        print(outcome.line(), flush=True)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arqradio",
        description="Cognitive radio over a primary ARQ link: RIB curves, simulation and validity checks.",
    )
    parser.add_argument("--version", action="version", version=f"arqradio {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rib", help="RIB value over a grid of primary rates")
    _add_scenario(p)
    _add_common(p)
    p.add_argument("--rp", type=_float_list, help="comma-separated R_p values")
    p.add_argument("--at-time", type=int, default=1, help="time index of the erasure vector")
    p.set_defaults(func=cmd_rib)

    p = sub.add_parser("simulate", help="run episodes and report metrics")
    _add_scenario(p)
    _add_common(p)
    _add_protocol(p)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trace", help="write the first episode's trace CSV here")
    p.add_argument("--summary", action="store_true", help="append aggregate statistics")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="estimate P(k^-1 sum A <= R_p) with Wilson intervals")
    _add_scenario(p)
    _add_common(p)
    _add_protocol(p, strategies=("threshold", "fixed", "adaptive"))
    p.add_argument("--replications", type=int, default=1000)
    p.add_argument("--k-grid", type=_int_list)
    p.add_argument("--confidence", type=float, default=0.99)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="empirical rate against the RIB curve")
    p.add_argument("--builtin", required=True)
    p.add_argument("--scenario", default=None, help=argparse.SUPPRESS)
    _add_common(p)
    _add_protocol(p)
    p.add_argument("--rp", type=_float_list, required=True)
    p.add_argument("--replications", type=int, default=3)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("examples", help="reproduce the acceptance tables")
    p.add_argument("--out", default="arqradio-examples")
    p.add_argument("--quick", action="store_true", help="reduced horizons and replications")
    p.add_argument("--only", help="comma-separated criterion ids, e.g. AC1,AC3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ArqRadioError, OSError, json.JSONDecodeError) as exc:
        print(f"arqradio {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
