"""Command-line surface.

Subcommands: transform, kernel, harmonic, lift, montecarlo, scenario.
Every run is deterministic given its config (seeds included) and writes
JSON summaries plus CSV tables embedding the resolved config and the tool
version.

Exit codes: 0 success, 1 a scenario assertion failed, 2 configuration
error, 3 enumeration budget exceeded, 4 operation contract violated.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional

from . import __version__
from .configio import (
    deficit_json,
    load_config,
    measure_rows,
    parse_function,
    parse_group,
    parse_infinite_word,
    parse_measure,
    parse_rule,
    parse_window,
    report_envelope,
    write_csv,
    write_json,
)
from .errors import (
    BudgetExceededError,
    ConfigError,
    ContractError,
    StopwalkError,
)
from .groups import FreeSemigroup
from .harmonic import check_harmonic
from .kernels import (
    BoundarySequence,
    green_free,
    green_truncated,
    kernel_sequence,
    martin_free,
    martin_truncated,
)
from .measures import Measure, MeasureDeficit, as_fraction, format_fraction
from .montecarlo import PositionHit, SampleConfig, compare, estimate_transform
from .cover import build_cover, lift_rule, pushforward, transfer_harmonicity
from .scenarios import SCENARIO_NAMES, run_scenario
from .stopping import (
    HittingRule,
    MixtureRule,
    StoppingRule,
    iterate_transform,
    make_mu_tau_t,
    transform_bounded,
    transform_hitting,
    transform_mixture,
)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_CONTRACT = 4


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_transform(args) -> int:
    cfg = load_config(args.config, "transform")
    spec = parse_group(cfg["group"])
    mu = parse_measure(cfg["measure"], spec)
    rule = parse_rule(cfg["rule"], spec, mu)
    iterate = int(cfg.get("iterate", 1))
    t = cfg.get("t")

    if isinstance(rule, PositionHit):
        raise ConfigError("position-hit rules are sampled; use the montecarlo command")
    if isinstance(rule, StoppingRule):
        if t is not None:
            result = MeasureDeficit(
                make_mu_tau_t(mu, rule, as_fraction(t)), Fraction(0)
            )
        elif iterate > 1:
            result = MeasureDeficit(iterate_transform(mu, rule, iterate), Fraction(0))
        else:
            result = MeasureDeficit(transform_bounded(mu, rule), Fraction(0))
    elif isinstance(rule, HittingRule):
        result = transform_hitting(mu, rule)
    elif isinstance(rule, MixtureRule):
        result = transform_mixture(mu, rule)
    else:
        raise ConfigError(f"unsupported rule {cfg['rule']!r}")

    out = _out_dir(args)
    write_json(out / "transform.json", report_envelope(cfg, deficit_json(result)))
    write_csv(
        out / "transform.csv",
        ("element", "weight", "weight_float"),
        measure_rows(result.measure),
    )
    print(f"wrote {out / 'transform.json'}")
    return EXIT_OK


def _cmd_kernel(args) -> int:
    cfg = load_config(args.config, "kernel")
    spec = parse_group(cfg["group"])
    mu = parse_measure(cfg["measure"], spec)
    op = cfg["operation"]
    mode = cfg.get("mode", "truncated")
    horizon = int(cfg.get("horizon", 20))
    out = _out_dir(args)

    if op in ("green", "martin"):
        x = spec.parse(cfg["x"])
        if op == "green":
            y = spec.parse(cfg["y"])
            rep = green_free(mu, x, y) if mode == "free" else green_truncated(
                mu, x, y, horizon
            )
        else:
            if "target" in cfg and isinstance(spec, FreeSemigroup):
                target = parse_infinite_word(cfg["target"], spec)
                rep = martin_free(mu, x, target)
            else:
                y = spec.parse(cfg["y"])
                rep = (
                    martin_free(mu, x, y)
                    if mode == "free"
                    else martin_truncated(mu, x, y, horizon)
                )
        body = {
            "operation": op,
            "value": format_fraction(as_fraction(rep.value))
            if isinstance(rep.value, Fraction)
            else repr(rep.value),
            "value_float": float(rep.value),
            "mode": rep.mode,
            "horizon": rep.horizon,
            "last_term": rep.last_term,
            "term_ratio": rep.term_ratio,
            "tail_note": rep.tail_note,
        }
        write_json(out / "kernel.json", report_envelope(cfg, body))
    elif op == "sequence":
        probes = [spec.parse(p) for p in cfg["probes"]]
        seq = BoundarySequence(
            tuple(spec.parse(p) for p in cfg["sequence"]), "configured sequence"
        )
        tol = float(args.tol) if args.tol is not None else float(cfg.get("rel_tol", 5e-2))
        table = kernel_sequence(mu, probes, seq, horizon, tol)
        rows = [
            [spec.format(p), *(format_fraction(v) for v in table.values[i])]
            for i, p in enumerate(probes)
        ]
        write_csv(
            out / "kernel.csv",
            ("probe", *(spec.format(y) for y in seq.points)),
            rows,
        )
        body = {
            "operation": op,
            "stabilized": table.stabilized,
            "rel_tol": tol,
            "horizon": horizon,
        }
        write_json(out / "kernel.json", report_envelope(cfg, body))
    print(f"wrote {out / 'kernel.json'}")
    return EXIT_OK


def _harmonicity_body(report) -> Mapping:
    return {
        "window_size": len(report.window),
        "max_defect": format_fraction(report.max_defect),
        "harmonic_on_window": report.harmonic_on_window,
        "failures": [
            {
                "element": repr(el),
                "applied": format_fraction(pv),
                "value": format_fraction(fv),
            }
            for el, pv, fv in report.failures
        ],
    }


def _cmd_harmonic(args) -> int:
    cfg = load_config(args.config, "harmonic")
    spec = parse_group(cfg["group"])
    mu = parse_measure(cfg["measure"], spec)
    f = parse_function(cfg["function"], spec, mu)
    window = parse_window(cfg["window"], spec)
    measure = mu
    if "rule" in cfg:
        rule = parse_rule(cfg["rule"], spec, mu)
        if not isinstance(rule, StoppingRule):
            raise ConfigError("harmonic checks transform only by bounded rules")
        t = as_fraction(cfg.get("t", 0)) if "t" in cfg else None
        measure = (
            make_mu_tau_t(mu, rule, t) if t is not None else transform_bounded(mu, rule)
        )
    report = check_harmonic(measure, f, window)
    out = _out_dir(args)
    write_json(
        out / "harmonic.json", report_envelope(cfg, _harmonicity_body(report))
    )
    print(f"wrote {out / 'harmonic.json'}")
    return EXIT_OK


def _cmd_lift(args) -> int:
    cfg = load_config(args.config, "lift")
    spec = parse_group(cfg["group"])
    mu = parse_measure(cfg["measure"], spec)
    cover = build_cover(mu)
    f = parse_function(cfg["function"], spec, mu)
    window = parse_window(cfg["window"], spec)
    depth = int(cfg.get("depth", 4))
    report = transfer_harmonicity(cover, f, window, depth)
    body = {
        "generators": list(cover.labels()),
        "base": _harmonicity_body(report.base),
        "cover": _harmonicity_body(report.cover),
        "consistent": report.consistent,
    }
    if "rule" in cfg:
        rule = parse_rule(cfg["rule"], spec, mu)
        if not isinstance(rule, StoppingRule):
            raise ConfigError("lift compatibility checks need a bounded rule")
        direct = transform_bounded(mu, rule)
        lifted = pushforward(
            cover, transform_bounded(cover.lifted_measure, lift_rule(cover, rule))
        )
        body["transform_commutes"] = direct == lifted
    out = _out_dir(args)
    write_json(out / "lift.json", report_envelope(cfg, body))
    print(f"wrote {out / 'lift.json'}")
    return EXIT_OK


def _cmd_montecarlo(args) -> int:
    cfg = load_config(args.config, "montecarlo")
    spec = parse_group(cfg["group"])
    mu = parse_measure(cfg["measure"], spec)
    rule = parse_rule(cfg["rule"], spec, mu)
    sample_cfg = SampleConfig(
        seed=int(args.seed) if args.seed is not None else int(cfg["seed"]),
        num_samples=int(cfg["num_samples"]),
        step_cap=int(cfg.get("step_cap", 100_000)),
    )
    empirical = estimate_transform(mu, rule, sample_cfg)
    out = _out_dir(args)
    write_csv(
        out / "counts.csv",
        ("element", "count"),
        [[spec.format(el), str(c)] for el, c in empirical.items()],
    )
    body = {
        "num_samples": empirical.num_samples,
        "aborted": empirical.aborted,
        "distinct_positions": len(empirical.counts),
        "seed": sample_cfg.seed,
        "step_cap": sample_cfg.step_cap,
    }
    if "oracle_rule" in cfg:
        oracle = parse_rule(cfg["oracle_rule"], spec, mu)
        if isinstance(oracle, StoppingRule):
            exact = MeasureDeficit(transform_bounded(mu, oracle), Fraction(0))
        elif isinstance(oracle, HittingRule):
            exact = transform_hitting(mu, oracle)
        elif isinstance(oracle, MixtureRule):
            exact = transform_mixture(mu, oracle)
        else:
            raise ConfigError("oracle rule must be exactly transformable")
        rep = compare(empirical, exact, float(cfg.get("delta", 1e-3)))
        body["comparison"] = {
            "tv": format_fraction(rep.tv),
            "tv_float": float(rep.tv),
            "band": rep.band,
            "missing_mass": format_fraction(rep.missing_mass),
            "verdict": rep.verdict,
        }
    write_json(out / "montecarlo.json", report_envelope(cfg, body))
    print(f"wrote {out / 'montecarlo.json'}")
    return EXIT_OK


def _cmd_scenario(args) -> int:
    name = args.name
    result = run_scenario(
        name,
        seed=int(args.seed) if args.seed is not None else None,
        tol=float(args.tol) if args.tol is not None else None,
    )
    out = _out_dir(args) / name
    write_json(out / "report.json", report_envelope(result.config, result.to_json()))
    for table_name, (header, rows) in result.tables.items():
        write_csv(out / f"{table_name}.csv", header, rows)
    for check in result.checks:
        print(f"[{'PASS' if check.passed else 'FAIL'}] {check.name}: {check.detail}")
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK if result.passed else EXIT_ASSERTION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stopwalk",
        description=(
            "Exact stopped random walks on groups: transforms, kernels, "
            "harmonicity checks, covers and Monte Carlo validation."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out-dir", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker cap (reserved)")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("--tol", type=float, default=None, help="override tolerances")

    for name, fn in (
        ("transform", _cmd_transform),
        ("kernel", _cmd_kernel),
        ("harmonic", _cmd_harmonic),
        ("lift", _cmd_lift),
        ("montecarlo", _cmd_montecarlo),
    ):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("scenario", help="run a packaged reproduction pipeline")
    p.add_argument("name", help=f"one of: {', '.join(SCENARIO_NAMES)}")
    common(p, needs_config=False)
    p.set_defaults(func=_cmd_scenario)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ContractError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except StopwalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
