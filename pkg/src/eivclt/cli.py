"""Command-line front end.

    eivclt estimate data.csv --variant 3 --theta 0.4 --mu 0.1
    eivclt simulate scenario.json --seed 7 --out data.csv
    eivclt verify suite.json --reps 1000 --seed 1 --out results/

Exit codes: 0 success, 1 input or validation error, 2 statistical degeneracy.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .estimators import estimate_from_moments
from .exceptions import (
    DegenerateDenominator,
    EIVError,
    StatisticalDegeneracy,
    TooManyFailures,
    ValidationError,
)
from .linalg import RootMode
from .model import IdentifiabilityConfig, Variant, compute_moments, read_csv, write_csv
from .simulate import Scenario, generate
from .studentize import asymptotic_cov_estimate, confidence_region, studentize
from .verify import run_monte_carlo, write_vectors_csv

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2
SCHEMA_VERSION = 1

_CONSTANT_FLAGS = {"lam": "lambda", "lambda_theta": "lambda_theta", "theta": "theta", "mu": "mu"}


def _dumps(obj) -> str:
    # json writes floats with repr(), the shortest string that round-trips exactly
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError(f"{path}: unsupported schema_version {version!r}")
    return data


def _merge(config_file: str | None, flags: dict) -> dict:
    """Config-file values overridden by explicitly given flags."""
    merged = {}
    if config_file:
        merged.update({k: v for k, v in _load_json(config_file).items() if k != "schema_version"})
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def _identifiability(cfg: dict) -> IdentifiabilityConfig:
    if "variant" not in cfg:
        raise ValidationError("an identifiability variant is required (--variant 1|2|3)")
    fields = {"variant": Variant.parse(cfg["variant"])}
    for attr, key in _CONSTANT_FLAGS.items():
        if cfg.get(key) is not None:
            fields[attr] = cfg[key]
    return IdentifiabilityConfig(**fields)


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_estimate(args) -> int:
    cfg = _merge(
        args.config,
        {
            "variant": args.variant,
            "lambda": args.lam,
            "lambda_theta": args.lambda_theta,
            "theta": args.theta,
            "mu": args.mu,
            "level": args.level,
            "root": args.root,
        },
    )
    cfg.setdefault("level", 0.95)
    cfg.setdefault("root", RootMode.SYMMETRIC.value)
    config = _identifiability(cfg)
    root = RootMode(cfg["root"])
    level = float(cfg["level"])
    if not 0.0 < level < 1.0:
        raise ValidationError("--level must lie in (0, 1)")
    data = read_csv(args.csv)

    out = {
        "schema_version": SCHEMA_VERSION,
        "command": "estimate",
        "config": {**cfg, "variant": config.variant.value},
        "input": str(args.csv),
        "n": data.n,
    }
    stats = compute_moments(data)
    code = EXIT_OK
    try:
        est = estimate_from_moments(stats, config)
    except DegenerateDenominator as exc:
        out["status"] = "degenerate"
        out["error"] = {"type": type(exc).__name__, "proviso": exc.proviso, "value": exc.value, "message": str(exc)}
        _write(_dumps(out), args.out)
        print(f"eivclt: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    out["estimates"] = est.to_dict()
    try:
        result = studentize(data, config, root_mode=root, stats=stats, estimates=est)
    except StatisticalDegeneracy as exc:
        out["status"] = "degenerate"
        out["error"] = {"type": type(exc).__name__, "message": f"studentizer: {exc}"}
        print(f"eivclt: studentizer: {exc}", file=sys.stderr)
        code = EXIT_DEGENERATE
    else:
        out["status"] = "ok"
        out["scalings"] = {"U": result.scalings.U, "L": result.scalings.L}
        out["studentization_matrix"] = result.V.tolist()
        out["asymptotic_covariance"] = asymptotic_cov_estimate(result.V, result.scalings).tolist()
        out["confidence_region"] = confidence_region(result, level).to_dict()
    _write(_dumps(out), args.out)
    return code


def cmd_simulate(args) -> int:
    spec = _load_json(args.scenario)
    scenario = Scenario.from_dict(spec)
    data, truth = generate(scenario, args.seed)
    out_csv = Path(args.out)
    write_csv(data, out_csv)
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "master_seed": int(args.seed),
        "scenario": scenario.to_dict(),
        "truth": truth.to_dict(),
    }
    out_csv.with_suffix(".truth.json").write_text(_dumps(sidecar), encoding="utf-8")
    return EXIT_OK


def _suite_entries(suite: dict) -> list[tuple[str, Scenario, list]]:
    entries = suite.get("scenarios")
    if not isinstance(entries, list) or not entries:
        raise ValidationError("suite lists no scenarios")
    out = []
    for k, entry in enumerate(entries):
        name = str(entry.get("name", f"scenario{k}"))
        try:
            scenario = Scenario.from_dict(entry["scenario"])
        except KeyError:
            raise ValidationError(f"suite entry {name!r} has no 'scenario'") from None
        except ValidationError as exc:
            raise ValidationError(f"scenario {name!r}: {exc}") from None
        variants = entry.get("variants") or [scenario.identifiability.variant]
        out.append((name, scenario, [Variant.parse(v) for v in variants]))
    return out


def cmd_verify(args) -> int:
    from .plots import histogram_svg, qq_svg

    suite = _load_json(args.suite)
    entries = _suite_entries(suite)
    reps = int(args.reps if args.reps is not None else suite.get("reps", 1000))
    seed = int(args.seed if args.seed is not None else suite.get("master_seed", 0))
    level = float(args.level if args.level is not None else suite.get("level", 0.95))
    root = RootMode(args.root if args.root is not None else suite.get("root", "symmetric"))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    effective = {"suite": str(args.suite), "reps": reps, "master_seed": seed, "level": level, "root": root.value}

    lines = [f"{'run':<32} {'succ':>6} {'fail':>5} {'cov_a':>7} {'cov_b':>7}"]
    code = EXIT_OK
    for name, scenario, variants in entries:
        for variant in variants:
            run_id = f"{name}_{variant.name}"
            try:
                report = run_monte_carlo(
                    scenario, reps, level, seed, variant=variant, root_mode=root, workers=args.workers
                )
            except TooManyFailures as exc:
                print(f"eivclt: {run_id}: {exc}", file=sys.stderr)
                lines.append(f"{run_id:<32} aborted: too many failed replications")
                code = EXIT_DEGENERATE
                continue
            except EIVError as exc:
                raise ValidationError(f"{run_id}: {exc}") from None
            payload = report.to_dict()
            payload["config"] = effective
            (out_dir / f"{run_id}.json").write_text(_dumps(payload), encoding="utf-8")
            write_vectors_csv(report, out_dir / f"{run_id}_vectors.csv")
            histogram_svg(report, out_dir / f"{run_id}_hist.svg")
            qq_svg(report, out_dir / f"{run_id}_qq.svg")
            cov = report.coverage
            lines.append(
                f"{run_id:<32} {report.successes:>6} {report.R - report.successes:>5} "
                f"{cov['a']:>7.4f} {cov['b']:>7.4f}"
            )
    lines.append(f"# level={level} reps={reps} master_seed={seed} root={root.value}")
    summary = "\n".join(lines) + "\n"
    (out_dir / "summary.txt").write_text(summary, encoding="utf-8")
    sys.stdout.write(summary)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eivclt", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate (beta, alpha, gamma) and confidence regions from a CSV")
    est.add_argument("csv")
    est.add_argument("--config", help="JSON file with defaults; flags override it")
    est.add_argument("--variant", choices=["1", "2", "3"])
    est.add_argument("--lambda", dest="lam", type=float)
    est.add_argument("--lambda-theta", dest="lambda_theta", type=float)
    est.add_argument("--theta", type=float)
    est.add_argument("--mu", type=float)
    est.add_argument("--level", type=float)
    est.add_argument("--root", choices=[m.value for m in RootMode])
    est.add_argument("--out", help="output JSON path (default stdout)")
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="draw a dataset from a scenario JSON")
    sim.add_argument("scenario")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output CSV; truth goes to <out>.truth.json")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="Monte Carlo coverage study for a suite of scenarios")
    ver.add_argument("suite")
    ver.add_argument("--reps", type=int)
    ver.add_argument("--seed", type=int)
    ver.add_argument("--level", type=float)
    ver.add_argument("--root", choices=[m.value for m in RootMode])
    ver.add_argument("--workers", type=int, default=1)
    ver.add_argument("--out", required=True, help="output directory")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"eivclt: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StatisticalDegeneracy as exc:
        print(f"eivclt: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
