"""Command line entry point.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 selftest
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import evaluation, selftest
from .classifier import NORMALIZATIONS
from .data import load_manifest, synth_subspace_dataset, write_csv_manifest, write_feature_csv
from .data.manifest import ManifestError
from .data.netpbm import NetpbmError
from .evaluation import ClassifierSpec, EvaluationError, Protocol

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_SELFTEST = 0, 1, 2, 3

SCHEMES = {"loo": evaluation.LEAVE_ONE_OUT, "first-n": evaluation.FIRST_N}


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    manifest: Path
    protocol: Protocol
    classifiers: list[ClassifierSpec]
    tptssr_k: list[int] = field(default_factory=list)
    seed: int = 0
    out: Path | None = None
    fmt: str = "json"
    threads: int = 1


def parse_k(text: str) -> list[int]:
    """``"10"``, ``"5,10,20"`` or an inclusive range ``"1:40"`` / ``"1:40:2"``."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step < 1:
                raise ValueError
            ks = list(range(lo, hi + 1, step))
        else:
            ks = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValidationError(f"bad --tptssr-k value {text!r}; use N, N,M,... or LO:HI[:STEP]") from None
    if not ks or min(ks) < 1:
        raise ValidationError(f"--tptssr-k needs positive values, got {text!r}")
    return ks


def build_config(args) -> RunConfig:
    if not args.manifest:
        raise ValidationError("--manifest is required")
    manifest = Path(args.manifest)
    if not manifest.is_file():
        raise ValidationError(f"manifest {manifest} does not exist")
    if args.scheme not in SCHEMES:
        raise ValidationError(f"--scheme must be one of {sorted(SCHEMES)}")
    try:
        protocol = Protocol(SCHEMES[args.scheme], args.n if args.scheme == "first-n" else None)
    except EvaluationError as exc:
        raise ValidationError(f"--scheme first-n --n {args.n}: {exc}") from None
    names = [n.strip().lower() for n in str(args.classifiers).split(",") if n.strip()]
    if not names:
        raise ValidationError("--classifiers needs at least one name")
    unknown = [n for n in names if n not in evaluation.CLASSIFIERS]
    if unknown:
        raise ValidationError(
            f"unknown classifier(s) {', '.join(unknown)}; valid names: {', '.join(evaluation.CLASSIFIERS)}"
        )
    ks = parse_k(args.tptssr_k)
    specs = []
    for name in names:
        if name == "pvrc":
            specs.append(ClassifierSpec("pvrc", {"normalization": args.pvrc_norm}))
        elif name == "src":
            params = {} if args.src_lambda is None else {"lam": float(args.src_lambda)}
            if args.src_tol is not None:
                if not args.src_tol >= 0:
                    raise ValidationError("--src-tol must be nonnegative")
                params["tol"] = float(args.src_tol)
            if args.src_max_iter is not None:
                if args.src_max_iter < 1:
                    raise ValidationError("--src-max-iter must be at least 1")
                params["max_iter"] = int(args.src_max_iter)
            specs.append(ClassifierSpec("src", params))
        elif name == "tptssr":
            specs.append(ClassifierSpec("tptssr", {"k": ks[0]}))
        else:
            specs.append(ClassifierSpec(name))
    if args.threads < 1:
        raise ValidationError("--threads must be at least 1")
    return RunConfig(
        manifest=manifest,
        protocol=protocol,
        classifiers=specs,
        tptssr_k=ks,
        seed=args.seed,
        out=Path(args.out) if args.out else None,
        fmt=args.format,
        threads=args.threads,
    )


def cmd_eval(config: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        samples = load_manifest(config.manifest, threads=config.threads)
    except (ManifestError, NetpbmError) as exc:
        raise ValidationError(str(exc)) from None
    name = config.manifest.stem
    plain = [s for s in config.classifiers if s.name != "tptssr"]
    report = evaluation.run_protocol(samples, config.protocol, plain, dataset=name, threads=config.threads)
    if any(s.name == "tptssr" for s in config.classifiers):
        sweep = evaluation.sweep_tptssr(samples, config.protocol, config.tptssr_k, dataset=name, threads=config.threads)
        best_k, best = evaluation.best_of_sweep(sweep)
        result = best.results[0]
        if len(sweep) > 1:
            result.flags["sweep_rr"] = {str(k): r.results[0].recognition_rate for k, r in sweep}
            result.flags["best_k"] = best_k
        order = [s.name for s in config.classifiers]
        report.results = sorted(report.results + [result], key=lambda r: order.index(r.name))
    report.seed = config.seed
    print(report.table(), file=stdout)
    if config.out:
        text = report.to_json() if config.fmt == "json" else report.to_csv()
        config.out.parent.mkdir(parents=True, exist_ok=True)
        config.out.write_text(text, encoding="utf-8")
        print(f"report written to {config.out}", file=stdout)
    return EXIT_OK


def cmd_selftest(stdout=None) -> int:
    stdout = stdout or sys.stdout
    results = selftest.run_checks()
    for r in results:
        print(r.line(), file=stdout)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed", file=stdout)
    return EXIT_OK if failed == 0 else EXIT_SELFTEST


def cmd_synth(args, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        samples = synth_subspace_dataset(
            args.classes, args.per_class, args.subspace_dim, args.dim, args.noise, args.seed
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{args.name}.csv"
    manifest_path = out / f"{args.name}.ini"
    write_feature_csv(samples, csv_path)
    write_csv_manifest(manifest_path, args.name, csv_path.name)
    print(f"wrote {len(samples)} samples to {csv_path}", file=stdout)
    print(f"manifest: {manifest_path}", file=stdout)
    return EXIT_OK


def _eval_parser(sub):
    p = sub.add_parser("eval", help="run a protocol over one dataset")
    p.add_argument("--config", help="JSON file supplying any of these flags (command line wins)")
    p.add_argument("--manifest", help="dataset manifest file")
    p.add_argument("--scheme", default="loo", help="loo or first-n")
    p.add_argument("--n", type=int, default=None, help="prototypes per class for first-n")
    p.add_argument("--classifiers", default="pvrc", help="comma list from: " + ",".join(evaluation.CLASSIFIERS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report path")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--pvrc-norm", choices=("derived", "paper"), default="derived",
                   help="cross-class normalization when class sizes differ")
    p.add_argument("--src-lambda", type=float, default=None, help="fixed L1 weight for src")
    p.add_argument("--src-tol", type=float, default=None, help="relative objective tolerance for src")
    p.add_argument("--src-max-iter", type=int, default=None, help="iteration cap for src")
    p.add_argument("--tptssr-k", default="10", help="k, k list or LO:HI[:STEP] sweep")
    p.add_argument("--threads", type=int, default=1, help="worker cap for loading and queries")
    return p


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pvrc", description="Polyhedron volume ratio classification benchmarks")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _eval_parser(sub)
    sub.add_parser("selftest", help="run the embedded numerical checks")
    s = sub.add_parser("synth", help="write a synthetic subspace dataset and its manifest")
    s.add_argument("--out-dir", default=".")
    s.add_argument("--name", default="synth")
    s.add_argument("--classes", type=int, default=10)
    s.add_argument("--per-class", type=int, default=6)
    s.add_argument("--subspace-dim", type=int, default=3)
    s.add_argument("--dim", type=int, default=50)
    s.add_argument("--noise", type=float, default=0.01)
    s.add_argument("--seed", type=int, default=0)
    return parser


def _apply_config_file(parser, argv):
    """Re-parse with defaults taken from ``--config`` when present."""
    args = parser.parse_args(argv)
    if args.command != "eval" or not args.config:
        return args
    path = Path(args.config)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    eval_parser = parser._subparsers._group_actions[0].choices["eval"]
    known = {a.dest for a in eval_parser._actions}
    defaults = {}
    for key, value in data.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in known or dest in ("help", "config"):
            raise ValidationError(f"{path}: unknown config key {key!r}")
        defaults[dest] = value
    eval_parser.set_defaults(**defaults)
    args = parser.parse_args(argv)
    if args.manifest and "manifest" in defaults and args.manifest == defaults["manifest"]:
        # manifest paths in a config file are relative to the config
        candidate = path.parent / args.manifest
        if not Path(args.manifest).is_absolute() and candidate.is_file():
            args.manifest = str(candidate)
    return args


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = _apply_config_file(parser, argv)
        if args.command == "selftest":
            return cmd_selftest()
        if args.command == "synth":
            return cmd_synth(args)
        return cmd_eval(build_config(args))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (EvaluationError, ManifestError, NetpbmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
