"""``deeprace`` command line.

Reports go to stdout, diagnostics to stderr.  Exit codes: 0 ok, 1 operational
failure, 2 lex/parse error in an input file, 3 model or manifest format error,
64 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .cam import DEFAULT_THETA, localize, merge_results, render_report
from .corpus import (CorpusEntry, GeneratorError, Manifest, ManifestError, SynthSpec,
                     build_manifest, scan_corpus, synth_corpus)
from .dataset import default_jobs, train as train_manifest, units_from_source
from .evaluation import evaluate
from .frontend import LexError, ParseError, encode
from .model import Hyperparams, TrainingError, gradcheck, predict
from .mutator import QuotaError, apply_balanced_mutation
from .patterns import PatternKind
from .serialization import FormatError, load_model, save_model

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_FORMAT, EXIT_USAGE = 0, 1, 2, 3, 64
DEFAULT_SEED = 42

log = logging.getLogger("deeprace")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class _ModelMissing(Exception):
    """Missing model or manifest file; reported like a format error."""


# ---------------------------------------------------------------------------
# config

def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _apply_config(sub: argparse.ArgumentParser, cfg: dict[str, str]) -> None:
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        action = actions.get(key)
        if action is None or not action.option_strings:
            continue  # keys for other subcommands are ignored
        if action.nargs == 0:
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            try:
                defaults[key] = action.type(value) if action.type else value
            except (TypeError, ValueError) as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
    sub.set_defaults(**defaults)


def _pattern(text: str) -> PatternKind:
    try:
        return PatternKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _fractions(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 2:
        parts.append(0.0)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected train,val[,test] fractions")
    return tuple(parts)


def _theta(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("theta must lie in (0, 1]")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


# ---------------------------------------------------------------------------
# subcommands

def _load(path) -> "ModelParams":
    if not Path(path).is_file():
        raise _ModelMissing(f"model file not found: {path}")
    return load_model(path)


def _manifest(path) -> Manifest:
    if not Path(path).is_file():
        raise _ModelMissing(f"manifest not found: {path}")
    return Manifest.read(path)


def cmd_scan(args) -> int:
    paths, stats = scan_corpus(args.dir, args.pattern)
    for p in paths:
        print(p)
    print(stats, file=sys.stderr)
    if args.manifest:
        root = Path(args.manifest).resolve().parent
        entries = [CorpusEntry(os.path.relpath(p.resolve(), root), args.pattern) for p in paths]
        if entries:
            build_manifest(entries, args.split, args.seed, root).write(args.manifest)
        else:
            Manifest([], root).write(args.manifest)
    return EXIT_OK


def _read_synth_spec(path: str) -> SynthSpec:
    text = Path(path).read_text(encoding="utf-8")
    cfg = json.loads(text) if text.lstrip().startswith("{") else read_config(path)
    try:
        return SynthSpec.from_mapping(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad synth spec {path}: {exc}") from exc


def cmd_synth(args) -> int:
    spec = _read_synth_spec(args.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = synth_corpus(spec, out)
    manifest = build_manifest(entries, args.split, args.seed, out)
    manifest.write(out / "manifest.jsonl")
    print(f"wrote {len(entries)} files and {out / 'manifest.jsonl'}")
    return EXIT_OK


def cmd_mutate(args) -> int:
    manifest = _manifest(args.manifest)
    mutated = apply_balanced_mutation(manifest, args.ratio, args.seed)
    out = Path(args.out or args.manifest)
    if out.resolve().parent != Path(args.manifest).resolve().parent:
        mutated = Manifest([e if Path(e.path).is_absolute() else
                            CorpusEntry(str(manifest.resolve(e).resolve()), e.pattern, e.label,
                                        e.truth_lines, e.split) for e in mutated], out.parent)
    mutated.write(out)
    print(mutated.stats())
    return EXIT_OK


def _read_source(path) -> str:
    return Path(path).read_text(encoding="utf-8", errors="replace")


def cmd_tokenize(args) -> int:
    units = units_from_source(_read_source(args.file), args.pattern)
    for unit in units:
        v = unit.vector
        print(f"# unit {v.unit_name} lines {v.first_line}-{v.last_line}")
        for i, (cls, line) in enumerate(v.items):
            print(f"{i}\t{getattr(cls, 'value', cls)}\t{line}")
    return EXIT_OK


def _hyperparams(args) -> Hyperparams:
    try:
        return _hp(args)
    except ValueError as exc:
        raise UsageError(f"invalid hyperparameters: {exc}") from exc


def _hp(args) -> Hyperparams:
    return Hyperparams(embed_dim=args.embed_dim, window_sizes=args.windows, filters=args.filters,
                       dropout=args.dropout, epochs=args.epochs, batch_size=args.batch,
                       learning_rate=args.lr, seed=args.seed, threshold=args.threshold)


def cmd_train(args) -> int:
    manifest = _manifest(args.manifest)
    hp = _hyperparams(args)
    params, report = train_manifest(manifest, hp, jobs=args.jobs)
    save_model(params, args.out)
    if args.metrics_csv:
        report.write_csv(args.metrics_csv)
    last = report.rows[-1] if report.rows else None
    if last:
        print(f"trained {hp.epochs} epochs: val_acc={last.val_acc:.4f} val_loss={last.val_loss:.4f}")
    print(f"model written to {args.out}")
    return EXIT_OK


def _map_files(fn, files, jobs):
    if jobs > 1 and len(files) > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(fn, files))
    return [fn(f) for f in files]


def cmd_predict(args) -> int:
    params = _load(args.model)

    def one(path):
        out = []
        for unit in units_from_source(_read_source(path), args.pattern):
            label, prob = predict(params, encode(unit.vector, params.vocab, params.hp.max_len))
            out.append((path, unit.vector.unit_name, label, prob))
        return out

    for rows in _map_files(one, args.files, args.jobs):
        for path, unit, label, prob in rows:
            print(f"{path}\t{unit}\t{label}\t{prob:.6f}")
    return EXIT_OK


def cmd_localize(args) -> int:
    params = _load(args.model)
    source = _read_source(args.file)
    results = localize(params, source, args.pattern, args.theta)
    merged = merge_results(results, source.count("\n") + (0 if source.endswith("\n") else 1))
    sys.stdout.write(render_report(source, merged, args.format))
    return EXIT_OK


def cmd_eval(args) -> int:
    params = _load(args.model)
    manifest = _manifest(args.manifest)
    report = evaluate(params, manifest, args.split, args.theta, args.jobs)
    sys.stdout.write(report.to_json() if args.format == "json" else report.to_text())
    for path, err in report.skipped:
        print(f"skipped {path}: {err}", file=sys.stderr)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    limits = {"high": 1e-6, "standard": 1e-3}
    ok = True
    for precision in args.precision:
        for seed in args.seeds:
            errs = gradcheck(seed, precision=precision)
            worst = max(errs.values())
            passed = worst < limits[precision]
            ok &= passed
            detail = " ".join(f"{k}={v:.2e}" for k, v in errs.items())
            print(f"{precision} seed={seed} max={worst:.2e} {'ok' if passed else 'FAIL'} {detail}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value file (flags override it)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed (default 42)")
    common.add_argument("--jobs", type=_positive_int, default=default_jobs(),
                        help="worker threads for per-file work (env DEEPRACE_JOBS)")
    common.add_argument("--deterministic", action="store_true",
                        help="fixed reduction order; byte-identical outputs for a fixed seed")

    p = _Parser(prog="deeprace", description="Data race detection with a token-sequence CNN.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    s = sub.add_parser("scan", parents=[common], help="find files matching a pattern")
    s.add_argument("dir")
    s.add_argument("--pattern", type=_pattern, required=True)
    s.add_argument("--manifest", help="also write a Clean manifest here")
    s.add_argument("--split", type=_fractions, default=(0.8, 0.2, 0.0))
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic clean corpus")
    s.add_argument("--spec", required=True, help="key = value (or JSON) synth spec")
    s.add_argument("--out", required=True)
    s.add_argument("--split", type=_fractions, default=(0.8, 0.2, 0.0))
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("mutate", parents=[common], help="seed races into a share of the corpus")
    s.add_argument("--manifest", required=True)
    s.add_argument("--ratio", type=float, default=0.5)
    s.add_argument("--out", help="output manifest (default: rewrite --manifest)")
    s.set_defaults(func=cmd_mutate)

    s = sub.add_parser("tokenize", parents=[common], help="dump node-class token vectors")
    s.add_argument("file")
    s.add_argument("--pattern", type=_pattern, required=True)
    s.set_defaults(func=cmd_tokenize)

    hp = Hyperparams()
    s = sub.add_parser("train", parents=[common], help="train a model from a manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--epochs", type=int, default=hp.epochs)
    s.add_argument("--embed-dim", type=_positive_int, default=hp.embed_dim)
    s.add_argument("--filters", type=_positive_int, default=hp.filters)
    s.add_argument("--windows", type=lambda t: tuple(int(x) for x in t.split(",")),
                   default=hp.window_sizes)
    s.add_argument("--batch", type=_positive_int, default=hp.batch_size)
    s.add_argument("--lr", type=float, default=hp.learning_rate)
    s.add_argument("--dropout", type=float, default=hp.dropout)
    s.add_argument("--threshold", type=float, default=hp.threshold)
    s.add_argument("--metrics-csv")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", parents=[common], help="classify files")
    s.add_argument("--model", required=True)
    s.add_argument("files", nargs="+")
    s.add_argument("--pattern", type=_pattern, required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("localize", parents=[common], help="highlight racy lines")
    s.add_argument("--model", required=True)
    s.add_argument("file")
    s.add_argument("--pattern", type=_pattern, required=True)
    s.add_argument("--format", choices=("ansi", "html", "json"), default="ansi")
    s.add_argument("--theta", type=_theta, default=DEFAULT_THETA)
    s.set_defaults(func=cmd_localize)

    s = sub.add_parser("eval", parents=[common], help="metrics on a manifest split")
    s.add_argument("--model", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--split", default="val", choices=("train", "val", "test"))
    s.add_argument("--theta", type=_theta, default=DEFAULT_THETA)
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    s.add_argument("--seeds", type=lambda t: [int(x) for x in t.split(",")], default=[0, 1, 2])
    s.add_argument("--precision", type=lambda t: t.split(","), default=["high", "standard"])
    s.set_defaults(func=cmd_gradcheck)
    return p


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("deeprace: a subcommand is required (see --help)")
    if args.config:
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        _apply_config(subparsers.choices[args.command], cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _parse(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (LexError, ParseError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (FormatError, ManifestError, _ModelMissing) as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (TrainingError, QuotaError, GeneratorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
