"""Command-line entry point.

Commands::

    slrupdate snowball SEEDS [--direction forward|backward|both] [--iterations N]
    slrupdate train --included BIB --excluded BIB [--model KIND]
    slrupdate predict --model FILE --candidates BIB_OR_DIR [--threshold X]
    slrupdate evaluate --predictions CSV [CSV ...] --labels CSV
    slrupdate update SEEDS --included BIB --excluded BIB [--labels CSV]

Exit status is 0 on success, 1 on usage or configuration errors, and 2 when a
snowballing ledger records per-study failures ("DOI not found" or
".bib file not found") but every output was still written.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import re
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

from .classifiers import MODEL_KINDS, HyperParams, load_model, save_model
from .errors import ConfigError, InvalidDOI, SlrUpdateError
from .metrics import emit_report
from .pipeline import (
    evaluate_predictions,
    load_corpus,
    predict_records,
    read_labels,
    read_predictions,
    train_all,
    train_on_corpus,
    train_tuned,
    write_predictions,
)
from .providers import FixtureProvider, LiveProvider, ProviderConfig
from .records import normalize_doi, read_bibtex_file
from .snowball import SnowballRequest, run_snowballing

LOGGER = logging.getLogger("slrupdate")

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


@dataclass
class RunConfig:
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    fixture: Path | None = None
    offline: bool = False
    directions: tuple[str, ...] = ("forward",)
    max_iterations: int = 1
    hyperparams: HyperParams = field(default_factory=HyperParams)
    target_recall: float = 0.97
    validation_split: float = 0.2
    out_dir: Path = Path("out")

    def __post_init__(self):
        if self.offline and self.fixture is None:
            raise ConfigError("offline mode needs --fixture")
        if not 0 < self.validation_split < 1:
            raise ConfigError("validation_split must lie strictly between 0 and 1")
        if not 0 < self.target_recall <= 1:
            raise ConfigError("target_recall must lie in (0, 1]")

    @property
    def seed(self) -> int:
        return self.hyperparams.seed

    def make_provider(self):
        if self.fixture is not None:
            if not self.fixture.is_file():
                raise ConfigError(f"fixture file not found: {self.fixture}")
            return FixtureProvider.from_file(self.fixture, parallelism=self.provider.parallelism)
        return LiveProvider(self.provider)


# --------------------------------------------------------------------------
# Config file: INI sections [provider], [snowball], [pipeline], [model]
# --------------------------------------------------------------------------

_DIRECTION_CHOICES = {"forward": ("forward",), "backward": ("backward",), "both": ("backward", "forward")}


def _coerce(value: str, like: Any, name: str):
    try:
        if isinstance(like, bool):
            return value.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(like, int):
            return int(value)
        if isinstance(like, float):
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc
    return value


def read_config_file(path: str | Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    known = {"provider", "snowball", "pipeline", "model"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    return {s: dict(parser[s]) for s in parser.sections()}


def _apply_section(obj, values: dict[str, str], section: str):
    names = {f.name: f for f in fields(obj)}
    changes = {}
    for key, raw in values.items():
        if key not in names:
            raise ConfigError(f"unknown key [{section}] {key}")
        current = getattr(obj, key)
        if current is None:
            changes[key] = float(raw) if key.endswith("weight") else raw
        else:
            changes[key] = _coerce(raw, current, f"[{section}] {key}")
    try:
        return replace(obj, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then command-line flags."""
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    provider = _apply_section(ProviderConfig(), file_values.get("provider", {}), "provider")
    hp = _apply_section(HyperParams(), file_values.get("model", {}), "model")

    snow = dict(file_values.get("snowball", {}))
    pipe = dict(file_values.get("pipeline", {}))
    unknown = (set(snow) - {"direction", "iterations"}) | (
        set(pipe) - {"target_recall", "validation_split", "seed", "out_dir", "fixture", "offline"})
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")

    def pick(flag, section: dict, key, default, typ=str):
        value = getattr(args, flag, None)
        if value is not None:
            return value
        if key in section:
            try:
                return typ(section[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {section[key]!r}") from exc
        return default

    direction = pick("direction", snow, "direction", "forward")
    if direction not in _DIRECTION_CHOICES:
        raise ConfigError(f"direction must be forward, backward or both, got {direction!r}")
    seed = pick("seed", pipe, "seed", hp.seed, int)
    parallelism = getattr(args, "parallelism", None)
    if parallelism is not None:
        provider = replace(provider, parallelism=parallelism)
    fixture = pick("fixture", pipe, "fixture", None)
    offline = bool(getattr(args, "offline", False)) or _coerce(pipe.get("offline", "false"), False, "offline")
    model_kind = getattr(args, "model_kind", None)
    if model_kind:
        hp = replace(hp, model_kind=model_kind)
    return RunConfig(
        provider=provider,
        fixture=Path(fixture) if fixture else None,
        offline=offline,
        directions=_DIRECTION_CHOICES[direction],
        max_iterations=pick("iterations", snow, "iterations", 1, int),
        hyperparams=replace(hp, seed=int(seed)),
        target_recall=pick("target_recall", pipe, "target_recall", 0.97, float),
        validation_split=pick("validation_split", pipe, "validation_split", 0.2, float),
        out_dir=Path(pick("out_dir", pipe, "out_dir", "out")),
    )


def read_seeds(path: str | Path) -> list[str]:
    """One DOI or DOI URL per line; blank lines and ``#`` comments ignored."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read seeds file {path}: {exc.strerror or exc}") from exc
    seeds = []
    for n, line in enumerate(lines, start=1):
        text = re.sub(r"(^|\s)#.*", "", line).strip()
        if not text:
            continue
        try:
            seeds.append(normalize_doi(text))
        except InvalidDOI as exc:
            raise ConfigError(f"{path}:{n}: {exc}") from exc
    return seeds


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def _summarize_snowball(result, out) -> None:
    for direction, res in result.directions.items():
        counts = ", ".join(f"it{k}={len(v)}" for k, v in sorted(res.discovered_by_iteration.items()))
        print(f"{direction}: {len(res.discoveries)} studies ({counts}); "
              f"{res.iterations_run} iteration(s), stop: {res.stop_reason}", file=out)
    print(f"total: {result.total_discoveries} studies from {len(result.seeds)} seeds", file=out)


def cmd_snowball(args, cfg: RunConfig, out=sys.stdout) -> int:
    seeds = read_seeds(args.seeds)
    request = SnowballRequest(tuple(seeds), cfg.directions, cfg.max_iterations)
    result = run_snowballing(request, cfg.make_provider(), out_dir=cfg.out_dir)
    _summarize_snowball(result, out)
    return EXIT_PARTIAL if result.has_failures else EXIT_OK


def cmd_train(args, cfg: RunConfig, out=sys.stdout) -> int:
    corpus = load_corpus(args.included, args.excluded)
    hp = cfg.hyperparams
    if args.tune:
        model = train_tuned(corpus, hp, cfg.target_recall, cfg.validation_split)
    else:
        model = train_on_corpus(corpus, hp)
    path = Path(args.output) if args.output else cfg.out_dir / "models" / f"{hp.model_kind}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, path)
    w0, w1 = model.training["class_weights"]
    print(f"{hp.model_kind}: {corpus.n_positive} included + {len(corpus.docs) - corpus.n_positive} excluded, "
          f"vocabulary {len(corpus.vocabulary)}, class weights 0:{w0:.4f} 1:{w1:.4f}, "
          f"threshold {model.threshold:.6g} -> {path}", file=out)
    return EXIT_OK


def _candidate_records(path: Path):
    if path.is_dir():
        path = path / "forward.bib"
    if not path.exists():
        raise ConfigError(f"candidates not found: {path}")
    return read_bibtex_file(path)


def cmd_predict(args, cfg: RunConfig, out=sys.stdout) -> int:
    model = load_model(args.model)
    if args.threshold is not None:
        model = model.with_threshold(args.threshold)
    records = _candidate_records(Path(args.candidates))
    preds = predict_records(model, records)
    path = Path(args.output) if args.output else cfg.out_dir / "predictions" / f"{model.model_kind}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_predictions(preds, path)
    flagged = sum(p.label for p in preds)
    print(f"{model.model_kind}: {flagged} of {len(preds)} candidates flagged -> {path}", file=out)
    return EXIT_OK


def _print_reports(reports, out) -> None:
    print(f"{'model':<8} {'tp':>5} {'fp':>5} {'fn':>5} {'tn':>5} {'prec':>7} {'recall':>7} {'F':>7} {'WR':>7}",
          file=out)
    for name, r in reports.items():
        print(f"{name:<8} {r.tp:>5} {r.fp:>5} {r.fn:>5} {r.tn:>5} {r.precision:>7.3f} {r.recall:>7.3f} "
              f"{r.f_measure:>7.3f} {r.workload_reduction:>7.3f}", file=out)


def cmd_evaluate(args, cfg: RunConfig, out=sys.stdout) -> int:
    labels = read_labels(args.labels)
    reports = {}
    for p in args.predictions:
        name = Path(p).stem
        if name in reports:
            raise ConfigError(f"two prediction files are both named {name!r}")
        reports[name] = evaluate_predictions(read_predictions(p), labels)
    emit_report(reports, cfg.out_dir)
    _print_reports(reports, out)
    return EXIT_OK


def cmd_update(args, cfg: RunConfig, out=sys.stdout) -> int:
    seeds = read_seeds(args.seeds)
    labels = read_labels(args.labels) if args.labels else None
    corpus = load_corpus(args.included, args.excluded)
    provider = cfg.make_provider()

    request = SnowballRequest(tuple(seeds), ("forward",), 1)
    result = run_snowballing(request, provider, out_dir=cfg.out_dir / "snowball")
    candidates = result["forward"].records
    print(f"forward snowballing: {len(candidates)} candidate studies from {len(seeds)} seeds", file=out)

    models = train_all(corpus, MODEL_KINDS, cfg.hyperparams, cfg.target_recall, cfg.validation_split)
    (cfg.out_dir / "models").mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "predictions").mkdir(parents=True, exist_ok=True)
    reports = {}
    for kind, model in models.items():
        save_model(model, cfg.out_dir / "models" / f"{kind}.json")
        preds = predict_records(model, candidates)
        write_predictions(preds, cfg.out_dir / "predictions" / f"{kind}.csv")
        flagged = sum(p.label for p in preds)
        print(f"{kind}: threshold {model.threshold:.6g}, {flagged} of {len(preds)} flagged", file=out)
        if labels is not None:
            reports[kind] = evaluate_predictions(preds, labels)
    if reports:
        emit_report(reports, cfg.out_dir)
        _print_reports(reports, out)
    return EXIT_PARTIAL if result.has_failures else EXIT_OK


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    # Shared flags, accepted before or after the command name.
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS, help="INI config file")
    p.add_argument("--offline", action="store_true", default=argparse.SUPPRESS,
                   help="never touch the network (requires --fixture)")
    p.add_argument("--fixture", default=argparse.SUPPRESS, help="offline fixture world (JSON)")
    p.add_argument("--out-dir", dest="out_dir", default=argparse.SUPPRESS, help="output directory")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed")
    p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    return p


def _threshold(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise argparse.ArgumentTypeError("threshold cannot be NaN")
    return value


def make_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="slrupdate", parents=[common],
                     description="Snowballing and screening-classifier tool for literature review updates.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("snowball", parents=[common], help="backward/forward snowballing from seed DOIs")
    p.add_argument("seeds", help="file with one DOI or DOI URL per line")
    p.add_argument("--direction", choices=sorted(_DIRECTION_CHOICES))
    p.add_argument("--iterations", type=int)
    p.add_argument("--parallelism", type=int)

    p = sub.add_parser("train", parents=[common], help="train one screening model")
    p.add_argument("--included", required=True, help="BibTeX of included studies")
    p.add_argument("--excluded", required=True, help="BibTeX of excluded studies")
    p.add_argument("--model", dest="model_kind", choices=MODEL_KINDS)
    p.add_argument("--tune", action="store_true", help="set the threshold on a held-out split")
    p.add_argument("--target-recall", dest="target_recall", type=float)
    p.add_argument("--validation-split", dest="validation_split", type=float)
    p.add_argument("--output", help="model file (default: OUT/models/<kind>.json)")

    p = sub.add_parser("predict", parents=[common], help="score candidate studies")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--candidates", required=True, help="BibTeX file or a snowball output directory")
    p.add_argument("--threshold", type=_threshold, help="override the model's threshold")
    p.add_argument("--output", help="predictions CSV (default: OUT/predictions/<kind>.csv)")

    p = sub.add_parser("evaluate", parents=[common], help="compare predictions with labels")
    p.add_argument("--predictions", nargs="+", required=True, help="predictions CSV file(s)")
    p.add_argument("--labels", required=True, help="CSV with id and relevance columns")

    p = sub.add_parser("update", parents=[common], help="one forward round, then train/predict/evaluate")
    p.add_argument("seeds", help="update seed set (DOIs of the studies included so far)")
    p.add_argument("--included", required=True)
    p.add_argument("--excluded", required=True)
    p.add_argument("--labels", help="candidate labels; enables evaluation")
    p.add_argument("--target-recall", dest="target_recall", type=float)
    p.add_argument("--validation-split", dest="validation_split", type=float)
    p.add_argument("--parallelism", type=int)
    return parser


COMMANDS = {
    "snowball": cmd_snowball,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "update": cmd_update,
}


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = make_parser()
    args = parser.parse_args(argv)
    verbosity = getattr(args, "verbose", 0) or 0
    logging.basicConfig(
        level=logging.DEBUG if verbosity > 1 else logging.INFO if verbosity else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](args, cfg, out)
    except SlrUpdateError as exc:
        print(f"slrupdate: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as exc:
        print(f"slrupdate: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
