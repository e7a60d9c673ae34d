"""Command-line interface: ``melodyga {stats,dataset,train,generate,score}``.

Data artifacts are written only to the files named by flags; progress and
summaries go to stderr, and ``stats``/``score`` print their tables to
stdout. A single ``--seed`` reproduces a whole run (see
:mod:`melodyga.pipeline` for how sub-seeds are derived).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .chromosome import GeneDistributions, gene_distributions
from .evolution import FitnessConfig, GaConfig, rhythm_term
from .neural import ModelFileError, TrainConfig, load_model, lstm_score, save_model, train
from .notation import AbcSyntaxError, parse_corpus, parse_fraction, parse_meter
from .pipeline import (
    KEY_GENERATE,
    KEY_TRAIN,
    DatasetCounts,
    assemble_dataset,
    derive_rng,
    generate,
    load_bundled_corpus,
)
from .records import DatasetFormatError, read_dataset, write_dataset
from .rhythm import rhythm_cost_value
from .similarity import SimilarityConfig

log = logging.getLogger("melodyga")

_GA_DEFAULTS = GaConfig()
_TRAIN_DEFAULTS = TrainConfig()


class CliError(Exception):
    pass


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _fraction_arg(text: str) -> Fraction:
    try:
        return parse_fraction(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _meter_arg(text: str) -> Fraction:
    try:
        return parse_meter(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _read_corpus(path, continue_on_error=False):
    errors: list = []
    if path is None:
        return load_bundled_corpus(), errors
    text = Path(path).read_text(encoding="utf-8")
    tunes = parse_corpus(text, continue_on_error=continue_on_error, errors=errors)
    if not tunes and not errors:
        raise CliError(f"{path}: no tunes found")
    return tunes, errors


def _write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _add_ga_flags(p: argparse.ArgumentParser, max_iter: int = _GA_DEFAULTS.max_iter) -> None:
    g = p.add_argument_group("genetic algorithm")
    g.add_argument("--pop-size", type=int, default=_GA_DEFAULTS.pop_size)
    g.add_argument("--max-iter", type=int, default=max_iter)
    g.add_argument("--cr", type=float, default=_GA_DEFAULTS.cr, help="crossover rate")
    g.add_argument("--mp", type=float, default=_GA_DEFAULTS.mp, help="mutation probability per child")
    g.add_argument("--mr", type=float, default=_GA_DEFAULTS.mr, help="mutation rate per gene")
    g.add_argument("--elitism", type=float, default=_GA_DEFAULTS.elitism_fraction)


def _ga_config(args, n_notes=_GA_DEFAULTS.n_notes) -> GaConfig:
    return GaConfig(
        pop_size=args.pop_size, max_iter=args.max_iter, cr=args.cr, mp=args.mp, mr=args.mr,
        elitism_fraction=args.elitism, n_notes=n_notes, seed=args.seed,
    )


def _history_csv(history) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "best_fitness", "mean_fitness"])
    for i, (b, m) in enumerate(zip(history.best_fitness, history.mean_fitness)):
        w.writerow([i, repr(b), repr(m)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands


def cmd_stats(args) -> int:
    tunes, errors = _read_corpus(args.corpus, args.continue_on_error)
    for exc in errors:
        _progress(f"error: {exc}")
    if not tunes:
        raise CliError("no tune could be parsed")
    dist = gene_distributions([c for _, c in tunes])
    lines = [f"{len(tunes)} tunes, {dist.step.total} notes"]
    for name, row in dist.rows():
        lines.append(f"{name}:")
        for v, c, p in zip(row.values, row.counts, row.float_probabilities()):
            lines.append(f"  {str(v):>6}  {c:7d}  {p:.6f}")
    print("\n".join(lines))
    if args.out:
        _write_text(args.out, json.dumps(dist.to_json(), indent=1) + "\n")
        _progress(f"wrote {args.out}")
    return 1 if errors else 0


def cmd_dataset(args) -> int:
    tunes, _ = _read_corpus(args.corpus)
    ga = _ga_config(args)
    counts = DatasetCounts(args.n_random_uniform, args.n_random_distribution)
    records = assemble_dataset(
        tunes, ga, SimilarityConfig(n=args.ngram), counts, args.seed,
        stride=args.stride, jobs=args.jobs, progress=_progress,
    )
    write_dataset(records, args.out)
    _progress(f"wrote {len(records)} records to {args.out}")
    return 0


def cmd_train(args) -> int:
    records = read_dataset(args.dataset)
    cfg = TrainConfig(
        max_epochs=args.epochs, learning_rate=args.lr, hidden_size=args.hidden,
        clip_norm=args.clip, validation_fraction=args.val_fraction, seed=args.seed,
    )
    init = load_model(args.resume) if args.resume else None
    if init is not None and init.hidden_size != cfg.hidden_size:
        _progress(f"resuming: hidden size {init.hidden_size} taken from {args.resume}")

    def report(st):
        _progress(f"epoch {st.epoch:4d}  train_rmse {st.train_rmse:9.4f}  val_rmse {st.val_rmse:9.4f}")

    result = train(records, cfg, rng=derive_rng(args.seed, KEY_TRAIN), init_model=init, progress=report)
    save_model(result.model, args.model_out)
    if args.history_out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_rmse", "val_rmse"])
        for st in result.history:
            w.writerow([st.epoch, repr(st.train_rmse), repr(st.val_rmse)])
        _write_text(args.history_out, buf.getvalue())
    best = result.history[result.best_epoch - 1].val_rmse if result.best_epoch else result.initial_val_rmse
    _progress(f"initial val_rmse {result.initial_val_rmse:.4f}; best epoch {result.best_epoch} "
              f"(val_rmse {best:.4f}); wrote {args.model_out}")
    return 0


def cmd_generate(args) -> int:
    model = load_model(args.model)
    if args.distributions:
        dist = GeneDistributions.from_json(json.loads(Path(args.distributions).read_text(encoding="utf-8")))
    else:
        dist = gene_distributions([c for _, c in load_bundled_corpus()])
    ga = _ga_config(args, n_notes=args.n_notes)
    fit = FitnessConfig(alpha=args.alpha)
    every = max(1, ga.max_iter // 20)

    def report(it, history):
        if it % every == 0 or it == ga.max_iter:
            _progress(f"iteration {it:6d}  best {history.best_fitness[-1]:.4f}")

    best, history, abc = generate(
        model, dist, ga, fit, args.meter, args.unit_length,
        title=args.title, key=args.key, rng=derive_rng(args.seed, KEY_GENERATE), progress=report,
    )
    _write_text(args.out, abc)
    if args.history_out:
        _write_text(args.history_out, _history_csv(history))
    cost = rhythm_cost_value(best, args.meter, args.unit_length)
    _progress(f"fitness {history.best_fitness[-1]:.4f}  rhythm cost {cost}; wrote {args.out}")
    return 0


def cmd_score(args) -> int:
    model = load_model(args.model)
    tunes, _ = _read_corpus(args.abc)
    fit = FitnessConfig(alpha=args.alpha)
    rows = [("index", "title", "notes", "lstm_score", "rhythm_cost", "rhythm_term", "fitness")]
    for h, c in tunes:
        s = lstm_score(model, c)
        cost = rhythm_cost_value(c, h.meter, h.unit_length)
        term = rhythm_term(c, h.meter, h.unit_length, fit)
        rows.append((str(h.index), h.title, str(len(c)), f"{s:.4f}", str(cost), f"{term:.4f}", f"{s + term:.4f}"))
    widths = [max(len(r[k]) for r in rows) for k in range(len(rows[0]))]
    text = "\n".join("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows) + "\n"
    sys.stdout.write(text)
    if args.out:
        _write_text(args.out, "\n".join("\t".join(r) for r in rows) + "\n")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="melodyga", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug details to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="gene distributions of an ABC corpus")
    p.add_argument("corpus", nargs="?", help="ABC file (default: the bundled corpus)")
    p.add_argument("--out", help="write the distributions as JSON")
    p.add_argument("--continue-on-error", action="store_true", help="skip tunes that fail to parse")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("dataset", help="build the labeled training set")
    p.add_argument("corpus", nargs="?", help="ABC file (default: the bundled corpus)")
    p.add_argument("--out", required=True)
    p.add_argument("--stride", type=int, default=100, help="iterations between spectrum snapshots")
    p.add_argument("--n-random-uniform", type=int, default=4000)
    p.add_argument("--n-random-distribution", type=int, default=4000)
    p.add_argument("--ngram", type=int, default=4)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for spectra")
    p.add_argument("--seed", type=int, default=0)
    _add_ga_flags(p)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="fit the bi-LSTM scorer")
    p.add_argument("dataset")
    p.add_argument("--model-out", required=True)
    p.add_argument("--history-out", help="per-epoch RMSE as CSV")
    p.add_argument("--epochs", type=int, default=_TRAIN_DEFAULTS.max_epochs)
    p.add_argument("--lr", type=float, default=_TRAIN_DEFAULTS.learning_rate)
    p.add_argument("--hidden", type=int, default=_TRAIN_DEFAULTS.hidden_size)
    p.add_argument("--clip", type=float, default=_TRAIN_DEFAULTS.clip_norm)
    p.add_argument("--val-fraction", type=float, default=_TRAIN_DEFAULTS.validation_fraction)
    p.add_argument("--resume", help="start from this model file's weights and feature statistics")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="run the main GA with a trained scorer")
    p.add_argument("--model", required=True)
    p.add_argument("--distributions", help="gene distributions JSON from 'stats' (default: bundled corpus)")
    p.add_argument("--n-notes", type=int, default=_GA_DEFAULTS.n_notes)
    p.add_argument("--meter", type=_meter_arg, default=Fraction(1))
    p.add_argument("--unit-length", type=_fraction_arg, default=Fraction(1, 8))
    p.add_argument("--alpha", type=float, default=FitnessConfig().alpha)
    p.add_argument("--title", default="")
    p.add_argument("--key", default="C")
    p.add_argument("--out", required=True)
    p.add_argument("--history-out", help="per-iteration fitness as CSV")
    p.add_argument("--seed", type=int, default=0)
    _add_ga_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="score every tune of an ABC file")
    p.add_argument("--model", required=True)
    p.add_argument("abc")
    p.add_argument("--alpha", type=float, default=FitnessConfig().alpha)
    p.add_argument("--out", help="also write the table as TSV")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, AbcSyntaxError, ModelFileError, DatasetFormatError, OSError, ValueError) as exc:
        print(f"melodyga: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
