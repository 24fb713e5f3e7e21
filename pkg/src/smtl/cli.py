"""Command-line front end: the whole pipeline behind one executable.

Subcommands: bpe-learn, bpe-apply, linearize, train, decode, eval,
schedule-preview, sweep. Errors exit with a category-specific code and a
single machine-parsable line on stderr:
    3 missing file, 4 malformed config/data, 5 shape error, 6 training error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bpe as bpe_mod
from .autodiff import NonFiniteError, ShapeError
from .config import build_config, parse_config_file, schema
from .data import translation_task_data, treebank_task_data
from .decoding import decode_corpus
from .linearize import distance_tokens, read_conll
from .metrics import corpus_bleu, parse_scores, pos_accuracy
from .schedule import ScheduleState, focus_probability, queue_distribution
from .trainer import TrainingError, load_model, sweep as run_sweep, train as run_train, write_sweep_csv


def _read_token_lines(path):
    with open(path, encoding="utf-8") as f:
        return [line.split() for line in f]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file; flags override it")
    for name, kind, default, help_text in schema():
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, metavar=kind.__name__.upper(),
                            help=f"{help_text} (default: {default!r})")


def _config_from_args(args) -> "TrainConfig":
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {name: getattr(args, name) for name, _, _, _ in schema() if getattr(args, name) is not None}
    return build_config(file_values, overrides)


def load_datasets(config, tasks=None):
    datasets = {}
    for task in tasks or config.task_list:
        if task == "translate":
            if not (config.translate_src and config.translate_tgt):
                raise ValueError("translate task needs translate_src and translate_tgt")
            datasets[task] = translation_task_data(
                config.translate_src, config.translate_tgt,
                config.translate_dev_src or None, config.translate_dev_tgt or None,
                config.max_len, config.ratio_limit)
        else:
            path = getattr(config, f"{task}_conll", "")
            if not path:
                raise ValueError(f"{task} task needs {task}_conll")
            dev = getattr(config, f"{task}_dev_conll", "") or None
            datasets[task] = treebank_task_data(task, path, dev, config.conll_layout, config.max_len)
    return datasets


# -- subcommands --------------------------------------------------------------


def cmd_bpe_learn(args) -> int:
    lines = []
    for path in args.input:
        with open(path, encoding="utf-8") as f:
            lines.extend(f)
    bpe_mod.learn(lines, args.merges).save(args.output)
    print(f"learned {args.merges} merges from {len(lines)} lines -> {args.output}")
    return 0


def cmd_bpe_apply(args) -> int:
    model = bpe_mod.BpeModel.load(args.model)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        with open(args.input, encoding="utf-8") as f:
            for line in f:
                out.write(" ".join(model.apply_line(line)) + "\n")
    finally:
        if args.output:
            out.close()
    return 0


def cmd_linearize(args) -> int:
    for sent in read_conll(args.conll, layout=args.layout):
        if args.task == "parse":
            tokens = distance_tokens(sent.tree)
        elif args.task == "pos":
            tokens = sent.tags
        else:
            tokens = sent.tree.labels
        print(" ".join(tokens))
    return 0


def cmd_schedule_preview(args) -> int:
    queue_ids = tuple(f"q{i}" for i in range(args.queues))
    state = ScheduleState(args.kind, args.slope, "q0", queue_ids)
    if args.t is not None:
        state.t = args.t
        print(f"{focus_probability(state):g}")
        return 0
    print("t,focus" + (",other" if args.queues > 1 else ""))
    steps = int(round(args.t_max / args.step))
    for i in range(steps + 1):
        state.t = i * args.step
        dist = queue_distribution(state)
        row = f"{state.t:g},{dist[0]:.6f}"
        if args.queues > 1:
            row += f",{dist[1]:.6f}"
        print(row)
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    datasets = load_datasets(config)
    tracker = run_train(config, datasets)
    if tracker.best_score is not None:
        print(f"best dev BLEU {tracker.best_score:.2f} at {tracker.best_path}")
    else:
        print(f"finished without dev selection; checkpoint in {config.out_dir}")
    return 0


def cmd_decode(args) -> int:
    model, config, src_vocab, tgt_vocab, bpe_src, bpe_tgt = load_model(args.checkpoint)
    width = args.beam if args.beam else int(config["beam_width"])
    task = args.task
    strip = task == "translate" and not args.keep_markers
    sentences = _read_token_lines(args.input)
    hyps = decode_corpus(model, bpe_src, bpe_tgt, src_vocab, tgt_vocab, sentences, task,
                         width=width, strip_markers=strip, normalize_length=args.normalize_length)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for hyp in hyps:
            out.write(" ".join(hyp) + "\n")
    finally:
        if args.output:
            out.close()
    return 0


def cmd_eval(args) -> int:
    lines = []
    if args.hyp:
        if not args.ref:
            raise ValueError("--hyp needs --ref")
        report = corpus_bleu(_read_token_lines(args.hyp), _read_token_lines(args.ref))
        lines.append(("bleu", f"{report.score:.2f}"))
        print(report.summary())
    if args.gold_conll:
        gold = read_conll(args.gold_conll, layout=args.layout)
        if args.pred_tags:
            acc = pos_accuracy(_read_token_lines(args.pred_tags), [s.tags for s in gold])
            lines.append(("pos", f"{acc:.2f}"))
            print(f"POS accuracy = {acc:.2f}")
        if args.pred_distances:
            labels = _read_token_lines(args.pred_labels) if args.pred_labels else None
            uas, las = parse_scores(_read_token_lines(args.pred_distances), labels, [s.tree for s in gold])
            lines.append(("uas", f"{uas:.2f}"))
            print(f"UAS = {uas:.2f}")
            if las is not None:
                lines.append(("las", f"{las:.2f}"))
                print(f"LAS = {las:.2f}")
    if not lines:
        raise ValueError("nothing to evaluate: pass --hyp/--ref or --gold-conll with predictions")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as f:
            f.write("metric,value\n")
            for metric, value in lines:
                f.write(f"{metric},{value}\n")
    return 0


def cmd_sweep(args) -> int:
    config = _config_from_args(args)
    schedulers = [s.strip() for s in args.schedulers.split(",") if s.strip()]
    slopes = [float(a) for a in args.slopes.split(",")]
    task_sets = [ts.strip() for ts in args.task_sets.split(";") if ts.strip()] if args.task_sets else [config.tasks]
    grid = [{"scheduler": s, "slope": a, "tasks": ts} for ts in task_sets for s in schedulers for a in slopes]
    all_tasks = sorted({t for ts in task_sets for t in ts.split(",")})
    datasets = load_datasets(config, all_tasks)
    rows = run_sweep(config, datasets, grid, replicas=args.replicas)
    write_sweep_csv(rows, args.csv)
    print(f"wrote {len(rows)} rows to {args.csv}")
    return 0


# -- wiring --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smtl", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bpe-learn", help="learn BPE merges from tokenized text")
    p.add_argument("--input", action="append", required=True, help="training text; repeatable")
    p.add_argument("--merges", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(fn=cmd_bpe_learn)

    p = sub.add_parser("bpe-apply", help="segment text with a learned BPE model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="default: stdout")
    p.set_defaults(fn=cmd_bpe_apply)

    p = sub.add_parser("linearize", help="print per-sentence target sequences from a treebank")
    p.add_argument("--conll", required=True)
    p.add_argument("--task", choices=("parse", "pos", "label"), default="parse")
    p.add_argument("--layout", choices=("conllx", "conll09"), default="conllx")
    p.set_defaults(fn=cmd_linearize)

    p = sub.add_parser("schedule-preview", help="print schedule probabilities over the clock")
    p.add_argument("--kind", choices=("constant", "exponential", "sigmoid"), required=True)
    p.add_argument("--slope", type=float, default=0.5)
    p.add_argument("--t", type=float, help="single clock value: print the focus probability")
    p.add_argument("--t-max", type=float, default=10.0, help="grid mode: largest clock value")
    p.add_argument("--step", type=float, default=0.1, help="grid spacing")
    p.add_argument("--queues", type=int, default=2)
    p.set_defaults(fn=cmd_schedule_preview)

    p = sub.add_parser("train", help="run the scheduled multi-task training loop")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("decode", help="beam-decode a source file with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="tokenized source, one sentence per line")
    p.add_argument("--output", help="default: stdout")
    p.add_argument("--task", choices=("translate", "pos", "parse", "label"), default="translate")
    p.add_argument("--beam", type=int, help="default: beam_width from the checkpoint config")
    p.add_argument("--keep-markers", action="store_true", help="do not strip BPE continuation markers")
    p.add_argument("--normalize-length", action="store_true", help="rerank finished beam entries by per-token log-prob")
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("eval", help="score hypotheses: BLEU, POS accuracy, UAS/LAS")
    p.add_argument("--hyp")
    p.add_argument("--ref")
    p.add_argument("--gold-conll")
    p.add_argument("--pred-tags")
    p.add_argument("--pred-distances")
    p.add_argument("--pred-labels")
    p.add_argument("--layout", choices=("conllx", "conll09"), default="conllx")
    p.add_argument("--csv", help="also write metric,value rows here")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="train seeded replicas over a scheduler/slope grid")
    _add_config_flags(p)
    p.add_argument("--schedulers", default="constant,exponential,sigmoid")
    p.add_argument("--slopes", default="0.5")
    p.add_argument("--task-sets", help="semicolon-separated task lists, e.g. 'translate,pos;translate,parse'")
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--csv", required=True)
    p.set_defaults(fn=cmd_sweep)

    return parser


def _fail(code: int, category: str, exc: BaseException) -> int:
    message = " ".join(str(exc).split())
    print(f"error: {category}: {message}", file=sys.stderr)
    return code


def run(argv) -> int:
    """Entry point returning an exit status (0 on success)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles --help and usage errors
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        return _fail(3, "missing-file", exc)
    except ShapeError as exc:
        return _fail(5, "shape", exc)
    except (TrainingError, NonFiniteError) as exc:
        return _fail(6, "training", exc)
    except (ValueError, KeyError) as exc:
        return _fail(4, "config", exc)


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
