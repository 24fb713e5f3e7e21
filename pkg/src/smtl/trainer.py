"""Training orchestration: scheduled batches, Adam updates, dev selection.

The loop draws word-limited mixed-task batches from the scheduler stream,
takes one Adam step per batch, and every eval point decodes the dev sets:
the focus task's dev BLEU selects the checkpoint kept on disk, while the
auxiliary scores (POS accuracy, UAS, LAS) are logged alongside. The whole
run is a pure function of (seed, config, data): logs and checkpoints are
byte-identical across repeats.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import checkpoint
from .autodiff import AdamState, Graph, adam_step
from .bpe import BpeModel, learn as bpe_learn
from .config import TrainConfig
from .data import MiniBatcher, TaskData, build_vocabs
from .decoding import decode_corpus
from .metrics import corpus_bleu, parse_scores, pos_accuracy
from .model import ModelConfig, Seq2Seq
from .schedule import ExampleStream, ScheduleState, TaskQueue
from .vocab import Vocabulary

EVAL_EPOCH_FRACTION = 0.1
CHECKPOINT_NAME = "best.ckpt"
LOG_NAME = "train.log"


class TrainingError(RuntimeError):
    pass


@dataclass
class BestModelTracker:
    best_score: Optional[float] = None
    best_path: Optional[str] = None
    best_scores: dict = field(default_factory=dict)
    history: list = field(default_factory=list)  # (t, scores) per evaluation

    def update(self, t: float, scores: dict, path_if_better) -> bool:
        self.history.append((t, dict(scores)))
        bleu = scores.get("bleu")
        if bleu is not None and (self.best_score is None or bleu > self.best_score):
            self.best_score = bleu
            self.best_scores = dict(scores)
            self.best_path = path_if_better
            return True
        return False


def build_bpe_models(config: TrainConfig, datasets: dict[str, TaskData]) -> tuple[BpeModel, BpeModel]:
    """Per-side BPE models learned from the translation corpus only."""
    if config.bpe_merges == 0:
        empty = BpeModel([])
        return empty, empty
    if "translate" not in datasets:
        raise TrainingError("bpe_merges > 0 needs a translation corpus to learn from")
    data = datasets["translate"]
    src_lines = [" ".join(w) for w in data.train_sources]
    tgt_lines = [" ".join(w) for w in data.train_annotations]
    if config.bpe_joint:
        joint = bpe_learn(src_lines + tgt_lines, config.bpe_merges)
        return joint, joint
    return bpe_learn(src_lines, config.bpe_merges), bpe_learn(tgt_lines, config.bpe_merges)


def evaluate_dev(model: Seq2Seq, config: TrainConfig, datasets, bpe_src, bpe_tgt, src_vocab, tgt_vocab) -> dict:
    """Dev scores: per-task BLEU plus POS accuracy and UAS/LAS when available."""
    scores: dict = {"bleu": None, "pos": None, "uas": None, "las": None, "task_bleu": {}}
    predictions: dict[str, list] = {}
    for task in config.task_list:
        data = datasets[task]
        if not data.dev_sources:
            continue
        hyps = decode_corpus(model, bpe_src, bpe_tgt, src_vocab, tgt_vocab, data.dev_sources,
                             task, width=config.dev_beam_width, strip_markers=(task == "translate"))
        predictions[task] = hyps
        scores["task_bleu"][task] = corpus_bleu(hyps, data.dev_references).score
    if "pos" in predictions:
        scores["pos"] = pos_accuracy(predictions["pos"], datasets["pos"].dev_references)
    if "parse" in predictions:
        gold = datasets["parse"].dev_trees
        labels = predictions.get("label")
        if labels is not None and len(labels) != len(gold):
            labels = None  # label dev set does not align with the parse dev set
        uas, las = parse_scores(predictions["parse"], labels, gold)
        scores["uas"], scores["las"] = uas, las
    scores["bleu"] = scores["task_bleu"].get(config.focus_task)
    return scores


def train(config: TrainConfig, datasets: dict[str, TaskData]) -> BestModelTracker:
    """Run the scheduled multi-task loop; returns the best-checkpoint tracker."""
    tasks = config.task_list
    missing = [t for t in tasks if t not in datasets]
    if missing:
        raise TrainingError(f"no dataset for configured tasks: {missing}")

    os.makedirs(config.out_dir, exist_ok=True)
    seeds = np.random.SeedSequence(config.seed).spawn(2 + len(tasks))
    init_rng = np.random.default_rng(seeds[0])
    sched_rng = np.random.default_rng(seeds[1])

    bpe_src, bpe_tgt = build_bpe_models(config, datasets)
    src_vocab, tgt_vocab = build_vocabs(datasets, bpe_src, bpe_tgt, tasks)
    src_vocab.save(os.path.join(config.out_dir, "src.vocab"))
    tgt_vocab.save(os.path.join(config.out_dir, "tgt.vocab"))

    queues = {
        task: TaskQueue(task, datasets[task].training_pairs(bpe_src, bpe_tgt, src_vocab, tgt_vocab),
                        np.random.default_rng(seeds[2 + i]))
        for i, task in enumerate(tasks)
    }
    state = ScheduleState(config.scheduler, config.slope, config.focus_task, tasks)
    batcher = MiniBatcher(ExampleStream(queues, state, sched_rng), config.batch_words)

    model = Seq2Seq(
        ModelConfig(config.hidden_size, len(src_vocab), len(tgt_vocab), tasks, config.architecture),
        init_rng,
    )
    adam = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                     eps=config.eps, clip_norm=config.clip_norm)

    tracker = BestModelTracker()
    ckpt_path = os.path.join(config.out_dir, CHECKPOINT_NAME)
    bpe_sides = {"src": bpe_src.merges, "tgt": bpe_tgt.merges}
    evals_enabled = bool(datasets[config.focus_task].dev_sources)
    next_eval_t = EVAL_EPOCH_FRACTION
    step = 0

    def save_checkpoint():
        checkpoint.save(ckpt_path, model.params, config.to_flat_dict(), src_vocab, tgt_vocab, bpe_sides)

    with open(os.path.join(config.out_dir, LOG_NAME), "w", encoding="utf-8") as log:

        def emit(record: dict):
            log.write(json.dumps(record, sort_keys=True) + "\n")
            log.flush()

        while (config.max_updates < 0 or step < config.max_updates) and state.t < config.epochs:
            batch = batcher.next_batch()
            g = Graph()
            total = None
            for ex in batch.examples:
                term = model.sequence_loss(g, ex)
                total = term if total is None else g.add(total, term)
            loss = g.scale(total, 1.0 / len(batch.examples))
            loss_value = float(loss.values)
            if not np.isfinite(loss_value):
                dump = os.path.join(config.out_dir, "failed_batch.json")
                with open(dump, "w", encoding="utf-8") as f:
                    json.dump([ex._asdict() for ex in batch.examples], f, indent=1)
                raise TrainingError(f"non-finite loss {loss_value} at step {step + 1}; batch saved to {dump}")
            g.backward(loss)
            adam_step(model.params, adam)
            step += 1

            counts: dict[str, int] = {}
            for ex in batch.examples:
                counts[ex.task] = counts.get(ex.task, 0) + 1
            emit({"step": step, "t": state.t, "loss": loss_value, "lr": config.lr,
                  "words": batch.words, "tasks": counts})

            if config.eval_interval > 0:
                due = step % config.eval_interval == 0
            else:
                due = state.t >= next_eval_t
                while next_eval_t <= state.t:
                    next_eval_t += EVAL_EPOCH_FRACTION
            if due and evals_enabled:
                scores = evaluate_dev(model, config, datasets, bpe_src, bpe_tgt, src_vocab, tgt_vocab)
                improved = tracker.update(state.t, scores, ckpt_path)
                if improved:
                    save_checkpoint()
                emit({"step": step, "t": state.t, "eval": scores, "best": improved})
                if config.stop_dev_bleu > 0 and scores["bleu"] is not None and scores["bleu"] >= config.stop_dev_bleu:
                    emit({"step": step, "t": state.t, "stopped": "dev BLEU target reached"})
                    break

        if tracker.best_path is None and step > 0:
            # no dev selection happened; keep the final parameters
            save_checkpoint()
            emit({"step": step, "t": state.t, "final_checkpoint": True})

    return tracker


def load_model(path):
    """Checkpoint -> (model, config dict, src vocab, tgt vocab, bpe_src, bpe_tgt)."""
    params, config, src_tokens, tgt_tokens, bpe_sides = checkpoint.load(path)
    src_vocab = Vocabulary.from_tokens(src_tokens)
    tgt_vocab = Vocabulary.from_tokens(tgt_tokens)
    tasks = tuple(t.strip() for t in config["tasks"].split(",") if t.strip())
    model_config = ModelConfig(int(config["hidden_size"]), len(src_vocab), len(tgt_vocab),
                               tasks, config["architecture"])
    model = Seq2Seq.from_params(model_config, params)
    sides = bpe_sides or {"src": [], "tgt": []}
    return model, config, src_vocab, tgt_vocab, BpeModel(sides["src"]), BpeModel(sides["tgt"])


# -- alpha sweeps -------------------------------------------------------------

SWEEP_COLUMNS = ("scheduler", "alpha", "tasks", "seed", "bleu", "pos", "uas", "las")


def sweep(base_config: TrainConfig, datasets: dict[str, TaskData], grid, replicas: int = 1) -> list[dict]:
    """Train N seeded replicas per (scheduler, alpha, tasks) point.

    Returns one row per run plus a seed="mean" row per grid point, in
    SWEEP_COLUMNS order.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty sweep grid")
    rows = []
    for point in grid:
        point_rows = []
        for r in range(replicas):
            run_id = f"{point['scheduler']}_a{point['slope']}_{point['tasks'].replace(',', '+')}_s{r}"
            cfg = replace(base_config, scheduler=point["scheduler"], slope=point["slope"],
                          tasks=point["tasks"], seed=base_config.seed + r,
                          out_dir=os.path.join(base_config.out_dir, "sweep", run_id))
            tracker = train(cfg, {t: datasets[t] for t in cfg.task_list})
            best = tracker.best_scores
            point_rows.append({
                "scheduler": cfg.scheduler, "alpha": cfg.slope,
                "tasks": cfg.tasks.replace(",", "+"), "seed": cfg.seed,
                "bleu": best.get("bleu"), "pos": best.get("pos"),
                "uas": best.get("uas"), "las": best.get("las"),
            })
        rows.extend(point_rows)
        mean_row = dict(point_rows[0])
        mean_row["seed"] = "mean"
        for metric in ("bleu", "pos", "uas", "las"):
            vals = [row[metric] for row in point_rows if row[metric] is not None]
            mean_row[metric] = sum(vals) / len(vals) if vals else None
        rows.append(mean_row)
    return rows


def write_sweep_csv(rows, path) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in SWEEP_COLUMNS})
