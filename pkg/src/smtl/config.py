"""Run configuration: a flat key=value file, every key also a CLI flag.

The dataclass is the single schema. Flag names are the field names with
underscores swapped for dashes; the config file uses the field names as-is.
Flags win over the file, the file wins over defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import get_type_hints

from .schedule import SCHEDULE_KINDS
from .model import ARCHITECTURES


def _f(default, help_text):
    return field(default=default, metadata={"help": help_text})


@dataclass
class TrainConfig:
    seed: int = _f(1, "master seed for init, shuffling and queue draws")
    hidden_size: int = _f(250, "model dimension H (embeddings, decoder state; H/2 per encoder direction)")
    architecture: str = _f("shared", "decoder sharing: 'shared' or 'separate' (per-task decoders)")
    scheduler: str = _f("constant", "schedule kind: constant | exponential | sigmoid")
    slope: float = _f(0.5, "schedule slope (constant level for the constant kind)")
    epochs: float = _f(20.0, "training budget in focus-task epochs")
    max_updates: int = _f(-1, "hard cap on updates; -1 = no cap, 0 = do nothing")
    eval_interval: int = _f(0, "evaluate every N updates; 0 = every 0.1 focus epoch")
    batch_words: int = _f(5000, "mini-batch word limit (source + target tokens)")
    beam_width: int = _f(5, "beam size for test decoding")
    dev_beam_width: int = _f(1, "beam size for periodic dev decoding")
    lr: float = _f(0.001, "Adam learning rate")
    beta1: float = _f(0.9, "Adam first-moment decay")
    beta2: float = _f(0.999, "Adam second-moment decay")
    eps: float = _f(1e-8, "Adam epsilon")
    clip_norm: float = _f(5.0, "global gradient-norm clip; 0 disables")
    focus_task: str = _f("translate", "queue whose schedule probability the scheduler controls")
    tasks: str = _f("translate", "comma-separated task list (translate,pos,parse,label)")
    out_dir: str = _f("runs/default", "directory for checkpoints, logs and vocab files")
    stop_dev_bleu: float = _f(0.0, "stop early once focus dev BLEU reaches this; 0 disables")
    bpe_merges: int = _f(0, "BPE merges to learn from the translation corpus (per side)")
    bpe_joint: bool = _f(False, "learn one BPE model on both translation sides instead of one per side")
    max_len: int = _f(60, "drop sentences with this many words or more")
    ratio_limit: float = _f(1.5, "drop translation pairs with target longer than ratio * source")
    conll_layout: str = _f("conllx", "treebank column layout: conllx | conll09")
    translate_src: str = _f("", "translation training corpus, source side")
    translate_tgt: str = _f("", "translation training corpus, target side")
    translate_dev_src: str = _f("", "translation dev corpus, source side")
    translate_dev_tgt: str = _f("", "translation dev corpus, target side")
    pos_conll: str = _f("", "POS training treebank (CoNLL)")
    pos_dev_conll: str = _f("", "POS dev treebank")
    parse_conll: str = _f("", "unlabeled-parse training treebank")
    parse_dev_conll: str = _f("", "unlabeled-parse dev treebank")
    label_conll: str = _f("", "arc-label training treebank")
    label_dev_conll: str = _f("", "arc-label dev treebank")

    def __post_init__(self):
        self.validate()

    @property
    def task_list(self) -> tuple[str, ...]:
        return tuple(t.strip() for t in self.tasks.split(",") if t.strip())

    def validate(self) -> None:
        if self.scheduler not in SCHEDULE_KINDS:
            raise ValueError(f"scheduler must be one of {SCHEDULE_KINDS}, got {self.scheduler!r}")
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}, got {self.architecture!r}")
        if self.epochs <= 0:
            raise ValueError("epochs budget must be > 0")
        if self.eval_interval < 0:
            raise ValueError("eval_interval must be >= 0")
        if self.batch_words < 1:
            raise ValueError("batch_words must be >= 1")
        if self.beam_width < 1 or self.dev_beam_width < 1:
            raise ValueError("beam widths must be >= 1")
        if not self.task_list:
            raise ValueError("task list is empty")
        if self.focus_task not in self.task_list:
            raise ValueError(f"focus task {self.focus_task!r} not in tasks {self.task_list}")

    def to_flat_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}


def schema() -> list[tuple[str, type, object, str]]:
    """(name, type, default, help) per config key, for CLI flag generation."""
    hints = get_type_hints(TrainConfig)
    return [(f.name, hints[f.name], f.default, f.metadata["help"]) for f in dataclasses.fields(TrainConfig)]


def _coerce(name: str, kind: type, raw):
    if isinstance(raw, kind):
        return raw
    text = str(raw).strip()
    try:
        if kind is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError as exc:
        raise ValueError(f"config key {name!r}: cannot parse {raw!r} as {kind.__name__}") from exc


def parse_config_file(path) -> dict[str, str]:
    """key = value lines; '#' starts a comment; unknown keys are errors."""
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value
    return values


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> TrainConfig:
    """Defaults, then config-file values, then CLI overrides."""
    merged: dict = {}
    hints = get_type_hints(TrainConfig)
    for source in (file_values or {}, overrides or {}):
        for key, raw in source.items():
            if raw is None:
                continue
            if key not in hints:
                raise ValueError(f"unknown config key {key!r}")
            merged[key] = _coerce(key, hints[key], raw)
    return TrainConfig(**merged)
