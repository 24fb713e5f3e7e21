"""Corpus ingestion, filtering, vocabulary assembly, and word-limited batches.

Translation pairs are dropped when either side reaches 60 words or the
target runs longer than 1.5x the source; treebank sentences only face the
length cut. Mini-batches are filled from the scheduler stream until the
next drawn example would break the word limit; that example opens the next
batch, so concatenating batches replays the stream exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .bpe import BpeModel
from .linearize import ConllSentence, TrainingExample, distance_tokens, make_task_pairs, read_conll
from .vocab import Vocabulary

MAX_SENTENCE_WORDS = 60
TARGET_RATIO_LIMIT = 1.5


def filter_pair(src_tokens, tgt_tokens, max_len: int = MAX_SENTENCE_WORDS, ratio: float = TARGET_RATIO_LIMIT) -> bool:
    """Keep/drop decision for one translation pair (True = keep)."""
    if len(src_tokens) >= max_len or len(tgt_tokens) >= max_len:
        return False
    return len(tgt_tokens) <= ratio * len(src_tokens)


def read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def load_parallel(src_path, tgt_path, max_len: int = MAX_SENTENCE_WORDS, ratio: float = TARGET_RATIO_LIMIT):
    """Aligned one-sentence-per-line files -> filtered (source, target) word lists."""
    src_lines, tgt_lines = read_lines(src_path), read_lines(tgt_path)
    if len(src_lines) != len(tgt_lines):
        raise ValueError(f"{src_path} has {len(src_lines)} lines but {tgt_path} has {len(tgt_lines)}")
    sources, targets = [], []
    for s, t in zip(src_lines, tgt_lines):
        sw, tw = s.split(), t.split()
        if sw and tw and filter_pair(sw, tw, max_len, ratio):
            sources.append(sw)
            targets.append(tw)
    return sources, targets


def load_treebank(path, layout="conllx", max_len: int = MAX_SENTENCE_WORDS) -> list[ConllSentence]:
    """Gold treebank sentences, length-filtered; malformed gold trees are errors."""
    kept = []
    for i, sent in enumerate(read_conll(path, layout=layout)):
        if len(sent.words) >= max_len:
            continue
        if not sent.tree.is_well_formed():
            raise ValueError(f"{path}: sentence {i} is not a single-rooted acyclic tree")
        kept.append(sent)
    return kept


# -- dataset bundle -----------------------------------------------------------


@dataclass
class TaskData:
    """One task's training material plus its dev set for periodic evaluation."""

    task: str
    train_sources: list[list[str]]  # raw source words
    train_annotations: list  # target words / tags / trees, by task kind
    dev_sources: list[list[str]] = field(default_factory=list)
    dev_references: list[list[str]] = field(default_factory=list)  # linearized target tokens
    dev_trees: Optional[list] = None  # gold trees, for UAS/LAS

    def training_pairs(self, bpe_src, bpe_tgt, src_vocab, tgt_vocab) -> list[TrainingExample]:
        return make_task_pairs(self.train_sources, self.train_annotations, self.task, bpe_src, bpe_tgt, src_vocab, tgt_vocab)


def translation_task_data(train_src, train_tgt, dev_src=None, dev_tgt=None,
                          max_len: int = MAX_SENTENCE_WORDS, ratio: float = TARGET_RATIO_LIMIT) -> TaskData:
    sources, targets = load_parallel(train_src, train_tgt, max_len, ratio)
    data = TaskData("translate", sources, targets)
    if dev_src and dev_tgt:
        # hypotheses get their BPE markers stripped before scoring, so the
        # references stay plain words
        data.dev_sources = [line.split() for line in read_lines(dev_src)]
        data.dev_references = [line.split() for line in read_lines(dev_tgt)]
    return data


def treebank_task_data(task, train_conll, dev_conll=None, layout="conllx", max_len: int = MAX_SENTENCE_WORDS) -> TaskData:
    def annotation(sent: ConllSentence):
        if task == "pos":
            return sent.tags
        return sent.tree

    def reference(sent: ConllSentence) -> list[str]:
        if task == "pos":
            return list(sent.tags)
        if task == "parse":
            return distance_tokens(sent.tree)
        return list(sent.tree.labels)

    train = load_treebank(train_conll, layout, max_len)
    data = TaskData(task, [s.words for s in train], [annotation(s) for s in train])
    if dev_conll:
        dev = load_treebank(dev_conll, layout, max_len)
        data.dev_sources = [s.words for s in dev]
        data.dev_references = [reference(s) for s in dev]
        data.dev_trees = [s.tree for s in dev]
    return data


def build_vocabs(datasets: dict[str, TaskData], bpe_src: BpeModel, bpe_tgt: BpeModel, tasks) -> tuple[Vocabulary, Vocabulary]:
    """Source vocab over BPE-applied sources of every task; one shared target
    vocab holding task tokens, target subwords, tags, labels and distances."""
    src_vocab = Vocabulary()
    tgt_vocab = Vocabulary(tasks=tasks)
    for task in tasks:
        data = datasets[task]
        for words in data.train_sources:
            for tok in bpe_src.apply_tokens(words):
                src_vocab.add(tok)
        for ann in data.train_annotations:
            if task == "translate":
                targets = bpe_tgt.apply_tokens(ann)
            elif task == "pos":
                targets = ann
            elif task == "parse":
                targets = distance_tokens(ann)
            else:
                targets = ann.labels
            for tok in targets:
                tgt_vocab.add(tok)
    return src_vocab, tgt_vocab


# -- mini-batches -------------------------------------------------------------


@dataclass
class MiniBatch:
    examples: list[TrainingExample]
    words: int


class MiniBatcher:
    """Fills batches from a scheduler stream under a source+target word limit.

    The first example always enters (an over-limit one rides alone); the draw
    that would overflow is held back and starts the next batch.
    """

    def __init__(self, stream, limit: int = 5000):
        if limit < 1:
            raise ValueError("word limit must be >= 1")
        self.stream = stream
        self.limit = limit
        self._held: Optional[TrainingExample] = None

    def next_batch(self) -> MiniBatch:
        examples: list[TrainingExample] = []
        words = 0
        while True:
            if self._held is not None:
                ex, self._held = self._held, None
            else:
                ex = self.stream.next()
            if examples and words + ex.words > self.limit:
                self._held = ex
                break
            examples.append(ex)
            words += ex.words
        return MiniBatch(examples, words)
