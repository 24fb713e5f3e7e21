"""Linearizations that turn syntactic annotation into seq2seq pairs.

A dependency tree over n tokens is stored as 1-based head positions with 0
for the virtual root. The unlabeled tree becomes the sequence of signed
distances head_i - i; the labeled view becomes the per-token sequence of arc
labels. Both directions (tree -> sequence, predicted sequence -> tree) are
provided; the inverse never raises, since model output is unconstrained.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

INVALID_HEAD = -1

TASKS = ("translate", "pos", "parse", "label")


class TrainingExample(NamedTuple):
    task: str
    source: list[int]
    target: list[int]

    @property
    def words(self) -> int:
        return len(self.source) + len(self.target)


@dataclass
class DependencyTree:
    heads: list[int]
    labels: Optional[list[str]] = None

    def __len__(self):
        return len(self.heads)

    def is_well_formed(self) -> bool:
        """Single-rooted, acyclic, heads within [0..n], no self-loops."""
        n = len(self.heads)
        if sum(1 for h in self.heads if h == 0) != 1:
            return False
        for i, h in enumerate(self.heads, start=1):
            if not (0 <= h <= n) or h == i:
                return False
        for i in range(1, n + 1):
            seen = set()
            node = i
            while node != 0:
                if node in seen:
                    return False
                seen.add(node)
                node = self.heads[node - 1]
        return True


def linearize_distances(tree: DependencyTree) -> list[int]:
    """Distance of each token to its head; the root maps to position 0."""
    n = len(tree.heads)
    for i, h in enumerate(tree.heads, start=1):
        if not (0 <= h <= n):
            raise ValueError(f"head index {h} of token {i} outside [0..{n}]")
    return [h - i for i, h in enumerate(tree.heads, start=1)]


def delinearize_distances(distances: list[int]) -> DependencyTree:
    """Inverse of linearize_distances, total over arbitrary predicted integers.

    A distance pointing outside [0..n] marks that token's head INVALID; the
    remaining tokens are unaffected.
    """
    n = len(distances)
    heads = []
    for i, d in enumerate(distances, start=1):
        h = i + d
        heads.append(h if 0 <= h <= n else INVALID_HEAD)
    return DependencyTree(heads=heads)


# -- CoNLL-style column files -------------------------------------------------


@dataclass
class ConllSentence:
    words: list[str]
    tags: list[str]
    tree: DependencyTree


# column indices per layout: (form, pos, head, deprel); ID is always column 0
CONLL_LAYOUTS = {
    "conllx": (1, 4, 6, 7),
    "conll09": (1, 4, 8, 10),
}


def read_conll(path, layout="conllx", columns=None) -> list[ConllSentence]:
    """Read tab-separated dependency sentences, blank-line delimited.

    `columns` overrides the layout preset with explicit (form, pos, head,
    deprel) indices. Comment lines and non-integer token ids are skipped.
    """
    if columns is None:
        if layout not in CONLL_LAYOUTS:
            raise ValueError(f"unknown CoNLL layout {layout!r}; use one of {sorted(CONLL_LAYOUTS)}")
        columns = CONLL_LAYOUTS[layout]
    form_c, pos_c, head_c, rel_c = columns

    sentences = []
    words, tags, heads, rels = [], [], [], []

    def flush():
        if words:
            sentences.append(ConllSentence(list(words), list(tags), DependencyTree(list(heads), list(rels))))
            for buf in (words, tags, heads, rels):
                buf.clear()

    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                flush()
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            try:
                int(cols[0])
            except ValueError:
                continue  # multiword ranges / empty nodes
            try:
                words.append(cols[form_c])
                tags.append(cols[pos_c])
                heads.append(int(cols[head_c]))
                rels.append(cols[rel_c])
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed CoNLL row: {exc}") from exc
    flush()
    return sentences


# -- pair construction --------------------------------------------------------


def distance_tokens(tree: DependencyTree) -> list[str]:
    return [str(d) for d in linearize_distances(tree)]


def make_task_pairs(sentences, annotations, task, bpe_src, bpe_tgt, src_vocab, tgt_vocab) -> list[TrainingExample]:
    """Build (task, source ids, target ids) pairs for one task.

    `sentences` are word-token lists; the source side is always BPE-applied
    subwords (source-side model). `annotations` are, per task: target word
    lists (translate), tag lists (pos), or DependencyTree objects (parse,
    label). Translation targets go through the target-side BPE model; syntax
    targets use the closed tag/label/distance vocabulary, where an unseen
    token is an error.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    if len(sentences) != len(annotations):
        raise ValueError(f"{task}: {len(sentences)} sentences vs {len(annotations)} annotations")

    pairs = []
    for idx, (words, ann) in enumerate(zip(sentences, annotations)):
        if task == "translate":
            target = bpe_tgt.apply_tokens(ann)
        elif task == "pos":
            if len(ann) != len(words):
                raise ValueError(f"sentence {idx}: {len(words)} tokens but {len(ann)} tags")
            target = list(ann)
        else:
            if len(ann.heads) != len(words):
                raise ValueError(f"sentence {idx}: {len(words)} tokens but tree of {len(ann.heads)}")
            if task == "parse":
                target = distance_tokens(ann)
            else:
                if ann.labels is None:
                    raise ValueError(f"sentence {idx}: tree has no arc labels")
                target = list(ann.labels)
        source = bpe_src.apply_tokens(words)
        strict = task in ("parse", "pos", "label")
        pairs.append(
            TrainingExample(
                task=task,
                source=src_vocab.encode(source),
                target=tgt_vocab.encode(target, strict=strict),
            )
        )
    return pairs
