"""Corpus BLEU and the syntax metrics (POS accuracy, UAS, LAS).

BLEU is case-sensitive, corpus-level, over tokenized text, with no
smoothing: a zero n-gram precision zeroes the score, as the classic
multi-bleu script does. The syntax metrics score by position: predictions
beyond the gold length are ignored and missing positions count as wrong,
so sequences of the wrong length are penalized but never crash.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .linearize import INVALID_HEAD, delinearize_distances


@dataclass
class BleuReport:
    precisions: tuple[float, ...]  # n = 1..4
    brevity_penalty: float
    hyp_length: int
    ref_length: int
    score: float  # 0..100

    def summary(self) -> str:
        precs = "/".join(f"{100 * p:.1f}" for p in self.precisions)
        return (f"BLEU = {self.score:.2f}, {precs} "
                f"(BP={self.brevity_penalty:.3f}, hyp_len={self.hyp_length}, ref_len={self.ref_length})")


def _ngrams(tokens, n) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hypotheses, references, max_n: int = 4) -> BleuReport:
    """Clipped n-gram precision BLEU over token lists, one reference each."""
    if not hypotheses:
        raise ValueError("empty corpus")
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses vs {len(references)} references")

    matched = [0] * max_n
    total = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp, n)
            if not hyp_counts:
                continue
            ref_counts = _ngrams(ref, n)
            matched[n - 1] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
            total[n - 1] += sum(hyp_counts.values())

    precisions = tuple(m / t if t else 0.0 for m, t in zip(matched, total))
    if hyp_len == 0:
        return BleuReport(precisions, 0.0, 0, ref_len, 0.0)
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    if any(p == 0.0 for p in precisions):
        score = 0.0
    else:
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / max_n)
    return BleuReport(precisions, bp, hyp_len, ref_len, score)


# -- syntax metrics -----------------------------------------------------------


def _predicted_heads(distance_tokens) -> list[int]:
    distances = []
    for tok in distance_tokens:
        try:
            distances.append(int(tok))
        except ValueError:
            distances.append(None)
    heads = delinearize_distances([d if d is not None else 0 for d in distances]).heads
    return [INVALID_HEAD if d is None else h for d, h in zip(distances, heads)]


def parse_scores(pred_distances, pred_labels, gold_trees) -> tuple[float, Optional[float]]:
    """Corpus UAS and LAS in percent; LAS is None without label predictions.

    `pred_distances`/`pred_labels` are per-sentence token lists as decoded;
    non-integer distance tokens mark that position invalid.
    """
    if len(pred_distances) != len(gold_trees):
        raise ValueError(f"{len(pred_distances)} predictions vs {len(gold_trees)} gold trees")
    labeled = pred_labels is not None
    tokens = uas_hits = las_hits = 0
    for i, (dist_toks, gold) in enumerate(zip(pred_distances, gold_trees)):
        heads = _predicted_heads(dist_toks)
        labels = pred_labels[i] if labeled else []
        n = len(gold.heads)
        tokens += n
        for pos in range(n):
            if pos >= len(heads) or heads[pos] != gold.heads[pos]:
                continue
            uas_hits += 1
            if labeled and pos < len(labels) and gold.labels and labels[pos] == gold.labels[pos]:
                las_hits += 1
    if tokens == 0:
        raise ValueError("gold treebank has no tokens")
    uas = 100.0 * uas_hits / tokens
    return uas, (100.0 * las_hits / tokens if labeled else None)


def pos_accuracy(pred_tags, gold_tags) -> float:
    """Positional tag accuracy in percent, wrong-length convention as above."""
    if len(pred_tags) != len(gold_tags):
        raise ValueError(f"{len(pred_tags)} predictions vs {len(gold_tags)} gold sentences")
    tokens = hits = 0
    for pred, gold in zip(pred_tags, gold_tags):
        tokens += len(gold)
        hits += sum(1 for i, tag in enumerate(gold) if i < len(pred) and pred[i] == tag)
    if tokens == 0:
        raise ValueError("gold tags are empty")
    return 100.0 * hits / tokens
