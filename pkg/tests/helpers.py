"""Independent oracles shared by the test modules.

Everything here recomputes expected values from first principles (finite
differences, explicit counting loops, naive scoring) so the tests never
trust the code paths they check.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from smtl.linearize import DependencyTree


def fd_gradient(loss_fn, tensor, h=1e-4):
    """Central finite differences of loss_fn() w.r.t. a Tensor, entry by entry."""
    grad = np.zeros_like(tensor.values)
    flat = tensor.values.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = loss_fn()
        flat[i] = orig - h
        down = loss_fn()
        flat[i] = orig
        out[i] = (up - down) / (2.0 * h)
    return grad


def rel_err(analytic, numeric):
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-8)
    return np.abs(analytic - numeric).max() / scale


def signed_uniform(rng, shape, lo=0.1, hi=2.0):
    """Entries with magnitudes in [lo, hi] and random signs."""
    return rng.uniform(lo, hi, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def lstm_step_oracle(wx, wh, b, x, h, c):
    """Plain numpy LSTM step, gate order i,f,g,o."""
    pre = wx @ x + wh @ h + b
    n = h.shape[0]
    sig = lambda z: 1.0 / (1.0 + np.exp(-z))
    i, f = sig(pre[:n]), sig(pre[n : 2 * n])
    g, o = np.tanh(pre[2 * n : 3 * n]), sig(pre[3 * n :])
    c2 = f * c + i * g
    return o * np.tanh(c2), c2


def random_tree(n, rng) -> DependencyTree:
    """Random single-rooted tree: each node attaches to an already-placed one."""
    order = rng.permutation(n) + 1
    heads = [0] * n
    placed = [int(order[0])]
    for node in order[1:]:
        heads[int(node) - 1] = int(placed[rng.integers(len(placed))])
        placed.append(int(node))
    labels = [f"rel{rng.integers(5)}" for _ in range(n)]
    return DependencyTree(heads=heads, labels=labels)


# -- brute-force BLEU ----------------------------------------------------------


def bleu_oracle(hyps, refs, max_n=4):
    """Clipped n-gram BLEU recomputed with explicit dict loops."""
    match = {n: 0 for n in range(1, max_n + 1)}
    total = {n: 0 for n in range(1, max_n + 1)}
    c = r = 0
    for hyp, ref in zip(hyps, refs):
        c += len(hyp)
        r += len(ref)
        for n in range(1, max_n + 1):
            hyp_grams = defaultdict(int)
            for i in range(len(hyp) - n + 1):
                hyp_grams[tuple(hyp[i : i + n])] += 1
            ref_grams = defaultdict(int)
            for i in range(len(ref) - n + 1):
                ref_grams[tuple(ref[i : i + n])] += 1
            for gram, k in hyp_grams.items():
                match[n] += min(k, ref_grams[gram])
                total[n] += k
    precisions = []
    for n in range(1, max_n + 1):
        precisions.append(match[n] / total[n] if total[n] else 0.0)
    if c == 0:
        return 0.0, precisions
    if any(p == 0 for p in precisions):
        score = 0.0
    else:
        bp = 1.0 if c > r else math.exp(1.0 - r / c)
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / max_n)
    return score, precisions


# -- brute-force attachment / tag scoring --------------------------------------


def attachment_oracle(pred_heads_lists, pred_labels_lists, gold_trees):
    """Positional UAS/LAS over already-parsed head integers (None = invalid)."""
    total = uas = las = 0
    for si, gold in enumerate(gold_trees):
        preds = pred_heads_lists[si]
        labels = pred_labels_lists[si] if pred_labels_lists is not None else []
        for pos, gold_head in enumerate(gold.heads):
            total += 1
            if pos < len(preds) and preds[pos] == gold_head:
                uas += 1
                if pos < len(labels) and gold.labels and labels[pos] == gold.labels[pos]:
                    las += 1
    return 100.0 * uas / total, 100.0 * las / total


def tag_accuracy_oracle(pred_lists, gold_lists):
    total = hits = 0
    for preds, gold in zip(pred_lists, gold_lists):
        for pos, tag in enumerate(gold):
            total += 1
            if pos < len(preds) and preds[pos] == tag:
                hits += 1
    return 100.0 * hits / total


# -- brute-force BPE pair counting ----------------------------------------------


def best_pair_oracle(lines):
    """Most frequent adjacent symbol pair at character level, ties lexicographic."""
    counts = defaultdict(int)
    for line in lines:
        for word in line.split():
            for a, b in zip(word, word[1:]):
                counts[(a, b)] += 1
    best = None
    for pair, k in counts.items():
        if best is None or k > counts[best] or (k == counts[best] and pair < best):
            best = pair
    return best
