"""Beam-search inference over a trained model.

Every live hypothesis is expanded each step; the top-`width` candidates by
total log-prob survive, and any that just emitted end-of-sequence move to
the finished pool. Scores are unnormalized sums of token log-probs (an
optional length normalization only reranks the finished pool). Decoding
always terminates: a hard cap of 3x source length + 10 bounds the output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Graph
from .model import Seq2Seq
from .vocab import EOS


@dataclass
class Hypothesis:
    tokens: list[int]
    logprob: float
    state: list
    prev: int


def beam_decode(model: Seq2Seq, src_ids, task: str, width: int = 5,
                normalize_length: bool = False) -> tuple[list[int], float]:
    """Best token sequence (EOS excluded) and its total log-prob."""
    if width < 1:
        raise ValueError("beam width must be >= 1")
    g = Graph()
    enc = model.encode(g, src_ids)
    cap = 3 * len(src_ids) + 10
    live = [Hypothesis([], 0.0, model.initial_state(task), model.task_token_id(task))]
    finished: list[Hypothesis] = []

    def rank(h: Hypothesis) -> float:
        return h.logprob / max(1, len(h.tokens)) if normalize_length else h.logprob

    for _ in range(cap):
        candidates = []  # (total, hyp index, token) -- index keeps ordering deterministic
        states = []
        for hi, hyp in enumerate(live):
            logp, state, _ = model.decode_step(g, hyp.prev, hyp.state, enc, task)
            states.append(state)
            vals = logp.values
            top = np.argsort(-vals, kind="stable")[:width]
            candidates.extend((hyp.logprob + float(vals[tok]), hi, int(tok)) for tok in top)
        candidates.sort(key=lambda cand: (-cand[0], cand[1], cand[2]))
        next_live = []
        for total, hi, tok in candidates[:width]:
            hyp = live[hi]
            if tok == EOS:
                finished.append(Hypothesis(list(hyp.tokens), total, [], EOS))
            else:
                next_live.append(Hypothesis(hyp.tokens + [tok], total, states[hi], tok))
        live = next_live
        if not live:
            break
        # live totals only fall from here, so a finished leader is final
        if finished and max(f.logprob for f in finished) >= max(h.logprob for h in live):
            break

    pool = finished if finished else live
    best = max(pool, key=rank)
    return best.tokens, best.logprob


def greedy_decode(model: Seq2Seq, src_ids, task: str) -> tuple[list[int], float]:
    return beam_decode(model, src_ids, task, width=1)


def decode_tokens(model: Seq2Seq, bpe_src, src_vocab, tgt_vocab, words, task: str,
                  width: int = 5, normalize_length: bool = False) -> list[str]:
    """Raw source words -> decoded target tokens (markers NOT stripped)."""
    subwords = bpe_src.apply_tokens(words) if bpe_src else list(words)
    ids, _ = beam_decode(model, src_vocab.encode(subwords), task, width, normalize_length)
    return tgt_vocab.decode(ids)


def decode_corpus(model: Seq2Seq, bpe_src, bpe_tgt, src_vocab, tgt_vocab, sentences, task: str,
                  width: int = 5, strip_markers: bool = False,
                  normalize_length: bool = False) -> list[list[str]]:
    """Decode many sentences; translation hypotheses can have markers stripped."""
    out = []
    for words in sentences:
        tokens = decode_tokens(model, bpe_src, src_vocab, tgt_vocab, words, task, width, normalize_length)
        out.append(bpe_tgt.strip_tokens(tokens) if strip_markers and bpe_tgt else tokens)
    return out
