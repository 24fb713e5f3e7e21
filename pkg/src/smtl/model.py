"""Attentional encoder-decoder shared across tasks via decoder priming.

One bidirectional LSTM layer encodes the source; a two-layer unidirectional
LSTM stack decodes. Attention is the plain dot product between the top
decoder state and the encoder vectors. The output MLP is

    g = tanh(Wd1 d + Wa1 c)
    u = tanh(g + Wd2 d + Wa2 c)
    p = softmax(Wout u + bout)

with the additive g skip term in the second layer. The first decoder input
is the task token's embedding; it is never predicted and carries no loss
term. In the separate-decoders variant every task owns its decoder stack,
attention MLP, output layer and target embeddings, while the encoder and
source embeddings stay shared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Graph, Tensor, glorot, zeros
from .linearize import TrainingExample
from .vocab import EOS

ARCHITECTURES = ("shared", "separate")


@dataclass(frozen=True)
class ModelConfig:
    hidden_size: int
    src_vocab_size: int
    tgt_vocab_size: int
    tasks: tuple[str, ...]
    architecture: str = "shared"
    encoder_layers: int = 1
    decoder_layers: int = 2

    def __post_init__(self):
        if self.hidden_size % 2 != 0 or self.hidden_size < 2:
            raise ValueError(f"hidden size must be even and >= 2, got {self.hidden_size}")
        if not self.tasks:
            raise ValueError("task list must be non-empty")
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}, got {self.architecture!r}")
        if self.encoder_layers != 1:
            raise ValueError("the encoder is a single bidirectional layer")
        if self.decoder_layers < 1:
            raise ValueError("need at least one decoder layer")


@dataclass
class EncodedSource:
    vectors: list[Tensor]  # one H-vector per source position
    matrix: Tensor  # (m, H) stack of the same vectors

    def __len__(self):
        return len(self.vectors)


class LstmCell:
    """Fused-gate LSTM cell; gate order i, f, g, o. Forget bias starts at 1."""

    def __init__(self, params, prefix, input_size, hidden, rng):
        self.hidden = hidden
        b = zeros((4 * hidden,), name=f"{prefix}/b")
        b.values[hidden : 2 * hidden] = 1.0
        self.wx = params.setdefault(f"{prefix}/Wx", glorot(rng, 4 * hidden, input_size, f"{prefix}/Wx"))
        self.wh = params.setdefault(f"{prefix}/Wh", glorot(rng, 4 * hidden, hidden, f"{prefix}/Wh"))
        self.b = params.setdefault(f"{prefix}/b", b)

    @classmethod
    def wrap(cls, params, prefix, hidden):
        cell = cls.__new__(cls)
        cell.hidden = hidden
        cell.wx = params[f"{prefix}/Wx"]
        cell.wh = params[f"{prefix}/Wh"]
        cell.b = params[f"{prefix}/b"]
        return cell

    def zero_state(self):
        return (Tensor(np.zeros(self.hidden)), Tensor(np.zeros(self.hidden)))

    def step(self, g: Graph, x: Tensor, state):
        h, c = state
        pre = g.add(g.affine(self.wx, x, self.b), g.affine(self.wh, h))
        n = self.hidden
        i = g.sigmoid(g.slice(pre, 0, n))
        f = g.sigmoid(g.slice(pre, n, 2 * n))
        cand = g.tanh(g.slice(pre, 2 * n, 3 * n))
        o = g.sigmoid(g.slice(pre, 3 * n, 4 * n))
        c_new = g.add(g.mul(f, c), g.mul(i, cand))
        h_new = g.mul(o, g.tanh(c_new))
        return (h_new, c_new)


def attend(g: Graph, d: Tensor, enc: EncodedSource):
    """Dot attention: scores d.h_i, softmax weights, weighted-sum context."""
    scores = g.affine(enc.matrix, d)
    weights = g.softmax(scores)
    context = g.matvec_t(enc.matrix, weights)
    return weights, context


class Seq2Seq:
    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        self.params: dict[str, Tensor] = {}
        h = config.hidden_size
        p = self.params
        p["encoder/embed"] = glorot(rng, config.src_vocab_size, h, "encoder/embed")
        self._enc_fw = LstmCell(p, "encoder/fw", h, h // 2, rng)
        self._enc_bw = LstmCell(p, "encoder/bw", h, h // 2, rng)
        self._dec_cells: dict[str, list[LstmCell]] = {}
        for scope in self.decoder_scopes():
            p[f"decoder/{scope}/embed"] = glorot(rng, config.tgt_vocab_size, h, f"decoder/{scope}/embed")
            self._dec_cells[scope] = [
                LstmCell(p, f"decoder/{scope}/l{k}", h, h, rng) for k in range(config.decoder_layers)
            ]
            for w in ("w_dec1", "w_att1", "w_dec2", "w_att2"):
                p[f"decoder/{scope}/attn/{w}"] = glorot(rng, h, h, f"decoder/{scope}/attn/{w}")
            p[f"output/{scope}/W"] = glorot(rng, config.tgt_vocab_size, h, f"output/{scope}/W")
            p[f"output/{scope}/b"] = zeros((config.tgt_vocab_size,), f"output/{scope}/b")

    # -- parameter bookkeeping ----------------------------------------------

    def decoder_scopes(self):
        return self.config.tasks if self.config.architecture == "separate" else ("shared",)

    def select_decoder(self, task: str) -> str:
        """Scope owning the decoder parameters that serve `task`."""
        if task not in self.config.tasks:
            raise ValueError(f"unknown task {task!r}; model serves {self.config.tasks}")
        return task if self.config.architecture == "separate" else "shared"

    def decoder_param_names(self, task: str) -> list[str]:
        scope = self.select_decoder(task)
        prefixes = (f"decoder/{scope}/", f"output/{scope}/")
        return [name for name in self.params if name.startswith(prefixes)]

    def task_token_id(self, task: str) -> int:
        if task not in self.config.tasks:
            raise ValueError(f"unknown task {task!r}; model serves {self.config.tasks}")
        return 3 + self.config.tasks.index(task)

    @classmethod
    def from_params(cls, config: ModelConfig, params: dict[str, Tensor]) -> "Seq2Seq":
        model = cls.__new__(cls)
        model.config = config
        model.params = params
        model._enc_fw = LstmCell.wrap(params, "encoder/fw", config.hidden_size // 2)
        model._enc_bw = LstmCell.wrap(params, "encoder/bw", config.hidden_size // 2)
        model._dec_cells = {
            scope: [LstmCell.wrap(params, f"decoder/{scope}/l{k}", config.hidden_size) for k in range(config.decoder_layers)]
            for scope in model.decoder_scopes()
        }
        return model

    # -- forward -------------------------------------------------------------

    def encode(self, g: Graph, src_ids) -> EncodedSource:
        if len(src_ids) == 0:
            raise ValueError("cannot encode an empty source sequence")
        for i in src_ids:
            if not (0 <= i < self.config.src_vocab_size):
                raise ValueError(f"source id {i} outside vocabulary of {self.config.src_vocab_size}")
        embed = self.params["encoder/embed"]
        xs = [g.lookup(embed, i) for i in src_ids]
        fw, states = [], self._enc_fw.zero_state()
        for x in xs:
            states = self._enc_fw.step(g, x, states)
            fw.append(states[0])
        bw, states = [None] * len(xs), self._enc_bw.zero_state()
        for i in range(len(xs) - 1, -1, -1):
            states = self._enc_bw.step(g, xs[i], states)
            bw[i] = states[0]
        vectors = [g.concat([f, b]) for f, b in zip(fw, bw)]
        return EncodedSource(vectors, g.stack_rows(vectors))

    def initial_state(self, task: str):
        return [cell.zero_state() for cell in self._dec_cells[self.select_decoder(task)]]

    def decode_step(self, g: Graph, prev_id: int, state, enc: EncodedSource, task: str):
        """One decoder step: returns (log-probs, next state, attention weights)."""
        if not (0 <= prev_id < self.config.tgt_vocab_size):
            raise ValueError(f"target id {prev_id} outside vocabulary of {self.config.tgt_vocab_size}")
        scope = self.select_decoder(task)
        p = self.params
        x = g.lookup(p[f"decoder/{scope}/embed"], prev_id)
        new_state = []
        for cell, layer_state in zip(self._dec_cells[scope], state):
            layer_state = cell.step(g, x, layer_state)
            new_state.append(layer_state)
            x = layer_state[0]
        d = x  # top-layer hidden
        weights, c = attend(g, d, enc)
        g1 = g.tanh(g.add(g.affine(p[f"decoder/{scope}/attn/w_dec1"], d), g.affine(p[f"decoder/{scope}/attn/w_att1"], c)))
        u = g.tanh(g.add(g1, g.add(g.affine(p[f"decoder/{scope}/attn/w_dec2"], d), g.affine(p[f"decoder/{scope}/attn/w_att2"], c))))
        logits = g.affine(p[f"output/{scope}/W"], u, p[f"output/{scope}/b"])
        logp = g.log(g.softmax(logits))
        return logp, new_state, weights

    def sequence_loss(self, g: Graph, example: TrainingExample) -> Tensor:
        """Teacher-forced NLL over the target tokens plus end-of-sequence."""
        if not example.target:
            raise ValueError("training example has an empty target")
        enc = self.encode(g, example.source)
        state = self.initial_state(example.task)
        prev = self.task_token_id(example.task)
        loss = None
        for y in list(example.target) + [EOS]:
            logp, state, _ = self.decode_step(g, prev, state, enc, example.task)
            term = g.nll_pick(logp, y)
            loss = term if loss is None else g.add(loss, term)
            prev = y
        return loss
