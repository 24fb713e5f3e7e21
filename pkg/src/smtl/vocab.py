"""Bidirectional token<->id tables with reserved symbols.

Ids 0..2 are PAD/UNK/EOS in every table. The shared output vocabulary
additionally carries one task token per configured task starting at id 3,
so that the decoder can be primed by task.
"""

from __future__ import annotations

PAD, UNK, EOS = 0, 1, 2
PAD_TOKEN, UNK_TOKEN, EOS_TOKEN = "<pad>", "<unk>", "</s>"
RESERVED = (PAD_TOKEN, UNK_TOKEN, EOS_TOKEN)


def task_token(task: str) -> str:
    return f"<{task}>"


class Vocabulary:
    def __init__(self, tokens=(), tasks=()):
        self._tokens: list[str] = []
        self._ids: dict[str, int] = {}
        for t in RESERVED:
            self._intern(t)
        for task in tasks:
            self._intern(task_token(task))
        for t in tokens:
            self._intern(t)

    def _intern(self, token: str) -> int:
        if token not in self._ids:
            self._ids[token] = len(self._tokens)
            self._tokens.append(token)
        return self._ids[token]

    def add(self, token: str) -> int:
        return self._intern(token)

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, token: str):
        return token in self._ids

    def id(self, token: str) -> int:
        """Id of a token, falling back to UNK for unknown ones."""
        return self._ids.get(token, UNK)

    def id_strict(self, token: str) -> int:
        if token not in self._ids:
            raise KeyError(f"token {token!r} not in vocabulary")
        return self._ids[token]

    def token(self, idx: int) -> str:
        return self._tokens[idx]

    def encode(self, tokens, strict=False) -> list[int]:
        to_id = self.id_strict if strict else self.id
        return [to_id(t) for t in tokens]

    def decode(self, ids) -> list[str]:
        return [self._tokens[i] for i in ids]

    def tokens(self) -> list[str]:
        return list(self._tokens)

    def save(self, path) -> None:
        """One token per line; the line number is the id."""
        with open(path, "w", encoding="utf-8") as f:
            for t in self._tokens:
                f.write(t + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        v = cls.__new__(cls)
        v._tokens, v._ids = [], {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                v._intern(line.rstrip("\n"))
        return v

    @classmethod
    def from_tokens(cls, tokens: list[str]) -> "Vocabulary":
        """Rebuild from an explicit full token list (reserved entries included)."""
        v = cls.__new__(cls)
        v._tokens, v._ids = [], {}
        for t in tokens:
            v._intern(t)
        return v
