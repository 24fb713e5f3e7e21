"""Byte-pair encoding over whitespace-tokenized text.

Merges are learned greedily from word frequencies (most frequent adjacent
symbol pair first; count ties broken by lexicographically smallest pair) and
applied in rank order. Non-final subwords of a word carry the "@@"
continuation suffix, so stripping the markers and re-joining reconstructs
the input exactly. To keep that inversion exact for any input, symbols
containing the marker character never participate in merges.
"""

from __future__ import annotations

from collections import Counter

MARKER = "@@"
MARKER_CHAR = "@"
FILE_MAGIC = "smtl-bpe"
FILE_VERSION = "v1"


class BpeModel:
    def __init__(self, merges: list[tuple[str, str]], marker: str = MARKER):
        self.merges = list(merges)
        self.marker = marker
        self.ranks = {pair: i for i, pair in enumerate(self.merges)}
        self._cache: dict[str, list[str]] = {}

    # -- application -------------------------------------------------------

    def segment(self, word: str) -> list[str]:
        """Split one word into subword symbols (no markers)."""
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        symbols = list(word)
        while len(symbols) > 1:
            best_rank, best_pair = None, None
            for pair in zip(symbols, symbols[1:]):
                rank = self.ranks.get(pair)
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank, best_pair = rank, pair
            if best_pair is None:
                break
            symbols = _merge_word(symbols, best_pair)
        self._cache[word] = symbols
        return symbols

    def apply_tokens(self, words) -> list[str]:
        """Segment each word; non-final subwords get the continuation marker."""
        out = []
        for word in words:
            pieces = self.segment(word)
            out.extend(p + self.marker for p in pieces[:-1])
            out.append(pieces[-1])
        return out

    def apply_line(self, line: str) -> list[str]:
        return self.apply_tokens(line.split())

    def strip_tokens(self, tokens) -> list[str]:
        """Invert apply_tokens: glue continuation-marked subwords back into words."""
        words, buf = [], ""
        for tok in tokens:
            if tok.endswith(self.marker):
                buf += tok[: -len(self.marker)]
            else:
                words.append(buf + tok)
                buf = ""
        if buf:
            words.append(buf)  # dangling continuation from a truncated hypothesis
        return words

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{FILE_MAGIC} {FILE_VERSION} {len(self.merges)}\n")
            for left, right in self.merges:
                f.write(f"{left} {right}\n")

    @classmethod
    def load(cls, path) -> "BpeModel":
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 3 or header[0] != FILE_MAGIC or header[1] != FILE_VERSION:
                raise ValueError(f"{path}: not a {FILE_MAGIC} {FILE_VERSION} file")
            count = int(header[2])
            merges = []
            for line in f:
                left, right = line.split()
                merges.append((left, right))
        if len(merges) != count:
            raise ValueError(f"{path}: header promises {count} merges, found {len(merges)}")
        return cls(merges)


def _merge_word(symbols: list[str], pair: tuple[str, str]) -> list[str]:
    """Replace non-overlapping occurrences of pair, scanning left to right."""
    left, right = pair
    out, i = [], 0
    while i < len(symbols):
        if i + 1 < len(symbols) and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def count_pairs(words: dict[tuple[str, ...], int]) -> Counter:
    counts: Counter = Counter()
    for symbols, freq in words.items():
        for pair in zip(symbols, symbols[1:]):
            counts[pair] += freq
    return counts


def learn(lines, num_merges: int) -> BpeModel:
    """Learn a merge list from an iterable of whitespace-tokenized lines."""
    if num_merges < 0:
        raise ValueError("num_merges must be >= 0")
    word_freqs: Counter = Counter()
    for line in lines:
        word_freqs.update(line.split())
    if not word_freqs:
        raise ValueError("empty corpus")

    words = {tuple(w): f for w, f in word_freqs.items()}
    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        counts = count_pairs(words)
        # the marker char stays unmergeable so strip_tokens is exact
        candidates = [p for p in counts if MARKER_CHAR not in p[0] and MARKER_CHAR not in p[1]]
        if not candidates:
            break
        best = min(candidates, key=lambda p: (-counts[p], p))
        merges.append(best)
        words = {tuple(_merge_word(list(s), best)): f for s, f in words.items()}
    return BpeModel(merges)
