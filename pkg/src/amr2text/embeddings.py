"""Vocabulary, embedding tables, character LSTM, and token input projection.

The vocabulary is shared by the encoder and the decoder. Embedding tables
loaded from a pretrained-vector file are frozen (never updated by the
optimizer); randomly initialized tables train normally.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from . import autodiff as ad
from .layers import Linear, LstmCell

PAD, UNK, BOS, EOS = "<pad>", "<unk>", "<s>", "</s>"
SPECIALS = [PAD, UNK, BOS, EOS]

MAX_TOKEN_CHARS = 20


class Vocab:
    """Token-to-id map with fixed special tokens at ids 0..3."""

    def __init__(self, tokens):
        self.tokens = SPECIALS + [t for t in tokens if t not in SPECIALS]
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        self.pad_id, self.unk_id, self.bos_id, self.eos_id = (self.index[s] for s in SPECIALS)

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def id(self, token: str) -> int:
        return self.index.get(token, self.unk_id)

    def token(self, idx: int) -> str:
        return self.tokens[idx]

    @classmethod
    def build(cls, token_streams, min_count: int = 1) -> "Vocab":
        """Tokens with count >= min_count, ordered by frequency then lexicographically."""
        counts = Counter()
        for stream in token_streams:
            counts.update(stream)
        if not counts:
            raise ValueError("empty corpus")
        kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
        return cls(kept)

    def save(self, path):
        """One non-special token per line; line number = id - len(SPECIALS)."""
        with open(path, "w", encoding="utf-8") as f:
            for t in self.tokens[len(SPECIALS) :]:
                f.write(t + "\n")

    @classmethod
    def load(cls, path) -> "Vocab":
        with open(path, encoding="utf-8") as f:
            return cls([line.rstrip("\n") for line in f if line.rstrip("\n")])


def embedding_table(vocab_size: int, dim: int, rng, name: str, frozen: bool = False) -> ad.Parameter:
    table = ad.Parameter(rng.uniform(-0.05, 0.05, size=(vocab_size, dim)), name=name, frozen=frozen)
    return table


def load_pretrained(path, vocab: Vocab, dim: int = 300, seed: int = 0, name: str = "word_emb") -> ad.Parameter:
    """Frozen table: file vectors where available, seeded uniform(-0.05, 0.05) rows elsewhere."""
    rng = np.random.default_rng(seed)
    data = rng.uniform(-0.05, 0.05, size=(len(vocab), dim))
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"line {lineno}: expected {dim} values, found {len(parts) - 1}")
            if parts[0] in vocab:
                data[vocab.id(parts[0])] = [float(v) for v in parts[1:]]
    return ad.Parameter(data, name=name, frozen=True)


class CharEncoder:
    """Forward LSTM over the first MAX_TOKEN_CHARS characters of a token;
    returns the last hidden state. Unknown characters map to a char-unk row."""

    def __init__(self, charset, dim: int, rng, name: str = "char"):
        self.chars = {ch: i + 1 for i, ch in enumerate(sorted(set(charset)))}  # 0 = char-unk
        self.dim = dim
        self.table = embedding_table(len(self.chars) + 1, dim, rng, name=f"{name}.emb")
        self.cell = LstmCell(dim, dim, rng, name=f"{name}.lstm")

    def encode(self, token: str) -> ad.Tensor:
        if not token:
            raise ValueError("cannot char-encode an empty token")
        ids = [self.chars.get(ch, 0) for ch in token[:MAX_TOKEN_CHARS]]
        embs = ad.rows(self.table, ids)
        h, c = self.cell.zero_state()
        for k in range(len(ids)):
            h, c = self.cell.step(ad.narrow(embs, 0, k, 1), h, c)
        return h

    def parameters(self):
        return [self.table] + self.cell.parameters()


class InputProjector:
    """x_j = W1 [e_j] + b1, or W1 [e_j; h_j^c] + b1 with the character LSTM on."""

    def __init__(self, emb_dim: int, char_dim: int, out_dim: int, rng, use_char: bool, name: str = "input_proj"):
        self.use_char = use_char
        in_dim = emb_dim + (char_dim if use_char else 0)
        self.proj = Linear(in_dim, out_dim, rng, name=name)

    def __call__(self, emb: ad.Tensor, char_state: ad.Tensor = None) -> ad.Tensor:
        if self.use_char:
            if char_state is None:
                raise ValueError("character state required but missing")
            return self.proj(ad.concat([emb, char_state], axis=1))
        return self.proj(emb)

    def parameters(self):
        return self.proj.parameters()
