"""Bidirectional LSTM over the linearized token sequence.

Each direction runs a single-layer LSTM from a zero initial state. The
attention memory entry for token j is [backward_j; forward_j; x_j]. A single
direction can be run alone as an ablation hook.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import autodiff as ad
from .layers import LstmCell


@dataclass
class SeqEncoding:
    forward: list  # per-token forward hidden states, left to right
    backward: list  # per-token backward hidden states, same indexing
    inputs: list  # per-token input representations x_j


class SeqEncoder:
    def __init__(self, input_dim: int, hidden_dim: int, rng):
        self.hidden_dim = hidden_dim
        self.fwd = LstmCell(input_dim, hidden_dim, rng, name="seq.fwd")
        self.bwd = LstmCell(input_dim, hidden_dim, rng, name="seq.bwd")

    def encode(self, inputs, direction: str = "both") -> SeqEncoding:
        if not inputs:
            raise ValueError("cannot encode an empty sequence")
        if direction not in ("both", "forward", "backward"):
            raise ValueError(f"unknown direction '{direction}'")
        forward, backward = [], []
        if direction in ("both", "forward"):
            h, c = self.fwd.zero_state()
            for x in inputs:
                h, c = self.fwd.step(x, h, c)
                forward.append(h)
        if direction in ("both", "backward"):
            h, c = self.bwd.zero_state()
            for x in reversed(inputs):
                h, c = self.bwd.step(x, h, c)
                backward.append(h)
            backward.reverse()
        return SeqEncoding(forward=forward, backward=backward, inputs=list(inputs))

    def attention_memory(self, enc: SeqEncoding) -> ad.Tensor:
        """(N, width) matrix of per-token attention vectors [bwd; fwd; x]."""
        rows = []
        for j in range(len(enc.inputs)):
            parts = []
            if enc.backward:
                parts.append(enc.backward[j])
            if enc.forward:
                parts.append(enc.forward[j])
            parts.append(enc.inputs[j])
            rows.append(ad.concat(parts, axis=1) if len(parts) > 1 else parts[0])
        return ad.concat(rows, axis=0) if len(rows) > 1 else rows[0]

    def encoder_states(self, enc: SeqEncoding) -> ad.Tensor:
        """(N, states) matrix of the per-token hidden states (both directions)."""
        rows = []
        for j in range(len(enc.inputs)):
            parts = ([enc.backward[j]] if enc.backward else []) + ([enc.forward[j]] if enc.forward else [])
            rows.append(ad.concat(parts, axis=1) if len(parts) > 1 else parts[0])
        return ad.concat(rows, axis=0) if len(rows) > 1 else rows[0]

    def parameters(self):
        return self.fwd.parameters() + self.bwd.parameters()
