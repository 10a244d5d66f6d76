"""Parameterized building blocks: affine maps and a standard LSTM cell.

The LSTM here is the conventional one (tanh candidate) used by the character
encoder, the sequence encoder, and the decoder. The graph encoder defines its
own gated transition and does not use this cell.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad


def uniform_init(rng, shape, fan_in=None):
    scale = 1.0 / np.sqrt(max(1, shape[0] if fan_in is None else fan_in))
    return rng.uniform(-scale, scale, size=shape)


class Linear:
    """y = x @ W + b."""

    def __init__(self, in_dim: int, out_dim: int, rng, name: str):
        self.W = ad.Parameter(uniform_init(rng, (in_dim, out_dim)), name=f"{name}.W")
        self.b = ad.Parameter(np.zeros((1, out_dim)), name=f"{name}.b")

    def __call__(self, x: ad.Tensor) -> ad.Tensor:
        return ad.add(ad.matmul(x, self.W), self.b)

    def apply_np(self, x: np.ndarray) -> np.ndarray:
        return x @ self.W.data + self.b.data

    def parameters(self):
        return [self.W, self.b]


class LstmCell:
    """Single-layer LSTM cell over row vectors; gates packed as [i, f, o, u]."""

    def __init__(self, input_dim: int, hidden_dim: int, rng, name: str):
        self.hidden_dim = hidden_dim
        self.Wx = ad.Parameter(uniform_init(rng, (input_dim, 4 * hidden_dim)), name=f"{name}.Wx")
        self.Wh = ad.Parameter(uniform_init(rng, (hidden_dim, 4 * hidden_dim)), name=f"{name}.Wh")
        self.b = ad.Parameter(np.zeros((1, 4 * hidden_dim)), name=f"{name}.b")

    def step(self, x: ad.Tensor, h: ad.Tensor, c: ad.Tensor):
        z = ad.add(ad.add(ad.matmul(x, self.Wx), ad.matmul(h, self.Wh)), self.b)
        d = self.hidden_dim
        i = ad.sigmoid(ad.narrow(z, 1, 0, d))
        f = ad.sigmoid(ad.narrow(z, 1, d, d))
        o = ad.sigmoid(ad.narrow(z, 1, 2 * d, d))
        u = ad.tanh(ad.narrow(z, 1, 3 * d, d))
        c_next = ad.add(ad.mul(f, c), ad.mul(i, u))
        h_next = ad.mul(o, ad.tanh(c_next))
        return h_next, c_next

    def zero_state(self):
        z = np.zeros((1, self.hidden_dim))
        return ad.constant(z), ad.constant(z)

    def parameters(self):
        return [self.Wx, self.Wh, self.b]
