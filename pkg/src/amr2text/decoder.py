"""Attention LSTM decoder with coverage, a copy switch, and beam search.

One decoding step, given input embedding e_t and previous state:

    s_t             = LSTM(s_{t-1}, [e_t; mu_{t-1}])
    eps_{t,i}       = v2^T tanh(Wa a_i + Ws s_t + wg * gamma_{t-1,i} + b2)
    alpha_t         = softmax(eps_t)
    mu_t            = sum_i alpha_{t,i} a_i
    gamma_t         = gamma_{t-1} + alpha_t
    P_vocab         = softmax(V3 [s_t; mu_t] + b3)
    theta_t         = sigmoid(wm^T mu_t + ws^T s_t + we^T e_t + b5)
    P_final         = theta_t * P_vocab + (1 - theta_t) * P_attn

where the coverage term multiplies the scalar coverage entry of position i by
a single learned vector wg, and P_attn redistributes alpha over surface forms:
positions sharing a surface form pool their attention mass, and positions with
no copyable surface are masked out with the rest renormalized. Surface forms
missing from the vocabulary get transient ids past the vocabulary end, valid
for one example only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .layers import Linear, LstmCell, uniform_init


@dataclass
class DecoderState:
    s: ad.Tensor  # LSTM hidden (1, hidden)
    c: ad.Tensor  # LSTM cell (1, hidden)
    mu: ad.Tensor  # context vector (1, memory_width)
    gamma: ad.Tensor  # coverage (1, positions)


class CopyMap:
    """Alignment from attention positions to copyable surface tokens.

    ``surfaces[i]`` is the token position i would copy, or None when the
    position is not a copy candidate (relation tokens and parentheses in
    sequence mode). Identical surfaces share one output slot; surfaces absent
    from the vocabulary extend it transiently.
    """

    def __init__(self, surfaces, vocab):
        self.surfaces = list(surfaces)
        self.vocab = vocab
        self.ext_tokens = []
        ids = []
        for s in self.surfaces:
            if s is None:
                ids.append(-1)
            elif s in vocab:
                ids.append(vocab.id(s))
            else:
                if s not in self.ext_tokens:
                    self.ext_tokens.append(s)
                ids.append(len(vocab) + self.ext_tokens.index(s))
        self.size = len(vocab) + len(self.ext_tokens)
        self.position_ids = ids
        self.mask = np.array([[0.0 if s is None else 1.0 for s in self.surfaces]])
        self.scatter = np.zeros((len(self.surfaces), self.size))
        for i, t in enumerate(ids):
            if t >= 0:
                self.scatter[i, t] = 1.0

    def __len__(self):
        return len(self.surfaces)

    def target_id(self, token: str) -> int:
        """Id of a gold token in the extended vocabulary; unk when unreachable."""
        if token in self.vocab:
            return self.vocab.id(token)
        if token in self.ext_tokens:
            return len(self.vocab) + self.ext_tokens.index(token)
        return self.vocab.unk_id

    def token(self, idx: int) -> str:
        if idx < len(self.vocab):
            return self.vocab.token(idx)
        return self.ext_tokens[idx - len(self.vocab)]


class Decoder:
    def __init__(self, hidden_dim: int, memory_width: int, emb_dim: int, vocab_size: int, rng, state_width=None):
        self.hidden_dim = hidden_dim
        self.memory_width = memory_width
        self.cell = LstmCell(emb_dim + memory_width, hidden_dim, rng, name="dec.lstm")
        self.Wa = ad.Parameter(uniform_init(rng, (memory_width, hidden_dim)), name="dec.att.Wa")
        self.Ws = ad.Parameter(uniform_init(rng, (hidden_dim, hidden_dim)), name="dec.att.Ws")
        self.wg = ad.Parameter(uniform_init(rng, (1, hidden_dim)), name="dec.att.wg")
        self.b2 = ad.Parameter(np.zeros((1, hidden_dim)), name="dec.att.b")
        self.v2 = ad.Parameter(uniform_init(rng, (hidden_dim, 1)), name="dec.att.v")
        self.out = Linear(hidden_dim + memory_width, vocab_size, rng, name="dec.out")
        self.switch = Linear(memory_width + hidden_dim + emb_dim, 1, rng, name="dec.switch")
        state_width = hidden_dim if state_width is None else state_width
        self.init_proj = Linear(state_width, hidden_dim, rng, name="dec.init") if state_width != hidden_dim else None

    def parameters(self):
        params = self.cell.parameters() + [self.Wa, self.Ws, self.wg, self.b2, self.v2]
        params += self.out.parameters() + self.switch.parameters()
        if self.init_proj is not None:
            params += self.init_proj.parameters()
        return params

    def init_state(self, encoder_states: ad.Tensor, memory_positions: int) -> DecoderState:
        """Mean of encoder states (projected if widths differ), zero cell,
        zero context, zero coverage."""
        if encoder_states.shape[0] < 1:
            raise ValueError("empty attention memory")
        s = ad.mean(encoder_states, axis=0)
        if self.init_proj is not None:
            s = self.init_proj(s)
        return DecoderState(
            s=s,
            c=ad.constant(np.zeros((1, self.hidden_dim))),
            mu=ad.constant(np.zeros((1, self.memory_width))),
            gamma=ad.constant(np.zeros((1, memory_positions))),
        )

    def project_memory(self, memory: ad.Tensor) -> ad.Tensor:
        """Wa a_i for all positions, computed once per example."""
        return ad.matmul(memory, self.Wa)

    def attend(self, s: ad.Tensor, memory: ad.Tensor, memory_proj: ad.Tensor, gamma: ad.Tensor):
        n = memory.shape[0]
        pre = ad.add(memory_proj, ad.matmul(s, self.Ws))  # broadcast over positions
        pre = ad.add(pre, ad.matmul(ad.transpose(gamma), self.wg))
        scores = ad.matmul(ad.tanh(ad.add(pre, self.b2)), self.v2)  # (n, 1)
        alpha = ad.softmax(ad.transpose(scores))  # (1, n)
        mu = ad.matmul(alpha, memory)
        return alpha, mu, ad.add(gamma, alpha)

    def step(self, state: DecoderState, e: ad.Tensor, memory: ad.Tensor, memory_proj: ad.Tensor):
        """One decoding step; returns (next state, alpha)."""
        s, c = self.cell.step(ad.concat([e, state.mu], axis=1), state.s, state.c)
        alpha, mu, gamma = self.attend(s, memory, memory_proj, state.gamma)
        return DecoderState(s=s, c=c, mu=mu, gamma=gamma), alpha

    def vocab_distribution(self, s: ad.Tensor, mu: ad.Tensor) -> ad.Tensor:
        return ad.softmax(self.out(ad.concat([s, mu], axis=1)))

    def copy_switch(self, mu: ad.Tensor, s: ad.Tensor, e: ad.Tensor) -> ad.Tensor:
        return ad.sigmoid(self.switch(ad.concat([mu, s, e], axis=1)))

    def final_distribution(self, theta: ad.Tensor, p_vocab: ad.Tensor, alpha: ad.Tensor, copy_map: CopyMap) -> ad.Tensor:
        """theta * P_vocab + (1 - theta) * P_attn over the extended vocabulary."""
        if len(copy_map) != alpha.shape[1]:
            raise ValueError(f"copy map covers {len(copy_map)} positions, attention {alpha.shape[1]}")
        if copy_map.mask.sum() == 0:
            raise ValueError("no copyable positions")
        masked = ad.mul(alpha, ad.constant(copy_map.mask))
        p_attn = ad.matmul(ad.div(masked, ad.tsum(masked)), ad.constant(copy_map.scatter))
        n_ext = copy_map.size - p_vocab.shape[1]
        if n_ext > 0:
            p_vocab = ad.concat([p_vocab, ad.constant(np.zeros((1, n_ext)))], axis=1)
        one_minus = ad.add(ad.constant([[1.0]]), ad.neg(theta))
        return ad.add(ad.mul(theta, p_vocab), ad.mul(one_minus, p_attn))


def beam_search(initial_state, step_fn, beam: int = 5, max_len: int = 100, eos: str = "</s>", bos: str = "<s>"):
    """Length-bounded beam search ranking complete hypotheses by total log
    probability. ``step_fn(state, prev_token) -> (next_state, tokens, logprobs)``
    scores every candidate continuation. beam=1 reduces to greedy decoding.
    """
    if beam < 1:
        raise ValueError("beam must be >= 1")
    live = [(0.0, [], initial_state, bos)]
    finished = []
    for _ in range(max_len):
        if not live:
            break
        candidates = []
        for h_idx, (score, tokens, state, prev) in enumerate(live):
            next_state, cand_tokens, logps = step_fn(state, prev)
            order = np.argsort(-logps, kind="stable")[:beam]
            for r in order:
                candidates.append((score + float(logps[r]), tokens, next_state, cand_tokens[r], h_idx))
        candidates.sort(key=lambda c: (-c[0], c[4]))
        live = []
        for score, tokens, state, token, _ in candidates:
            if len(live) >= beam:
                break
            if token == eos:
                finished.append((score, tokens))
            else:
                live.append((score, tokens + [token], state, token))
        # extensions only lower the score, so once the best live hypothesis
        # cannot beat the completed ones, stop
        if len(finished) >= beam and live:
            best_finished = sorted((s for s, _ in finished), reverse=True)[:beam]
            if max(h[0] for h in live) <= min(best_finished):
                break
    pool = finished + [(h[0], h[1]) for h in live]
    pool.sort(key=lambda c: -c[0])
    return pool[0][1]
