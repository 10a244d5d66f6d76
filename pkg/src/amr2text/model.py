"""End-to-end models: graph-to-sequence and sequence-to-sequence.

Both share the vocabulary, embedding tables, input projection, and the
attention decoder; they differ in how the attention memory is built:

    sequence mode: tokens of the depth-first linearization, memory entry
        [backward_j; forward_j; x_j], decoder initialized from the mean
        bidirectional state (projected down to the decoder size);
    graph mode: one memory entry [h_T^j; x_j] per node, decoder initialized
        from the mean final node state.

With copying enabled, every graph node offers its concept surface form as a
copy candidate; in sequence mode only concept tokens are candidates
(relation tokens and parentheses are masked out of the copy distribution).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .amr import linearize, surface_form
from .decoder import CopyMap, Decoder, beam_search
from .embeddings import BOS, EOS, PAD, CharEncoder, InputProjector, Vocab, embedding_table
from .graph_encoder import GraphEncoder
from .layers import Linear
from .seq_encoder import SeqEncoder


@dataclass
class ModelConfig:
    encoder: str = "graph"
    hidden: int = 300
    emb_dim: int = 0  # 0: follow hidden
    char_dim: int = 100
    label_dim: int = 0  # 0: follow hidden
    steps: int = 9
    use_copy: bool = False
    use_char: bool = False
    dropout: float = 0.1
    seed: int = 1
    gather: str = "both"
    neighbor_cap: int = 10
    max_len: int = 100

    def __post_init__(self):
        if self.encoder not in ("seq", "graph"):
            raise ValueError(f"unknown encoder '{self.encoder}'")
        self.emb_dim = self.emb_dim or self.hidden
        self.label_dim = self.label_dim or self.hidden

    def to_dict(self):
        return dict(self.__dict__)


class LabelVocab:
    """Edge-relation labels; id 0 is the unknown-label slot."""

    def __init__(self, labels):
        self.labels = list(dict.fromkeys(labels))
        self.index = {l: i + 1 for i, l in enumerate(self.labels)}

    def __len__(self):
        return len(self.labels) + 1

    def id(self, label: str) -> int:
        return self.index.get(label, 0)


@dataclass
class Encoded:
    memory: ad.Tensor  # (positions, memory_width)
    states: ad.Tensor  # (positions, state_width) for decoder init
    surfaces: list  # copy candidate per position (None where not copyable)


@dataclass
class StepStats:
    loss: ad.Tensor
    n_tokens: int
    n_correct: int
    n_unreachable: int
    switch_values: list = field(default_factory=list)  # (theta, gold_was_copied)


def corpus_charset(pairs):
    chars = set()
    for graph, _ in pairs:
        for token in linearize(graph):
            chars.update(token)
    return "".join(sorted(chars))


def build_vocabularies(pairs, min_count: int = 1):
    """Shared token vocabulary (linearized graphs + target sentences),
    edge-label vocabulary, and the character inventory."""
    streams = []
    labels = []
    for graph, sentence in pairs:
        streams.append(linearize(graph))
        if sentence:
            streams.append(sentence)
        labels.extend(l for _, _, l in graph.edges)
    vocab = Vocab.build(streams, min_count=min_count)
    return vocab, LabelVocab(labels), corpus_charset(pairs)


class Model:
    def __init__(self, config: ModelConfig, vocab: Vocab, label_vocab: LabelVocab, charset: str = "", word_emb=None):
        self.config = config
        self.vocab = vocab
        self.label_vocab = label_vocab
        self.charset = charset
        c = config
        rng = np.random.default_rng(c.seed)
        if word_emb is not None:
            if word_emb.shape != (len(vocab), c.emb_dim):
                raise ValueError(f"pretrained table is {word_emb.shape}, expected {(len(vocab), c.emb_dim)}")
            self.word_emb = word_emb
        else:
            self.word_emb = embedding_table(len(vocab), c.emb_dim, rng, name="word_emb")
        self.char_enc = CharEncoder(charset, c.char_dim, rng) if c.use_char else None
        self.input_proj = InputProjector(c.emb_dim, c.char_dim, c.hidden, rng, use_char=c.use_char)
        if c.encoder == "graph":
            self.label_emb = embedding_table(len(label_vocab), c.label_dim, rng, name="label_emb")
            edge_in = c.label_dim + c.emb_dim + (c.char_dim if c.use_char else 0)
            self.edge_proj = Linear(edge_in, c.hidden, rng, name="edge_proj")
            self.graph_enc = GraphEncoder(c.hidden, rng, gather=c.gather, neighbor_cap=c.neighbor_cap)
            self.seq_enc = None
            memory_width = 2 * c.hidden
            state_width = c.hidden
        else:
            self.label_emb = None
            self.edge_proj = None
            self.graph_enc = None
            self.seq_enc = SeqEncoder(c.hidden, c.hidden, rng)
            memory_width = 3 * c.hidden
            state_width = 2 * c.hidden
        self.decoder = Decoder(c.hidden, memory_width, c.emb_dim, len(vocab), rng, state_width=state_width)

    def parameters(self):
        params = [self.word_emb]
        if self.char_enc is not None:
            params += self.char_enc.parameters()
        params += self.input_proj.parameters()
        if self.graph_enc is not None:
            params += [self.label_emb] + self.edge_proj.parameters() + self.graph_enc.parameters()
        else:
            params += self.seq_enc.parameters()
        params += self.decoder.parameters()
        names = [p.name for p in params]
        assert len(set(names)) == len(names), "duplicate parameter names"
        return params

    def _char_matrix(self, tokens):
        states = [self.char_enc.encode(t) for t in tokens]
        return ad.concat(states, axis=0) if len(states) > 1 else states[0]

    def _token_inputs(self, tokens, train, rng):
        ids = [self.vocab.id(t) for t in tokens]
        embs = ad.rows(self.word_emb, ids)
        chars = self._char_matrix(tokens) if self.char_enc is not None else None
        x = self.input_proj(embs, chars)
        if train and self.config.dropout > 0:
            x = ad.dropout(x, self.config.dropout, rng)
        return x, chars

    def _encode_graph(self, graph, train, rng, threads):
        surfaces = [surface_form(c) for _, c in graph.nodes]
        x_nodes, chars = self._token_inputs(surfaces, train, rng)
        triples = graph.edge_triples()
        structure = self.graph_enc.prepare(len(surfaces), triples)
        if triples:
            label_ids = [self.label_vocab.id(l) for _, _, l in triples]
            src = [s for s, _, _ in triples]
            parts = [ad.rows(self.label_emb, label_ids), ad.rows(self.word_emb, [self.vocab.id(surfaces[j]) for j in src])]
            if chars is not None:
                parts.append(ad.rows(chars, src))
            edge_reprs = self.edge_proj(ad.concat(parts, axis=1))
            if train and self.config.dropout > 0:
                edge_reprs = ad.dropout(edge_reprs, self.config.dropout, rng)
        else:
            edge_reprs = None
        x_in, x_out = self.graph_enc.edge_input_sums(structure, edge_reprs)
        if train:
            H = self.graph_enc.transitions_taped(structure, x_in, x_out, self.config.steps)
        else:
            H = ad.constant(
                self.graph_enc.transitions_numpy(structure, x_in.data, x_out.data, self.config.steps, threads=threads)
            )
        memory = ad.concat([H, x_nodes], axis=1)
        return Encoded(memory=memory, states=H, surfaces=surfaces)

    def _encode_seq(self, graph, train, rng):
        tokens = linearize(graph)
        x, _ = self._token_inputs(tokens, train, rng)
        xs = [ad.narrow(x, 0, j, 1) for j in range(len(tokens))]
        enc = self.seq_enc.encode(xs)
        surfaces = [None if t in ("(", ")") or t.startswith(":") else t for t in tokens]
        return Encoded(
            memory=self.seq_enc.attention_memory(enc),
            states=self.seq_enc.encoder_states(enc),
            surfaces=surfaces,
        )

    def encode(self, graph, train=False, rng=None, threads: int = 1) -> Encoded:
        if self.config.encoder == "graph":
            return self._encode_graph(graph, train, rng, threads)
        return self._encode_seq(graph, train, rng)

    def _step_distribution(self, state, alpha, e, copy_map):
        p_vocab = self.decoder.vocab_distribution(state.s, state.mu)
        if copy_map is None:
            return p_vocab, None
        theta = self.decoder.copy_switch(state.mu, state.s, e)
        return self.decoder.final_distribution(theta, p_vocab, alpha, copy_map), theta

    def example_loss(self, graph, target_tokens, train=False, rng=None) -> StepStats:
        """Teacher-forced negative log likelihood of the target plus "</s>"."""
        if not target_tokens:
            raise ValueError("empty target sentence")
        enc = self.encode(graph, train=train, rng=rng)
        copy_map = CopyMap(enc.surfaces, self.vocab) if self.config.use_copy else None
        proj = self.decoder.project_memory(enc.memory)
        state = self.decoder.init_state(enc.states, enc.memory.shape[0])
        golds = list(target_tokens) + [EOS]
        if copy_map is not None:
            gold_ids = [copy_map.target_id(t) for t in golds]
        else:
            gold_ids = [self.vocab.id(t) for t in golds]
        unreachable = sum(
            1 for t, i in zip(golds, gold_ids) if i == self.vocab.unk_id and t != self.vocab.token(self.vocab.unk_id)
        )
        inputs = [BOS] + golds[:-1]
        terms = []
        correct = 0
        switches = []
        for gold_token, gold_id, prev in zip(golds, gold_ids, inputs):
            e = ad.rows(self.word_emb, [self.vocab.id(prev)])
            if train and self.config.dropout > 0:
                e = ad.dropout(e, self.config.dropout, rng)
            state, alpha = self.decoder.step(state, e, enc.memory, proj)
            p, theta = self._step_distribution(state, alpha, e, copy_map)
            terms.append(ad.neg(ad.log(ad.pick(p, gold_id))))
            correct += int(np.argmax(p.data[0]) == gold_id)
            if theta is not None:
                switches.append((theta.item(), gold_id >= len(self.vocab)))
        return StepStats(
            loss=ad.add_n(terms) if len(terms) > 1 else terms[0],
            n_tokens=len(golds),
            n_correct=correct,
            n_unreachable=unreachable,
            switch_values=switches,
        )

    def generate(self, graph, beam: int = 5, max_len=None, threads: int = 1):
        """Decode one graph into a token list (no start/end markers)."""
        max_len = max_len or self.config.max_len
        enc = self.encode(graph, train=False, threads=threads)
        copy_map = CopyMap(enc.surfaces, self.vocab) if self.config.use_copy else None
        proj = self.decoder.project_memory(enc.memory)
        init = self.decoder.init_state(enc.states, enc.memory.shape[0])
        tokens = list(self.vocab.tokens) + (copy_map.ext_tokens if copy_map is not None else [])
        banned = [self.vocab.pad_id, self.vocab.bos_id]

        def step_fn(state, prev):
            e = ad.rows(self.word_emb, [self.vocab.id(prev)])
            next_state, alpha = self.decoder.step(state, e, enc.memory, proj)
            p, _ = self._step_distribution(next_state, alpha, e, copy_map)
            with np.errstate(divide="ignore"):
                logps = np.log(p.data[0])
            logps[banned] = -np.inf
            return next_state, tokens, logps

        return beam_search(init, step_fn, beam=beam, max_len=max_len, eos=EOS, bos=BOS)
