"""Graph-state LSTM encoder.

Every node carries a hidden and a cell vector. One transition step updates
all nodes simultaneously from the *previous* state set (double-buffered), so
information travels exactly one undirected hop per step. The gates of node j
read four sums over its incident edges, truncated per direction to the first
``neighbor_cap`` edges in declaration order:

    x_j^i  sum of incoming-edge representations
    x_j^o  sum of outgoing-edge representations
    h_j^i  sum of previous hidden states of incoming-edge sources
    h_j^o  sum of previous hidden states of outgoing-edge targets

with separate weight matrices per direction (W vs What, U vs Uhat) and all
four gates squashed by the logistic function:

    g = sigmoid(x_j^i W_g + x_j^o What_g + h_j^i U_g + h_j^o Uhat_g + b_g)
    c_t^j = f * c_{t-1}^j + i * u
    h_t^j = o * tanh(c_t^j)

The initial hidden state is one shared trainable vector; initial cells are
zero. Two equivalent execution paths are provided: a recorded path used for
training, and a per-node numpy path whose node updates are mutually
independent within a step and may run on a thread pool.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import _sigmoid
from .layers import uniform_init

GATES = ("i", "o", "f", "u")
NEIGHBOR_CAP = 10


@dataclass
class GraphStructure:
    """Connectivity of one graph after neighbor-cap truncation.

    M_in/M_out map edges to the nodes that gather them (node x edge);
    A_in/A_out map previous hidden states to gathering nodes (node x node);
    in_src/out_tgt hold the same information as index lists for the
    per-node path. Fixed for the lifetime of the graph.
    """

    n_nodes: int
    n_edges: int
    M_in: np.ndarray
    M_out: np.ndarray
    A_in: np.ndarray
    A_out: np.ndarray
    in_src: list
    out_tgt: list


class GraphEncoder:
    def __init__(self, hidden_dim: int, rng, gather: str = "both", neighbor_cap: int = NEIGHBOR_CAP):
        if gather not in ("both", "incoming", "outgoing"):
            raise ValueError(f"unknown gather mode '{gather}'")
        self.hidden_dim = hidden_dim
        self.gather = gather
        self.neighbor_cap = neighbor_cap
        h = hidden_dim
        self.weights = {}
        for g in GATES:
            self.weights[g] = {
                "W": ad.Parameter(uniform_init(rng, (h, h)), name=f"graph.{g}.W"),
                "What": ad.Parameter(uniform_init(rng, (h, h)), name=f"graph.{g}.What"),
                "U": ad.Parameter(uniform_init(rng, (h, h)), name=f"graph.{g}.U"),
                "Uhat": ad.Parameter(uniform_init(rng, (h, h)), name=f"graph.{g}.Uhat"),
                "b": ad.Parameter(np.zeros((1, h)), name=f"graph.{g}.b"),
            }
        self.h0 = ad.Parameter(np.zeros((1, h)), name="graph.h0")

    def parameters(self):
        params = []
        for g in GATES:
            params.extend(self.weights[g].values())
        params.append(self.h0)
        return params

    def prepare(self, n_nodes: int, edge_triples) -> GraphStructure:
        """Build gathering matrices for edges given as (source, target, label) index triples."""
        edges = list(edge_triples)
        n_edges = len(edges)
        M_in = np.zeros((n_nodes, max(n_edges, 1)))
        M_out = np.zeros((n_nodes, max(n_edges, 1)))
        A_in = np.zeros((n_nodes, n_nodes))
        A_out = np.zeros((n_nodes, n_nodes))
        in_seen = [0] * n_nodes
        out_seen = [0] * n_nodes
        in_src = [[] for _ in range(n_nodes)]
        out_tgt = [[] for _ in range(n_nodes)]
        for e, (src, tgt, _) in enumerate(edges):
            if self.gather != "outgoing" and in_seen[tgt] < self.neighbor_cap:
                in_seen[tgt] += 1
                M_in[tgt, e] = 1.0
                A_in[tgt, src] += 1.0
                in_src[tgt].append(src)
            if self.gather != "incoming" and out_seen[src] < self.neighbor_cap:
                out_seen[src] += 1
                M_out[src, e] = 1.0
                A_out[src, tgt] += 1.0
                out_tgt[src].append(tgt)
        return GraphStructure(
            n_nodes=n_nodes,
            n_edges=n_edges,
            M_in=M_in,
            M_out=M_out,
            A_in=A_in,
            A_out=A_out,
            in_src=[np.asarray(v, dtype=np.intp) for v in in_src],
            out_tgt=[np.asarray(v, dtype=np.intp) for v in out_tgt],
        )

    def edge_input_sums(self, structure: GraphStructure, edge_reprs):
        """Per-node incoming/outgoing edge-representation sums as recorded tensors."""
        if structure.n_edges == 0:
            zero = ad.constant(np.zeros((structure.n_nodes, self.hidden_dim)))
            return zero, zero
        x_in = ad.matmul(ad.constant(structure.M_in), edge_reprs)
        x_out = ad.matmul(ad.constant(structure.M_out), edge_reprs)
        return x_in, x_out

    def transitions_taped(self, structure: GraphStructure, x_in, x_out, steps: int, h0_rows=None):
        """Recorded path: returns the final (N, hidden) node-state matrix."""
        n = structure.n_nodes
        if h0_rows is None:
            H = ad.repeat_rows(self.h0, n) if n > 1 else self.h0
        else:
            H = h0_rows if isinstance(h0_rows, ad.Tensor) else ad.constant(h0_rows)
        C = ad.constant(np.zeros((n, self.hidden_dim)))
        A_in = ad.constant(structure.A_in)
        A_out = ad.constant(structure.A_out)
        for _ in range(steps):
            h_in = ad.matmul(A_in, H)
            h_out = ad.matmul(A_out, H)
            gate = {}
            for g in GATES:
                w = self.weights[g]
                z = ad.add(
                    ad.add(ad.matmul(x_in, w["W"]), ad.matmul(x_out, w["What"])),
                    ad.add(ad.add(ad.matmul(h_in, w["U"]), ad.matmul(h_out, w["Uhat"])), w["b"]),
                )
                gate[g] = ad.sigmoid(z)
            C = ad.add(ad.mul(gate["f"], C), ad.mul(gate["i"], gate["u"]))
            H = ad.mul(gate["o"], ad.tanh(C))
        return H

    def transitions_numpy(self, structure: GraphStructure, x_in, x_out, steps: int, h0_rows=None, threads: int = 1):
        """Per-node path: plain numpy, no recording; node updates within a step
        are independent and are distributed over a thread pool when threads > 1.
        Returns the final (N, hidden) node-state matrix."""
        n, h = structure.n_nodes, self.hidden_dim
        H = np.repeat(self.h0.data, n, axis=0) if h0_rows is None else np.array(h0_rows, dtype=np.float64)
        C = np.zeros((n, h))
        wd = {g: {k: p.data for k, p in self.weights[g].items()} for g in GATES}
        zero = np.zeros(h)

        def update_node(j, H_prev, C_prev, H_next, C_next):
            src, tgt = structure.in_src[j], structure.out_tgt[j]
            h_in = H_prev[src].sum(axis=0) if src.size else zero
            h_out = H_prev[tgt].sum(axis=0) if tgt.size else zero
            gate = {}
            for g in GATES:
                w = wd[g]
                z = x_in[j] @ w["W"] + x_out[j] @ w["What"] + h_in @ w["U"] + h_out @ w["Uhat"] + w["b"][0]
                gate[g] = _sigmoid(z)
            C_next[j] = gate["f"] * C_prev[j] + gate["i"] * gate["u"]
            H_next[j] = gate["o"] * np.tanh(C_next[j])

        pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
        try:
            for _ in range(steps):
                H_next, C_next = np.empty_like(H), np.empty_like(C)
                if pool is None:
                    for j in range(n):
                        update_node(j, H, C, H_next, C_next)
                else:
                    list(pool.map(lambda j: update_node(j, H, C, H_next, C_next), range(n)))
                H, C = H_next, C_next
        finally:
            if pool is not None:
                pool.shutdown()
        return H
