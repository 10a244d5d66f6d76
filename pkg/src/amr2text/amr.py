"""PENMAN-notation AMR parsing, depth-first linearization, and graph statistics.

An AMR is a rooted, directed, labeled graph. In PENMAN text form, each node
is declared once as ``(variable / concept ...)`` and may be referenced again
by its bare variable (re-entrancy). Constants (quoted strings, numbers, ``-``)
appear inline as relation values and become leaf nodes of the graph.

The linearizer reproduces the depth-first serialization used as the input to
the sequence encoder: the root concept is emitted bare, every relation label
is lowercased and prefixed with ``:``, a non-root node with children is
wrapped in parentheses on its first visit, and revisits of re-entrant nodes
emit the bare concept token only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_VARIABLE = re.compile(r"^[a-z][0-9]*$")
_SENSE_SUFFIX = re.compile(r"-\d{2,3}$")
_SNT_LINE = re.compile(r"^#\s*::snt\s+(.*)$")


class AmrParseError(ValueError):
    """Raised on malformed PENMAN input; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass
class AmrGraph:
    """Rooted directed graph: ``nodes`` as (id, concept) pairs, ``edges`` as
    (source-id, target-id, relation-label) triples, both in declaration order."""

    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    root: str = ""

    def __post_init__(self):
        self._index = {nid: k for k, (nid, _) in enumerate(self.nodes)}
        self._concepts = dict(self.nodes)

    def concept(self, node_id: str) -> str:
        return self._concepts[node_id]

    def node_index(self, node_id: str) -> int:
        return self._index[node_id]

    def edge_triples(self) -> list:
        """Edges as (source-index, target-index, label), declaration order."""
        return [(self._index[s], self._index[t], l) for s, t, l in self.edges]

    def outgoing(self, node_id: str) -> list:
        return [e for e in self.edges if e[0] == node_id]


def surface_form(concept: str) -> str:
    """Concept label as it appears in linearized text and as a copy target:
    quotes stripped, lowercased, PropBank sense suffix removed."""
    token = concept.strip('"').lower()
    stripped = _SENSE_SUFFIX.sub("", token)
    return stripped if stripped else token


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()/":
            tokens.append((ch, i))
            i += 1
        elif ch == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise AmrParseError("unterminated string literal", i)
            tokens.append((text[i : j + 1], i))
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '()"':
                j += 1
            tokens.append((text[i:j], i))
            i = j
    return tokens


def parse_penman(text: str) -> AmrGraph:
    """Parse one well-formed PENMAN expression into an :class:`AmrGraph`.

    Variables may be referenced before their declaration (forward
    re-entrancy); both passes walk the token stream, first to register
    declarations, then to build nodes and edges in declaration order.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise AmrParseError("empty input", 0)

    # pass 1: register every "( var / ..." declaration so references resolve
    declared = set()
    for k in range(len(tokens) - 2):
        if tokens[k][0] == "(" and tokens[k + 2][0] == "/":
            var = tokens[k + 1][0]
            if var in declared:
                raise AmrParseError(f"duplicate declaration of '{var}'", tokens[k + 1][1])
            declared.add(var)

    nodes, edges = [], []
    const_count = 0
    pos = 0  # token cursor

    def peek():
        return tokens[pos] if pos < len(tokens) else ("", len(text))

    def take(expected=None):
        nonlocal pos
        if pos >= len(tokens):
            raise AmrParseError("unexpected end of input", len(text))
        tok, at = tokens[pos]
        if expected is not None and tok != expected:
            raise AmrParseError(f"expected '{expected}', found '{tok}'", at)
        pos += 1
        return tok, at

    def parse_node() -> str:
        """Parse '( var / concept relations... )'; returns the variable."""
        nonlocal const_count
        take("(")
        var, var_at = take()
        if var in "()/":
            raise AmrParseError(f"expected variable, found '{var}'", var_at)
        take("/")
        concept, concept_at = take()
        if concept in "()/":
            raise AmrParseError(f"expected concept, found '{concept}'", concept_at)
        nodes.append((var, concept))
        while peek()[0] not in (")", ""):
            rel, rel_at = take()
            if not rel.startswith(":") or len(rel) < 2:
                raise AmrParseError(f"expected relation ':label', found '{rel}'", rel_at)
            target = parse_value(var, rel_at)
            if target == var:
                raise AmrParseError(f"self-loop on '{var}' via '{rel}'", rel_at)
            edges.append((var, target, rel[1:]))
        take(")")
        return var

    def parse_value(source: str, rel_at: int) -> str:
        nonlocal const_count
        tok, at = peek()
        if tok == "(":
            return parse_node()
        if tok in (")", "/", ""):
            raise AmrParseError("relation without a value", rel_at)
        take()
        if tok in declared:
            return tok
        if _VARIABLE.match(tok):
            raise AmrParseError(f"undeclared variable reference '{tok}'", at)
        node_id = f"_const{const_count}"
        const_count += 1
        nodes.append((node_id, tok))
        return node_id

    root = parse_node()
    if pos < len(tokens):
        raise AmrParseError(f"trailing input '{tokens[pos][0]}'", tokens[pos][1])
    return AmrGraph(nodes=nodes, edges=edges, root=root)


def linearize(g: AmrGraph) -> list:
    """Depth-first token serialization of ``g`` (see module docstring)."""
    children = {nid: [] for nid, _ in g.nodes}
    for s, t, l in g.edges:
        children[s].append((t, l))
    visited = set()
    tokens = []

    def emit(node_id: str, is_root: bool):
        first = node_id not in visited
        visited.add(node_id)
        kids = children[node_id] if first else []
        wrap = bool(kids) and not is_root
        if wrap:
            tokens.append("(")
        tokens.append(surface_form(g.concept(node_id)))
        for target, label in kids:
            tokens.append(":" + label.lower())
            emit(target, False)
        if wrap:
            tokens.append(")")

    emit(g.root, True)
    return tokens


def edge_list(g: AmrGraph) -> list:
    return g.edge_triples()


def _undirected_adjacency(g: AmrGraph) -> dict:
    adj = {nid: set() for nid, _ in g.nodes}
    for s, t, _ in g.edges:
        adj[s].add(t)
        adj[t].add(s)
    return adj


def _bfs_distances(adj: dict, start: str) -> dict:
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def graph_diameter(g: AmrGraph) -> int:
    """Longest undirected shortest-path distance between any two nodes;
    0 for a single-node graph. Raises on disconnected graphs."""
    adj = _undirected_adjacency(g)
    best = 0
    for nid, _ in g.nodes:
        dist = _bfs_distances(adj, nid)
        if len(dist) != len(g.nodes):
            raise ValueError("graph is disconnected")
        best = max(best, max(dist.values()))
    return best


def token_distance(lin: list, a: str, b: str) -> int:
    """Minimum absolute index difference between occurrences of ``a`` and ``b``."""
    pos_a = [i for i, t in enumerate(lin) if t == a]
    pos_b = [i for i, t in enumerate(lin) if t == b]
    if not pos_a:
        raise ValueError(f"token '{a}' not in linearization")
    if not pos_b:
        raise ValueError(f"token '{b}' not in linearization")
    return min(abs(i - j) for i in pos_a for j in pos_b)


def diameter_histogram(corpus: list) -> dict:
    """Cumulative diameter distribution: diameter -> fraction with diameter <= d."""
    if not corpus:
        raise ValueError("empty corpus")
    diameters = sorted(graph_diameter(g) for g in corpus)
    n = len(diameters)
    cumulative = {}
    for k, d in enumerate(diameters, start=1):
        cumulative[d] = k / n
    return cumulative


def read_corpus(amr_path, snt_path=None) -> list:
    """Read aligned (AmrGraph, sentence-tokens) pairs.

    The AMR file holds blank-line-separated blocks; each block is one PENMAN
    expression, optionally with a ``# ::snt <sentence>`` comment line. When
    ``snt_path`` is given it supplies sentences instead, one per line aligned
    by block index. Sentences are lowercased and whitespace-tokenized; pairs
    missing a sentence carry ``None``.
    """
    with open(amr_path, encoding="utf-8") as f:
        content = f.read()
    pairs = []
    for block in re.split(r"\n\s*\n", content):
        if not block.strip():
            continue
        sentence = None
        amr_lines = []
        for line in block.splitlines():
            m = _SNT_LINE.match(line.strip())
            if m:
                sentence = m.group(1).strip()
            elif line.strip().startswith("#"):
                continue
            else:
                amr_lines.append(line)
        amr_text = "\n".join(amr_lines).strip()
        if not amr_text:
            continue
        graph = parse_penman(amr_text)
        tokens = sentence.lower().split() if sentence else None
        pairs.append((graph, tokens))
    if snt_path is not None:
        with open(snt_path, encoding="utf-8") as f:
            sentences = [line.strip() for line in f if line.strip()]
        if len(sentences) != len(pairs):
            raise ValueError(f"{len(pairs)} graphs but {len(sentences)} sentences")
        pairs = [(g, s.lower().split()) for (g, _), s in zip(pairs, sentences)]
    return pairs
