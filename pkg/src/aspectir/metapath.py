"""Meta-path enumeration, path-constrained random walks and direct inference."""

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from aspectir.errors import AspectIRError, FormatError
from aspectir.kb import inverse_label

DEFAULT_MAX_LEN = 3
SUM_TOL = 1e-9


@dataclass(frozen=True, order=True)
class MetaPath:
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __getitem__(self, i):
        return self.labels[i]

    def __str__(self):
        return ",".join(self.labels)


@dataclass
class MetaPathSet:
    """Meta-paths evidencing ``relation`` with their frequencies (alpha)."""

    relation: str
    paths: list

    def __post_init__(self):
        self.paths = sorted(
            ((MetaPath(p) if not isinstance(p, MetaPath) else p, int(a)) for p, a in self.paths),
            key=lambda pa: (-pa[1], pa[0].labels),
        )
        seen = set()
        for p, a in self.paths:
            if a < 1:
                raise ValueError(f"alpha must be a positive integer, got {a} for {p}")
            if p in seen:
                raise ValueError(f"duplicate meta-path {p}")
            seen.add(p)

    def __len__(self):
        return len(self.paths)

    def top(self, k):
        return [p for p, _ in self.paths[:k]]

    def to_tsv_lines(self):
        return [f"{self.relation}\t{p}\t{a}" for p, a in self.paths]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.to_tsv_lines():
                fh.write(line + "\n")

    @classmethod
    def load(cls, path, relation=None):
        """Read a meta-path TSV. ``relation`` is required when the file is empty."""
        paths = []
        found = relation
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\r\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise FormatError("expected relation<TAB>labels<TAB>alpha", path=path, line=lineno)
                rel, labels, alpha = parts
                if found is None:
                    found = rel
                elif rel != found:
                    raise FormatError(f"relation {rel!r} differs from {found!r}", path=path, line=lineno)
                try:
                    alpha = int(alpha)
                except ValueError:
                    raise FormatError(f"alpha {alpha!r} is not an integer", path=path, line=lineno) from None
                paths.append((MetaPath(labels.split(",")), alpha))
        if found is None:
            raise FormatError("empty meta-path file and no relation given", path=path)
        return cls(found, paths)


class EntityDistribution:
    """Sparse non-negative weights over entities with total mass at most one.

    Softmax outputs sum to one; raw walk distributions may lose mass at dead ends.
    """

    __slots__ = ("weights",)

    def __init__(self, weights):
        clean = {}
        for e, w in weights.items():
            if w < 0 or math.isnan(w):
                raise ValueError(f"negative or NaN weight for {e!r}: {w}")
            if w > 0:
                clean[e] = float(w)
        if math.fsum(clean.values()) > 1.0 + SUM_TOL:
            raise ValueError("entity weights exceed total mass 1")
        self.weights = clean

    def total(self):
        return math.fsum(self.weights.values())

    def __getitem__(self, entity):
        return self.weights.get(entity, 0.0)

    def __len__(self):
        return len(self.weights)

    def items(self):
        return sorted(self.weights.items(), key=lambda kv: (-kv[1], kv[0]))

    def argmax(self):
        return self.items()[0][0] if self.weights else None


def _reachable_label_sequences(graph, head, tail, max_len, skip):
    """Label sequences (length <= max_len) whose constrained walk from head can end at tail."""
    found = set()
    frontier = {(): {head}}
    for _ in range(max_len):
        nxt = defaultdict(set)
        for seq, nodes in frontier.items():
            for node in nodes:
                for label in graph.out_labels(node):
                    for nb in graph.neighbors(node, label):
                        if (node, label, nb) in skip:
                            continue
                        nxt[seq + (label,)].add(nb)
        for seq, nodes in nxt.items():
            if tail in nodes:
                found.add(seq)
        frontier = nxt
    return found


def enumerate_metapaths(graph, relation, max_len=DEFAULT_MAX_LEN, exclude_direct=True):
    """Count, for each label sequence, the ``relation`` triples it connects.

    For a triple (h, relation, t) a sequence counts when t is reachable from h
    along it. With ``exclude_direct`` the triple's own edge and its inverse
    may not be traversed, so the trivial one-step path is never self-evidence.
    """
    if relation not in graph.relations:
        raise AspectIRError(f"relation {relation!r} not present in the knowledge base")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    inv = inverse_label(relation)
    alpha = defaultdict(int)
    for h, _, t in graph.edges(relation):
        skip = {(h, relation, t), (t, inv, h)} if exclude_direct else set()
        for seq in _reachable_label_sequences(graph, h, t, max_len, skip):
            alpha[seq] += 1
    return MetaPathSet(relation, [(MetaPath(seq), a) for seq, a in alpha.items()])


def pra_walk(graph, source, path):
    """Path-constrained random walk distribution h_{source,path}.

    Each step spreads a node's mass uniformly over its neighbors under the
    next label; mass at nodes without such neighbors is dropped.
    """
    dist = {source: 1.0}
    for label in path:
        nxt = defaultdict(float)
        for node in sorted(dist):
            targets = graph.neighbors(node, label)
            if not targets:
                continue
            share = dist[node] / len(targets)
            for t in targets:
                nxt[t] += share
        dist = nxt
        if not dist:
            break
    return EntityDistribution(dict(dist))


def pra_score(graph, source, mp_set):
    """Frequency-weighted sum of walk probabilities over all meta-paths."""
    score = defaultdict(float)
    for path, alpha in mp_set.paths:
        for e, h in pra_walk(graph, source, path).weights.items():
            score[e] += alpha * h
    return dict(score)


def softmax_over(entities, scores):
    """Max-stabilized softmax over ``entities``; missing scores count as 0."""
    if not entities:
        raise AspectIRError("softmax over an empty entity set")
    vals = np.fromiter((scores.get(e, 0.0) for e in entities), dtype=np.float64, count=len(entities))
    ex = np.exp(vals - vals.max())
    probs = ex / ex.sum()
    return dict(zip(entities, probs.tolist()))


def direct_inference(graph, source, mp_set):
    """DI: softmax of the meta-path scores over every entity of the graph."""
    return EntityDistribution(softmax_over(graph.entities, pra_score(graph, source, mp_set)))
