"""The domain knowledge base as a labeled directed graph."""

from collections import Counter
from dataclasses import dataclass

from aspectir.errors import FormatError

INVERSE_SUFFIX = "_inverse"


def inverse_label(label):
    """``r`` <-> ``r_inverse``."""
    if label.endswith(INVERSE_SUFFIX):
        return label[: -len(INVERSE_SUFFIX)]
    return label + INVERSE_SUFFIX


def normalize_entity(text):
    """Lowercase, underscore-joined entity id for a free-text name."""
    return "_".join(text.lower().replace("_", " ").split())


@dataclass(frozen=True, order=True)
class Triple:
    head: str
    relation: str
    tail: str

    def __post_init__(self):
        if not (self.head and self.relation and self.tail):
            raise ValueError(f"triple fields must be nonempty: {self}")


class KBGraph:
    """Entities plus labeled edges, with every inverse edge materialized.

    ``adjacency[(entity, label)]`` is a sorted, duplicate-free list of targets.
    """

    def __init__(self, triples=()):
        adj = {}
        entities = set()
        for tr in triples:
            entities.add(tr.head)
            entities.add(tr.tail)
            adj.setdefault((tr.head, tr.relation), set()).add(tr.tail)
            adj.setdefault((tr.tail, inverse_label(tr.relation)), set()).add(tr.head)
        self.adjacency = {key: sorted(targets) for key, targets in sorted(adj.items())}
        self.entities = sorted(entities)
        self._entity_set = frozenset(entities)
        self.relations = sorted({label for _, label in self.adjacency})
        out = {}
        for (node, label) in self.adjacency:
            out.setdefault(node, []).append(label)
        self._out_labels = out

    def __contains__(self, entity):
        return entity in self._entity_set

    def neighbors(self, entity, label):
        return self.adjacency.get((entity, label), [])

    def out_labels(self, entity):
        """Labels with at least one outgoing edge from ``entity``, sorted."""
        return self._out_labels.get(entity, [])

    def edges(self, label=None):
        """Iterate ``(head, label, tail)`` over all edges, inverse edges included."""
        for (node, lab), targets in self.adjacency.items():
            if label is not None and lab != label:
                continue
            for t in targets:
                yield node, lab, t

    def label_counts(self):
        return Counter(lab for (_, lab), ts in self.adjacency.items() for _ in ts)

    @property
    def num_edges(self):
        return sum(len(ts) for ts in self.adjacency.values())

    def stats(self):
        counts = self.label_counts()
        return {
            "entities": len(self.entities),
            "edges": self.num_edges,
            "relations": len(self.relations),
            "label_counts": dict(sorted(counts.items())),
        }


def read_triples(path):
    """Parse a ``head<TAB>relation<TAB>tail`` file, skipping blanks and ``#`` comments."""
    triples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(f"expected 3 tab-separated fields, got {len(parts)}", path=path, line=lineno)
            head, rel, tail = (p.strip() for p in parts)
            if not (head and rel and tail):
                raise FormatError("empty field in triple", path=path, line=lineno)
            triples.append(Triple(head, rel, tail))
    return triples


def load_kb(path):
    return KBGraph(read_triples(path))


def neighbors(graph, entity, relation_label):
    return list(graph.neighbors(entity, relation_label))


def entity_terms(entity_id):
    """Words of an entity id: split on underscores, lowercased."""
    return [t for t in entity_id.lower().split("_") if t]
