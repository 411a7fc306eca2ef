"""Graded relevance judgments, DCG / precision metrics and the benchmark runner."""

import logging
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources

from aspectir.errors import EntityNotInKBError, FormatError
from aspectir.kb import normalize_entity

log = logging.getLogger(__name__)

DEFAULT_METRICS = ("DCG@5", "P@5", "P@1")
_METRIC = re.compile(r"^(DCG|P)@(\d+)$")


def benchmark_queries():
    """The 43 shipped benchmark query strings, in file order."""
    text = resources.files("aspectir").joinpath("data/queries.txt").read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def read_queries(path):
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.startswith("#")]


def _key(query, aspect, doc_id):
    return normalize_entity(query), aspect, doc_id


class QRels:
    """Per-evaluator grades keyed by (query, aspect, doc_id); lookups use the mean grade.

    Query strings are compared in normalized entity form, so ``speech recognition``
    and ``speech_recognition`` address the same judgments.
    """

    def __init__(self):
        self.grades = defaultdict(list)

    def add(self, query, aspect, doc_id, grade):
        grade = float(grade)
        if not grade >= 0 or math.isinf(grade):
            raise ValueError(f"grade must be a finite non-negative number, got {grade}")
        self.grades[_key(query, aspect, doc_id)].append(grade)

    def grade(self, query, aspect, doc_id):
        """Mean grade, 0 for unjudged documents."""
        values = self.grades.get(_key(query, aspect, doc_id))
        if not values:
            return 0.0
        return math.fsum(values) / len(values)

    @property
    def aggregated(self):
        return {k: math.fsum(v) / len(v) for k, v in self.grades.items()}

    def __len__(self):
        return len(self.grades)


def load_qrels(path):
    qrels = QRels()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise FormatError("expected query<TAB>aspect<TAB>doc_id<TAB>grade", path=path, line=lineno)
            query, aspect, doc_id, grade = parts
            try:
                value = float(grade)
            except ValueError:
                raise FormatError(f"non-numeric grade {grade!r}", path=path, line=lineno) from None
            if not value >= 0 or math.isinf(value):
                raise FormatError(f"grade must be non-negative, got {grade!r}", path=path, line=lineno)
            qrels.add(query, aspect, doc_id, value)
    return qrels


def _doc_ids(ranked):
    return [d for d, _ in ranked]


def dcg_at_k(ranked, qrels, query, aspect, k=5):
    """sum_{i<=k} grade_i / log2(i + 1), linear gain, ranks from 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    docs = _doc_ids(ranked)[:k]
    return math.fsum(
        qrels.grade(query, aspect, d) / math.log2(i + 1) for i, d in enumerate(docs, start=1)
    )


def precision_at_k(ranked, qrels, query, aspect, k=5, threshold=0.0):
    """Fraction of the k slots holding a document graded above ``threshold``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    docs = _doc_ids(ranked)[:k]
    hits = sum(1 for d in docs if qrels.grade(query, aspect, d) > threshold)
    return hits / k


def compute_metric(name, ranked, qrels, query, aspect):
    m = _METRIC.match(name)
    if not m:
        raise ValueError(f"unknown metric {name!r}")
    kind, k = m.group(1), int(m.group(2))
    if kind == "DCG":
        return dcg_at_k(ranked, qrels, query, aspect, k)
    return precision_at_k(ranked, qrels, query, aspect, k)


@dataclass
class MetricReport:
    systems: list
    aspects: list
    metrics: list
    rows: dict = field(default_factory=dict)
    per_query: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)

    def value(self, system, aspect, metric):
        return self.rows[(system, aspect)][metric]

    def macro(self, system, metric):
        """Mean over aspects of the per-aspect values."""
        vals = [self.rows[(system, a)][metric] for a in self.aspects]
        return math.fsum(vals) / len(vals)

    def to_tsv(self):
        lines = ["system\taspect\t" + "\t".join(self.metrics) + "\tqueries\tskipped"]
        for s in self.systems:
            for a in self.aspects:
                row = self.rows[(s, a)]
                vals = "\t".join(f"{row[m]:.6f}" for m in self.metrics)
                n = len(self.per_query[(s, a)])
                lines.append(f"{s}\t{a}\t{vals}\t{n}\t{self.skipped[(s, a)]}")
        return "\n".join(lines) + "\n"

    def per_query_tsv(self):
        lines = ["system\taspect\tquery\t" + "\t".join(self.metrics)]
        for s in self.systems:
            for a in self.aspects:
                for q, vals in self.per_query[(s, a)].items():
                    lines.append(f"{s}\t{a}\t{q}\t" + "\t".join(f"{vals[m]:.6f}" for m in self.metrics))
        return "\n".join(lines) + "\n"

    def to_table(self):
        """Systems as rows; one column group of metrics per aspect."""
        name_w = max([len("Approach")] + [len(s) for s in self.systems])
        col_w = max(8, max(len(m) for m in self.metrics) + 2)
        group_w = col_w * len(self.metrics)
        head1 = " " * name_w + " | " + " | ".join(a.capitalize().center(group_w) for a in self.aspects)
        head2 = "Approach".ljust(name_w) + " | " + " | ".join(
            "".join(m.rjust(col_w) for m in self.metrics) for _ in self.aspects
        )
        rule = "-" * len(head2)
        lines = [head1, head2, rule]
        for s in self.systems:
            cells = []
            for a in self.aspects:
                row = self.rows[(s, a)]
                cells.append("".join(f"{row[m]:.2f}".rjust(col_w) for m in self.metrics))
            lines.append(s.ljust(name_w) + " | " + " | ".join(cells))
        return "\n".join(lines) + "\n"


def run_benchmark(queries, aspects, systems, qrels, metrics=DEFAULT_METRICS):
    """Evaluate named rankers over every (query, aspect) pair.

    ``systems`` maps a name to ``f(query, aspect) -> RankedList``. A system
    that raises :class:`EntityNotInKBError` for a query has that query
    skipped (and counted) for that aspect; its means use the remaining queries.
    """
    if queries is None:
        queries = benchmark_queries()
    metrics = list(metrics)
    for m in metrics:
        if not _METRIC.match(m):
            raise ValueError(f"unknown metric {m!r}")
    report = MetricReport(list(systems), list(aspects), metrics)
    for name, system in systems.items():
        for aspect in aspects:
            per_query = {}
            skipped = 0
            for query in queries:
                try:
                    ranked = system(query, aspect)
                except EntityNotInKBError as exc:
                    log.info("%s: skipping %r for %s (%s)", name, query, aspect, exc)
                    skipped += 1
                    continue
                per_query[query] = {m: compute_metric(m, ranked, qrels, query, aspect) for m in metrics}
            n = len(per_query)
            report.rows[(name, aspect)] = {
                m: (math.fsum(v[m] for v in per_query.values()) / n if n else 0.0) for m in metrics
            }
            report.per_query[(name, aspect)] = per_query
            report.skipped[(name, aspect)] = skipped
            if skipped:
                log.warning("%s/%s: %d of %d queries skipped", name, aspect, skipped, len(queries))
    return report
