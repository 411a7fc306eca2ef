"""Aspect prior, KB-driven query-aspect model, the mixture model and MM retrieval."""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple

from aspectir.corpus import tokenize
from aspectir.embed import indirect_inference
from aspectir.errors import AspectIRError, EntityNotInKBError, FormatError
from aspectir.kb import entity_terms, normalize_entity
from aspectir.langmodel import (
    DEFAULT_MU,
    RankedList,
    TermDistribution,
    rank_by_kl,
    restrict_to_collection,
    retrieve_ql,
)
from aspectir.metapath import DEFAULT_MAX_LEN, EntityDistribution, direct_inference

log = logging.getLogger(__name__)

ASPECTS = ("algorithm", "application", "implementation")


@dataclass
class MixtureConfig:
    lambda_: float = 0.5
    beta: float = 0.5
    mu: float = DEFAULT_MU
    max_metapath_len: int = DEFAULT_MAX_LEN
    top_k_metapaths: int = 5
    candidate_pool_size: int = 1000
    heuristic_pool: int = 1000
    relation_map: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("lambda_", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name.rstrip('_')} must lie in [0, 1], got {v}")
        if self.mu <= 0:
            raise ValueError("mu must be > 0 for KL ranking")
        for name in ("max_metapath_len", "top_k_metapaths", "candidate_pool_size", "heuristic_pool"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def relation_for(self, aspect):
        """KB relation label carrying ``aspect``; defaults to the aspect name itself."""
        return self.relation_map.get(aspect, aspect)


@dataclass
class AspectModel:
    aspect: str
    prior: TermDistribution
    source_doc_ids: frozenset

    def __post_init__(self):
        self.source_doc_ids = frozenset(self.source_doc_ids)
        if not self.source_doc_ids:
            raise ValueError("aspect model needs at least one source document")

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# aspect\t{self.aspect}\n")
            fh.write(f"# docs\t{len(self.source_doc_ids)}\t{','.join(sorted(self.source_doc_ids))}\n")
            for term, p in self.prior.items():
                fh.write(f"{term}\t{p!r}\n")

    @classmethod
    def load(cls, path):
        aspect = None
        docs = None
        weights = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\r\n")
                if not line:
                    continue
                parts = line.split("\t")
                if parts[0] == "# aspect" and len(parts) == 2:
                    aspect = parts[1]
                elif parts[0] == "# docs" and len(parts) == 3:
                    docs = [d for d in parts[2].split(",") if d]
                    if len(docs) != int(parts[1]):
                        raise FormatError("document count does not match id list", path=path, line=lineno)
                elif len(parts) == 2 and not parts[0].startswith("#"):
                    try:
                        weights[parts[0]] = float(parts[1])
                    except ValueError:
                        raise FormatError(f"bad probability {parts[1]!r}", path=path, line=lineno) from None
                else:
                    raise FormatError("unrecognized line", path=path, line=lineno)
        if aspect is None or docs is None:
            raise FormatError("missing '# aspect' or '# docs' header", path=path)
        return cls(aspect, TermDistribution(weights), frozenset(docs))


def read_labels(path):
    """Aspect labels: ``doc_id<TAB>aspect`` per line; a doc may carry several aspects."""
    labels = defaultdict(set)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not all(parts):
                raise FormatError("expected doc_id<TAB>aspect", path=path, line=lineno)
            labels[parts[0]].add(parts[1])
    return dict(labels)


def _has_label(value, aspect):
    if isinstance(value, str):
        return value == aspect
    return aspect in value


def collect_aspect_docs(index, aspect_name, labeled=None, heuristic_pool=1000, mu=DEFAULT_MU):
    """Ground-truth documents for an aspect.

    Explicitly labeled documents, plus documents among the top
    ``heuristic_pool`` query-likelihood hits for the bare aspect name whose
    title contains that name.
    """
    if not aspect_name:
        raise AspectIRError("aspect name must be nonempty")
    docs = set()
    for doc_id, value in (labeled or {}).items():
        if _has_label(value, aspect_name):
            if doc_id in index:
                docs.add(doc_id)
            else:
                log.warning("labeled doc %s is not in the index; ignored", doc_id)
    keyword = tokenize(aspect_name)
    if keyword and index.total_tokens:
        for doc_id, _ in retrieve_ql(index, keyword, mu, heuristic_pool):
            if all(t in index.title_tokens(doc_id) for t in keyword):
                docs.add(doc_id)
    if not docs:
        raise AspectIRError(f"no documents found for aspect {aspect_name!r}")
    return docs


def estimate_aspect_prior(index, docs):
    """P(w|a): mean of the per-document maximum-likelihood term distributions."""
    if not docs:
        raise AspectIRError("empty document set")
    acc = defaultdict(list)
    used = 0
    for doc_id in sorted(docs):
        index.check_doc(doc_id)
        dlen = index.doc_len[doc_id]
        if dlen == 0:
            continue
        used += 1
        for term, tf in index.doc_tf[doc_id].items():
            acc[term].append(tf / dlen)
    if used == 0:
        raise AspectIRError("all aspect documents are empty")
    return TermDistribution({t: math.fsum(v) / used for t, v in acc.items()})


def build_aspect_model(index, aspect_name, labeled=None, heuristic_pool=1000, mu=DEFAULT_MU):
    docs = collect_aspect_docs(index, aspect_name, labeled, heuristic_pool, mu)
    return AspectModel(aspect_name, estimate_aspect_prior(index, docs), frozenset(docs))


def entity_mixture(di, hprime, beta):
    """P_a(e) = beta DI(e) + (1 - beta) h'(e)."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    keys = set(di.weights) | set(hprime.weights)
    return EntityDistribution({e: beta * di[e] + (1.0 - beta) * hprime[e] for e in sorted(keys)})


def query_aspect_term_dist(p_a, query_entity=None):
    """P(w|q,a): mass of every entity whose name contains w, renormalized to one.

    Multi-word entities credit each of their words, so the raw sums can
    exceed one.
    """
    raw = defaultdict(float)
    for e in sorted(p_a.weights):
        for term in set(entity_terms(e)):
            raw[term] += p_a.weights[e]
    if not any(v > 0 for v in raw.values()):
        raise AspectIRError(f"no entity terms carry mass for {query_entity!r}")
    return TermDistribution.normalized(raw)


def mixture_model(prior, qdist, lambda_):
    """MM(w) = lambda P(w|a) + (1 - lambda) P(w|q,a)."""
    if not 0.0 <= lambda_ <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    keys = set(prior.weights) | set(qdist.weights)
    mixed = {t: lambda_ * prior[t] + (1.0 - lambda_) * qdist[t] for t in keys}
    return TermDistribution.normalized(mixed)


def resolve_entity(graph, query):
    """Map a free-text query to its KB entity id, exactly."""
    entity = normalize_entity(query)
    if entity not in graph:
        raise EntityNotInKBError(query)
    return entity


class MixtureParts(NamedTuple):
    entity: str
    di: EntityDistribution
    hprime: EntityDistribution
    p_a: EntityDistribution
    qdist: TermDistribution
    mm: TermDistribution


def build_mixture(graph, mp_set, embeddings, query, aspect_model, cfg):
    """Every intermediate distribution of the MM pipeline for one query."""
    entity = resolve_entity(graph, query)
    di = direct_inference(graph, entity, mp_set)
    if cfg.beta == 1.0 and (embeddings is None or entity not in embeddings):
        hprime = EntityDistribution({})
    else:
        if embeddings is None:
            raise AspectIRError("embeddings are required unless beta = 1")
        hprime = indirect_inference(embeddings, entity)
    p_a = entity_mixture(di, hprime, cfg.beta)
    qdist = query_aspect_term_dist(p_a, entity)
    mm = mixture_model(aspect_model.prior, qdist, cfg.lambda_)
    return MixtureParts(entity, di, hprime, p_a, qdist, mm)


def retrieve_mm(index, graph, mp_set, embeddings, query, aspect_model, cfg=None, k=10):
    """Re-rank the query-likelihood candidate pool of ``query`` by KL(MM || M_d)."""
    cfg = cfg or MixtureConfig()
    parts = build_mixture(graph, mp_set, embeddings, query, aspect_model, cfg)
    query_terms = tokenize(query)
    pool = retrieve_ql(index, query_terms, cfg.mu, cfg.candidate_pool_size) if query_terms else None
    if not pool:
        return RankedList([], "ascending-KL")
    model = restrict_to_collection(parts.mm, index)
    return rank_by_kl(model, pool.doc_ids, index, cfg.mu).truncate(k)
