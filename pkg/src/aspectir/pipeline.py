"""The four ranking systems over one set of loaded artifacts."""

import os
from dataclasses import dataclass, field

from aspectir.aspect import AspectModel, MixtureConfig, resolve_entity, retrieve_mm
from aspectir.corpus import CorpusIndex, tokenize
from aspectir.embed import EmbeddingTable
from aspectir.errors import AspectIRError
from aspectir.kb import load_kb
from aspectir.langmodel import (
    RankedList,
    matching_docs,
    rank_by_kl,
    relevance_model_expand,
    restrict_to_collection,
    retrieve_ql,
)
from aspectir.metapath import MetaPathSet

SYSTEMS = ("mm", "ql", "ql-aspect", "ql-aspect-qe")


def metapath_file(model_dir, aspect):
    return os.path.join(model_dir, f"metapaths_{aspect}.tsv")


def embedding_file(model_dir, aspect):
    return os.path.join(model_dir, f"embeddings_{aspect}.txt")


def prior_file(model_dir, aspect):
    return os.path.join(model_dir, f"prior_{aspect}.tsv")


@dataclass
class FeedbackConfig:
    fb_docs: int = 1000
    fb_terms: int = 100
    orig_weight: float = 0.75


@dataclass
class Retriever:
    index: CorpusIndex
    graph: object = None
    mp_sets: dict = field(default_factory=dict)
    embeddings: dict = field(default_factory=dict)
    aspect_models: dict = field(default_factory=dict)
    cfg: MixtureConfig = field(default_factory=MixtureConfig)
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    k: int = 10

    def ql(self, query, aspect=None):
        """QL+query: query likelihood of the bare query terms."""
        terms = tokenize(query)
        if not terms:
            return RankedList([])
        return retrieve_ql(self.index, terms, self.cfg.mu, self.k)

    def ql_aspect(self, query, aspect):
        """QL+query+aspect: the aspect name appended to the query."""
        return retrieve_ql(self.index, tokenize(query) + tokenize(aspect), self.cfg.mu, self.k)

    def ql_aspect_qe(self, query, aspect):
        """QL+query+aspect+QE: relevance-model expansion, ranked by KL over matching docs."""
        terms = tokenize(query) + tokenize(aspect)
        fb = self.feedback
        model = relevance_model_expand(
            self.index, terms, fb.fb_docs, fb.fb_terms, fb.orig_weight, self.cfg.mu
        )
        try:
            model = restrict_to_collection(model, self.index)
        except AspectIRError:
            return RankedList([])
        candidates = sorted(matching_docs(self.index, model.support))
        if not candidates:
            return RankedList([])
        return rank_by_kl(model, candidates, self.index, self.cfg.mu).truncate(self.k)

    def mm(self, query, aspect):
        if self.graph is None:
            raise AspectIRError("the mixture model needs a knowledge base")
        resolve_entity(self.graph, query)
        try:
            mp_set = self.mp_sets[aspect]
            aspect_model = self.aspect_models[aspect]
        except KeyError:
            raise AspectIRError(f"no trained artifacts for aspect {aspect!r}") from None
        return retrieve_mm(
            self.index, self.graph, mp_set, self.embeddings.get(aspect), query,
            aspect_model, self.cfg, self.k,
        )

    def system(self, name):
        try:
            return {
                "mm": self.mm,
                "ql": self.ql,
                "ql-aspect": self.ql_aspect,
                "ql-aspect-qe": self.ql_aspect_qe,
            }[name]
        except KeyError:
            raise AspectIRError(f"unknown system {name!r}; choose from {', '.join(SYSTEMS)}") from None

    def systems(self, names=SYSTEMS):
        return {n: self.system(n) for n in names}


def load_retriever(index_dir, kb_path=None, model_dir=None, aspects=(), cfg=None, feedback=None, k=10):
    """Load the index plus, for each aspect, whatever model artifacts exist."""
    cfg = cfg or MixtureConfig()
    r = Retriever(CorpusIndex.load(index_dir), cfg=cfg, feedback=feedback or FeedbackConfig(), k=k)
    if kb_path:
        r.graph = load_kb(kb_path)
    if model_dir:
        for aspect in aspects:
            relation = cfg.relation_for(aspect)
            path = metapath_file(model_dir, aspect)
            if os.path.exists(path):
                r.mp_sets[aspect] = MetaPathSet.load(path, relation=relation)
            path = embedding_file(model_dir, aspect)
            if os.path.exists(path):
                r.embeddings[aspect] = EmbeddingTable.load(path)
            path = prior_file(model_dir, aspect)
            if os.path.exists(path):
                r.aspect_models[aspect] = AspectModel.load(path)
    return r
