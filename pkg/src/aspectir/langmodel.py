"""Document language models, query-likelihood baselines, RM expansion and KL ranking."""

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from aspectir.corpus import collection_prob
from aspectir.errors import AspectIRError

DEFAULT_MU = 1500.0
SUM_TOL = 1e-9

ASCENDING_KL = "ascending-KL"
DESCENDING_LIKELIHOOD = "descending-likelihood"


class TermDistribution:
    """Sparse probability distribution over terms.

    Zero weights are dropped; construction fails unless the weights are
    non-negative and sum to one within ``1e-9``.
    """

    __slots__ = ("weights",)

    def __init__(self, weights):
        clean = {}
        total = 0.0
        for term, w in weights.items():
            if w < 0 or math.isnan(w):
                raise ValueError(f"negative or NaN weight for {term!r}: {w}")
            if w > 0:
                clean[term] = float(w)
                total += w
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"term weights sum to {total!r}, expected 1")
        self.weights = clean

    @classmethod
    def normalized(cls, raw):
        """Scale non-negative ``raw`` weights to sum to one."""
        total = math.fsum(w for w in raw.values() if w > 0)
        if total <= 0:
            raise ValueError("cannot normalize an all-zero weight map")
        return cls({t: w / total for t, w in raw.items() if w > 0})

    @classmethod
    def mle(cls, terms):
        """Maximum-likelihood distribution of a term sequence."""
        if not terms:
            raise ValueError("MLE of an empty term list")
        counts = Counter(terms)
        n = len(terms)
        return cls({t: c / n for t, c in counts.items()})

    @property
    def support(self):
        return frozenset(self.weights)

    def total(self):
        return math.fsum(self.weights.values())

    def __getitem__(self, term):
        return self.weights.get(term, 0.0)

    def __contains__(self, term):
        return term in self.weights

    def __len__(self):
        return len(self.weights)

    def items(self):
        """(term, weight) pairs by descending weight, then term."""
        return sorted(self.weights.items(), key=lambda kv: (-kv[1], kv[0]))

    def __eq__(self, other):
        return isinstance(other, TermDistribution) and self.weights == other.weights

    def __repr__(self):
        head = ", ".join(f"{t}: {w:.4g}" for t, w in self.items()[:5])
        more = ", ..." if len(self) > 5 else ""
        return f"TermDistribution({{{head}{more}}})"


@dataclass
class RankedList:
    entries: list = field(default_factory=list)
    ordering_key: str = DESCENDING_LIKELIHOOD

    def __post_init__(self):
        ids = [d for d, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("ranked list contains duplicate doc ids")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def doc_ids(self):
        return [d for d, _ in self.entries]

    def truncate(self, k):
        return RankedList(self.entries[:k], self.ordering_key)


def _sorted_entries(scores, ascending):
    sign = 1.0 if ascending else -1.0
    return sorted(scores.items(), key=lambda kv: (sign * kv[1], kv[0]))


def smoothed_doc_prob(index, doc_id, term, mu=DEFAULT_MU):
    """Dirichlet-smoothed M_d(w) = (tf(w,d) + mu P(w|C)) / (|d| + mu)."""
    index.check_doc(doc_id)
    if mu < 0:
        raise ValueError("mu must be non-negative")
    tf = index.doc_tf[doc_id].get(term, 0)
    dlen = index.doc_len[doc_id]
    pc = collection_prob(index, term) if mu > 0 else 0.0
    denom = dlen + mu
    if denom == 0:
        return 0.0
    return (tf + mu * pc) / denom


def _log(p):
    return math.log(p) if p > 0 else -math.inf


def query_likelihood_score(index, doc_id, query_terms, mu=DEFAULT_MU):
    """Log query likelihood: sum of log M_d(q_i) over the query terms (with repeats)."""
    if not query_terms:
        raise AspectIRError("empty query")
    return math.fsum(_log(smoothed_doc_prob(index, doc_id, q, mu)) for q in query_terms)


def retrieve_ql(index, query_terms, mu=DEFAULT_MU, k=1000):
    """Rank documents containing at least one query term by query likelihood.

    Ties are broken by ascending doc_id.
    """
    if not query_terms:
        raise AspectIRError("empty query")
    if k < 1:
        raise ValueError("k must be >= 1")
    candidates = set()
    for term in set(query_terms):
        candidates.update(d for d, _ in index.postings.get(term, ()))
    scores = {d: query_likelihood_score(index, d, query_terms, mu) for d in candidates}
    return RankedList(_sorted_entries(scores, ascending=False)[:k], DESCENDING_LIKELIHOOD)


def _vocab_arrays(index):
    # cached per index: sorted vocabulary, term -> position, P(w|C) vector
    cache = getattr(index, "_lm_vocab_cache", None)
    if cache is None:
        terms = sorted(index.vocab)
        pos = {t: i for i, t in enumerate(terms)}
        if index.total_tokens:
            pc = np.array([index.coll_tf[t] for t in terms], dtype=np.float64) / index.total_tokens
        else:
            pc = np.zeros(0)
        cache = (terms, pos, pc)
        index._lm_vocab_cache = cache
    return cache


def relevance_model_expand(
    index, query_terms, fb_docs=1000, fb_terms=100, orig_weight=0.75, mu=DEFAULT_MU
):
    """Pseudo-relevance-feedback expansion (RM1 interpolated with the query MLE).

    P(w|R) is proportional to sum over the top ``fb_docs`` query-likelihood
    documents of M_d(w) * prod_i M_d(q_i), with a uniform document prior. The
    relevance model is cut to its ``fb_terms`` heaviest terms (ties by term),
    renormalized, and mixed with the query MLE using ``orig_weight``.
    """
    if fb_docs < 1 or fb_terms < 1:
        raise ValueError("fb_docs and fb_terms must be >= 1")
    if not 0.0 <= orig_weight <= 1.0:
        raise ValueError("orig_weight must lie in [0, 1]")
    query_model = TermDistribution.mle(list(query_terms))
    if orig_weight == 1.0:
        return query_model

    feedback = retrieve_ql(index, query_terms, mu, fb_docs)
    finite = [(d, s) for d, s in feedback if s != -math.inf]
    if not finite:
        return query_model

    # prod_i M_d(q_i) in log space, shifted by the max; the shift cancels on normalization
    top = max(s for _, s in finite)
    doc_weight = {d: math.exp(s - top) for d, s in finite}

    terms, pos, pc = _vocab_arrays(index)
    raw = np.zeros(len(terms))
    background = 0.0
    for d, w in doc_weight.items():
        denom = index.doc_len[d] + mu
        if denom == 0:
            continue
        for term, tf in index.doc_tf[d].items():
            raw[pos[term]] += w * tf / denom
        background += w * mu / denom
    if background:
        raw += background * pc

    order = np.argsort(-raw, kind="stable")[:fb_terms]
    chosen = {terms[i]: float(raw[i]) for i in order if raw[i] > 0}
    if not chosen:
        return query_model
    rm = TermDistribution.normalized(chosen)

    mixed = {t: (1.0 - orig_weight) * w for t, w in rm.weights.items()}
    for t, w in query_model.weights.items():
        mixed[t] = mixed.get(t, 0.0) + orig_weight * w
    return TermDistribution.normalized(mixed)


def restrict_to_collection(model, index):
    """Drop terms that never occur in the collection and renormalize.

    Such terms have M_d(w) = 0 in every document, which would make every KL
    divergence infinite.
    """
    kept = {t: w for t, w in model.weights.items() if t in index.vocab}
    if len(kept) == len(model):
        return model
    if not kept:
        raise AspectIRError("model has no term in the collection vocabulary")
    return TermDistribution.normalized(kept)


def kl_divergence(model, index, doc_id, mu=DEFAULT_MU):
    """KL(model || M_d) summed over the model support, natural log.

    Returns ``math.inf`` when M_d vanishes on a supported term.
    """
    index.check_doc(doc_id)
    total = 0.0
    for term, p in model.weights.items():
        md = smoothed_doc_prob(index, doc_id, term, mu)
        if md <= 0:
            return math.inf
        total += p * math.log(p / md)
    return total


class _KLScorer:
    """Scores many documents against one model in O(|d|) each.

    Splits sum_w p log M_d(w) into a document-independent part over the
    whole support (tf = 0 everywhere) plus a correction over the terms the
    document actually contains.
    """

    def __init__(self, model, index, mu):
        if mu <= 0:
            raise ValueError("KL ranking requires mu > 0")
        self.index = index
        self.mu = mu
        self.model = model.weights
        self.mass = math.fsum(self.model.values())
        self.neg_entropy = math.fsum(p * math.log(p) for p in self.model.values())
        self.bg = {}
        self.log_bg = {}
        base = []
        self.infinite = False
        for term, p in self.model.items():
            pc = collection_prob(index, term)
            if pc <= 0:
                self.infinite = True
                break
            lb = math.log(mu * pc)
            self.bg[term] = mu * pc
            self.log_bg[term] = lb
            base.append(p * lb)
        self.base = math.fsum(base)

    def cross_entropy_gain(self, doc_id):
        """sum_w p(w) log M_d(w)."""
        if self.infinite:
            return -math.inf
        tf_map = self.index.doc_tf[doc_id]
        corr = 0.0
        if len(tf_map) < len(self.model):
            for term, tf in tf_map.items():
                p = self.model.get(term)
                if p is not None:
                    corr += p * (math.log(tf + self.bg[term]) - self.log_bg[term])
        else:
            for term, p in self.model.items():
                tf = tf_map.get(term)
                if tf:
                    corr += p * (math.log(tf + self.bg[term]) - self.log_bg[term])
        return self.base + corr - self.mass * math.log(self.index.doc_len[doc_id] + self.mu)

    def kl(self, doc_id):
        gain = self.cross_entropy_gain(doc_id)
        if gain == -math.inf:
            return math.inf
        return self.neg_entropy - gain


def rank_by_kl(model, candidate_doc_ids, index, mu=DEFAULT_MU):
    """Order candidates by increasing KL(model || M_d), ties by doc_id."""
    candidates = list(dict.fromkeys(candidate_doc_ids))
    if not candidates:
        raise AspectIRError("no candidate documents to rank")
    for d in candidates:
        index.check_doc(d)
    if mu > 0:
        scorer = _KLScorer(model, index, mu)
        scores = {d: scorer.kl(d) for d in candidates}
    else:
        # unsmoothed models: per-term evaluation, infinite where support is missing
        scores = {d: kl_divergence(model, index, d, mu) for d in candidates}
    return RankedList(_sorted_entries(scores, ascending=True), ASCENDING_KL)


def matching_docs(index, terms):
    """Doc ids containing at least one of ``terms``."""
    found = set()
    for term in terms:
        found.update(d for d, _ in index.postings.get(term, ()))
    return found


def format_ranking_tsv(query, aspect, ranked):
    """Ranked list as ``query, aspect, rank, doc_id, score`` TSV lines (rank from 1)."""
    return [
        f"{query}\t{aspect}\t{rank}\t{doc_id}\t{score!r}"
        for rank, (doc_id, score) in enumerate(ranked, start=1)
    ]
