"""Meta-path guided random walks and skip-gram with negative sampling.

Training runs in a numba kernel. With ``workers=1`` updates are applied
sequentially, so a fixed seed gives bit-identical vectors; ``workers > 1``
switches to lock-free parallel updates over walks.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from aspectir.errors import AspectIRError, FormatError
from aspectir.metapath import EntityDistribution, softmax_over

log = logging.getLogger(__name__)

DEFAULT_DIM = 128
DEFAULT_WINDOW = 5
DEFAULT_NEGATIVES = 5
DEFAULT_WALKS_PER_NODE = 10
DEFAULT_WALK_LEN = 40
DEFAULT_EPOCHS = 5
DEFAULT_LR = 0.025
MIN_LR_FRACTION = 1e-4
NOISE_POWER = 0.75


@dataclass
class WalkCorpus:
    walks: list
    seed: int
    metapaths: list
    entities: list = field(default_factory=list)

    def __len__(self):
        return len(self.walks)


def _walks_from(graph, start, path, walks_per_node, walk_len, rng):
    out = []
    plen = len(path)
    for _ in range(walks_per_node):
        walk = [start]
        node = start
        for step in range(walk_len - 1):
            targets = graph.neighbors(node, path[step % plen])
            if not targets:
                break
            node = targets[int(rng.integers(len(targets)))] if len(targets) > 1 else targets[0]
            walk.append(node)
        if len(walk) >= 2:
            out.append(walk)
    return out


def generate_walks(
    graph,
    metapaths,
    walks_per_node=DEFAULT_WALKS_PER_NODE,
    walk_len=DEFAULT_WALK_LEN,
    seed=0,
    workers=1,
):
    """Walks that follow each meta-path cyclically from every entity.

    Every (meta-path, start entity) task draws from its own RNG stream keyed
    by the seed and the task position, so the output does not depend on
    ``workers``.
    """
    if walk_len < 2:
        raise ValueError("walk_len must be >= 2")
    metapaths = [tuple(p) for p in metapaths]
    if not metapaths or any(len(p) == 0 for p in metapaths):
        raise ValueError("need at least one non-empty meta-path")
    tasks = [
        (pi, ei, path, start)
        for pi, path in enumerate(metapaths)
        for ei, start in enumerate(graph.entities)
    ]

    def run(task):
        pi, ei, path, start = task
        rng = np.random.default_rng([seed, pi, ei])
        return _walks_from(graph, start, path, walks_per_node, walk_len, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, tasks))
    else:
        chunks = [run(t) for t in tasks]
    walks = [w for chunk in chunks for w in chunk]
    return WalkCorpus(walks, seed, metapaths, list(graph.entities))


@numba.njit(cache=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@numba.njit(cache=True)
def _log_sigmoid(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@numba.njit(cache=True)
def sgns_pair_loss(v_center, u_context, u_negatives):
    """-log s(u_c . v) - sum_n log s(-u_n . v) for one (center, context) pair."""
    loss = -_log_sigmoid(np.dot(u_context, v_center))
    for k in range(u_negatives.shape[0]):
        loss -= _log_sigmoid(-np.dot(u_negatives[k], v_center))
    return loss


@numba.njit(cache=True)
def sgns_pair_grad(v_center, u_context, u_negatives):
    """Gradients of :func:`sgns_pair_loss` w.r.t. center, context and negative vectors."""
    g = _sigmoid(np.dot(u_context, v_center)) - 1.0
    grad_center = g * u_context
    grad_context = g * v_center
    grad_negatives = np.empty_like(u_negatives)
    for k in range(u_negatives.shape[0]):
        gn = _sigmoid(np.dot(u_negatives[k], v_center))
        grad_center = grad_center + gn * u_negatives[k]
        grad_negatives[k] = gn * v_center
    return grad_center, grad_context, grad_negatives


@numba.njit(cache=True)
def _pair_update(w_in, w_out, center, context, negs, lr, buf):
    # word2vec-style: output rows updated in place, center update accumulated in buf
    dim = w_in.shape[1]
    for j in range(dim):
        buf[j] = 0.0
    loss = 0.0
    for t in range(negs.shape[0] + 1):
        if t == 0:
            target = context
            label = 1.0
        else:
            target = negs[t - 1]
            label = 0.0
        dot = 0.0
        for j in range(dim):
            dot += w_in[center, j] * w_out[target, j]
        if label == 1.0:
            loss -= _log_sigmoid(dot)
        else:
            loss -= _log_sigmoid(-dot)
        g = _sigmoid(dot) - label
        for j in range(dim):
            buf[j] += g * w_out[target, j]
            w_out[target, j] -= lr * g * w_in[center, j]
    for j in range(dim):
        w_in[center, j] -= lr * buf[j]
    return loss


@numba.njit(cache=True)
def _train_walks_serial(tokens, offsets, pair_base, window, negs, w_in, w_out, lr0, lr_min, step0, total):
    buf = np.zeros(w_in.shape[1])
    loss = 0.0
    for wi in range(offsets.shape[0] - 1):
        start = offsets[wi]
        end = offsets[wi + 1]
        p = pair_base[wi]
        for i in range(start, end):
            lo = max(start, i - window)
            hi = min(end, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                frac = (step0 + p) / total
                lr = max(lr0 * (1.0 - frac), lr_min)
                loss += _pair_update(w_in, w_out, tokens[i], tokens[j], negs[p], lr, buf)
                p += 1
    return loss


@numba.njit(cache=True, parallel=True)
def _train_walks_parallel(tokens, offsets, pair_base, window, negs, w_in, w_out, lr0, lr_min, step0, total):
    n_walks = offsets.shape[0] - 1
    losses = np.zeros(n_walks)
    for wi in numba.prange(n_walks):
        buf = np.zeros(w_in.shape[1])
        start = offsets[wi]
        end = offsets[wi + 1]
        p = pair_base[wi]
        acc = 0.0
        for i in range(start, end):
            lo = max(start, i - window)
            hi = min(end, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                frac = (step0 + p) / total
                lr = max(lr0 * (1.0 - frac), lr_min)
                acc += _pair_update(w_in, w_out, tokens[i], tokens[j], negs[p], lr, buf)
                p += 1
        losses[wi] = acc
    return losses.sum()


class EmbeddingTable:
    """Entity input vectors (rows of ``vectors``) plus training-internal context vectors."""

    def __init__(self, entities, vectors, context_vectors=None, epoch_losses=None):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(entities) or vectors.shape[1] < 1:
            raise ValueError("vectors must be an (entities x dim) matrix with dim >= 1")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("embedding vectors must be finite")
        self.entities = list(entities)
        self.index = {e: i for i, e in enumerate(self.entities)}
        self.vectors = vectors
        self.context_vectors = context_vectors
        self.epoch_losses = list(epoch_losses or [])

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __contains__(self, entity):
        return entity in self.index

    def __len__(self):
        return len(self.entities)

    def vector(self, entity):
        return self.vectors[self.index[entity]]

    def save(self, path):
        """Plain-text word2vec format: ``count dim`` header, one entity per line."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(self.entities)} {self.dim}\n")
            for e, row in zip(self.entities, self.vectors):
                fh.write(e + " " + " ".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise FormatError("expected '<count> <dim>' header", path=path, line=1)
            count, dim = int(header[0]), int(header[1])
            entities = []
            rows = []
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split(" ")
                if not line.strip():
                    continue
                if len(parts) != dim + 1:
                    raise FormatError(f"expected {dim} values", path=path, line=lineno)
                entities.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        if len(entities) != count:
            raise FormatError(f"header announces {count} vectors, found {len(entities)}", path=path)
        return cls(entities, np.array(rows, dtype=np.float64).reshape(count, dim))


def _flatten(corpus, index):
    lengths = np.fromiter((len(w) for w in corpus.walks), dtype=np.int64, count=len(corpus.walks))
    offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    tokens = np.fromiter(
        (index[e] for w in corpus.walks for e in w), dtype=np.int64, count=int(offsets[-1])
    )
    return tokens, offsets, lengths


def _pairs_per_walk(lengths, window):
    # each position pairs with min(window, i) left and min(window, L-1-i) right neighbours
    out = np.zeros(len(lengths), dtype=np.int64)
    for n, length in enumerate(lengths.tolist()):
        out[n] = sum(min(window, i) + min(window, length - 1 - i) for i in range(length))
    return out


def train_skipgram(
    corpus,
    dim=DEFAULT_DIM,
    window=DEFAULT_WINDOW,
    negatives=DEFAULT_NEGATIVES,
    epochs=DEFAULT_EPOCHS,
    learning_rate=DEFAULT_LR,
    seed=0,
    workers=1,
):
    """Train skip-gram with negative sampling on a walk corpus.

    Negatives come from the unigram distribution of walk occurrences raised
    to 3/4. The learning rate decays linearly to ``1e-4 * learning_rate``.
    Every entity listed in the corpus receives a vector, walked or not.
    """
    if not corpus.walks:
        raise AspectIRError("cannot train embeddings on an empty walk corpus")
    if dim < 1 or negatives < 1 or window < 1:
        raise ValueError("dim, window and negatives must be >= 1")
    entities = list(corpus.entities) or sorted({e for w in corpus.walks for e in w})
    missing = {e for w in corpus.walks for e in w} - set(entities)
    if missing:
        entities = sorted(set(entities) | missing)
    index = {e: i for i, e in enumerate(entities)}

    rng = np.random.default_rng(seed)
    w_in = (rng.random((len(entities), dim)) - 0.5) / dim
    w_out = np.zeros((len(entities), dim))

    tokens, offsets, lengths = _flatten(corpus, index)
    counts = np.bincount(tokens, minlength=len(entities)).astype(np.float64)
    noise = counts**NOISE_POWER
    noise /= noise.sum()
    pairs = _pairs_per_walk(lengths, window)
    pair_base = np.zeros(len(pairs), dtype=np.int64)
    np.cumsum(pairs[:-1], out=pair_base[1:])
    n_pairs = int(pairs.sum())
    total = float(max(n_pairs * epochs, 1))
    lr_min = learning_rate * MIN_LR_FRACTION
    kernel = _train_walks_parallel if workers > 1 else _train_walks_serial

    epoch_losses = []
    for epoch in range(epochs):
        negs = rng.choice(len(entities), size=(max(n_pairs, 1), negatives), p=noise)
        loss = kernel(
            tokens, offsets, pair_base, window, negs, w_in, w_out,
            learning_rate, lr_min, float(epoch * n_pairs), total,
        )
        epoch_losses.append(loss / max(n_pairs, 1))
        log.debug("epoch %d mean pair loss %.6f", epoch + 1, epoch_losses[-1])
    return EmbeddingTable(entities, w_in, w_out, epoch_losses)


def cosine_sim(table, e1, e2):
    v1 = table.vector(e1)
    v2 = table.vector(e2)
    n1 = np.linalg.norm(v1)
    n2 = np.linalg.norm(v2)
    if n1 == 0 or n2 == 0:
        raise AspectIRError("cosine similarity undefined for a zero vector")
    return float(np.clip(np.dot(v1, v2) / (n1 * n2), -1.0, 1.0))


def cosine_similarities(table, source):
    """Cosine similarity of ``source`` to every entity in the table (zero rows give 0)."""
    v = table.vector(source)
    vn = np.linalg.norm(v)
    if vn == 0:
        raise AspectIRError("cosine similarity undefined for a zero vector")
    norms = np.linalg.norm(table.vectors, axis=1)
    dots = table.vectors @ v
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(norms > 0, dots / (norms * vn), 0.0)
    return np.clip(sims, -1.0, 1.0)


def indirect_inference(table, source):
    """h': softmax of cosine similarity to ``source`` over all entities, source included."""
    if source not in table:
        raise AspectIRError(f"entity {source!r} has no embedding")
    sims = cosine_similarities(table, source)
    return EntityDistribution(softmax_over(table.entities, dict(zip(table.entities, sims.tolist()))))
