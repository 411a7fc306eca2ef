"""Flat ``key = value`` run configuration."""

import dataclasses
import os
from dataclasses import dataclass, field

from aspectir.aspect import ASPECTS, MixtureConfig
from aspectir.embed import (
    DEFAULT_DIM,
    DEFAULT_EPOCHS,
    DEFAULT_LR,
    DEFAULT_NEGATIVES,
    DEFAULT_WALK_LEN,
    DEFAULT_WALKS_PER_NODE,
    DEFAULT_WINDOW,
)
from aspectir.errors import AspectIRError, FormatError
from aspectir.langmodel import DEFAULT_MU
from aspectir.pipeline import FeedbackConfig

SEED_ENV = "ASPECTIR_SEED"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class RunConfig:
    # paths
    corpus: str = None
    kb: str = None
    qrels: str = None
    labels: str = None
    queries: str = None
    index_dir: str = None
    model_dir: str = None
    out_dir: str = None
    # mixture model
    aspects: tuple = ASPECTS
    lambda_: float = 0.5
    beta: float = 0.5
    mu: float = DEFAULT_MU
    max_metapath_len: int = 3
    top_k_metapaths: int = 5
    candidate_pool_size: int = 1000
    heuristic_pool: int = 1000
    exclude_direct: bool = True
    # embeddings
    dim: int = DEFAULT_DIM
    window: int = DEFAULT_WINDOW
    negatives: int = DEFAULT_NEGATIVES
    walks_per_node: int = DEFAULT_WALKS_PER_NODE
    walk_len: int = DEFAULT_WALK_LEN
    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LR
    seed: int = 0
    workers: int = 1
    # baselines and output
    fb_docs: int = 1000
    fb_terms: int = 100
    orig_weight: float = 0.75
    k: int = 10
    relation_map: dict = field(default_factory=dict)
    field_map: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("lambda_", "beta", "orig_weight"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise AspectIRError(f"{name.rstrip('_')} must lie in [0, 1], got {v}")
        if self.mu <= 0:
            raise AspectIRError("mu must be > 0")
        if self.learning_rate <= 0:
            raise AspectIRError("learning_rate must be > 0")
        for name in (
            "max_metapath_len", "top_k_metapaths", "candidate_pool_size", "heuristic_pool",
            "dim", "window", "negatives", "walks_per_node", "workers", "fb_docs", "fb_terms", "k",
        ):
            if getattr(self, name) < 1:
                raise AspectIRError(f"{name} must be >= 1")
        if self.walk_len < 2:
            raise AspectIRError("walk_len must be >= 2")
        if self.epochs < 0:
            raise AspectIRError("epochs must be >= 0")
        if not self.aspects:
            raise AspectIRError("at least one aspect is required")

    def mixture(self):
        return MixtureConfig(
            lambda_=self.lambda_,
            beta=self.beta,
            mu=self.mu,
            max_metapath_len=self.max_metapath_len,
            top_k_metapaths=self.top_k_metapaths,
            candidate_pool_size=self.candidate_pool_size,
            heuristic_pool=self.heuristic_pool,
            relation_map=dict(self.relation_map),
        )

    def feedback(self):
        return FeedbackConfig(self.fb_docs, self.fb_terms, self.orig_weight)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_KEY_ALIASES = {"lambda": "lambda_"}


def _coerce(name, raw):
    default = _FIELDS[name].default
    if name == "aspects":
        return tuple(a.strip() for a in raw.split(",") if a.strip())
    if isinstance(default, bool):
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config(lines, path=None):
    """Turn ``key = value`` lines into RunConfig keyword arguments."""
    values = {}
    relation_map = {}
    field_map = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError("expected key = value", path=path, line=lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key.startswith("relation."):
            relation_map[key[len("relation."):]] = raw
            continue
        if key.startswith("field."):
            sub = key[len("field."):]
            if sub not in ("id", "title", "abstract"):
                raise FormatError(f"unknown field mapping {key!r}", path=path, line=lineno)
            field_map[sub] = raw
            continue
        name = _KEY_ALIASES.get(key, key)
        if name not in _FIELDS or key in ("relation_map", "field_map", "lambda_"):
            raise FormatError(f"unknown config key {key!r}", path=path, line=lineno)
        try:
            values[name] = _coerce(name, raw)
        except ValueError as exc:
            raise FormatError(f"{key}: {exc}", path=path, line=lineno) from None
    if relation_map:
        values["relation_map"] = relation_map
    if field_map:
        values["field_map"] = field_map
    return values


def _resolve_paths(values, base):
    for name in ("corpus", "kb", "qrels", "labels", "queries", "index_dir", "model_dir", "out_dir"):
        v = values.get(name)
        if v and not os.path.isabs(v):
            values[name] = os.path.normpath(os.path.join(base, v))
    return values


def load_config(path=None, overrides=None, env=None):
    """Defaults < config file < ASPECTIR_SEED < explicit ``overrides``.

    Relative paths inside the file resolve against the file's directory.
    """
    values = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            values = parse_config(fh.read().splitlines(), path=path)
        _resolve_paths(values, os.path.dirname(os.path.abspath(path)))
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            values["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise AspectIRError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None
    for name, v in (overrides or {}).items():
        if v is None:
            continue
        if name not in _FIELDS:
            raise AspectIRError(f"unknown setting {name!r}")
        values[name] = v
    return RunConfig(**values)
