"""Abstract ingestion, tokenization and the inverted index."""

import json
import os
import re
from collections import Counter
from dataclasses import dataclass, field

from aspectir.errors import AspectIRError, FormatError

INDEX_FORMAT = "aspectir-index"
INDEX_VERSION = 1
INDEX_FILE = "index.json"

DEFAULT_FIELD_MAP = {"id": "id", "title": "title", "abstract": "paperAbstract"}

_SPLIT = re.compile(r"[^0-9a-z]+")


def tokenize(text):
    """Lowercase ``text`` and split it on every non-alphanumeric character.

    No stemming and no stopword removal. Underscores count as separators, so
    entity ids such as ``hidden_markov_model`` yield their component words.
    """
    if not text:
        return []
    return [tok for tok in _SPLIT.split(text.lower()) if tok]


@dataclass
class Document:
    doc_id: str
    title: str
    abstract: str
    tokens: list = field(default_factory=list)

    @classmethod
    def from_text(cls, doc_id, title, abstract):
        title = title or ""
        abstract = abstract or ""
        return cls(doc_id, title, abstract, tokenize(title) + tokenize(abstract))


class CorpusIndex:
    """Immutable inverted index with the collection statistics the language models need.

    ``postings`` maps a term to ``(doc_id, tf)`` pairs in ascending doc_id order,
    ``doc_tf`` is the forward index doc_id -> {term: tf}.
    """

    def __init__(self, doc_tf, titles):
        self.doc_tf = doc_tf
        self.titles = titles
        self.doc_ids = sorted(doc_tf)
        self.doc_len = {d: sum(tf.values()) for d, tf in doc_tf.items()}
        coll = Counter()
        postings = {}
        for d in self.doc_ids:
            for term, tf in doc_tf[d].items():
                coll[term] += tf
                postings.setdefault(term, []).append((d, tf))
        self.coll_tf = dict(coll)
        self.postings = postings
        self.total_tokens = sum(self.doc_len.values())
        self.vocab = frozenset(self.coll_tf)
        self._title_tokens = {d: frozenset(tokenize(t)) for d, t in titles.items()}

    @classmethod
    def from_documents(cls, documents):
        doc_tf = {}
        titles = {}
        for doc in documents:
            if not doc.doc_id:
                raise AspectIRError("document id must be nonempty")
            if doc.doc_id in doc_tf:
                raise AspectIRError(f"duplicate doc_id {doc.doc_id!r}")
            doc_tf[doc.doc_id] = dict(Counter(doc.tokens))
            titles[doc.doc_id] = doc.title
        return cls(doc_tf, titles)

    def __len__(self):
        return len(self.doc_ids)

    def __contains__(self, doc_id):
        return doc_id in self.doc_tf

    @property
    def num_docs(self):
        return len(self.doc_ids)

    def tf(self, term, doc_id):
        return self.doc_tf[doc_id].get(term, 0)

    def title_tokens(self, doc_id):
        return self._title_tokens[doc_id]

    def check_doc(self, doc_id):
        if doc_id not in self.doc_tf:
            raise KeyError(f"unknown doc_id {doc_id!r}")

    def stats(self):
        return {
            "documents": self.num_docs,
            "vocabulary": len(self.vocab),
            "tokens": self.total_tokens,
        }

    # persistence

    def save(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        payload = {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "documents": [
                {"id": d, "title": self.titles[d], "tf": self.doc_tf[d]}
                for d in self.doc_ids
            ],
        }
        path = os.path.join(out_dir, INDEX_FILE)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")
        return path

    @classmethod
    def load(cls, index_dir):
        path = os.path.join(index_dir, INDEX_FILE)
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != INDEX_FORMAT:
            raise FormatError("not an aspectir index", path=path)
        if payload.get("version") != INDEX_VERSION:
            raise FormatError(f"unsupported index version {payload.get('version')!r}", path=path)
        doc_tf = {}
        titles = {}
        for rec in payload["documents"]:
            doc_tf[rec["id"]] = {t: int(n) for t, n in rec["tf"].items()}
            titles[rec["id"]] = rec["title"]
        return cls(doc_tf, titles)


def iter_documents(path, field_map=None):
    """Yield ``(line_number, Document)`` pairs from a JSON-lines corpus file."""
    fields = dict(DEFAULT_FIELD_MAP)
    if field_map:
        fields.update(field_map)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"malformed JSON ({exc.msg})", path=path, line=lineno) from None
            if not isinstance(rec, dict):
                raise FormatError("expected a JSON object", path=path, line=lineno)
            doc_id = rec.get(fields["id"])
            if doc_id is None or str(doc_id) == "":
                raise FormatError(f"missing {fields['id']!r} field", path=path, line=lineno)
            yield lineno, Document.from_text(
                str(doc_id), rec.get(fields["title"]), rec.get(fields["abstract"])
            )


def ingest_corpus(path, field_map=None):
    """Build a :class:`CorpusIndex` from a JSON-lines file.

    Documents without an abstract are indexed from their title alone.
    """
    documents = []
    seen = set()
    for lineno, doc in iter_documents(path, field_map):
        if doc.doc_id in seen:
            raise FormatError(f"duplicate doc_id {doc.doc_id!r}", path=path, line=lineno)
        seen.add(doc.doc_id)
        documents.append(doc)
    return CorpusIndex.from_documents(documents)


def collection_prob(index, term):
    """P(w|C): collection frequency of ``term`` over the total token count."""
    if index.total_tokens == 0:
        raise AspectIRError("collection probability undefined for an empty index")
    return index.coll_tf.get(term, 0) / index.total_tokens
