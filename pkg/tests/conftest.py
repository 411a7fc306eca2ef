import random

import pytest

from aspectir.corpus import CorpusIndex, Document
from aspectir.kb import KBGraph, Triple


def make_index(docs):
    """Index from {doc_id: token list or text}; token lists are joined with spaces."""
    documents = []
    for doc_id, body in docs.items():
        text = " ".join(body) if isinstance(body, (list, tuple)) else body
        documents.append(Document.from_text(doc_id, "", text))
    return CorpusIndex.from_documents(documents)


def make_graph(triples):
    return KBGraph([Triple(*t) for t in triples])


def random_docs(rng, n_docs, vocab_size=8, min_len=1, max_len=12):
    vocab = [f"w{i}" for i in range(vocab_size)]
    return {
        f"d{i:02d}": [rng.choice(vocab) for _ in range(rng.randint(min_len, max_len))]
        for i in range(n_docs)
    }


def random_triples(rng, n_nodes, n_labels, n_edges):
    nodes = [f"n{i}" for i in range(n_nodes)]
    labels = [f"r{i}" for i in range(n_labels)]
    return sorted({(rng.choice(nodes), rng.choice(labels), rng.choice(nodes)) for _ in range(n_edges)})


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def toy_kb_file(tmp_path):
    path = tmp_path / "kb.tsv"
    path.write_text(
        "# toy\n"
        "speech_recognition\tapplication\thidden_markov_model\n"
        "hidden_markov_model\ttype\tgenerative_model\n"
        "speech_recognition\tapplication\tx\n"
        "x\ttype\tgenerative_model\n"
    )
    return path


@pytest.fixture(scope="session")
def synthetic(tmp_path_factory):
    from aspectir.synthetic import generate_fixture

    return generate_fixture(str(tmp_path_factory.mktemp("fixture")), seed=0)


@pytest.fixture(scope="session")
def trained(synthetic):
    """Retriever with meta-paths, embeddings and priors for every fixture aspect."""
    from aspectir.aspect import build_aspect_model, read_labels
    from aspectir.corpus import ingest_corpus
    from aspectir.embed import generate_walks, train_skipgram
    from aspectir.kb import load_kb
    from aspectir.metapath import enumerate_metapaths
    from aspectir.pipeline import Retriever

    index = ingest_corpus(synthetic.corpus)
    graph = load_kb(synthetic.kb)
    labels = read_labels(synthetic.labels)
    r = Retriever(index, graph)
    for aspect in synthetic.aspects:
        mp = enumerate_metapaths(graph, aspect, r.cfg.max_metapath_len)
        r.mp_sets[aspect] = mp
        walks = generate_walks(graph, mp.top(r.cfg.top_k_metapaths), seed=7)
        r.embeddings[aspect] = train_skipgram(walks, seed=7)
        r.aspect_models[aspect] = build_aspect_model(index, aspect, labels)
    return r


def run_pipeline(fixture, workdir, seed=0, workers=1, settings=None):
    """Every CLI stage over a fixture; returns the evaluation output directory.

    ``settings`` go into a ``key = value`` config file shared by all stages.
    """
    import os

    from aspectir.cli import main

    workdir = str(workdir)
    os.makedirs(workdir, exist_ok=True)
    index_dir = f"{workdir}/index"
    model_dir = f"{workdir}/models"
    out_dir = f"{workdir}/report"
    config = f"{workdir}/run.cfg"
    with open(config, "w") as fh:
        fh.writelines(f"{k} = {v}\n" for k, v in (settings or {}).items())
    common = ["--config", config, "--seed", str(seed), "--workers", str(workers)]
    steps = [
        ["index", "--corpus", fixture.corpus, "--out", index_dir, *common],
        ["metapaths", "--kb", fixture.kb, "--model-dir", model_dir, *common],
        ["train-embeddings", "--kb", fixture.kb, "--model-dir", model_dir, *common],
        ["aspect-prior", "--index", index_dir, "--labels", fixture.labels, "--model-dir", model_dir, *common],
        [
            "evaluate", "--index", index_dir, "--kb", fixture.kb, "--model-dir", model_dir,
            "--qrels", fixture.qrels, "--queries", fixture.queries_file,
            "--aspects", ",".join(fixture.aspects), "--out", out_dir, *common,
        ],
    ]
    for argv in steps:
        if main(argv) != 0:
            raise RuntimeError(f"stage failed: {argv[0]}")
    return out_dir
