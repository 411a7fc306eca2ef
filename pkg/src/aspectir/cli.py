"""Stage-oriented command line: index, kb-stats, metapaths, train-embeddings,
aspect-prior, search, evaluate.

Settings come from ``--config`` (flat ``key = value``), then ASPECTIR_SEED,
then explicit flags.
"""

import argparse
import logging
import os
import sys

from aspectir.aspect import build_aspect_model, read_labels
from aspectir.config import load_config
from aspectir.corpus import CorpusIndex, ingest_corpus
from aspectir.embed import generate_walks, train_skipgram
from aspectir.errors import AspectIRError, EntityNotInKBError
from aspectir.evalbench import benchmark_queries, load_qrels, read_queries, run_benchmark
from aspectir.kb import load_kb
from aspectir.langmodel import format_ranking_tsv
from aspectir.metapath import MetaPathSet, enumerate_metapaths
from aspectir.pipeline import (
    SYSTEMS,
    embedding_file,
    load_retriever,
    metapath_file,
    prior_file,
)

log = logging.getLogger("aspectir")


def _require(value, what):
    if not value:
        raise AspectIRError(f"missing {what}")
    return value


def _write_lines(path, lines):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def cmd_index(cfg, args):
    corpus = _require(args.corpus or cfg.corpus, "corpus path (--corpus)")
    out_dir = _require(args.out or cfg.index_dir, "index directory (--out)")
    index = ingest_corpus(corpus, cfg.field_map)
    index.save(out_dir)
    s = index.stats()
    print(f"{s['documents']} documents, {s['vocabulary']} vocabulary terms, {s['tokens']} tokens")
    return 0


def cmd_kb_stats(cfg, args):
    graph = load_kb(_require(args.kb or cfg.kb, "knowledge base path (--kb)"))
    s = graph.stats()
    print(f"{s['entities']} entities, {s['edges']} edges (inverses included), {s['relations']} relation labels")
    for label, n in s["label_counts"].items():
        print(f"{label}\t{n}")
    return 0


def _aspect_relation_pairs(cfg, args):
    if args.relation:
        return [(args.aspect or args.relation, args.relation)]
    aspects = [args.aspect] if args.aspect else list(cfg.aspects)
    mixture = cfg.mixture()
    return [(a, mixture.relation_for(a)) for a in aspects]


def cmd_metapaths(cfg, args):
    graph = load_kb(_require(args.kb or cfg.kb, "knowledge base path (--kb)"))
    pairs = _aspect_relation_pairs(cfg, args)
    if args.out and len(pairs) != 1:
        raise AspectIRError("--out needs a single --relation or --aspect")
    for aspect, relation in pairs:
        mp_set = enumerate_metapaths(
            graph, relation, cfg.max_metapath_len, exclude_direct=cfg.exclude_direct
        )
        out = args.out or metapath_file(_require(cfg.model_dir, "model directory (--model-dir)"), aspect)
        _write_lines(out, mp_set.to_tsv_lines())
        print(f"{relation}: {len(mp_set)} meta-paths (max length {cfg.max_metapath_len}) -> {out}")
    return 0


def cmd_train_embeddings(cfg, args):
    graph = load_kb(_require(args.kb or cfg.kb, "knowledge base path (--kb)"))
    pairs = _aspect_relation_pairs(cfg, args)
    if (args.out or args.metapaths) and len(pairs) != 1:
        raise AspectIRError("--metapaths/--out need a single --relation or --aspect")
    for aspect, relation in pairs:
        mp_path = args.metapaths or metapath_file(_require(cfg.model_dir, "model directory"), aspect)
        mp_set = MetaPathSet.load(mp_path, relation=relation)
        paths = mp_set.top(cfg.top_k_metapaths)
        if not paths:
            raise AspectIRError(f"no meta-paths in {mp_path}; cannot generate walks")
        walks = generate_walks(graph, paths, cfg.walks_per_node, cfg.walk_len, cfg.seed, cfg.workers)
        table = train_skipgram(
            walks, cfg.dim, cfg.window, cfg.negatives, cfg.epochs, cfg.learning_rate,
            cfg.seed, cfg.workers,
        )
        out = args.out or embedding_file(cfg.model_dir, aspect)
        os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
        table.save(out)
        print(f"{aspect}: {len(walks)} walks over {len(paths)} meta-paths, "
              f"{len(table)} x {table.dim} embeddings -> {out}")
    return 0


def cmd_aspect_prior(cfg, args):
    index = CorpusIndex.load(_require(args.index or cfg.index_dir, "index directory (--index)"))
    labels_path = args.labels or cfg.labels
    labels = read_labels(labels_path) if labels_path else {}
    aspects = [args.aspect] if args.aspect else list(cfg.aspects)
    if args.out and len(aspects) != 1:
        raise AspectIRError("--out needs a single --aspect")
    for aspect in aspects:
        model = build_aspect_model(index, aspect, labels, cfg.heuristic_pool, cfg.mu)
        out = args.out or prior_file(_require(cfg.model_dir, "model directory (--model-dir)"), aspect)
        os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
        model.save(out)
        print(f"{aspect}: prior over {len(model.prior)} terms from {len(model.source_doc_ids)} documents -> {out}")
    return 0


def _retriever(cfg, aspects):
    return load_retriever(
        _require(cfg.index_dir, "index directory (--index)"),
        kb_path=cfg.kb,
        model_dir=cfg.model_dir,
        aspects=aspects,
        cfg=cfg.mixture(),
        feedback=cfg.feedback(),
        k=cfg.k,
    )


def cmd_search(cfg, args):
    system = args.system
    retriever = _retriever(cfg, [args.aspect])
    ranked = retriever.system(system)(args.query, args.aspect)
    print(
        f"# system={system} lambda={cfg.lambda_} beta={cfg.beta} mu={cfg.mu} "
        f"candidates={cfg.candidate_pool_size} k={cfg.k}"
    )
    for line in format_ranking_tsv(args.query, args.aspect, ranked):
        print(line)
    return 0


def cmd_evaluate(cfg, args):
    qrels = load_qrels(_require(cfg.qrels, "qrels path"))
    queries = read_queries(cfg.queries) if cfg.queries else benchmark_queries()
    names = args.systems.split(",") if args.systems else list(SYSTEMS)
    retriever = _retriever(cfg, list(cfg.aspects))
    systems = retriever.systems(names)
    report = run_benchmark(queries, list(cfg.aspects), systems, qrels)
    out_dir = _require(args.out or cfg.out_dir, "output directory (--out)")
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.tsv"), "w", encoding="utf-8") as fh:
        fh.write(report.to_tsv())
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.to_table())
    with open(os.path.join(out_dir, "per_query.tsv"), "w", encoding="utf-8") as fh:
        fh.write(report.per_query_tsv())
    skipped = sum(report.skipped.values())
    print(report.to_table(), end="")
    if skipped:
        print(f"# {skipped} (system, aspect, query) runs skipped: entity not in KB")
    return 0


COMMANDS = {
    "index": cmd_index,
    "kb-stats": cmd_kb_stats,
    "metapaths": cmd_metapaths,
    "train-embeddings": cmd_train_embeddings,
    "aspect-prior": cmd_aspect_prior,
    "search": cmd_search,
    "evaluate": cmd_evaluate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="aspectir", description="Aspect-based retrieval of scientific abstracts.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        return p

    p = common(sub.add_parser("index", help="build and persist the corpus index"))
    p.add_argument("--corpus")
    p.add_argument("--out", help="index directory")

    p = common(sub.add_parser("kb-stats", help="summarize a knowledge base"))
    p.add_argument("--kb")

    p = common(sub.add_parser("metapaths", help="enumerate meta-paths for a relation"))
    p.add_argument("--kb")
    p.add_argument("--relation")
    p.add_argument("--aspect")
    p.add_argument("--max-len", dest="max_metapath_len", type=int)
    p.add_argument("--include-direct", action="store_true", help="allow the explained edge itself")
    p.add_argument("--model-dir")
    p.add_argument("--out")

    p = common(sub.add_parser("train-embeddings", help="meta-path walks + skip-gram embeddings"))
    p.add_argument("--kb")
    p.add_argument("--relation")
    p.add_argument("--aspect")
    p.add_argument("--metapaths", help="meta-path TSV (default: model dir)")
    p.add_argument("--top-k", dest="top_k_metapaths", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--walks-per-node", type=int)
    p.add_argument("--walk-len", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--model-dir")
    p.add_argument("--out")

    p = common(sub.add_parser("aspect-prior", help="estimate the aspect term prior"))
    p.add_argument("--index")
    p.add_argument("--aspect")
    p.add_argument("--labels")
    p.add_argument("--heuristic-pool", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--model-dir")
    p.add_argument("--out")

    def ranking_flags(p):
        p.add_argument("--index")
        p.add_argument("--kb")
        p.add_argument("--model-dir")
        p.add_argument("--lambda", dest="lambda_", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--mu", type=float)
        p.add_argument("--candidates", dest="candidate_pool_size", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--fb-docs", type=int)
        p.add_argument("--fb-terms", type=int)
        p.add_argument("--orig-weight", type=float)

    p = common(sub.add_parser("search", help="rank documents for one query and aspect"))
    ranking_flags(p)
    p.add_argument("--query", required=True)
    p.add_argument("--aspect", required=True)
    p.add_argument("--system", choices=SYSTEMS, default="mm")

    p = common(sub.add_parser("evaluate", help="benchmark all systems against relevance judgments"))
    ranking_flags(p)
    p.add_argument("--qrels")
    p.add_argument("--queries")
    p.add_argument("--aspects", help="comma-separated aspect names")
    p.add_argument("--systems", help=f"comma-separated subset of {','.join(SYSTEMS)}")
    p.add_argument("--out", help="report directory")
    return parser


# argparse dest -> RunConfig field
_OVERRIDES = {
    "seed": "seed", "workers": "workers", "max_metapath_len": "max_metapath_len",
    "top_k_metapaths": "top_k_metapaths", "dim": "dim", "window": "window",
    "negatives": "negatives", "walks_per_node": "walks_per_node", "walk_len": "walk_len",
    "epochs": "epochs", "learning_rate": "learning_rate", "heuristic_pool": "heuristic_pool",
    "mu": "mu", "lambda_": "lambda_", "beta": "beta", "candidate_pool_size": "candidate_pool_size",
    "k": "k", "fb_docs": "fb_docs", "fb_terms": "fb_terms", "orig_weight": "orig_weight",
    "model_dir": "model_dir", "kb": "kb", "index": "index_dir", "qrels": "qrels",
    "queries": "queries", "labels": "labels",
}


def _overrides(args):
    ov = {field: getattr(args, dest) for dest, field in _OVERRIDES.items() if hasattr(args, dest)}
    if getattr(args, "include_direct", False):
        ov["exclude_direct"] = False
    if getattr(args, "aspects", None):
        ov["aspects"] = tuple(a.strip() for a in args.aspects.split(",") if a.strip())
    return ov


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config, _overrides(args))
        return COMMANDS[args.command](cfg, args)
    except EntityNotInKBError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (AspectIRError, OSError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
