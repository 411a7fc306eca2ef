"""Generated corpus + knowledge base where aspect relevance is not keyword-visible.

For every query technique and aspect the generator writes documents that
are relevant (they discuss targets linked to the technique's siblings through
the aspect relation, but never use the aspect word) and distractors (they use
the aspect word next to the technique, without any linked target). The KB
lists only one of three targets per (technique, aspect) directly, so the
others must be inferred through meta-paths.

KB triples are oriented ``technique <aspect> target``.
"""

import json
import os
import random
from dataclasses import dataclass, field

from aspectir.aspect import ASPECTS

CATEGORIES = {
    "neural_model": {
        "query": "autoencoder",
        "siblings": ["restricted_boltzmann_machine", "convolutional_network"],
        "targets": {
            "application": ["feature_selection", "image_denoising", "anomaly_detection"],
            "algorithm": ["contrastive_divergence", "stochastic_backpropagation", "greedy_pretraining"],
            "implementation": ["memristor_crossbar", "systolic_array", "tensor_cores"],
        },
    },
    "evolutionary_method": {
        "query": "evolution_strategies",
        "siblings": ["ant_colony_optimization", "particle_swarm"],
        "targets": {
            "application": ["knapsack_problem", "vehicle_routing", "timetable_scheduling"],
            "algorithm": ["tournament_selection", "uniform_crossover", "elitist_replacement"],
            "implementation": ["matlab_toolbox", "island_cluster", "fpga_pipeline"],
        },
    },
    "data_structure": {
        "query": "hashing",
        "siblings": ["bloom_filter", "skip_list"],
        "targets": {
            "application": ["duplicate_detection", "password_storage", "caching_proxy"],
            "algorithm": ["cuckoo_probing", "linear_probing", "perfect_dictionary"],
            "implementation": ["lockfree_buckets", "simd_lanes", "cacheline_layout"],
        },
    },
    "inference_method": {
        "query": "dirichlet_process",
        "siblings": ["gaussian_process", "hidden_markov_model"],
        "targets": {
            "application": ["topic_discovery", "speaker_diarization", "species_sampling"],
            "algorithm": ["collapsed_gibbs", "stick_breaking", "variational_truncation"],
            "implementation": ["distributed_sampler", "gpu_kernels", "streaming_runtime"],
        },
    },
}

ASPECT_CUES = {
    "application": ["useful", "practitioners", "deployed", "benefit", "realworld", "casestudy"],
    "algorithm": ["procedure", "convergence", "complexity", "iteration", "proof", "bound"],
    "implementation": ["hardware", "throughput", "latency", "parallel", "prototype", "chip"],
}

RELEVANCE_GRADE = {"algorithm": 3.0, "application": 1.0, "implementation": 2.0}

FILLER = (
    "we present study approach results show method novel paper propose based analysis "
    "data model performance evaluation experiments proposed framework problem using new "
    "several different various significant improved effective efficient general large "
    "small dataset benchmark compared existing previous recent work research field area "
    "important challenging difficult simple robust accurate scalable flexible open "
    "standard common typical empirical theoretical practical quality measure metric "
    "task setting scenario case example instance sample set number value parameter "
    "function structure system technique strategy design architecture component "
    "module layer level stage phase step order term concept idea principle property "
    "representation information knowledge learning training testing validation "
    "across within between among toward over under about through during after before "
    "the of and a in to for is are with on this that by as an be from it which these our"
).split()

DISTRACTOR_WORDS = [
    "variants", "survey", "overview", "complex", "valued", "review", "perspective",
    "prospect", "wide", "broad", "future", "trends", "introduction", "tutorial",
]


def _words(entity):
    return entity.split("_")


@dataclass
class Fixture:
    directory: str
    corpus: str
    kb: str
    qrels: str
    labels: str
    queries_file: str
    queries: list
    aspects: list
    relevant: dict = field(default_factory=dict)
    distractors: dict = field(default_factory=dict)
    num_docs: int = 0
    num_entities: int = 0


def _kb_triples(rng):
    triples = set()
    entities = set()
    for cat, entry in CATEGORIES.items():
        techniques = [entry["query"]] + entry["siblings"]
        for t in techniques:
            triples.add((t, "type", cat))
        for aspect, targets in entry["targets"].items():
            # the query technique knows only its first target; siblings know all
            triples.add((entry["query"], aspect, targets[0]))
            for s in entry["siblings"]:
                for tgt in targets:
                    triples.add((s, aspect, tgt))
        entities.update(techniques)
        entities.add(cat)
        for targets in entry["targets"].values():
            entities.update(targets)
    ordered = sorted(entities)
    # sparse unrelated structure
    for _ in range(12):
        a, b = rng.sample(ordered, 2)
        triples.add((a, "related_to", b))
    return sorted(triples), ordered


def _sentence(rng, words, n):
    return [rng.choice(words) for _ in range(n)]


def _doc_text(rng, title_words, parts, filler_n):
    body = list(parts) + _sentence(rng, FILLER, filler_n)
    rng.shuffle(body)
    return " ".join(title_words), " ".join(body)


def generate_fixture(
    out_dir, seed=0, relevant_per_pair=5, distractors_per_pair=5, keyword_relevant_per_pair=2
):
    """Write corpus.jsonl, kb.tsv, qrels.tsv, labels.tsv and queries.txt into ``out_dir``."""
    rng = random.Random(seed)
    os.makedirs(out_dir, exist_ok=True)
    triples, entities = _kb_triples(rng)

    docs = []
    qrels = []
    labels = []
    relevant = {}
    distractors = {}

    def add(title, abstract):
        doc_id = f"d{len(docs):04d}"
        docs.append({"id": doc_id, "title": title, "paperAbstract": abstract})
        return doc_id

    for entry in CATEGORIES.values():
        q = entry["query"]
        qwords = _words(q)
        for aspect in ASPECTS:
            targets = entry["targets"][aspect]
            cues = ASPECT_CUES[aspect]
            rel_ids = []
            for i in range(relevant_per_pair):
                main = _words(targets[i % len(targets)])
                other = _words(targets[(i + 1) % len(targets)])
                title_words = qwords + ["for"] + main
                parts = qwords * 2 + main * 2 + other + _sentence(rng, cues, 2)
                doc_id = add(*_doc_text(rng, title_words, parts, rng.randint(30, 50)))
                rel_ids.append(doc_id)
                qrels.append((q, aspect, doc_id, RELEVANCE_GRADE[aspect]))
                # a second evaluator, occasionally less generous
                second = RELEVANCE_GRADE[aspect] if rng.random() < 0.8 else RELEVANCE_GRADE[aspect] / 2
                qrels.append((q, aspect, doc_id, second))
            # relevant documents that also happen to name the aspect
            for i in range(keyword_relevant_per_pair):
                main = _words(targets[i % len(targets)])
                title_words = qwords + [aspect] + ["in"] + main
                parts = qwords * 2 + main + [aspect] * 2 + _sentence(rng, cues, 2)
                doc_id = add(*_doc_text(rng, title_words, parts, rng.randint(30, 50)))
                rel_ids.append(doc_id)
                qrels.append((q, aspect, doc_id, RELEVANCE_GRADE[aspect]))
                qrels.append((q, aspect, doc_id, RELEVANCE_GRADE[aspect]))
            dis_ids = []
            for _ in range(distractors_per_pair):
                title_words = qwords + [aspect] + rng.sample(DISTRACTOR_WORDS, 2)
                parts = qwords * 2 + [aspect] * 2 + rng.sample(DISTRACTOR_WORDS, 3)
                doc_id = add(*_doc_text(rng, title_words, parts, rng.randint(30, 50)))
                dis_ids.append(doc_id)
                qrels.append((q, aspect, doc_id, 0.0))
                qrels.append((q, aspect, doc_id, 0.0))
            relevant[(q, aspect)] = rel_ids
            distractors[(q, aspect)] = dis_ids

    # aspect-labeled training documents about sibling techniques
    for entry in CATEGORIES.values():
        for aspect in ASPECTS:
            for s in entry["siblings"]:
                for tgt in entry["targets"][aspect][:2]:
                    parts = _words(s) + _words(tgt) * 2 + _sentence(rng, ASPECT_CUES[aspect], 3)
                    if rng.random() < 0.5:
                        parts.append(aspect)
                    title_words = _words(s) + ["and"] + _words(tgt)
                    doc_id = add(*_doc_text(rng, title_words, parts, rng.randint(25, 40)))
                    labels.append((doc_id, aspect))

    # background noise mentioning random entities
    while len(docs) < 200:
        ents = rng.sample(entities, 2)
        parts = [w for e in ents for w in _words(e)]
        title_words = _sentence(rng, FILLER[:60], 3) + _words(ents[0])
        add(*_doc_text(rng, title_words, parts, rng.randint(30, 60)))

    paths = {
        "corpus": os.path.join(out_dir, "corpus.jsonl"),
        "kb": os.path.join(out_dir, "kb.tsv"),
        "qrels": os.path.join(out_dir, "qrels.tsv"),
        "labels": os.path.join(out_dir, "labels.tsv"),
        "queries_file": os.path.join(out_dir, "queries.txt"),
    }
    with open(paths["corpus"], "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps(d, sort_keys=True) + "\n")
    with open(paths["kb"], "w", encoding="utf-8") as fh:
        fh.write("# synthetic technical KB: technique <aspect> target\n")
        for h, r, t in triples:
            fh.write(f"{h}\t{r}\t{t}\n")
    with open(paths["qrels"], "w", encoding="utf-8") as fh:
        for q, a, d, g in qrels:
            fh.write(f"{q.replace('_', ' ')}\t{a}\t{d}\t{g:g}\n")
    with open(paths["labels"], "w", encoding="utf-8") as fh:
        for d, a in labels:
            fh.write(f"{d}\t{a}\n")
    queries = [entry["query"].replace("_", " ") for entry in CATEGORIES.values()]
    with open(paths["queries_file"], "w", encoding="utf-8") as fh:
        fh.write("\n".join(queries) + "\n")

    return Fixture(
        directory=out_dir,
        queries=queries,
        aspects=list(ASPECTS),
        relevant=relevant,
        distractors=distractors,
        num_docs=len(docs),
        num_entities=len(entities),
        **paths,
    )


def random_corpus_file(path, num_docs, seed=0, vocab_size=5000, mean_len=150):
    """Zipf-ish random abstracts for scale tests."""
    rng = random.Random(seed)
    vocab = [f"t{i}" for i in range(vocab_size)]
    weights = [1.0 / (i + 1) for i in range(vocab_size)]
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(num_docs):
            n = max(5, int(rng.gauss(mean_len, mean_len / 4)))
            words = rng.choices(vocab, weights=weights, k=n)
            rec = {"id": f"r{i:06d}", "title": " ".join(words[:8]), "paperAbstract": " ".join(words[8:])}
            fh.write(json.dumps(rec) + "\n")
    return path
