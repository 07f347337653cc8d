#!/usr/bin/env python3
"""Writes the toy corpus dump and manifest.json of its expected counts.

Run from any directory: python3 generate.py
"""

import json
import random
from collections import Counter
from pathlib import Path

OUT = Path(__file__).resolve().parent
SEED = 20240601

THEMES = {
    "machine translation": (
        "translation neural machine encoder decoder attention bilingual parallel corpus "
        "sentence alignment bleu language target source lexicon subword multilingual "
        "transformer beam search decoding morphology fluency adequacy reordering vocabulary "
        "pivot lowresource backtranslation domain adaptation terminology"
    ).split(),
    "image recognition": (
        "image convolutional visual object detection segmentation pixel camera scene "
        "recognition classification feature pooling augmentation resolution texture "
        "bounding box label dataset imagenet backbone pretrained residual illumination "
        "occlusion keypoint contour photograph spatial"
    ).split(),
    "protein structure": (
        "protein folding residue amino sequence structure molecular binding enzyme "
        "genome mutation conformation backbone sidechain crystallography ligand docking "
        "peptide chain helix sheet homology evolutionary biology cellular expression "
        "assay receptor affinity thermodynamic"
    ).split(),
    "reinforcement learning": (
        "reward policy agent environment reinforcement exploration exploitation value "
        "qlearning actor critic trajectory robot control simulation episode markov "
        "decision planning return discount bandit regret locomotion manipulation "
        "sparse curriculum offline transition"
    ).split(),
    "graph databases": (
        "graph database query index storage transaction join relational schema vertex "
        "edge traversal path subgraph pattern partition distributed consistency latency "
        "throughput cache planner optimizer cardinality replication sharding workload "
        "benchmark compression"
    ).split(),
}

SHARED = (
    "method approach results propose evaluate performance model data experiments "
    "baseline improve efficient novel framework analysis study large scale learning "
    "show significant accuracy"
).split()

COUNTRIES = ["US", "DE", "FR", "JP", "CN", "GB", "CA", "IN", "BR", "KR"]
N_PAPERS = 200
N_AUTHORS = 180
N_INSTITUTIONS = 30
N_CITATIONS = 950
DANGLING = ["P9001", "P9002", "P9003"]


def words(rng, theme_vocab, n, shared_rate):
    out = []
    for _ in range(n):
        if rng.random() < shared_rate:
            out.append(rng.choice(SHARED))
        else:
            out.append(rng.choice(theme_vocab))
    return out


def main():
    rng = random.Random(SEED)
    theme_names = list(THEMES)

    institutions = []
    for i in range(N_INSTITUTIONS):
        institutions.append({"id": f"I{i + 1:02d}", "country": COUNTRIES[i % len(COUNTRIES)]})

    authors = []
    for i in range(N_AUTHORS):
        theme = theme_names[i % len(theme_names)]
        roll = rng.random()
        if roll < 0.05:
            insts = []
        elif roll < 0.2:
            insts = rng.sample(institutions, 2)
        else:
            insts = [rng.choice(institutions)]
        inst_ids = sorted(x["id"] for x in insts)
        countries = sorted({x["country"] for x in insts})
        authors.append(
            {
                "author_id": f"A{i + 1:03d}",
                "name": f"Author {i + 1:03d}",
                "institution_ids": inst_ids,
                "country_codes": countries,
                "_theme": theme,
            }
        )

    papers = []
    for i in range(N_PAPERS):
        theme = theme_names[i % len(theme_names)]
        vocab = THEMES[theme]
        year = 2015 + (i // 5) % 10
        month = 1 + (i * 5) % 12
        title_words = words(rng, vocab, rng.randint(5, 8), 0.1)
        abstract_words = words(rng, vocab, rng.randint(30, 55), 0.3)
        if theme == "machine translation" and rng.random() < 0.7:
            title_words[rng.randrange(len(title_words))] = "translation"
            abstract_words[:2] = ["machine", "translation"]
        elif theme != "machine translation" and rng.random() < 0.15:
            abstract_words[rng.randrange(len(abstract_words))] = "machine"
        papers.append(
            {
                "paper_id": f"P{i + 1:04d}",
                "arxiv_id": f"{year % 100:02d}{month:02d}.{i + 1:05d}",
                "title": " ".join(title_words).capitalize(),
                "abstract": " ".join(abstract_words).capitalize() + ".",
                "publication_date": f"{year}-{month:02d}-15",
                "subject": theme,
                "_year": year,
                "_theme": theme,
            }
        )

    by_theme = {t: [a for a in authors if a["_theme"] == t] for t in theme_names}
    authorship = set()
    for p in papers:
        pool = by_theme[p["_theme"]]
        for a in rng.sample(pool, rng.randint(1, 4)):
            authorship.add((a["author_id"], p["paper_id"]))
        if rng.random() < 0.1:
            authorship.add((rng.choice(authors)["author_id"], p["paper_id"]))
    covered = {a for a, _ in authorship}
    for a in authors:
        if a["author_id"] not in covered:
            same = [p for p in papers if p["_theme"] == a["_theme"]]
            authorship.add((a["author_id"], rng.choice(same)["paper_id"]))

    citations = set()
    while len(citations) < N_CITATIONS:
        citing = rng.choice(papers)
        if rng.random() < 0.8:
            pool = [p for p in papers if p["_theme"] == citing["_theme"]]
        else:
            pool = papers
        cited = rng.choice(pool)
        if cited["paper_id"] != citing["paper_id"]:
            citations.add((citing["paper_id"], cited["paper_id"]))
    citation_lines = sorted(citations)
    dangling_lines = [(papers[k]["paper_id"], d) for k, d in zip((0, 5, 10), DANGLING)]

    def dump(name, rows):
        with open(OUT / name, "w", encoding="utf-8") as f:
            for r in rows:
                f.write(json.dumps(r, sort_keys=True) + "\n")

    dump("papers.jsonl", [{k: v for k, v in p.items() if not k.startswith("_")} for p in papers])
    dump("authors.jsonl", [{k: v for k, v in a.items() if not k.startswith("_")} for a in authors])
    dump("authorship.jsonl", [{"author_id": a, "paper_id": p} for a, p in sorted(authorship)])
    dump(
        "citations.jsonl",
        [{"citing_paper_id": c, "cited_paper_id": d} for c, d in citation_lines + dangling_lines],
    )

    author_by_id = {a["author_id"]: a for a in authors}
    paper_insts = {}
    paper_countries = {}
    for a, p in authorship:
        paper_insts.setdefault(p, set()).update(author_by_id[a]["institution_ids"])
        paper_countries.setdefault(p, set()).update(author_by_id[a]["country_codes"])
    graph_authors = {a for a, _ in authorship}
    graph_insts = set().union(*paper_insts.values())
    graph_countries = set().union(*paper_countries.values())
    years = Counter(p["_year"] for p in papers)

    manifest = {
        "seed": SEED,
        "stats": {
            "paper_count": len(papers),
            "author_count": len(authors),
            "institution_count": len({i for a in authors for i in a["institution_ids"]}),
            "country_count": len({c for a in authors for c in a["country_codes"]}),
            "citation_count": len(citation_lines),
            "avg_citations_per_paper": round(len(citation_lines) / len(papers), 2),
        },
        "dangling_citations": len(dangling_lines),
        "themes": theme_names,
        "papers_by_theme": dict(sorted(Counter(p["_theme"] for p in papers).items())),
        "papers_by_year": {str(y): n for y, n in sorted(years.items())},
        "full_graph": {
            "description": "all papers retrieved, topic = index of subject in themes",
            "nodes_by_kind": {
                "paper": len(papers),
                "author": len(graph_authors),
                "institution": len(graph_insts),
                "country": len(graph_countries),
                "topic": len(theme_names),
                "year": len(years),
            },
            "edges_by_label": {
                "authorship": len(authorship),
                "affiliated_with": sum(len(v) for v in paper_insts.values()),
                "located_in": sum(len(v) for v in paper_countries.values()),
                "published_in": len(papers),
                "has_topic": len(papers),
                "cites": len(citation_lines),
            },
        },
    }
    g = manifest["full_graph"]
    g["node_count"] = sum(g["nodes_by_kind"].values())
    g["edge_count"] = sum(g["edges_by_label"].values())
    with open(OUT / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
