"""Regenerate the static test corpus in ./corpus (deterministic)."""

import json
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent / "corpus"
N = 100

GENRES = ["thriller", "comedy", "drama", "horror", "sci-fi", "romance", "western", "animation"]
PHRASES = [
    "The pacing dragged in the middle but the ending was worth it.",
    "Stunning cinematography, weak dialogue.",
    "My kids loved the soundtrack.",
    "Too long by half an hour.",
    "The lead performance carried the whole film.",
    "Predictable plot, but charming anyway.",
    "Genuinely scary in places.",
    "I laughed more than I expected to.",
    "The effects have aged badly.",
    "A slow burn that rewards patience.",
]
TEMPLATES = [
    "Any good movies like Heat?",
    "I want something scary but not gory.",
    "Recommend me a feel-good comedy for tonight.",
    "What should I watch if I loved Arrival?",
    "Looking for a classic noir with a strong lead.",
    "",
    "Something short and funny for a weeknight?",
    "Which westerns hold up today?",
]


def main():
    rng = np.random.default_rng(2024)
    HERE.mkdir(exist_ok=True)
    centers = rng.normal(0, 3, size=(4, 8))
    with open(HERE / "seed.jsonl", "w") as seed, open(HERE / "review_emb.jsonl", "w") as rev, open(
        HERE / "metadata_emb.jsonl", "w"
    ) as meta, open(HERE / "user_emb.jsonl", "w") as user:
        for i in range(N):
            n_rev = 2 if i % 17 == 0 else int(rng.integers(3, 6))
            reviews = [PHRASES[j] for j in rng.choice(len(PHRASES), n_rev, replace=False)]
            genre = GENRES[i % len(GENRES)]
            sample = {
                "item_id": f"m{i:03d}",
                "metadata": {"title": f"Film {i:03d}", "genres": genre},
                "reviews": reviews,
                "user_ids": [f"u{int(u)}" for u in rng.integers(0, 50, size=3)],
            }
            seed.write(json.dumps(sample) + "\n")
            x = centers[i % 4] + rng.normal(0, 1, size=8)
            rev.write(json.dumps({"item_id": sample["item_id"], "vector": [round(float(v), 6) for v in x]}) + "\n")
            m = np.eye(4)[GENRES.index(genre) % 4] + rng.normal(0, 0.1, size=4)
            meta.write(json.dumps({"item_id": sample["item_id"], "vector": [round(float(v), 6) for v in m]}) + "\n")
            u = rng.normal(0, 1, size=4)
            user.write(json.dumps({"item_id": sample["item_id"], "vector": [round(float(v), 6) for v in u]}) + "\n")
    (HERE / "templates.txt").write_text("\n".join(TEMPLATES) + "\n")
    run = {
        "strategy": "js",
        "budget_rounds": 2,
        "batch_per_round": 2,
        "queries_per_item": 2,
        "lambda": 1.0,
        "kmeans_k": 4,
        "seed": 7,
        "teacher": {"provider": "mock"},
        "paths": {
            "seed": "seed.jsonl",
            "templates": "templates.txt",
            "review_emb": "review_emb.jsonl",
            "metadata_emb": "metadata_emb.jsonl",
            "user_emb": "user_emb.jsonl",
            "output": "out/synthetic.jsonl",
        },
    }
    (HERE / "run.json").write_text(json.dumps(run, indent=2) + "\n")


if __name__ == "__main__":
    main()
