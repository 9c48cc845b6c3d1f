"""Train all six models on the synthetic presets and print one results table per preset.

Usage: python3 scripts/preset_tables.py [--docs-per-class 1000] [--vectorizer tfidf] [--out results/]
"""

import argparse
import json
import time
from pathlib import Path

from tweetcat.corpus import clean, split
from tweetcat.evaluate import evaluate_scores
from tweetcat.models import MODEL_KINDS, fit_pipeline
from tweetcat.synthgen import PRESETS, generate, generate_combined, preset
from tweetcat.vectorize import TextVectorizer


def run(ds, kinds, vectorizer, seed):
    ds, _ = clean(ds)
    train, test = split(ds, 0.75, seed=seed)
    rows = {}
    for kind in kinds:
        t0 = time.perf_counter()
        pipe = fit_pipeline(train, kind, vectorizer=TextVectorizer(vectorizer))
        y = pipe.encoder.encode(test.tags)
        rep = evaluate_scores(y, pipe.scores(test.texts), pipe.encoder.classes)
        rows[kind] = rep.metrics() | {"seconds": round(time.perf_counter() - t0, 1)}
    return rows


def table(rows):
    lines = ["| Model | Accuracy | Precision | Recall | F1 | AUC | s |", "|---|---|---|---|---|---|---|"]
    for kind, m in rows.items():
        lines.append(
            f"| {kind} | {100 * m['accuracy']:.2f}% | {m['precision']:.3f} | {m['recall']:.3f} "
            f"| {m['f1']:.3f} | {m['auc']:.3f} | {m['seconds']} |"
        )
    return "\n".join(lines)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs-per-class", type=int, default=1000)
    ap.add_argument("--vectorizer", default="tfidf")
    ap.add_argument("--seed", type=int, default=0, help="split seed")
    ap.add_argument("--models", default=",".join(MODEL_KINDS))
    ap.add_argument("--out", type=Path, help="directory for JSON results")
    args = ap.parse_args()
    kinds = args.models.split(",")
    datasets = {name: generate(preset(name, docs_per_class=args.docs_per_class)) for name in PRESETS}
    datasets["combined"] = generate_combined(args.docs_per_class // 2)
    results = {}
    for name, ds in datasets.items():
        results[name] = run(ds, kinds, args.vectorizer, args.seed)
        print(f"\n## {name} ({len(ds)} documents, {args.vectorizer})\n")
        print(table(results[name]))
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "preset_tables.json").write_text(json.dumps(results, indent=2) + "\n")


if __name__ == "__main__":
    main()
