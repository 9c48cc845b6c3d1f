"""Write t-SNE scatter plots for the synthetic presets: all classes, and one class pair.

Usage: python3 scripts/tsne_figures.py --out figures/ [--docs-per-class 200]
"""

import argparse
from pathlib import Path

from tweetcat.corpus import CATEGORIES
from tweetcat.embedviz import TsneConfig, render_scatter_svg, silhouette, tsne
from tweetcat.synthgen import PRESETS, generate, preset
from tweetcat.textprep import preprocess_many
from tweetcat.vectorize import TextVectorizer


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--docs-per-class", type=int, default=200)
    ap.add_argument("--perplexity", type=float, default=30.0)
    ap.add_argument("--iterations", type=int, default=1000)
    ap.add_argument("--pair", default="ST,ED")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    cfg = TsneConfig(perplexity=args.perplexity, iterations=args.iterations, pre_reduce=50)
    for name in PRESETS:
        ds = generate(preset(name, docs_per_class=args.docs_per_class))
        X = TextVectorizer("tfidf").fit_transform(preprocess_many(ds.texts))
        emb = tsne(X, list(ds.tags), cfg)
        stem = name.replace("-", "_")
        render_scatter_svg(emb, args.out / f"{stem}_all.svg", class_order=list(CATEGORIES), title=f"{name}: all topics")
        render_scatter_svg(
            emb, args.out / f"{stem}_pair.svg", class_filter=args.pair.split(","), class_order=list(CATEGORIES),
            title=f"{name}: {args.pair}",
        )
        print(f"{name}: silhouette {silhouette(emb.coords, emb.labels):.3f}, final KL {emb.kl_trace[-1]:.4f}")


if __name__ == "__main__":
    main()
