"""``tweetcat`` command line: one subcommand per pipeline stage, all state in files.

Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from . import __version__
from .agreement import GtRule, agreement_report, aggregate_gt, load_annotations
from .base import DimensionMismatch
from .bootstrap import HttpSource, LocalCorpusSource, SourceError, expand_corpus
from .corpus import CATEGORIES, DatasetError, clean, encode_labels, load_dataset, save_dataset, split
from .embedviz import TsneConfig, render_scatter_svg, save_embedding_csv, tsne
from .evaluate import EvalReport, confusion_csv, confusion_svg, evaluate_scores
from .models import MODEL_KINDS, fit_pipeline, load_pipeline, save_pipeline
from .synthgen import PRESETS, generate, generate_combined, preset
from .textprep import PrepConfig, load_stopwords, preprocess_many
from .tune import ParamSpace, parse_distribution, random_search
from .vectorize import MODES, TextVectorizer

log = logging.getLogger("tweetcat")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 by default; usage errors are 1 here
        raise UsageError(f"{self.prog}: {message}")


# --- config file -------------------------------------------------------------


def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment. Keys use option names with
    dashes or underscores."""
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _convert(action: argparse.Action, raw: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        truthy = raw.lower() in ("1", "true", "yes", "on")
        if not truthy and raw.lower() not in ("0", "false", "no", "off"):
            raise UsageError(f"config key {action.dest!r}: expected a boolean, got {raw!r}")
        return truthy if isinstance(action, argparse._StoreTrueAction) else not truthy
    if isinstance(action, argparse._AppendAction):
        return [action.type(v) if action.type else v for v in raw.split(";") if v.strip()]
    if action.nargs in ("+", "*"):
        return [action.type(v) if action.type else v for v in raw.split()]
    value = action.type(raw) if action.type else raw
    if action.choices is not None and value not in action.choices:
        raise UsageError(f"config key {action.dest!r}: {value!r} not in {list(action.choices)}")
    return value


def apply_config(sub: argparse.ArgumentParser, config: dict[str, str]) -> None:
    """Config values become parser defaults, so explicit flags still win."""
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    unknown = sorted(set(config) - set(actions))
    if unknown:
        raise UsageError(f"unknown config keys {unknown}; valid keys: {sorted(actions)}")
    defaults = {}
    for key, raw in config.items():
        try:
            defaults[key] = _convert(actions[key], raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
    sub.set_defaults(**defaults)
    for a in sub._actions:  # satisfied by the config file
        if a.dest in defaults:
            a.required = False


def _config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


# --- shared option groups ----------------------------------------------------


def _add_prep(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("preprocessing")
    g.add_argument("--no-stem", dest="no_stem", action="store_true", help="disable Porter stemming")
    g.add_argument("--lemmatize", action="store_true", help="apply the bundled lemma table before stemming")
    g.add_argument("--keep-urls", dest="keep_urls", action="store_true", help="keep URLs and @mentions")
    g.add_argument("--no-lowercase", dest="no_lowercase", action="store_true")
    g.add_argument("--stopwords", help="stopword file, one word per line (default: bundled list)")
    g.add_argument("--min-token-len", dest="min_token_len", type=int, default=2)


def _prep_from(args) -> PrepConfig:
    kw = dict(
        lowercase=not args.no_lowercase,
        strip_urls_mentions=not args.keep_urls,
        stemming=not args.no_stem,
        lemmatize=args.lemmatize,
        min_token_len=args.min_token_len,
    )
    if args.stopwords:
        kw["stopword_list"] = load_stopwords(args.stopwords)
    return PrepConfig(**kw)


def _add_vectorizer(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("vectorizer")
    g.add_argument("--vectorizer", choices=MODES, default="tfidf", help="weighting scheme (default tfidf)")
    g.add_argument("--min-df", dest="min_df", type=int, default=1)
    g.add_argument("--max-features", dest="max_features", type=int)
    g.add_argument("--bm25-k1", dest="bm25_k1", type=float, default=1.5)
    g.add_argument("--bm25-b", dest="bm25_b", type=float, default=0.75)


def _vectorizer_from(args) -> TextVectorizer:
    from .vectorize import Bm25Params

    return TextVectorizer(args.vectorizer, args.min_df, args.max_features, Bm25Params(args.bm25_k1, args.bm25_b))


_HYPER_FLAGS = {
    # flag dest -> model parameter name
    "alpha": "alpha",
    "C": "C",
    "n_estimators": "n_estimators",
    "max_depth": "max_depth",
    "learning_rate": "learning_rate",
    "learning_rate_init": "learning_rate_init",
    "epochs": "epochs",
    "max_iter": "max_iter",
    "batch_size": "batch_size",
    "hidden": "hidden_layer_sizes",
    "subsample": "subsample",
    "solver": "solver",
}


def _add_hyper(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model hyperparameters (only those the chosen model has are accepted)")
    g.add_argument("--alpha", type=float, help="NB smoothing or MLP L2 penalty")
    g.add_argument("--C", dest="C", type=float, help="inverse regularization (lr, svm)")
    g.add_argument("--n-estimators", dest="n_estimators", type=int)
    g.add_argument("--max-depth", dest="max_depth", type=int)
    g.add_argument("--learning-rate", dest="learning_rate", type=float, help="GB shrinkage")
    g.add_argument("--learning-rate-init", dest="learning_rate_init", type=float, help="MLP Adam step size")
    g.add_argument("--epochs", type=int, help="SVM epochs")
    g.add_argument("--max-iter", dest="max_iter", type=int, help="LR iterations or MLP epochs")
    g.add_argument("--batch-size", dest="batch_size", type=int)
    g.add_argument("--hidden", type=int, nargs="+", help="MLP hidden layer sizes")
    g.add_argument("--subsample", type=float, help="GB row subsampling rate")
    g.add_argument("--solver", choices=("adam", "lbfgs"), help="MLP optimizer")
    g.add_argument("--seed", type=int, help="model seed (random_state for rf)")
    g.add_argument("--n-jobs", dest="n_jobs", type=int, default=1, help="worker processes for rf/tune")


def _hyper_from(args, kind: str) -> dict:
    from .models import DEFAULT_PARAMS

    known = DEFAULT_PARAMS[kind]
    params = {}
    for dest, name in _HYPER_FLAGS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        if name not in known:
            raise UsageError(f"--{dest.replace('_', '-')} does not apply to model {kind!r}")
        params[name] = tuple(value) if name == "hidden_layer_sizes" else value
    if getattr(args, "seed", None) is not None:
        params["random_state" if kind == "rf" else "seed"] = args.seed
        if kind in ("nb", "lr"):
            params.pop("seed")  # deterministic models without a seed
    if kind == "rf":
        params["n_jobs"] = args.n_jobs
    return params


def _write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _config_record(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "json_errors", "verbose", "config")}


# --- commands ----------------------------------------------------------------


def cmd_gen(args) -> None:
    if args.preset == "combined":
        ds = generate_combined(args.docs_per_class)
    else:
        overrides = {"docs_per_class": args.docs_per_class}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.rho is not None:
            overrides["rho"] = args.rho
        if args.slang_rate is not None:
            overrides["slang_rate"] = args.slang_rate
        ds = generate(preset(args.preset, **overrides))
    save_dataset(ds, args.out)
    print(f"wrote {len(ds)} documents to {args.out}")


def cmd_clean(args) -> None:
    ds = load_dataset(args.data, news_as_subtag=args.news_as_subtag)
    out, report = clean(ds)
    save_dataset(out, args.out)
    if args.report:
        _write_json(args.report, report.to_dict())
    print(report.to_json())


def cmd_split(args) -> None:
    ds = load_dataset(args.data)
    train, test = split(ds, args.ratio, args.seed, args.stratify)
    save_dataset(train, args.train_out)
    save_dataset(test, args.test_out)
    print(f"train {len(train)}  test {len(test)}")


def cmd_train(args) -> None:
    ds = load_dataset(args.data)
    params = _hyper_from(args, args.model)
    for item in args.param or []:
        key, _, value = item.partition("=")
        if not _:
            raise UsageError(f"--param expects key=value, got {item!r}")
        try:
            params[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            params[key.strip()] = value
    try:
        pipe = fit_pipeline(ds, args.model, params, _vectorizer_from(args), _prep_from(args))
    except ValueError as exc:
        if "has no parameter" in str(exc):
            raise UsageError(str(exc)) from None
        raise
    pipe.meta = {"train_data": str(args.data), "n_train": len(ds), "config": _config_record(args)}
    vocab_path = save_pipeline(pipe, args.out)
    print(f"trained {args.model} on {len(ds)} documents ({len(pipe.vectorizer.vocabulary)} terms)")
    print(f"model: {args.out}  vocabulary: {vocab_path}")


def _load_for_scoring(args):
    pipe = load_pipeline(args.model, getattr(args, "vocab", None))
    ds = load_dataset(args.data)
    return pipe, ds


def cmd_predict(args) -> None:
    pipe, ds = _load_for_scoring(args)
    scores = pipe.scores(ds.texts)
    pred = pipe.encoder.decode(scores.predict())
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        import csv

        w = csv.writer(fh, lineterminator="\n")
        header = ["id", "predicted"] + ([f"score_{c}" for c in pipe.encoder.classes] if args.scores else [])
        w.writerow(header)
        for i, doc in enumerate(ds.documents):
            row = [doc.id, pred[i]]
            if args.scores:
                row += [repr(float(v)) for v in scores.values[i]]
            w.writerow(row)
    print(f"wrote {len(pred)} predictions to {out}")


def cmd_evaluate(args) -> None:
    pipe, ds = _load_for_scoring(args)
    cleaned, _ = clean(ds)
    y = pipe.encoder.encode(cleaned.tags)
    report = evaluate_scores(y, pipe.scores(cleaned.texts), pipe.encoder.classes, weighted=args.weighted)
    report.meta.update(
        {
            "model_type": pipe.kind,
            "hyperparams": {k: (list(v) if isinstance(v, tuple) else v) for k, v in pipe.params.items()},
            "vectorizer": pipe.vectorizer.to_dict(),
            "prep": pipe.prep.to_dict(),
            "train": pipe.meta,
            "evaluate": _config_record(args),
            "test_data": str(args.data),
        }
    )
    report.save(args.report)
    if args.confusion_csv:
        Path(args.confusion_csv).write_text(confusion_csv(report.confusion, report.classes), encoding="utf-8")
    if args.confusion_svg:
        title = args.title or f"Confusion matrix ({pipe.kind})"
        Path(args.confusion_svg).write_text(confusion_svg(report.confusion, report.classes, title), encoding="utf-8")
    m = report.metrics()
    print("  ".join(f"{k}={v:.4f}" for k, v in m.items()))


def cmd_tune(args) -> None:
    ds, _ = clean(load_dataset(args.data))
    prep = _prep_from(args)
    vec = _vectorizer_from(args)
    X = vec.fit_transform(preprocess_many(ds.texts, prep))
    y, encoder = encode_labels(ds)
    dims = {}
    for item in args.space:
        name, _, dist = item.partition("=")
        if not _:
            raise UsageError(f"--space expects name=distribution, got {item!r}")
        try:
            dims[name.strip()] = parse_distribution(dist)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    space = ParamSpace(dims)
    fixed = _hyper_from(args, args.model)
    try:
        result = random_search(
            args.model,
            space,
            X,
            y,
            folds=args.folds,
            n_iter=args.n_iter,
            scoring=args.scoring,
            seed=args.search_seed,
            stratified=not args.plain_folds,
            fixed_params=fixed,
            refit=args.model_out is not None,
            n_jobs=args.n_jobs,
        )
    except ValueError as exc:
        if "has no parameter" in str(exc):
            raise UsageError(str(exc)) from None
        raise
    out = result.to_dict()
    out["space"] = space.to_dict()
    out["config"] = _config_record(args)
    _write_json(args.out, out)
    if args.model_out:
        from .models import Pipeline, resolve_params

        params = resolve_params(args.model, {**fixed, **result.best_params})
        pipe = Pipeline(args.model, params, result.best_model, vec, encoder, prep, {"tuned": True, "config": out["config"]})
        save_pipeline(pipe, args.model_out)
    print(result.leaderboard(args.top))
    print(f"best: {result.best_params}  mean {args.scoring} = {result.best.mean_score:.4f}")


def cmd_agree(args) -> None:
    ann = load_annotations(args.annotations, args.annotators_per_doc)
    rules = [GtRule.parse(r) for r in args.rules.split(",")]
    report = agreement_report(ann, rules)
    if args.report:
        Path(args.report).write_text(report.to_json() + "\n", encoding="utf-8")
    if args.gt_out:
        gt = aggregate_gt(ann, GtRule.parse(args.gt_rule))
        import csv

        with Path(args.gt_out).open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["doc_id", "topics", "tag", "multi_label"])
            single = gt.single_labels()
            for doc, topics in gt.labels.items():
                ordered = [c for c in CATEGORIES if c in topics]
                w.writerow([doc, ";".join(ordered), single[doc] or "", int(doc in gt.multi_label)])
    print(report.table())


def cmd_expand(args) -> None:
    pipe = load_pipeline(args.model)
    if bool(args.source_dir) == bool(args.source_url):
        raise UsageError("give exactly one of --source-dir and --source-url")
    if args.source_dir:
        source = LocalCorpusSource(args.source_dir, pipe.prep)
    else:
        source = HttpSource(args.source_url, args.token_env, args.timeout)
    seed_data = clean(load_dataset(args.seed_data))[0] if args.seed_data else None
    classes = args.classes.split(",") if args.classes else None
    expansion, report = expand_corpus(
        source,
        pipe,
        classes,
        per_class_terms=args.per_class_terms,
        per_query_limit=args.per_query_limit,
        rounds=args.rounds,
        seed=args.seed,
        seed_data=seed_data,
        refit=not args.no_refit,
        review=args.review,
    )
    save_dataset(expansion, args.out)
    if args.report:
        d = report.to_dict()
        d["config"] = _config_record(args)
        _write_json(args.report, d)
    print(report.table())
    print(f"added {len(expansion)} documents in {report.rounds_run} round(s)")


def cmd_tsne(args) -> None:
    ds, _ = clean(load_dataset(args.data))
    prep = _prep_from(args)
    X = _vectorizer_from(args).fit_transform(preprocess_many(ds.texts, prep))
    cfg = TsneConfig(
        perplexity=args.perplexity,
        learning_rate=args.learning_rate,
        iterations=args.iterations,
        seed=args.seed,
        max_points=args.max_points,
        pre_reduce=args.pre_reduce,
    )
    emb = tsne(X, list(ds.tags), cfg)
    order = [c for c in CATEGORIES if c in set(ds.tags)]
    pair = args.pair.split(",") if args.pair else None
    if pair and len(pair) != 2:
        raise UsageError("--pair expects two class codes, e.g. ST,ED")
    render_scatter_svg(emb, args.out_svg, class_filter=pair, class_order=order, title=args.title or "")
    if args.out_csv:
        save_embedding_csv(emb, args.out_csv)
    if args.meta:
        _write_json(args.meta, {"tsne": cfg.to_dict(), "kl_trace": emb.kl_trace, "rows": emb.rows.tolist()})
    final = emb.kl_trace[-1] if emb.kl_trace else float("nan")
    print(f"embedded {len(emb)} points, final KL {final:.4f}; wrote {args.out_svg}")


def cmd_report(args) -> None:
    rows = []
    for path in args.reports:
        r = EvalReport.load(path)
        label = r.meta.get("model_type") or Path(path).stem
        rows.append((label, r))
    header = "| Model | Accuracy | Precision | Recall | F1 | AUC |"
    lines = [header, "|---|---|---|---|---|---|"]
    for label, r in rows:
        lines.append(
            f"| {label} | {100 * r.accuracy:.2f}% | {r.precision:.2f} | {r.recall:.2f} | {r.f1:.2f} | {r.auc:.2f} |"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    if args.json_out:
        _write_json(args.json_out, {label: r.metrics() for label, r in rows})
    print(text, end="")


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tweetcat", description="Multi-class short-text categorization toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--json-errors", dest="json_errors", action="store_true", help="report errors as JSON on stderr")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    subs = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    def sub(name, func, help_text):
        p = subs.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key=value file supplying defaults for this command's options")
        p.set_defaults(func=func)
        return p

    p = sub("gen", cmd_gen, "generate a synthetic labelled corpus")
    p.add_argument("--preset", choices=[*PRESETS, "combined"], default="synonym-like")
    p.add_argument("--docs-per-class", dest="docs_per_class", type=int, default=1000)
    p.add_argument("--seed", type=int, help="override the preset seed")
    p.add_argument("--rho", type=float, help="shared-vocabulary rate")
    p.add_argument("--slang-rate", dest="slang_rate", type=float)
    p.add_argument("--out", required=True, help="output .csv or .jsonl")

    p = sub("clean", cmd_clean, "drop rows with missing text, rejected or unknown tags")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="write the clean report as JSON")
    p.add_argument("--news-as-subtag", dest="news_as_subtag", action="store_true", help="map 'NW - XX' to XX")

    p = sub("split", cmd_split, "seeded train/test split")
    p.add_argument("--data", required=True)
    p.add_argument("--train-out", dest="train_out", required=True)
    p.add_argument("--test-out", dest="test_out", required=True)
    p.add_argument("--ratio", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratify", action="store_true")

    p = sub("train", cmd_train, "fit preprocessing, vectorizer and a classifier")
    p.add_argument("--data", required=True, help="cleaned training dataset")
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--out", required=True, help="model envelope path (.json)")
    p.add_argument("--param", action="append", help="extra model parameter key=value (repeatable)")
    _add_hyper(p)
    _add_vectorizer(p)
    _add_prep(p)

    p = sub("predict", cmd_predict, "predict class codes for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="CSV of id,predicted")
    p.add_argument("--vocab", help="override the vocabulary file referenced by the model")
    p.add_argument("--scores", action="store_true", help="also write per-class scores")

    p = sub("evaluate", cmd_evaluate, "score a model on a labelled dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True, help="EvalReport JSON path")
    p.add_argument("--vocab", help="override the vocabulary file referenced by the model")
    p.add_argument("--weighted", action="store_true", help="support-weighted instead of macro averages")
    p.add_argument("--confusion-csv", dest="confusion_csv")
    p.add_argument("--confusion-svg", dest="confusion_svg")
    p.add_argument("--title")

    p = sub("tune", cmd_tune, "randomized hyperparameter search with k-fold CV")
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument(
        "--space",
        action="append",
        required=True,
        help="name=distribution, e.g. alpha=grid:2.0,3.0,0.1 or C=loguniform:0.01,10 (repeatable)",
    )
    p.add_argument("--n-iter", dest="n_iter", type=int, default=10)
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--scoring", choices=("accuracy", "macro_f1", "auc"), default="accuracy")
    p.add_argument("--search-seed", dest="search_seed", type=int, default=0)
    p.add_argument("--plain-folds", dest="plain_folds", action="store_true", help="unstratified folds")
    p.add_argument("--out", required=True, help="SearchResult JSON path")
    p.add_argument("--model-out", dest="model_out", help="refit the best point and save it")
    p.add_argument("--top", type=int, default=10, help="leaderboard rows to print")
    _add_hyper(p)
    _add_vectorizer(p)
    _add_prep(p)

    p = sub("agree", cmd_agree, "ground truth and agreement statistics from annotations")
    p.add_argument("--annotations", required=True, help="CSV doc_id,annotator_id,topic")
    p.add_argument("--annotators-per-doc", dest="annotators_per_doc", type=int, default=4)
    p.add_argument("--rules", default="GT2YES,GT4YES,GT3YES")
    p.add_argument("--report", help="AgreementReport JSON path")
    p.add_argument("--gt-out", dest="gt_out", help="write aggregated labels as CSV")
    p.add_argument("--gt-rule", dest="gt_rule", default="GT2YES")

    p = sub("expand", cmd_expand, "grow a corpus by querying a document source with top class terms")
    p.add_argument("--model", required=True, help="seed model (nb, lr or svm)")
    p.add_argument("--source-dir", dest="source_dir", help="directory of JSONL documents")
    p.add_argument("--source-url", dest="source_url", help="HTTP search endpoint")
    p.add_argument("--token-env", dest="token_env", default="TWEETCAT_SOURCE_TOKEN")
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--seed-data", dest="seed_data", help="labelled seed corpus (needed for refitting)")
    p.add_argument("--classes", help="comma-separated class codes (default: all model classes)")
    p.add_argument("--per-class-terms", dest="per_class_terms", type=int, default=5)
    p.add_argument("--per-query-limit", dest="per_query_limit", type=int, default=50)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-refit", dest="no_refit", action="store_true")
    p.add_argument("--review", action="store_true", help="leave fetched documents untagged for manual vetting")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="BalanceReport JSON path")

    p = sub("tsne", cmd_tsne, "t-SNE scatter plot of a vectorized dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out-svg", dest="out_svg", required=True)
    p.add_argument("--out-csv", dest="out_csv")
    p.add_argument("--meta", help="write config and KL trace as JSON")
    p.add_argument("--pair", help="show only two classes, e.g. ST,ED")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=200.0)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-points", dest="max_points", type=int, default=2000)
    p.add_argument("--pre-reduce", dest="pre_reduce", type=int, help="random-projection width before t-SNE")
    p.add_argument("--title")
    _add_vectorizer(p)
    _add_prep(p)

    p = sub("report", cmd_report, "compare several evaluation reports in one table")
    p.add_argument("reports", nargs="+", help="EvalReport JSON files")
    p.add_argument("--out", help="write the Markdown table here")
    p.add_argument("--json-out", dest="json_out")
    return parser


def _fail(message: str, code: int, json_errors: bool, kind: str) -> int:
    if json_errors:
        print(json.dumps({"error": message, "kind": kind, "exit_code": code}), file=sys.stderr)
    else:
        print(f"error: {message}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in argv
    parser = build_parser()
    try:
        commands = parser._subparsers._group_actions[0].choices
        command = next((tok for tok in argv if tok in commands), None)
        config = _config_path(argv)
        if command is not None and config is not None:
            apply_config(commands[command], read_config(config))
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required; see --help")
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
        )
        args.func(args)
        return 0
    except UsageError as exc:
        return _fail(str(exc), 1, json_errors, "usage")
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except DimensionMismatch as exc:
        return _fail(str(exc), 2, json_errors, "dimension_mismatch")
    except (DatasetError, SourceError, OSError, json.JSONDecodeError) as exc:
        return _fail(str(exc), 2, json_errors, "data")
    except (ValueError, KeyError, FloatingPointError) as exc:
        return _fail(str(exc), 2, json_errors, "data")


if __name__ == "__main__":
    sys.exit(main())
