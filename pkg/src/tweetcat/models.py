"""Uniform fit/score interface over the six classifier families, plus the
versioned JSON model envelope used by the command line tools."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .base import DimensionMismatch, ScoreMatrix
from .corpus import LabeledDataset, LabelEncoder, encode_labels
from .linear import LinearModel, NbModel, linear_scores, lr_fit, nb_fit, svm_fit
from .mlp import MlpModel, mlp_fit, mlp_predict_proba
from .optimize import AdamConfig, LbfgsConfig
from .textprep import PrepConfig, preprocess_many
from .trees import ForestModel, GbModel, Tree, gb_fit, gb_predict_proba, rf_fit, rf_predict_proba
from .vectorize import TextVectorizer, Vocabulary

__all__ = [
    "MODEL_KINDS",
    "DEFAULT_PARAMS",
    "FORMAT_VERSION",
    "resolve_params",
    "fit_model",
    "model_scores",
    "model_kind",
    "model_to_dict",
    "model_from_dict",
    "Pipeline",
    "fit_pipeline",
    "save_pipeline",
    "load_pipeline",
]

FORMAT_VERSION = 1
MODEL_KINDS = ("nb", "svm", "lr", "rf", "gb", "mlp")

DEFAULT_PARAMS: dict[str, dict] = {
    "nb": {"alpha": 0.1},
    "svm": {"C": 0.1, "epochs": 20, "batch_size": 32, "seed": 0},
    "lr": {"C": 1.0, "max_iter": 200, "memory": 10, "grad_tol": 1e-6},
    "rf": {
        "n_estimators": 500,
        "max_depth": 200,
        "random_state": 0,
        "min_samples_leaf": 1,
        "bootstrap": True,
        "n_jobs": 1,
    },
    "gb": {"n_estimators": 100, "learning_rate": 0.1, "max_depth": 3, "subsample": 1.0, "seed": 0},
    "mlp": {
        "hidden_layer_sizes": (46, 44),
        "alpha": 0.001,
        "learning_rate_init": 0.001,
        "batch_size": 128,
        "max_iter": 100,
        "seed": 1,
        "solver": "adam",
    },
}

def resolve_params(kind: str, overrides: dict | None = None) -> dict:
    """Defaults for ``kind`` updated by ``overrides``; unknown names are rejected."""
    if kind not in DEFAULT_PARAMS:
        raise ValueError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}")
    params = dict(DEFAULT_PARAMS[kind])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ValueError(f"model {kind!r} has no parameter {key!r}; known: {sorted(params)}")
        params[key] = value
    if kind == "mlp":
        params["hidden_layer_sizes"] = tuple(int(h) for h in params["hidden_layer_sizes"])
    return params


def fit_model(kind: str, X, y, params: dict | None = None, n_classes: int | None = None):
    p = resolve_params(kind, params)
    if kind == "nb":
        return nb_fit(X, y, alpha=p["alpha"], n_classes=n_classes)
    if kind == "svm":
        return svm_fit(X, y, C=p["C"], epochs=p["epochs"], seed=p["seed"], batch_size=p["batch_size"], n_classes=n_classes)
    if kind == "lr":
        cfg = LbfgsConfig(memory=p["memory"], max_iter=p["max_iter"], grad_tol=p["grad_tol"])
        return lr_fit(X, y, C=p["C"], cfg=cfg, n_classes=n_classes)
    if kind == "rf":
        return rf_fit(
            X,
            y,
            n_estimators=p["n_estimators"],
            max_depth=p["max_depth"],
            random_state=p["random_state"],
            bootstrap=p["bootstrap"],
            min_samples_leaf=p["min_samples_leaf"],
            n_classes=n_classes,
            n_jobs=p["n_jobs"],
        )
    if kind == "gb":
        return gb_fit(
            X,
            y,
            n_estimators=p["n_estimators"],
            learning_rate=p["learning_rate"],
            max_depth=p["max_depth"],
            subsample=p["subsample"],
            seed=p["seed"],
            n_classes=n_classes,
        )
    adam = AdamConfig(learning_rate_init=p["learning_rate_init"], batch_size=p["batch_size"], max_iter=p["max_iter"])
    return mlp_fit(
        X,
        y,
        hidden_layer_sizes=p["hidden_layer_sizes"],
        alpha=p["alpha"],
        adam=adam,
        seed=p["seed"],
        solver=p["solver"],
        max_iter=p["max_iter"],
        n_classes=n_classes,
    )


def model_scores(model, X) -> ScoreMatrix:
    """Probabilities where the model has them, SVM margins otherwise."""
    if isinstance(model, (NbModel, LinearModel)):
        return linear_scores(model, X)
    if isinstance(model, ForestModel):
        return rf_predict_proba(model, X)
    if isinstance(model, GbModel):
        return gb_predict_proba(model, X)
    if isinstance(model, MlpModel):
        return mlp_predict_proba(model, X)
    raise TypeError(f"not a fitted model: {type(model).__name__}")


def model_kind(model) -> str:
    if isinstance(model, NbModel):
        return "nb"
    if isinstance(model, LinearModel):
        return "lr" if model.kind == "logistic" else "svm"
    if isinstance(model, ForestModel):
        return "rf"
    if isinstance(model, GbModel):
        return "gb"
    if isinstance(model, MlpModel):
        return "mlp"
    raise TypeError(f"not a fitted model: {type(model).__name__}")


def _arr(a) -> list:
    return np.asarray(a, dtype=np.float64).tolist()


def model_to_dict(model) -> dict:
    """Model state as plain JSON types: dense arrays as nested lists, trees as nested nodes."""
    kind = model_kind(model)
    if kind == "nb":
        return {
            "alpha": model.alpha,
            "class_log_prior": _arr(model.class_log_prior),
            "feature_log_prob": _arr(model.feature_log_prob),
            "feature_count": _arr(model.feature_count),
            "class_count": _arr(model.class_count),
        }
    if kind in ("lr", "svm"):
        return {
            "C": model.C,
            "penalty": model.penalty,
            "status": model.status,
            "weights": _arr(model.weights),
            "intercepts": _arr(model.intercepts),
        }
    if kind == "rf":
        return {
            "n_estimators": model.n_estimators,
            "max_depth": model.max_depth,
            "random_state": model.random_state,
            "features_per_split": model.features_per_split,
            "bootstrap": model.bootstrap,
            "min_samples_leaf": model.min_samples_leaf,
            "n_classes": model.n_classes,
            "n_features": model.n_features,
            "trees": [t.to_nested() for t in model.trees],
        }
    if kind == "gb":
        return {
            "learning_rate": model.learning_rate,
            "n_estimators": model.n_estimators,
            "max_depth": model.max_depth,
            "subsample": model.subsample,
            "seed": model.seed,
            "n_features": model.n_features,
            "init_scores": _arr(model.init_scores),
            "train_deviance": [float(d) for d in model.train_deviance],
            "stages": [[t.to_nested() for t in stage] for stage in model.stages],
        }
    return {
        "layer_sizes": list(model.layer_sizes),
        "alpha": model.alpha,
        "activation": model.activation,
        "weights": [_arr(w) for w in model.weights],
        "biases": [_arr(b) for b in model.biases],
        "loss_trace": [float(v) for v in model.loss_trace],
    }


def model_from_dict(kind: str, d: dict):
    if kind == "nb":
        return NbModel(
            d["alpha"],
            np.array(d["class_log_prior"]),
            np.array(d["feature_log_prob"]),
            np.array(d["feature_count"]),
            np.array(d["class_count"]),
        )
    if kind in ("lr", "svm"):
        return LinearModel(
            "logistic" if kind == "lr" else "svm",
            np.array(d["weights"]),
            np.array(d["intercepts"]),
            d["C"],
            d.get("penalty", "l2"),
            d.get("status", ""),
        )
    if kind == "rf":
        nf = d["n_features"]
        return ForestModel(
            [Tree.from_nested(t, nf) for t in d["trees"]],
            d["n_estimators"],
            d["max_depth"],
            d["random_state"],
            d["features_per_split"],
            d["bootstrap"],
            d["min_samples_leaf"],
            d["n_classes"],
            nf,
        )
    if kind == "gb":
        nf = d["n_features"]
        return GbModel(
            [[Tree.from_nested(t, nf) for t in stage] for stage in d["stages"]],
            d["learning_rate"],
            d["n_estimators"],
            d["max_depth"],
            np.array(d["init_scores"]),
            d["subsample"],
            d["seed"],
            nf,
            list(d.get("train_deviance", [])),
        )
    if kind == "mlp":
        return MlpModel(
            tuple(d["layer_sizes"]),
            [np.array(w) for w in d["weights"]],
            [np.array(b) for b in d["biases"]],
            d["alpha"],
            d.get("activation", "relu"),
            list(d.get("loss_trace", [])),
        )
    raise ValueError(f"unknown model kind {kind!r}")


@dataclass
class Pipeline:
    """Everything needed to go from raw text to class codes."""

    kind: str
    params: dict
    model: object
    vectorizer: TextVectorizer
    encoder: LabelEncoder
    prep: PrepConfig = field(default_factory=PrepConfig)
    meta: dict = field(default_factory=dict)

    def transform(self, texts):
        return self.vectorizer.transform(preprocess_many(texts, self.prep))

    def scores(self, texts) -> ScoreMatrix:
        return model_scores(self.model, self.transform(texts))

    def predict(self, texts) -> list[str]:
        return self.encoder.decode(self.scores(texts).predict())


def fit_pipeline(
    train: LabeledDataset,
    kind: str,
    params: dict | None = None,
    vectorizer: TextVectorizer | None = None,
    prep: PrepConfig | None = None,
) -> Pipeline:
    prep = prep or PrepConfig()
    vectorizer = vectorizer or TextVectorizer("tfidf")
    y, encoder = encode_labels(train)
    X = vectorizer.fit_transform(preprocess_many(train.texts, prep))
    resolved = resolve_params(kind, params)
    model = fit_model(kind, X, y, resolved, n_classes=encoder.n_classes)
    return Pipeline(kind, resolved, model, vectorizer, encoder, prep)


def _jsonable_params(params: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()}


def save_pipeline(pipe: Pipeline, path: str | Path) -> Path:
    """Write the model envelope to ``path`` and the vocabulary next to it.

    The envelope references the vocabulary file by name and SHA-256 so a
    mismatched pair is caught at load time. Returns the vocabulary path.
    """
    path = Path(path)
    vocab_path = path.with_name(path.stem + ".vocab.json")
    vocab_text = json.dumps(pipe.vectorizer.vocabulary.to_dict(), sort_keys=True)
    vocab_path.write_text(vocab_text, encoding="utf-8")
    envelope = {
        "format_version": FORMAT_VERSION,
        "model_type": pipe.kind,
        "hyperparams": _jsonable_params(pipe.params),
        "vocabulary": {
            "path": vocab_path.name,
            "sha256": hashlib.sha256(vocab_text.encode("utf-8")).hexdigest(),
            "size": len(pipe.vectorizer.vocabulary),
        },
        "classes": list(pipe.encoder.classes),
        "prep": pipe.prep.to_dict(),
        "vectorizer": pipe.vectorizer.to_dict(),
        "model": model_to_dict(pipe.model),
        "meta": pipe.meta,
    }
    path.write_text(json.dumps(envelope), encoding="utf-8")
    return vocab_path


def load_pipeline(path: str | Path, vocab_path: str | Path | None = None) -> Pipeline:
    """Read an envelope written by :func:`save_pipeline`.

    ``vocab_path`` overrides the referenced vocabulary file. A vocabulary of
    the wrong size raises :class:`DimensionMismatch`; one of the right size
    but different content fails the checksum.
    """
    path = Path(path)
    envelope = json.loads(path.read_text(encoding="utf-8"))
    version = envelope.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format_version {version!r}")
    ref = envelope["vocabulary"]
    vocab_path = Path(vocab_path) if vocab_path is not None else path.with_name(ref["path"])
    vocab_text = vocab_path.read_text(encoding="utf-8")
    vocab = Vocabulary.from_dict(json.loads(vocab_text))
    if len(vocab) != ref["size"]:
        raise DimensionMismatch(
            f"dimension mismatch: vocabulary {vocab_path} has {len(vocab)} terms, model expects {ref['size']}"
        )
    if hashlib.sha256(vocab_text.encode("utf-8")).hexdigest() != ref["sha256"]:
        raise ValueError(f"{vocab_path}: vocabulary checksum does not match the model envelope")
    kind = envelope["model_type"]
    params = resolve_params(kind, envelope["hyperparams"])
    return Pipeline(
        kind,
        params,
        model_from_dict(kind, envelope["model"]),
        TextVectorizer.from_dict(envelope["vectorizer"], vocab),
        LabelEncoder(tuple(envelope["classes"])),
        PrepConfig.from_dict(envelope["prep"]),
        envelope.get("meta", {}),
    )
