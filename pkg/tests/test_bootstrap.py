import json
import threading
import urllib.parse
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from tweetcat.bootstrap import (
    HttpSource,
    LocalCorpusSource,
    SourceError,
    expand_corpus,
    normalized_hash,
    top_terms,
)
from tweetcat.corpus import Document, LabeledDataset
from tweetcat.linear import LinearModel
from tweetcat.models import fit_pipeline
from tweetcat.textprep import preprocess
from tweetcat.vectorize import Vocabulary

FILLER = ["table", "window", "garden", "river", "pencil", "yellow", "market", "engine"]
CLASS_WORDS = {"SP": ["cricket", "stadium"], "ED": ["school", "teacher"], "ST": ["laptop", "software"]}


def seed_corpus(n_per_class=12, seed=0):
    rng = np.random.default_rng(seed)
    docs, tags = [], []
    for code, words in CLASS_WORDS.items():
        for i in range(n_per_class):
            toks = list(rng.choice(FILLER, 3))
            toks.append(words[0] if code == "SP" else words[i % 2])
            if code == "SP" and i % 3 == 0:
                toks.append(words[1])
            docs.append(Document(f"{code}{i}", " ".join(toks)))
            tags.append(code)
    return LabeledDataset(docs, tags, "seed")


def write_source(tmp_path, lines):
    d = tmp_path / "source"
    d.mkdir()
    with (d / "a.jsonl").open("w", encoding="utf-8") as fh:
        for i, text in enumerate(lines):
            fh.write(json.dumps({"id": f"s{i}", "text": text}) + "\n")
    return d


class EmptySource:
    name = "empty"

    def fetch(self, query, limit):
        return []


class FlakySource:
    name = "flaky"

    def __init__(self, failures):
        self.failures = failures
        self.calls = 0

    def fetch(self, query, limit):
        self.calls += 1
        if self.calls <= self.failures:
            raise SourceError("temporary outage")
        return [Document("x", f"{query} fetched text")]


def test_top_terms_linear_weights():
    vocab = Vocabulary(("bad", "good", "ok"), np.ones(3), 1)
    m = LinearModel("logistic", np.array([[-1.0, 2.0, 0.5]]), np.zeros(1), 1.0)
    assert [t.term for t in top_terms(m, vocab, 0, 2)] == ["good", "ok"]
    assert [t.term for t in top_terms(m, vocab, 0, 10)] == ["good", "ok", "bad"]


def test_top_terms_ties_lexicographic():
    vocab = Vocabulary(("b", "a", "c"), np.ones(3), 1)
    m = LinearModel("svm", np.array([[1.0, 1.0, 0.0]]), np.zeros(1), 1.0)
    assert [t.term for t in top_terms(m, vocab, 0, 2)] == ["a", "b"]


def test_top_terms_unknown_class():
    vocab = Vocabulary(("a",), np.ones(1), 1)
    m = LinearModel("svm", np.array([[1.0]]), np.zeros(1), 1.0)
    with pytest.raises(ValueError):
        top_terms(m, vocab, 3, 1)


@pytest.mark.parametrize("kind", ["nb", "lr", "svm"])
def test_marker_token_ranks_first(kind):
    pipe = fit_pipeline(seed_corpus(), kind)
    k = pipe.encoder.code_to_index["SP"]
    assert top_terms(pipe.model, pipe.vectorizer.vocabulary, k, 3)[0].term == "cricket"


def test_top_terms_rejects_tree_models():
    pipe = fit_pipeline(seed_corpus(), "gb", {"n_estimators": 2})
    with pytest.raises(TypeError):
        top_terms(pipe.model, pipe.vectorizer.vocabulary, 0, 1)


def test_normalized_hash():
    assert normalized_hash("Hello   World\n") == normalized_hash("hello world")
    assert normalized_hash("a b") != normalized_hash("ab")


def test_local_source_matches_stemmed_terms(tmp_path):
    src = LocalCorpusSource(write_source(tmp_path, ["Cricket stadiums", "school teachers", "cricketers play"]))
    assert len(src) == 3
    assert [d.id for d in src.fetch("stadium", 10)] == ["s0"]
    assert [d.id for d in src.fetch("teacher", 10)] == ["s1"]
    assert len(src.fetch("cricket", 1)) == 1


def test_local_source_missing_dir(tmp_path):
    with pytest.raises(SourceError):
        LocalCorpusSource(tmp_path / "missing")


def test_empty_source_gives_empty_expansion():
    pipe = fit_pipeline(seed_corpus(), "nb")
    out, report = expand_corpus(EmptySource(), pipe, rounds=1)
    assert len(out) == 0
    assert all(v == 0 for v in report.added_counts.values())
    assert report.round_sizes == [0]


def test_expansion_from_local_source(tmp_path):
    lines = [f"{w} {f} news" for w in ["cricket", "stadium", "school", "teacher", "laptop", "software"] for f in FILLER]
    lines += ["cricket school together"]  # reachable from two classes, must appear once
    lines += ["Cricket   school together"]  # same text after normalization
    src = LocalCorpusSource(write_source(tmp_path, lines))
    seed = seed_corpus()
    pipe = fit_pipeline(seed, "nb")
    out, report = expand_corpus(src, pipe, per_class_terms=2, per_query_limit=50, rounds=2, seed_data=seed)
    hashes = [normalized_hash(t) for t in out.texts]
    assert len(hashes) == len(set(hashes))
    for doc, meta in zip(out.documents, out.meta):
        assert set(meta) >= {"round", "query", "source"}
        assert meta["query"] in preprocess(doc.text)
    assert report.round_sizes == sorted(report.round_sizes)
    assert sum(report.added_counts.values()) == len(out)
    assert report.rounds_run == 2
    assert "SP" in report.table()

    # without refitting round two repeats the same queries, finds nothing new and stops
    out2, report2 = expand_corpus(src, pipe, per_class_terms=2, rounds=3, seed_data=seed, refit=False)
    assert report2.stopped_early and report2.rounds_run == 2
    assert report2.round_sizes[0] == report2.round_sizes[1] == len(out2)


def test_review_mode_leaves_tags_empty(tmp_path):
    src = LocalCorpusSource(write_source(tmp_path, ["cricket again", "school again"]))
    pipe = fit_pipeline(seed_corpus(), "nb")
    out, report = expand_corpus(src, pipe, per_class_terms=1, review=True)
    assert set(out.tags) == {""}
    assert {m["suggested_tag"] for m in out.meta} <= set(CLASS_WORDS)
    assert report.review


def test_retries_then_success():
    sleeps = []
    src = FlakySource(failures=2)
    pipe = fit_pipeline(seed_corpus(), "nb")
    out, report = expand_corpus(src, pipe, classes=["SP"], per_class_terms=1, sleep=sleeps.append, backoff=0.1)
    assert sleeps == [0.1, 0.2]
    assert len(out) == 1 and not report.failed_queries


def test_persistent_failure_skips_query():
    sleeps = []
    pipe = fit_pipeline(seed_corpus(), "nb")
    out, report = expand_corpus(FlakySource(failures=99), pipe, classes=["SP"], per_class_terms=1, sleep=sleeps.append)
    assert len(out) == 0
    assert len(sleeps) == 2
    assert report.failed_queries == [{"round": 0, "class": "SP", "query": "cricket"}]


def test_unknown_class_and_rounds():
    pipe = fit_pipeline(seed_corpus(), "nb")
    with pytest.raises(ValueError):
        expand_corpus(EmptySource(), pipe, classes=["GM"])
    with pytest.raises(ValueError):
        expand_corpus(EmptySource(), pipe, rounds=0)


class _Handler(BaseHTTPRequestHandler):
    seen = []

    def do_GET(self):
        qs = urllib.parse.parse_qs(urllib.parse.urlparse(self.path).query)
        _Handler.seen.append((qs, self.headers.get("Authorization")))
        if qs["q"][0] == "broken":
            body = b"not json"
        else:
            body = json.dumps([{"id": "h1", "text": f"about {qs['q'][0]}"}] * 3).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def http_url():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/search"
    server.shutdown()


def test_http_source(http_url, monkeypatch):
    monkeypatch.setenv("TEST_TOKEN", "s3cret")
    src = HttpSource(http_url, token_env="TEST_TOKEN", timeout=5)
    docs = src.fetch("cricket", 2)
    assert [d.text for d in docs] == ["about cricket", "about cricket"]
    qs, auth = _Handler.seen[-1]
    assert qs == {"q": ["cricket"], "limit": ["2"]}
    assert auth == "Bearer s3cret"
    with pytest.raises(SourceError):
        src.fetch("broken", 2)


def test_http_source_unreachable():
    with pytest.raises(SourceError):
        HttpSource("http://127.0.0.1:9/none", timeout=0.5).fetch("x", 1)
