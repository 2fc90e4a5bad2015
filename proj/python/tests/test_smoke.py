import json
import math

import pytest

import mda


@pytest.fixture(scope="module")
def small_corpus():
    return mda.synthesize(docs_per_domain=80, seed=3)


@pytest.fixture(scope="module")
def dsb_model(small_corpus):
    model, lam = mda.train(small_corpus, mda.config("base+dsb", max_iters=200, seed=1))
    return model


def test_synthesize_default_shape():
    spec = json.loads(mda.default_benchmark_spec())
    assert spec["k"] == 4 and spec["m"] == 4
    corpus = mda.synthesize(docs_per_domain=10)
    assert len(corpus) == 40
    assert corpus.domains == ["domain0", "domain1", "domain2", "domain3"]
    rec = corpus.records()[0]
    assert set(rec) == {"id", "text", "domain", "label"}


def test_synthesize_deterministic():
    a = mda.synthesize(docs_per_domain=20, seed=5).to_jsonl()
    b = mda.synthesize(docs_per_domain=20, seed=5).to_jsonl()
    c = mda.synthesize(docs_per_domain=20, seed=6).to_jsonl()
    assert a == b and a != c


def test_jsonl_round_trip(tmp_path, small_corpus):
    path = tmp_path / "c.jsonl"
    small_corpus.save_jsonl(path)
    again = mda.Corpus.load_jsonl(path)
    assert again.to_jsonl() == small_corpus.to_jsonl()


def test_bad_jsonl_raises():
    with pytest.raises(ValueError, match="line"):
        mda.Corpus.from_jsonl('{"text": "a", "domain": "d", "label": "x"}\nnot json\n')


def test_config_names():
    cfg = mda.config("gr+dsb+dsn", lambda_=1e-4)
    assert cfg.technique == "gr" and cfg.dsb and cfg.dsn
    assert cfg.lambda_ == pytest.approx(1e-4)
    with pytest.raises(ValueError):
        mda.config("base+xyz")
    with pytest.raises(ValueError):
        mda.config("nope")


def test_train_predict(small_corpus, dsb_model):
    assert dsb_model.dsb and not dsb_model.dsn
    assert dsb_model.labels == small_corpus.labels
    recs = small_corpus.records()
    texts = [r["text"] for r in recs]
    uniform = [1.0 / dsb_model.k] * dsb_model.k
    probs = dsb_model.predict_proba(texts, label_dist=uniform)
    assert all(math.isclose(sum(p), 1.0, abs_tol=1e-12) for p in probs)
    preds = dsb_model.predict(texts, label_dist=uniform)
    acc = sum(p == r["label"] for p, r in zip(preds, recs)) / len(recs)
    assert acc > 0.5


def test_label_distribution_and_dsb(small_corpus, dsb_model):
    recs = [r for r in small_corpus.records() if r["domain"] == "domain0"]
    dist = mda.estimate_label_distribution(dsb_model, [r["label"] for r in recs])
    assert math.isclose(sum(dist), 1.0, abs_tol=1e-12) and min(dist) > 0
    with pytest.raises(ValueError, match="not one of"):
        mda.estimate_label_distribution(dsb_model, ["unknown"])
    with pytest.raises(ValueError):
        dsb_model.predict_proba(["x"], label_dist=[1.0])


def test_model_round_trip(tmp_path, dsb_model):
    path = tmp_path / "m.mda.json"
    dsb_model.save(path)
    again = mda.Model.load(path)
    assert again.to_json() == dsb_model.to_json()
    assert mda.Model.from_json(dsb_model.to_json()).to_json() == dsb_model.to_json()


def test_lexicon_csv(dsb_model):
    csv = dsb_model.lexicon(top_n=5)
    assert csv.splitlines()[0] == "class,rank,token,weight"


def test_mcnemar_and_power():
    assert mda.mcnemar(0, 0) == 1.0
    assert mda.mcnemar(1, 9) == pytest.approx(22 / 1024)
    assert mda.mcnemar(10, 30) < 0.01
    assert mda.power(0.6, 0.7, 0.9, 2400, trials=500) > 0.99


def test_dsn_means(small_corpus):
    model, _ = mda.train(small_corpus, mda.config("base+dsn", max_iters=50))
    texts = [r["text"] for r in small_corpus.records()][:30]
    means = model.dsn_means(texts)
    assert len(means) == model.h and all(0.0 <= v <= 1.0 for v in means)
    assert len(model.predict(texts, dsn_means=means)) == 30


def test_holdout_protocol():
    corpus = mda.synthesize(docs_per_domain=40, seed=2)
    report = mda.holdout_protocol(corpus, ["base", "base+dsb"], estimate_sizes=[10], trials=2,
                                  lambda_grid=[1e-4], seed=1)
    labels = [r["config"] for r in report["reports"]]
    assert labels[0] == "LogReg"
    assert "LogReg+DSB(oracle)" in labels and "LogReg+DSB(10)" in labels
