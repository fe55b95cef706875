import numpy as np
import pytest

from debias.lda import LdaModel, lda_fit, lda_infer, lda_transform
from oracles import topic_purity


def _two_topic_corpus(n_docs=40, length=20, seed=0):
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n_docs):
        lo = 0 if i % 2 == 0 else 5
        docs.append(rng.integers(lo, lo + 5, size=length).tolist())
    return docs


def test_counts_conserved_every_sweep():
    docs = _two_topic_corpus(10, 7)
    n_tokens = sum(map(len, docs))
    seen = []

    def check(i, nkw):
        assert nkw.sum() == n_tokens
        assert (nkw >= 0).all()
        np.testing.assert_array_equal(nkw.sum(axis=0), np.bincount(np.concatenate(docs), minlength=10))
        seen.append(i)

    lda_fit(docs, 10, n_topics=3, iters=5, on_sweep=check)
    assert seen == [0, 1, 2, 3, 4]


def test_single_token_corpus():
    model = lda_fit([[0]], 1, n_topics=2, iters=3)
    assert model.topic_word_counts.sum() == 1


def test_deterministic():
    docs = _two_topic_corpus()
    a = lda_fit(docs, 10, n_topics=2, iters=30, seed=5)
    b = lda_fit(docs, 10, n_topics=2, iters=30, seed=5)
    np.testing.assert_array_equal(a.topic_word_counts, b.topic_word_counts)
    np.testing.assert_array_equal(lda_transform(docs[:5], a, seed=1), lda_transform(docs[:5], b, seed=1))


@pytest.mark.parametrize("kw", [{"n_topics": 1}, {"iters": 0}, {"alpha": -1.0}, {"beta": 0.0}])
def test_config_errors(kw):
    with pytest.raises(ValueError):
        lda_fit([[0, 1]], 2, **{"n_topics": 2, "iters": 2, **kw})


def test_out_of_vocab_token_rejected():
    with pytest.raises(ValueError):
        lda_fit([[0, 3]], 2, n_topics=2, iters=1)


def test_empty_doc_is_uniform():
    model = lda_fit(_two_topic_corpus(6), 10, n_topics=100, iters=2)
    theta = lda_infer([], model)
    np.testing.assert_allclose(theta, np.full(100, 0.01))


def test_separable_corpus():
    docs = _two_topic_corpus()
    model = lda_fit(docs, 10, n_topics=2, alpha=0.1, iters=100, seed=0)
    purity, used = topic_purity(model.topic_word_counts, [list(range(5)), list(range(5, 10))])
    assert purity >= 0.95 and used == {0, 1}
    theta = lda_transform([[0, 1, 2, 3, 4] * 3, [5, 6, 7, 8, 9] * 3], model)
    assert theta[0].argmax() != theta[1].argmax()
    assert theta.max(axis=1).min() > 0.8


def test_theta_on_simplex():
    docs = _two_topic_corpus(20)
    model = lda_fit(docs, 10, n_topics=4, iters=20)
    theta = lda_transform(docs + [[], [3]], model)
    assert (theta > 0).all()
    np.testing.assert_allclose(theta.sum(axis=1), 1.0, atol=1e-9)


def test_row_independent_of_batch():
    docs = _two_topic_corpus(10)
    model = lda_fit(docs, 10, n_topics=3, iters=10)
    alone = lda_infer(docs[3], model, seed=2)
    batch = lda_transform(docs[:6], model, seed=2)
    np.testing.assert_array_equal(alone, batch[3])


def test_bytes_roundtrip():
    model = lda_fit(_two_topic_corpus(8), 10, n_topics=3, iters=4, seed=9)
    blob = model.to_bytes()
    back = LdaModel.from_bytes(blob)
    np.testing.assert_array_equal(back.topic_word_counts, model.topic_word_counts)
    assert (back.alpha, back.beta, back.seed) == (model.alpha, model.beta, model.seed)
    assert back.to_bytes() == blob
    with pytest.raises(ValueError):
        LdaModel.from_bytes(b"XXXX" + blob[4:])


def test_repeated_single_word_docs_split_topics():
    docs = [[i % 2] * 8 for i in range(40)]
    model = lda_fit(docs, 2, n_topics=2, iters=200, seed=1)
    dominant = model.topic_word_counts.argmax(axis=0)
    assert dominant[0] != dominant[1]
