import numpy as np
import pytest

from deeprace.frontend import EncodedSample, Vocabulary
from deeprace.model import (AdamState, Hyperparams, ModelParams, TrainingError, adam_step,
                            backward, cross_entropy, fit, forward, forward_batch, gradcheck,
                            init_params, predict, tiny_model)

from oracles import forward_reference


def hand_model():
    """One class, d=1, every conv weight 1, W_out[1] = [1, 2, 3]."""
    vocab = Vocabulary(("A",))
    hp = Hyperparams(embed_dim=1, filters=1, window_sizes=(3, 4, 5), max_len=5, dropout=0.0)
    E = np.array([[0.0], [1.0], [1.0]])
    W = [np.ones((1, s, 1)) for s in (3, 4, 5)]
    b = [np.zeros(1) for _ in range(3)]
    W_out = np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])
    params = ModelParams(E, W, b, W_out, np.zeros(2), vocab, hp)
    ids = np.array([1, 1, 1, 0, 0])
    sample = EncodedSample(ids, (ids != 0).astype(np.int8), np.array([1, 2, 3, 0, 0]), 1)
    return params, sample


def sample_of(ids, label=0):
    ids = np.asarray(ids)
    mask = (ids != 0).astype(np.int8)
    return EncodedSample(ids, mask, np.where(mask == 1, np.arange(1, len(ids) + 1), 0), label)


def test_forward_matches_loop_reference():
    params, sample = tiny_model(seed=3)
    cache = forward(params, sample)
    z, acts = forward_reference(params, sample.ids, sample.mask)
    np.testing.assert_allclose(cache.z[0], z, rtol=1e-10, atol=1e-10)
    for w, a in enumerate(acts):
        np.testing.assert_allclose(cache.A[w][0], a, atol=1e-10)


def test_hand_weighted_pooling():
    params, sample = hand_model()
    cache = forward(params, sample)
    # windows 3/4/5 pooled by hand: 2+3+2, 3+3+2, 3+3+3
    np.testing.assert_allclose(cache.H[0], [7.0, 8.0, 9.0])
    assert cache.z[0, 1] == pytest.approx(50.0)


def test_padding_is_inert():
    params, sample = tiny_model(seed=5, max_len=40)
    ids = sample.ids.copy()
    n = int(sample.mask.sum())
    longer = np.zeros(60, dtype=ids.dtype)
    longer[:40] = ids
    p2 = params.copy()
    p2.hp.max_len = 60
    a = forward(params, sample).z
    b = forward(p2, sample_of(longer)).z
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert n < 40


def test_locality():
    params, sample = tiny_model(seed=9, max_len=30)
    base = forward(params, sample)
    k = 12
    ids = sample.ids.copy()
    ids[k] = ids[k] % (params.vocab.unk) + 1
    moved = forward(params, sample_of(ids))
    for w, s in enumerate(params.hp.window_sizes):
        left = (s - 1) // 2
        changed = np.nonzero(np.abs(moved.A[w][0] - base.A[w][0]).max(axis=1) > 0)[0]
        assert changed.min() >= k - (s - 1 - left) and changed.max() <= k + left


@pytest.mark.parametrize("precision,bound", [("high", 1e-5), ("standard", 1e-3)])
def test_gradcheck(precision, bound):
    errs = gradcheck(seed=1, precision=precision, vocab_size=6, embed_dim=4, filters=2,
                     max_len=12)
    assert max(errs.values()) < bound, errs


def test_first_adam_step_moves_by_learning_rate():
    params, sample = tiny_model(seed=2)
    before = [a.copy() for _, a in params.tensors()]
    cache = forward(params, sample)
    _, grads = backward(params, cache, np.array([sample.label]))
    adam_step(params, grads, AdamState.zeros_like(params))
    lr = params.hp.learning_rate
    for old, (name, new), g in zip(before, params.tensors(), grads):
        expected = old - lr * g / (np.abs(g) + params.hp.epsilon)
        np.testing.assert_allclose(new, expected, atol=1e-12, err_msg=name)
    assert not params.E[0].any()


def test_cross_entropy():
    S = np.array([[0.25, 0.75], [0.9, 0.1]])
    np.testing.assert_allclose(cross_entropy(S, np.array([1, 0])), [-np.log(0.75), -np.log(0.9)])


def test_init_bounds():
    vocab = Vocabulary(("A", "B"))
    hp = Hyperparams(embed_dim=16, filters=8)
    p = init_params(vocab, hp)
    assert p.E.dtype == np.float32 and not p.E[0].any()
    assert np.abs(p.E).max() <= np.sqrt(3 / 16)
    assert np.abs(p.W[0]).max() <= np.sqrt(3 / (3 * 16))
    assert all(not b.any() for b in p.b)


@pytest.mark.parametrize("kw", [dict(embed_dim=0), dict(dropout=1.0), dict(window_sizes=()),
                                dict(window_sizes=(0,)), dict(batch_size=0),
                                dict(window_sizes=(3, 9), max_len=5)])
def test_hyperparam_validation(kw):
    with pytest.raises(ValueError):
        Hyperparams(**kw)


def _toy_split(rng, n, L=12):
    """Label is 1 iff token 3 appears; everything else is noise from tokens 1..2."""
    out = []
    for i in range(n):
        length = int(rng.integers(4, L))
        ids = np.zeros(L, dtype=np.int64)
        ids[:length] = rng.integers(1, 3, size=length)
        label = i % 2
        if label:
            ids[int(rng.integers(0, length))] = 3
        out.append(sample_of(ids, label))
    return out


def test_fit_learns_and_is_deterministic():
    rng = np.random.default_rng(0)
    tr, va = _toy_split(rng, 80), _toy_split(rng, 40)
    vocab = Vocabulary(("a", "b", "c"))
    hp = Hyperparams(embed_dim=8, filters=6, epochs=8, batch_size=8, max_len=12,
                     learning_rate=1e-2, dropout=0.2, seed=4)
    p1, r1 = fit(tr, va, vocab, hp)
    p2, r2 = fit(tr, va, vocab, Hyperparams(**{**hp.__dict__}))
    assert r1 == r2
    for (_, a), (_, b) in zip(p1.tensors(), p2.tensors()):
        assert np.array_equal(a, b)
    assert r1.rows[-1].val_acc >= 0.9
    label, prob = predict(p1, va[1])
    assert label == "buggy" and prob >= 0.5
    assert r1.to_csv().splitlines()[0] == "epoch,train_loss,train_acc,val_loss,val_acc"


def test_fit_rejects_degenerate_splits():
    vocab = Vocabulary(("a",))
    hp = Hyperparams(embed_dim=2, filters=2, max_len=6, epochs=1)
    ones = [sample_of([1, 1, 0, 0, 0, 0], 1)] * 3
    with pytest.raises(TrainingError, match="single class"):
        fit(ones, ones, vocab, hp)
    with pytest.raises(TrainingError):
        fit([], ones, vocab, hp)
    with pytest.raises(TrainingError):
        fit(ones + [sample_of([1, 0, 0, 0, 0, 0], 0)], [], vocab, hp)


def test_forward_rejects_bad_input():
    params, sample = tiny_model()
    with pytest.raises(ValueError):
        forward_batch(params, sample.ids[None], sample.mask[None, :-1])
    bad = sample.ids.copy()
    bad[0] = params.E.shape[0]
    with pytest.raises(ValueError):
        forward_batch(params, bad[None], sample.mask[None])
    with pytest.raises(ValueError):
        forward_batch(params, sample.ids[None], sample.mask[None], train=True)
