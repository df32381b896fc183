"""Multi-window 1-D CNN over node-class embeddings, written directly in numpy.

Architecture: embedding -> parallel same-padded convolutions (one bank per
window size) with ReLU -> masked global *sum* pooling -> concatenation ->
dropout -> 2-way dense softmax.  Sum pooling keeps the class activation map
an exact decomposition of the logits.

Arrays are batched internally: ids/mask are (B, L), activations (B, L, F).
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .corpus import BUGGY, CLEAN
from .frontend import EncodedSample, Vocabulary, encode

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class Hyperparams:
    embed_dim: int = 64
    window_sizes: tuple[int, ...] = (3, 4, 5)
    filters: int = 512
    dropout: float = 0.5
    epochs: int = 40
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 42
    max_len: int = 0  # fixed from the longest training vector when training starts
    threshold: float = 0.5

    def __post_init__(self):
        self.window_sizes = tuple(sorted(int(s) for s in self.window_sizes))
        self.validate()

    def validate(self) -> None:
        if self.embed_dim < 1 or self.filters < 1:
            raise ValueError("embed_dim and filters must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if not self.window_sizes or min(self.window_sizes) < 1:
            raise ValueError("window sizes must be >= 1")
        if self.max_len and max(self.window_sizes) > self.max_len:
            raise ValueError("window sizes must not exceed max_len")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")

    @classmethod
    def field_types(cls) -> dict[str, type]:
        return {f.name: (tuple if f.name == "window_sizes" else type(f.default))
                for f in fields(cls)}


@dataclass
class ModelParams:
    E: np.ndarray  # (V + 2, d); row 0 is PAD and stays zero
    W: list[np.ndarray]  # per window size s: (F, s, d)
    b: list[np.ndarray]  # per window size: (F,)
    W_out: np.ndarray  # (2, n_windows * F)
    b_out: np.ndarray  # (2,)
    vocab: Vocabulary
    hp: Hyperparams

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        """Parameter arrays in canonical (serialization) order."""
        out = [("E", self.E)]
        for s, W, b in zip(self.hp.window_sizes, self.W, self.b):
            out += [(f"W{s}", W), (f"b{s}", b)]
        return out + [("W_out", self.W_out), ("b_out", self.b_out)]

    def astype(self, dtype) -> ModelParams:
        return ModelParams(self.E.astype(dtype), [w.astype(dtype) for w in self.W],
                           [b.astype(dtype) for b in self.b], self.W_out.astype(dtype),
                           self.b_out.astype(dtype), self.vocab, replace(self.hp))

    def copy(self) -> ModelParams:
        return self.astype(self.E.dtype)

    @property
    def dtype(self):
        return self.E.dtype

    @property
    def n_filters_total(self) -> int:
        return len(self.hp.window_sizes) * self.hp.filters


def init_params(vocab: Vocabulary, hp: Hyperparams, rng: np.random.Generator | None = None,
                dtype=np.float32) -> ModelParams:
    """Uniform init with limit sqrt(3 / fan_in); biases zero."""
    if rng is None:
        rng = np.random.default_rng(hp.seed)
    d, F = hp.embed_dim, hp.filters

    def uni(shape, fan_in):
        lim = np.sqrt(3.0 / fan_in)
        return rng.uniform(-lim, lim, size=shape).astype(dtype)

    E = uni((vocab.n_rows, d), d)
    E[0] = 0.0
    W = [uni((F, s, d), s * d) for s in hp.window_sizes]
    b = [np.zeros(F, dtype) for _ in hp.window_sizes]
    W_out = uni((2, len(hp.window_sizes) * F), len(hp.window_sizes) * F)
    return ModelParams(E, W, b, W_out, np.zeros(2, dtype), vocab, hp)


# ---------------------------------------------------------------------------
# forward / backward

@dataclass
class ForwardCache:
    ids: np.ndarray
    mask: np.ndarray
    X: np.ndarray  # (B, L, d)
    cols: list[np.ndarray]  # per window: (B, L, s*d) im2col view of padded X
    pre: list[np.ndarray]  # per window: (B, L, F) pre-activation
    A: list[np.ndarray]  # per window: (B, L, F) post-ReLU, post-mask  (g_k(i))
    H: np.ndarray  # (B, nF) pooled sums (H_k)
    keep: np.ndarray | None  # dropout retained-unit scale, (B, nF) or None at inference
    H_drop: np.ndarray
    z: np.ndarray  # (B, 2)
    S: np.ndarray  # (B, 2)

    def activation(self, window: int, b: int = 0) -> np.ndarray:
        """Activation map of one window bank as (F, L)."""
        return self.A[window][b].T

    @property
    def G(self) -> np.ndarray:
        """All filters' activations concatenated: (B, L, nF)."""
        return np.concatenate(self.A, axis=2)


def _as_batch(samples) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(samples, EncodedSample):
        samples = [samples]
    ids = np.stack([s.ids for s in samples])
    mask = np.stack([s.mask for s in samples])
    return ids, mask


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def forward_batch(params: ModelParams, ids: np.ndarray, mask: np.ndarray, train: bool = False,
                  rng: np.random.Generator | None = None, keep: np.ndarray | None = None) -> ForwardCache:
    hp = params.hp
    if ids.ndim != 2 or ids.shape != mask.shape:
        raise ValueError(f"ids/mask must be matching (B, L) arrays, got {ids.shape} and {mask.shape}")
    if ids.max(initial=0) >= params.E.shape[0] or ids.min(initial=0) < 0:
        raise ValueError("sample ids fall outside the embedding table")
    dt = params.dtype
    B, L = ids.shape
    d = params.E.shape[1]
    m = mask.astype(dt)[:, :, None]
    X = params.E[ids]
    cols, pre, A, pooled = [], [], [], []
    for s, W, b in zip(hp.window_sizes, params.W, params.b):
        left = (s - 1) // 2
        Xp = np.pad(X, ((0, 0), (left, s - 1 - left), (0, 0)))
        c = sliding_window_view(Xp, s, axis=1)  # (B, L, d, s)
        c = np.ascontiguousarray(c.transpose(0, 1, 3, 2)).reshape(B, L, s * d)
        p = c @ W.reshape(W.shape[0], s * d).T + b
        a = np.maximum(p, 0) * m
        cols.append(c)
        pre.append(p)
        A.append(a)
        pooled.append(a.sum(axis=1))
    H = np.concatenate(pooled, axis=1)
    if train and hp.dropout > 0:
        if keep is None:
            if rng is None:
                raise ValueError("training-mode forward needs an rng for dropout")
            keep = (rng.random(H.shape) >= hp.dropout).astype(dt) / dt.type(1.0 - hp.dropout)
        H_drop = H * keep
    else:
        keep = None
        H_drop = H
    z = H_drop @ params.W_out.T + params.b_out
    return ForwardCache(ids, mask, X, cols, pre, A, H, keep, H_drop, z, _softmax(z))


def forward(params: ModelParams, sample: EncodedSample, train: bool = False,
            rng: np.random.Generator | None = None) -> ForwardCache:
    if sample.ids.shape[0] != params.hp.max_len:
        raise ValueError(f"sample length {sample.ids.shape[0]} != model max_len {params.hp.max_len}")
    ids, mask = _as_batch(sample)
    return forward_batch(params, ids, mask, train, rng)


def cross_entropy(S: np.ndarray, labels: np.ndarray) -> np.ndarray:
    p = S[np.arange(len(labels)), labels]
    with np.errstate(divide="ignore"):
        return -np.log(p)


def backward(params: ModelParams, cache: ForwardCache, labels: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Mean cross-entropy over the batch and its gradient for every tensor."""
    hp = params.hp
    labels = np.asarray(labels, dtype=np.int64)
    B, L = cache.ids.shape
    losses = cross_entropy(cache.S, labels)
    loss = float(losses.mean())
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite loss: weights have diverged")
    dt = params.dtype
    dz = cache.S.copy()
    dz[np.arange(B), labels] -= 1
    dz /= B
    dW_out = dz.T @ cache.H_drop
    db_out = dz.sum(axis=0)
    dH = dz @ params.W_out
    if cache.keep is not None:
        dH = dH * cache.keep
    m = cache.mask.astype(dt)[:, :, None]
    d = params.E.shape[1]
    F = hp.filters
    dX = np.zeros_like(cache.X)
    dWs, dbs = [], []
    for w, (s, W) in enumerate(zip(hp.window_sizes, params.W)):
        dA = dH[:, None, w * F:(w + 1) * F]
        dpre = dA * (cache.pre[w] > 0) * m  # (B, L, F)
        flat = dpre.reshape(B * L, F)
        dWs.append((flat.T @ cache.cols[w].reshape(B * L, s * d)).reshape(F, s, d))
        dbs.append(flat.sum(axis=0))
        dcols = (dpre @ W.reshape(F, s * d)).reshape(B, L, s, d)
        left = (s - 1) // 2
        dXp = np.zeros((B, L + s - 1, d), dtype=dt)
        for j in range(s):
            dXp[:, j:j + L] += dcols[:, :, j]
        dX += dXp[:, left:left + L]
    onehot = np.zeros((B * L, params.E.shape[0]), dtype=dt)
    onehot[np.arange(B * L), cache.ids.reshape(-1)] = 1
    dE = onehot.T @ dX.reshape(B * L, d)
    dE[0] = 0.0
    grads = [dE]
    for dW, db in zip(dWs, dbs):
        grads += [dW, db]
    grads += [dW_out, db_out]
    return loss, grads


def loss_and_gradients(params: ModelParams, sample: EncodedSample, cache: ForwardCache):
    return backward(params, cache, np.array([sample.label]))


# ---------------------------------------------------------------------------
# optimizer

@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> AdamState:
        arrays = [a for _, a in params.tensors()]
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays])


def _set_tensors(params: ModelParams, arrays: Sequence[np.ndarray]) -> None:
    n = len(params.hp.window_sizes)
    params.E = arrays[0]
    params.W = list(arrays[1:1 + 2 * n:2])
    params.b = list(arrays[2:2 + 2 * n:2])
    params.W_out, params.b_out = arrays[-2], arrays[-1]


def adam_step(params: ModelParams, grads: Sequence[np.ndarray], state: AdamState
              ) -> tuple[ModelParams, AdamState]:
    """Bias-corrected Adam update, in place.  The PAD embedding row is never touched."""
    hp = params.hp
    state.t += 1
    t = state.t
    dt = params.dtype.type
    c1 = dt(1.0 - hp.beta1 ** t)
    c2 = dt(1.0 - hp.beta2 ** t)
    b1, b2 = dt(hp.beta1), dt(hp.beta2)
    lr, eps = dt(hp.learning_rate), dt(hp.epsilon)
    for (_, p), g, m, v in zip(params.tensors(), grads, state.m, state.v):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    params.E[0] = 0.0
    return params, state


# ---------------------------------------------------------------------------
# training

@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    seconds: float = 0.0


@dataclass
class TrainReport:
    rows: list[EpochMetrics] = field(default_factory=list)

    CSV_HEADER = "epoch,train_loss,train_acc,val_loss,val_acc"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(f"{r.epoch},{r.train_loss:.6f},{r.train_acc:.6f},"
                         f"{r.val_loss:.6f},{r.val_acc:.6f}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())

    def __eq__(self, other) -> bool:
        # wall time is not part of the deterministic contract
        return isinstance(other, TrainReport) and self.to_csv() == other.to_csv()


def _stack(samples: Sequence[EncodedSample]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ids = np.stack([s.ids for s in samples])
    mask = np.stack([s.mask for s in samples])
    labels = np.array([s.label for s in samples], dtype=np.int64)
    return ids, mask, labels


def batched_probs(params: ModelParams, ids: np.ndarray, mask: np.ndarray, chunk: int = 256
                  ) -> np.ndarray:
    out = [forward_batch(params, ids[i:i + chunk], mask[i:i + chunk]).S
           for i in range(0, len(ids), chunk)]
    return np.concatenate(out) if out else np.zeros((0, 2), params.dtype)


def fit(train_samples: Sequence[EncodedSample], val_samples: Sequence[EncodedSample],
        vocab: Vocabulary, hp: Hyperparams,
        on_epoch: Callable[[EpochMetrics], None] | None = None) -> tuple[ModelParams, TrainReport]:
    """Train on already-encoded samples (all encoded at ``hp.max_len``)."""
    if not train_samples:
        raise TrainingError("training split is empty")
    if not val_samples:
        raise TrainingError("validation split is empty")
    tr_ids, tr_mask, tr_y = _stack(train_samples)
    va_ids, va_mask, va_y = _stack(val_samples)
    if len(set(tr_y.tolist())) < 2:
        raise TrainingError("training split contains a single class; both labels are required")
    init_ss, loop_ss = np.random.SeedSequence(hp.seed).spawn(2)
    params = init_params(vocab, hp, np.random.default_rng(init_ss))
    rng = np.random.default_rng(loop_ss)
    state = AdamState.zeros_like(params)
    report = TrainReport()
    n = len(tr_y)
    for epoch in range(1, hp.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        loss_sum, correct = 0.0, 0
        for start in range(0, n, hp.batch_size):
            idx = order[start:start + hp.batch_size]
            cache = forward_batch(params, tr_ids[idx], tr_mask[idx], train=True, rng=rng)
            loss, grads = backward(params, cache, tr_y[idx])
            adam_step(params, grads, state)
            loss_sum += loss * len(idx)
            correct += int((cache.S.argmax(axis=1) == tr_y[idx]).sum())
        S = batched_probs(params, va_ids, va_mask)
        val_loss = float(cross_entropy(S, va_y).mean())
        val_acc = float(((S[:, 1] >= hp.threshold).astype(np.int64) == va_y).mean())
        row = EpochMetrics(epoch, loss_sum / n, correct / n, val_loss, val_acc,
                           time.perf_counter() - t0)
        report.rows.append(row)
        log.info("epoch %d: train_loss=%.4f train_acc=%.4f val_loss=%.4f val_acc=%.4f (%.1fs)",
                 row.epoch, row.train_loss, row.train_acc, row.val_loss, row.val_acc, row.seconds)
        if on_epoch is not None:
            on_epoch(row)
    return params, report


def predict(params: ModelParams, sample: EncodedSample) -> tuple[str, float]:
    """Returns (label, prob_buggy); a probability equal to the threshold counts as buggy."""
    prob = float(forward(params, sample).S[0, 1])
    return (BUGGY if prob >= params.hp.threshold else CLEAN), prob


def encode_for(params: ModelParams, vector, label=None, truth_lines=()) -> EncodedSample:
    return encode(vector, params.vocab, params.hp.max_len, label, truth_lines)


# ---------------------------------------------------------------------------
# gradient check

def _relative_error(a: np.ndarray, n: np.ndarray) -> float:
    denom = np.linalg.norm(a) + np.linalg.norm(n)
    return 0.0 if denom == 0 else float(np.linalg.norm(a - n) / denom)


def tiny_model(seed: int = 0, vocab_size: int = 20, embed_dim: int = 8, filters: int = 4,
               windows=(3, 4, 5), max_len: int = 30, dtype=np.float64,
               kink_margin: float = 1e-3) -> tuple[ModelParams, EncodedSample]:
    """Random small model plus a random partially padded sample for checks.

    Draws are repeated (deterministically) until no valid pre-activation lies
    within ``kink_margin`` of zero, so central differences never straddle a
    ReLU kink.
    """
    rng = np.random.default_rng(seed)
    vocab = Vocabulary(tuple(f"C{i}" for i in range(vocab_size)))
    hp = Hyperparams(embed_dim=embed_dim, filters=filters, window_sizes=windows,
                     max_len=max_len, dropout=0.5, seed=seed)
    while True:
        params = init_params(vocab, hp, rng, dtype=dtype)
        # nonzero biases so the check exercises every gradient path
        for b in params.b:
            b[:] = rng.uniform(-0.1, 0.1, b.shape)
        params.b_out[:] = rng.uniform(-0.1, 0.1, 2)
        length = int(rng.integers(max_len // 2, max_len))
        ids = np.zeros(max_len, dtype=np.int64)
        ids[:length] = rng.integers(1, vocab.unk + 1, size=length)
        mask = (ids != 0).astype(np.int8)
        lines = np.where(mask == 1, np.arange(1, max_len + 1), 0)
        sample = EncodedSample(ids, mask, lines, int(rng.integers(0, 2)))
        cache = forward_batch(params, ids[None], mask[None])
        valid = mask.astype(bool)
        if min(np.abs(p[0][valid]).min() for p in cache.pre) >= kink_margin:
            return params, sample


def gradcheck(seed: int = 0, step: float = 1e-4, precision: str = "high", **tiny) -> dict[str, float]:
    """Max relative error (per tensor, norm-based) of analytic vs central differences.

    ``precision="high"`` runs everything in float64.  ``"standard"`` checks
    the float32 analytic gradients against float64 central differences taken
    at the same parameter values.  The PAD embedding row is excluded: it is
    frozen at zero and its gradient is defined to be zero.
    """
    params64, sample = tiny_model(seed, **tiny)
    ids, mask = _as_batch(sample)
    labels = np.array([sample.label])
    rng = np.random.default_rng(seed + 1000)
    cache = forward_batch(params64, ids, mask, train=True, rng=rng)
    keep = cache.keep
    if precision == "high":
        _, analytic = backward(params64, cache, labels)
    elif precision == "standard":
        p32 = params64.astype(np.float32)
        params64 = p32.astype(np.float64)
        c32 = forward_batch(p32, ids, mask, train=True, keep=keep.astype(np.float32))
        _, analytic = backward(p32, c32, labels)
    else:
        raise ValueError("precision must be 'high' or 'standard'")

    def loss_at() -> float:
        c = forward_batch(params64, ids, mask, train=True, keep=keep)
        return float(cross_entropy(c.S, labels).mean())

    errors = {}
    for (name, arr), grad in zip(params64.tensors(), analytic):
        numeric = np.zeros_like(arr, dtype=np.float64)
        flat = arr.reshape(-1)
        start = params64.E.shape[1] if name == "E" else 0  # skip the PAD row
        for i in range(start, flat.size):
            old = flat[i]
            flat[i] = old + step
            up = loss_at()
            flat[i] = old - step
            down = loss_at()
            flat[i] = old
            numeric.reshape(-1)[i] = (up - down) / (2 * step)
        a = np.asarray(grad, dtype=np.float64).reshape(-1)[start:]
        errors[name] = _relative_error(a, numeric.reshape(-1)[start:])
    return errors
