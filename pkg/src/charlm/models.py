"""The three recurrent architectures and their hand-derived gradients.

All models share the Elman cell h_t = sigmoid(A[:, c_t] + R h_prev) and a
softmax readout; they differ in what conditions the hidden state or the
output matrix. Backward passes are truncated BPTT over a window: the
hidden state carried into the window is a constant, as is the word-side
context vector fed to the character side of the mixed model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import ShapeError, clip_elementwise, sigmoid, softmax
from .ngrams import NGramIndex, contexts_for_stream


@dataclass
class CRNNParams:
    """Plain character RNN: embedding A (m x d+1), recurrent R (m x m),
    output U (d x m). A's extra column serves unseen test characters."""

    A: np.ndarray
    R: np.ndarray
    U: np.ndarray

    @property
    def m(self) -> int:
        return self.R.shape[0]

    @property
    def d(self) -> int:
        return self.U.shape[0]


@dataclass
class MixedParams:
    """Word-conditioned character RNN.

    Character side adds Q (m x g) applied to the word context vector; the
    word side is its own Elman RNN over the full vocabulary with a softmax
    restricted to the k_out most frequent words plus <UNK>.
    """

    A: np.ndarray
    R: np.ndarray
    U: np.ndarray
    Q: np.ndarray
    Aw: np.ndarray
    Rw: np.ndarray
    Uw: np.ndarray
    lam: float

    @property
    def m(self) -> int:
        return self.R.shape[0]

    @property
    def d(self) -> int:
        return self.U.shape[0]

    @property
    def g(self) -> int:
        return self.Rw.shape[0]

    @property
    def k_out(self) -> int:
        return self.Uw.shape[0]


@dataclass
class CondParams:
    """History-conditioned output: one d x m output matrix per retained
    n-gram context, selected by longest suffix match."""

    A: np.ndarray
    R: np.ndarray
    bank: np.ndarray  # (num_contexts, d, m)

    @property
    def m(self) -> int:
        return self.R.shape[0]

    @property
    def d(self) -> int:
        return self.bank.shape[1]


def crnn_step(p, c_t: int, h_prev: np.ndarray) -> np.ndarray:
    """h_t = sigmoid(A[:, c_t] + R h_prev); works for any param bundle
    carrying A and R."""
    if h_prev.shape[0] != p.R.shape[0]:
        raise ShapeError(f"hidden state dim {h_prev.shape[0]} != {p.R.shape[0]}")
    return sigmoid(p.A[:, c_t] + p.R @ h_prev)


def crnn_output(p: CRNNParams, h_t: np.ndarray) -> np.ndarray:
    return softmax(p.U @ h_t)


def word_rnn_step(p: MixedParams, w_p: int, g_prev: np.ndarray) -> np.ndarray:
    if g_prev.shape[0] != p.Rw.shape[0]:
        raise ShapeError(f"word hidden dim {g_prev.shape[0]} != {p.Rw.shape[0]}")
    return sigmoid(p.Aw[:, w_p] + p.Rw @ g_prev)


def mixed_step(p: MixedParams, c_t: int, h_prev: np.ndarray, z_t: np.ndarray) -> np.ndarray:
    """h_t = sigmoid(A[:, c_t] + R h_prev + Q z_t)."""
    if z_t.shape[0] != p.Q.shape[1]:
        raise ShapeError(f"context vector dim {z_t.shape[0]} != {p.Q.shape[1]}")
    return sigmoid(p.A[:, c_t] + p.R @ h_prev + p.Q @ z_t)


def mixed_word_output(p: MixedParams, g_p: np.ndarray) -> np.ndarray:
    return softmax(p.Uw @ g_p)


def cond_output(p: CondParams, h_t: np.ndarray, ctx: int) -> np.ndarray:
    return softmax(p.bank[ctx] @ h_t)


def nll_char(predictions, targets) -> float:
    """Negative log-likelihood in nats: -sum_t log y_t[target_t]."""
    if len(predictions) != len(targets):
        raise ShapeError(f"{len(predictions)} predictions vs {len(targets)} targets")
    return -sum(float(np.log(y[c])) for y, c in zip(predictions, targets))


def nll_mixed(char_term: float, word_term: float, lam: float) -> float:
    if not 0.0 < lam < 1.0:
        raise ValueError(f"interpolation weight must be in (0,1), got {lam}")
    return lam * char_term + (1.0 - lam) * word_term


# ---------------------------------------------------------------------------
# windowed forward / backward
# ---------------------------------------------------------------------------

@dataclass
class _WindowCache:
    chars: np.ndarray
    targets: np.ndarray
    h0: np.ndarray
    hs: np.ndarray       # (W, m) post-sigmoid hidden states
    ys: np.ndarray       # (W, d) output distributions
    ctxs: np.ndarray | None = None
    zs: np.ndarray | None = None          # (W, g) frozen word context vectors
    word_inputs: np.ndarray | None = None
    word_targets: np.ndarray | None = None  # -1 marks "no target"
    g0: np.ndarray | None = None
    gs: np.ndarray | None = None
    vs: np.ndarray | None = None


class PlainCharRNN:
    """Plain character RNN with truncated-BPTT training."""

    kind = "plain"

    def __init__(self, params: CRNNParams):
        self.params = params

    def initial_carry(self) -> np.ndarray:
        return np.zeros(self.params.m)

    def forward_window(self, chars, targets, h0):
        p = self.params
        W = len(chars)
        hs = np.empty((W, p.m))
        ys = np.empty((W, p.d))
        h = h0
        nll = 0.0
        for t in range(W):
            h = sigmoid(p.A[:, chars[t]] + p.R @ h)
            y = softmax(p.U @ h)
            hs[t] = h
            ys[t] = y
            nll -= np.log(y[targets[t]])
        cache = _WindowCache(chars=np.asarray(chars), targets=np.asarray(targets),
                             h0=h0, hs=hs, ys=ys)
        return float(nll), cache, (hs[-1].copy() if W else h0)

    def backward_window(self, cache: _WindowCache) -> dict:
        p = self.params
        W = len(cache.chars)
        dA = np.zeros_like(p.A)
        dR = np.zeros_like(p.R)
        dU = np.zeros_like(p.U)
        dh_next = np.zeros(p.m)
        for t in range(W - 1, -1, -1):
            h = cache.hs[t]
            dy = cache.ys[t].copy()
            dy[cache.targets[t]] -= 1.0
            dU += np.outer(dy, h)
            dh = p.U.T @ dy + dh_next
            delta = dh * h * (1.0 - h)
            dA[:, cache.chars[t]] += delta
            h_prev = cache.hs[t - 1] if t > 0 else cache.h0
            dR += np.outer(delta, h_prev)
            dh_next = p.R.T @ delta
        return {"A": dA, "R": dR, "U": dU}

    def apply_update(self, grads: dict, lr: float, tau: float) -> None:
        p = self.params
        p.A -= lr * clip_elementwise(grads["A"], tau)
        p.R -= lr * clip_elementwise(grads["R"], tau)
        p.U -= lr * clip_elementwise(grads["U"], tau)

    def step_distribution(self, c_t, carry):
        """One evaluation step: returns (next-char distribution, new carry)."""
        h = crnn_step(self.params, c_t, carry)
        return crnn_output(self.params, h), h


class CondCharRNN:
    """Character RNN whose output matrix is selected per step by the
    longest retained n-gram of recent history."""

    kind = "cond"

    def __init__(self, params: CondParams, index: NGramIndex):
        self.params = params
        self.index = index

    def initial_carry(self) -> np.ndarray:
        return np.zeros(self.params.m)

    def forward_window(self, chars, targets, h0, ctxs=None):
        p = self.params
        if ctxs is None:
            ctxs = contexts_for_stream(self.index, chars)
        W = len(chars)
        hs = np.empty((W, p.m))
        ys = np.empty((W, p.d))
        h = h0
        nll = 0.0
        for t in range(W):
            h = sigmoid(p.A[:, chars[t]] + p.R @ h)
            y = softmax(p.bank[ctxs[t]] @ h)
            hs[t] = h
            ys[t] = y
            nll -= np.log(y[targets[t]])
        cache = _WindowCache(chars=np.asarray(chars), targets=np.asarray(targets),
                             h0=h0, hs=hs, ys=ys, ctxs=np.asarray(ctxs))
        return float(nll), cache, (hs[-1].copy() if W else h0)

    def backward_window(self, cache: _WindowCache) -> dict:
        p = self.params
        W = len(cache.chars)
        dA = np.zeros_like(p.A)
        dR = np.zeros_like(p.R)
        dbank: dict[int, np.ndarray] = {}
        dh_next = np.zeros(p.m)
        for t in range(W - 1, -1, -1):
            h = cache.hs[t]
            ctx = int(cache.ctxs[t])
            dy = cache.ys[t].copy()
            dy[cache.targets[t]] -= 1.0
            blk = dbank.get(ctx)
            if blk is None:
                blk = dbank[ctx] = np.zeros((p.d, p.m))
            blk += np.outer(dy, h)
            dh = p.bank[ctx].T @ dy + dh_next
            delta = dh * h * (1.0 - h)
            dA[:, cache.chars[t]] += delta
            h_prev = cache.hs[t - 1] if t > 0 else cache.h0
            dR += np.outer(delta, h_prev)
            dh_next = p.R.T @ delta
        return {"A": dA, "R": dR, "bank": dbank}

    def apply_update(self, grads: dict, lr: float, tau: float) -> None:
        p = self.params
        p.A -= lr * clip_elementwise(grads["A"], tau)
        p.R -= lr * clip_elementwise(grads["R"], tau)
        for ctx, blk in grads["bank"].items():
            p.bank[ctx] -= lr * clip_elementwise(blk, tau)

    def step_distribution(self, c_t, carry):
        history, h = carry
        h = crnn_step(self.params, c_t, h)
        history = (history + [int(c_t)])[-self.index.max_order:]
        ctx = self.index.longest_match(history)
        return cond_output(self.params, h, ctx), (history, h)

    def initial_eval_carry(self):
        return ([], np.zeros(self.params.m))


class MixedCharRNN:
    """Word-conditioned character RNN trained on an interpolated loss.

    The context vectors fed to the character side are frozen inputs within
    a window: the character loss does not backpropagate into the word RNN.
    """

    kind = "mixed"

    def __init__(self, params: MixedParams):
        self.params = params

    def initial_carry(self):
        return np.zeros(self.params.m), np.zeros(self.params.g)

    def forward_window(self, chars, targets, zs, word_inputs, word_targets, h0, g0):
        """Forward over one window.

        zs has one frozen context vector per character step; word_inputs
        are the words completing inside the window, word_targets the next
        word for each (-1 when the stream ends first). Returns the two
        unweighted loss terms so the interpolation stays explicit.
        """
        p = self.params
        W = len(chars)
        hs = np.empty((W, p.m))
        ys = np.empty((W, p.d))
        h = h0
        char_nll = 0.0
        for t in range(W):
            h = sigmoid(p.A[:, chars[t]] + p.R @ h + p.Q @ zs[t])
            y = softmax(p.U @ h)
            hs[t] = h
            ys[t] = y
            char_nll -= np.log(y[targets[t]])

        P = len(word_inputs)
        gs = np.empty((P, p.g))
        vs = np.empty((P, p.k_out))
        gcur = g0
        word_nll = 0.0
        for j in range(P):
            gcur = sigmoid(p.Aw[:, word_inputs[j]] + p.Rw @ gcur)
            v = softmax(p.Uw @ gcur)
            gs[j] = gcur
            vs[j] = v
            if word_targets[j] >= 0:
                word_nll -= np.log(v[word_targets[j]])

        cache = _WindowCache(chars=np.asarray(chars), targets=np.asarray(targets),
                             h0=h0, hs=hs, ys=ys, zs=np.asarray(zs),
                             word_inputs=np.asarray(word_inputs, dtype=np.int64),
                             word_targets=np.asarray(word_targets, dtype=np.int64),
                             g0=g0, gs=gs, vs=vs)
        new_h = hs[-1].copy() if W else h0
        new_g = gs[-1].copy() if P else g0
        return float(char_nll), float(word_nll), cache, (new_h, new_g)

    def backward_window(self, cache: _WindowCache) -> dict:
        """Gradients of lam * char_nll + (1-lam) * word_nll."""
        p = self.params
        lam = p.lam
        W = len(cache.chars)
        dA = np.zeros_like(p.A)
        dR = np.zeros_like(p.R)
        dU = np.zeros_like(p.U)
        dQ = np.zeros_like(p.Q)
        dh_next = np.zeros(p.m)
        for t in range(W - 1, -1, -1):
            h = cache.hs[t]
            dy = lam * cache.ys[t]
            dy[cache.targets[t]] -= lam
            dU += np.outer(dy, h)
            dh = p.U.T @ dy + dh_next
            delta = dh * h * (1.0 - h)
            dA[:, cache.chars[t]] += delta
            h_prev = cache.hs[t - 1] if t > 0 else cache.h0
            dR += np.outer(delta, h_prev)
            dQ += np.outer(delta, cache.zs[t])
            dh_next = p.R.T @ delta

        P = len(cache.word_inputs)
        dAw = np.zeros_like(p.Aw)
        dRw = np.zeros_like(p.Rw)
        dUw = np.zeros_like(p.Uw)
        one_minus = 1.0 - lam
        dg_next = np.zeros(p.g)
        for j in range(P - 1, -1, -1):
            gcur = cache.gs[j]
            dg = dg_next
            if cache.word_targets[j] >= 0:
                dv = one_minus * cache.vs[j]
                dv[cache.word_targets[j]] -= one_minus
                dUw += np.outer(dv, gcur)
                dg = dg + p.Uw.T @ dv
            delta = dg * gcur * (1.0 - gcur)
            dAw[:, cache.word_inputs[j]] += delta
            g_prev = cache.gs[j - 1] if j > 0 else cache.g0
            dRw += np.outer(delta, g_prev)
            dg_next = p.Rw.T @ delta

        return {"A": dA, "R": dR, "U": dU, "Q": dQ,
                "Aw": dAw, "Rw": dRw, "Uw": dUw}

    def apply_update(self, grads: dict, lr: float, tau: float) -> None:
        p = self.params
        for name in ("A", "R", "U", "Q", "Aw", "Rw", "Uw"):
            mat = getattr(p, name)
            mat -= lr * clip_elementwise(grads[name], tau)


def sample_text(model, cv, rng, length: int, temperature: float = 1.0,
                wv=None) -> str:
    """Autoregressive sampling; deterministic given the rng state.

    Starts from zero hidden state and a uniform first character drawn
    from the model's own distribution given char id 0 is not meaningful,
    so the first input is the alphabet's first character.
    """
    from .kernels import sample_categorical

    if length <= 0:
        return ""
    out = []
    if isinstance(model, CondCharRNN):
        carry = model.initial_eval_carry()
    elif isinstance(model, MixedCharRNN):
        carry = _MixedSampler(model, wv)
    else:
        carry = model.initial_carry()

    c = 0  # seed character: first alphabet entry
    for _ in range(length):
        if isinstance(model, MixedCharRNN):
            y = carry.step(c)
        else:
            y, carry = model.step_distribution(c, carry)
        if temperature != 1.0:
            y = softmax(np.log(y) / temperature)
        c = sample_categorical(y, rng)
        ch = cv.chars[c]
        out.append(ch)
        if isinstance(model, MixedCharRNN):
            carry.observe(ch)
    return "".join(out)


class _MixedSampler:
    """Tracks the word RNN alongside generation: the context vector ticks
    to g_{p-1} when the first character of word p is produced."""

    def __init__(self, model: MixedCharRNN, wv):
        self.model = model
        self.wv = wv
        self.h = np.zeros(model.params.m)
        self.g = np.zeros(model.params.g)
        self.z = np.zeros(model.params.g)
        self.pending: list[str] = []
        self.in_gap = True

    def step(self, c_id: int) -> np.ndarray:
        p = self.model.params
        self.h = sigmoid(p.A[:, c_id] + p.R @ self.h + p.Q @ self.z)
        return softmax(p.U @ self.h)

    def observe(self, ch: str) -> None:
        if ch.isspace():
            self.in_gap = True
        else:
            if self.in_gap and self.pending:
                # previous word completed: advance the word RNN
                word = "".join(self.pending)
                wid = self.wv.encode_word(word) if self.wv is not None else 0
                self.g = word_rnn_step(self.model.params, wid, self.g)
                self.z = self.g
                self.pending = []
            self.in_gap = False
            self.pending.append(ch)
