"""SGD training loop: windowed truncated BPTT, gradient clipping,
validation-driven learning-rate decay, and checkpoint persistence."""

from __future__ import annotations

import copy
import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import CharVocab, EncodedStream, WordVocab
from .kernels import Rng
from .models import (CondCharRNN, CondParams, CRNNParams, MixedCharRNN,
                     MixedParams, PlainCharRNN)
from .ngrams import (NGramIndex, contexts_for_stream, index_from_records,
                     index_to_records)

MAGIC = b"CCRNN"
FORMAT_VERSION = 1
MAX_LR_DECAYS = 8


class ConfigError(ValueError):
    pass


class TrainingDivergence(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"non-finite loss at training step {step}")
        self.step = step


class CheckpointError(RuntimeError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointCorruptError(CheckpointError):
    pass


class ModelKindError(CheckpointError):
    pass


@dataclass
class TrainConfig:
    model_kind: str = "plain"        # plain | mixed | cond
    m: int = 100                     # character hidden size
    g: int = 200                     # word hidden size (mixed)
    word_topk: int = 10000           # full word vocabulary size incl. <UNK>
    k_out: int = 5000                # restricted output vocab (mixed)
    gamma: float = 0.1               # initial learning rate
    alpha: float = 1.5               # learning-rate decay factor
    tau: float = 15.0                # per-entry gradient clip bound
    bptt_len: int = 32
    lam: float = 0.5                 # char/word loss interpolation (mixed)
    theta: int = 1000                # n-gram count cutoff (cond)
    n_max: int = 8                   # n-gram max order (cond)
    max_epochs: int = 50
    seed: int = 0
    bits: bool = False

    def __post_init__(self):
        if self.model_kind not in ("plain", "mixed", "cond"):
            raise ConfigError(f"unknown model kind {self.model_kind!r}")
        if self.gamma <= 0:
            raise ConfigError("learning rate must be positive")
        if self.alpha <= 1:
            raise ConfigError("decay factor must be > 1")
        if self.tau <= 0:
            raise ConfigError("clip bound must be positive")
        if self.bptt_len < 1:
            raise ConfigError("BPTT window must be >= 1")
        if not 0.0 < self.lam < 1.0:
            raise ConfigError("interpolation weight must be in (0,1)")


@dataclass
class TrainState:
    epoch: int = 0
    lr: float = 0.1
    best_valid: float = math.inf
    decay_active: bool = False
    n_decays: int = 0


@dataclass
class Checkpoint:
    config: TrainConfig
    char_vocab: CharVocab
    word_vocab: WordVocab | None
    index: NGramIndex | None
    params: object
    state: TrainState


def init_model(config: TrainConfig, d: int, k: int = 0,
               index: NGramIndex | None = None):
    """Seeded uniform [-0.1, 0.1] initialization; deterministic per seed.

    The embedding gets one extra column reserved for unseen test
    characters (filled at init, never trained).
    """
    rng = Rng(config.seed).derive(1)
    m = config.m
    lo, hi = -0.1, 0.1
    A = rng.uniform_matrix(m, d + 1, lo, hi)
    R = rng.uniform_matrix(m, m, lo, hi)
    if config.model_kind == "plain":
        U = rng.uniform_matrix(d, m, lo, hi)
        return PlainCharRNN(CRNNParams(A=A, R=R, U=U))
    if config.model_kind == "mixed":
        if k < 1:
            raise ConfigError("mixed model needs a word vocabulary")
        g = config.g
        k_out = min(config.k_out, k)
        U = rng.uniform_matrix(d, m, lo, hi)
        Q = rng.uniform_matrix(m, g, lo, hi)
        Aw = rng.uniform_matrix(g, k, lo, hi)
        Rw = rng.uniform_matrix(g, g, lo, hi)
        Uw = rng.uniform_matrix(k_out, g, lo, hi)
        return MixedCharRNN(MixedParams(A=A, R=R, U=U, Q=Q, Aw=Aw, Rw=Rw,
                                        Uw=Uw, lam=config.lam))
    if index is None:
        raise ConfigError("conditional model needs an n-gram index")
    n_ctx = index.num_contexts
    bank = rng.uniform_matrix(n_ctx * d, m, lo, hi).reshape(n_ctx, d, m)
    return CondCharRNN(CondParams(A=A, R=R, bank=bank), index)


def _word_last_char(stream: EncodedStream) -> np.ndarray:
    """Index of the last character (incl. trailing whitespace) of each word."""
    woc = stream.word_of_char
    P = len(stream.words)
    last = np.full(P, len(woc) - 1, dtype=np.int64)
    boundaries = np.flatnonzero(np.diff(woc))  # last char index of words 0..P-2
    last[woc[boundaries]] = boundaries
    return last


def _mixed_window(model: MixedCharRNN, stream: EncodedStream, s: int, e: int,
                  carry, last_char: np.ndarray):
    """Assemble frozen context vectors and word steps for chars [s, e)."""
    h0, g0 = carry
    p = model.params
    woc = stream.word_of_char
    P = len(stream.words)
    p_s = int(woc[s])

    # words completing inside the window
    completing = [q for q in range(p_s, min(int(woc[e - 1]) + 1, P))
                  if s <= last_char[q] < e]
    word_inputs = [int(stream.words[q]) for q in completing]
    # targets outside the restricted output vocabulary collapse to <UNK>;
    # word ids are frequency-ordered so the restricted set is a prefix
    k_out = p.k_out
    word_targets = [(int(stream.words[q + 1]) if stream.words[q + 1] < k_out else 0)
                    if q + 1 < P else -1
                    for q in completing]

    # word states needed for z: g_{p-1}; carried g0 covers words completed
    # in earlier windows, the rest are computed here with current params
    gs = {}
    gcur = g0
    from .models import word_rnn_step
    for q, wid in zip(completing, word_inputs):
        gcur = word_rnn_step(p, wid, gcur)
        gs[q] = gcur

    zs = np.empty((e - s, p.g))
    for t in range(s, e):
        q = int(woc[t])
        if q == 0:
            zs[t - s] = 0.0
        elif q - 1 in gs:
            zs[t - s] = gs[q - 1]
        else:
            zs[t - s] = g0
    return zs, word_inputs, word_targets


def train_epoch(model, stream: EncodedStream, config: TrainConfig,
                state: TrainState, ctxs=None):
    """One sequential pass of windowed BPTT + clipped SGD updates.

    Returns (train entropy in bits per character, wall-clock seconds).
    """
    T = len(stream)
    if T < 2:
        raise ConfigError("training stream too short")
    start = time.perf_counter()
    chars = stream.chars
    if isinstance(model, CondCharRNN) and ctxs is None:
        ctxs = contexts_for_stream(model.index, chars)
    last_char = _word_last_char(stream) if isinstance(model, MixedCharRNN) else None

    carry = model.initial_carry()
    total_nll = 0.0
    n_targets = 0
    for s in range(0, T - 1, config.bptt_len):
        e = min(s + config.bptt_len, T - 1)
        window_chars = chars[s:e]
        window_targets = chars[s + 1:e + 1]
        if isinstance(model, MixedCharRNN):
            zs, w_in, w_tgt = _mixed_window(model, stream, s, e, carry, last_char)
            c_nll, w_nll, cache, carry = model.forward_window(
                window_chars, window_targets, zs, w_in, w_tgt, *carry)
            nll = model.params.lam * c_nll + (1 - model.params.lam) * w_nll
            total_nll += c_nll
        elif isinstance(model, CondCharRNN):
            c_nll, cache, carry = model.forward_window(
                window_chars, window_targets, carry, ctxs=ctxs[s:e])
            nll = c_nll
            total_nll += c_nll
        else:
            c_nll, cache, carry = model.forward_window(
                window_chars, window_targets, carry)
            nll = c_nll
            total_nll += c_nll
        if not math.isfinite(nll):
            raise TrainingDivergence(s)
        n_targets += e - s
        grads = model.backward_window(cache)
        model.apply_update(grads, state.lr, config.tau)

    bpc = total_nll / (n_targets * math.log(2))
    return bpc, time.perf_counter() - start


def lr_schedule(state: TrainState, new_valid_entropy: float,
                alpha: float) -> TrainState:
    """Latched decay: once validation entropy rises above the best seen,
    divide the learning rate by alpha after every subsequent epoch."""
    if new_valid_entropy > state.best_valid:
        state.decay_active = True
    state.best_valid = min(state.best_valid, new_valid_entropy)
    if state.decay_active:
        state.lr /= alpha
        state.n_decays += 1
    return state


def fit(config: TrainConfig, train_stream: EncodedStream,
        valid_stream: EncodedStream, cv: CharVocab,
        wv: WordVocab | None = None, index: NGramIndex | None = None):
    """Full training run; returns (best checkpoint, per-epoch log rows).

    Log rows are (epoch, lr, train_bpc, valid_bpc, seconds).
    """
    from .evaluate import evaluate

    model = init_model(config, cv.size, wv.size if wv else 0, index)
    state = TrainState(lr=config.gamma)
    train_ctxs = valid_ctxs = None
    if isinstance(model, CondCharRNN):
        train_ctxs = contexts_for_stream(index, train_stream.chars)
        valid_ctxs = contexts_for_stream(index, valid_stream.chars)

    log: list[tuple] = []
    best_params = copy.deepcopy(model.params)
    best_state = copy.deepcopy(state)
    best_valid = math.inf
    for epoch in range(1, config.max_epochs + 1):
        state.epoch = epoch
        lr_used = state.lr
        try:
            train_bpc, seconds = train_epoch(model, train_stream, config,
                                             state, ctxs=train_ctxs)
        except TrainingDivergence as err:
            # propagate, but keep the best checkpoint so far reachable
            err.checkpoint = Checkpoint(config=config, char_vocab=cv,
                                        word_vocab=wv, index=index,
                                        params=best_params, state=best_state)
            err.log = log
            raise
        valid_bpc = evaluate(model, valid_stream, ctxs=valid_ctxs).bpc
        log.append((epoch, lr_used, train_bpc, valid_bpc, seconds))
        if valid_bpc < best_valid:
            best_valid = valid_bpc
            best_params = copy.deepcopy(model.params)
            best_state = copy.deepcopy(state)
        lr_schedule(state, valid_bpc, config.alpha)
        if state.n_decays >= MAX_LR_DECAYS:
            break

    ckpt = Checkpoint(config=config, char_vocab=cv, word_vocab=wv,
                      index=index, params=best_params, state=best_state)
    return ckpt, log


def write_log(log, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("epoch\tlr\ttrain_bpc\tvalid_bpc\tseconds\n")
        for epoch, lr, train_bpc, valid_bpc, seconds in log:
            f.write(f"{epoch}\t{lr!r}\t{train_bpc!r}\t{valid_bpc!r}\t{seconds:.3f}\n")


# ---------------------------------------------------------------------------
# checkpoint format: magic, version byte, length-prefixed JSON header,
# raw little-endian float64 matrices, 8-byte blake2b checksum of payload
# ---------------------------------------------------------------------------

_MATRIX_ORDER = {
    "plain": ("A", "R", "U"),
    "mixed": ("A", "R", "U", "Q", "Aw", "Rw", "Uw"),
    "cond": ("A", "R", "bank"),
}


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def save_checkpoint(ckpt: Checkpoint, path: str) -> None:
    cfg = ckpt.config
    names = _MATRIX_ORDER[cfg.model_kind]
    mats = [np.ascontiguousarray(getattr(ckpt.params, n), dtype="<f8")
            for n in names]
    header = {
        "config": asdict(cfg),
        "chars": [c.encode("unicode_escape").decode("ascii")
                  for c in ckpt.char_vocab.chars],
        "words": list(ckpt.word_vocab.words) if ckpt.word_vocab else None,
        "ngrams": index_to_records(ckpt.index) if ckpt.index else None,
        "state": asdict(ckpt.state),
        "matrices": [[n, list(m.shape)] for n, m in zip(names, mats)],
    }
    header_bytes = json.dumps(header).encode("utf-8")
    payload = len(header_bytes).to_bytes(8, "little") + header_bytes
    payload += b"".join(m.tobytes() for m in mats)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(bytes([FORMAT_VERSION]))
        f.write(payload)
        f.write(_checksum(payload))


def load_checkpoint(path: str, expect_kind: str | None = None) -> Checkpoint:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < len(MAGIC) + 1 + 8 + 8 or not blob.startswith(MAGIC):
        raise CheckpointCorruptError(f"{path}: not a checkpoint file")
    version = blob[len(MAGIC)]
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(f"{path}: unsupported format version {version}")
    payload, digest = blob[len(MAGIC) + 1:-8], blob[-8:]
    if _checksum(payload) != digest:
        raise CheckpointCorruptError(f"{path}: checksum mismatch")
    hlen = int.from_bytes(payload[:8], "little")
    header = json.loads(payload[8:8 + hlen].decode("utf-8"))
    cfg = TrainConfig(**header["config"])
    if expect_kind is not None and cfg.model_kind != expect_kind:
        raise ModelKindError(
            f"{path}: checkpoint holds a {cfg.model_kind!r} model, "
            f"expected {expect_kind!r}")
    cv = CharVocab(chars=tuple(
        c.encode("ascii").decode("unicode_escape") for c in header["chars"]))
    wv = WordVocab(words=tuple(header["words"])) if header["words"] else None
    index = (index_from_records(header["ngrams"], cfg.theta, cfg.n_max)
             if header["ngrams"] is not None else None)
    state = TrainState(**header["state"])

    offset = 8 + hlen
    kwargs = {}
    for name, shape in header["matrices"]:
        n_items = int(np.prod(shape))
        arr = np.frombuffer(payload, dtype="<f8", count=n_items,
                            offset=offset).reshape(shape).copy()
        offset += n_items * 8
        kwargs[name] = arr
    if cfg.model_kind == "plain":
        params = CRNNParams(**kwargs)
    elif cfg.model_kind == "mixed":
        params = MixedParams(lam=cfg.lam, **kwargs)
    else:
        params = CondParams(**kwargs)
    return Checkpoint(config=cfg, char_vocab=cv, word_vocab=wv, index=index,
                      params=params, state=state)


def model_from_checkpoint(ckpt: Checkpoint):
    if ckpt.config.model_kind == "plain":
        return PlainCharRNN(ckpt.params)
    if ckpt.config.model_kind == "mixed":
        return MixedCharRNN(ckpt.params)
    return CondCharRNN(ckpt.params, ckpt.index)
