"""Scikit-learn style estimator wrappers.

Each estimator fits on raw training text and scores held-out text in
negative bits per character (higher is better, sklearn convention), so
the models drop into grid-search or pipeline tooling unchanged.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import corpus as cp
from . import ngrams as ng
from . import trainer as tr
from .evaluate import evaluate
from .kernels import Rng
from .models import sample_text


def _check_text(text, name: str) -> str:
    if not isinstance(text, str) or not text:
        raise ValueError(f"{name} must be a non-empty string")
    return text


class _CharLMBase(BaseEstimator):
    """Shared fit/score machinery; subclasses pin the model kind."""

    _kind = "plain"

    def _config(self) -> tr.TrainConfig:
        p = self.get_params()
        return tr.TrainConfig(
            model_kind=self._kind,
            m=p.get("hidden_size", 100),
            g=p.get("word_hidden_size", 200),
            word_topk=p.get("word_topk", 10000),
            k_out=p.get("word_out_size", 5000),
            gamma=p.get("learning_rate", 0.1),
            alpha=p.get("lr_decay", 1.5),
            tau=p.get("clip", 15.0),
            bptt_len=p.get("bptt_len", 32),
            lam=p.get("interpolation", 0.5),
            theta=p.get("ngram_cutoff", 1000),
            n_max=p.get("ngram_max_order", 8),
            max_epochs=p.get("max_epochs", 10),
            seed=p.get("seed", 0),
        )

    def _encode(self, text: str):
        return cp.encode_stream(text, self.char_vocab_, self.word_vocab_)

    def fit(self, X, y=None, valid_text: str | None = None):
        """Train on text X; valid_text drives the LR schedule (defaults to
        the last tenth of X)."""
        text = _check_text(X, "X")
        if valid_text is None:
            cut = max(2, int(len(text) * 0.9))
            text, valid_text = text[:cut], text[cut:]
        _check_text(valid_text, "valid_text")

        config = self._config()
        self.char_vocab_ = cp.build_char_vocab(text)
        self.word_vocab_ = (cp.build_word_vocab(text, config.word_topk)
                            if self._kind == "mixed" else None)
        train_stream = self._encode(text)
        valid_stream = self._encode(valid_text)
        self.index_ = None
        if self._kind == "cond":
            counts = ng.count_ngrams(train_stream.chars, config.n_max)
            self.index_ = ng.build_index(counts, config.theta, config.n_max)
        ckpt, log = tr.fit(config, train_stream, valid_stream,
                           self.char_vocab_, self.word_vocab_, self.index_)
        self.checkpoint_ = ckpt
        self.model_ = tr.model_from_checkpoint(ckpt)
        self.train_log_ = log
        return self

    def _require_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def score(self, X, y=None) -> float:
        """Negative bits per character on text X."""
        self._require_fitted()
        stream = self._encode(_check_text(X, "X"))
        return -evaluate(self.model_, stream).bpc

    def bits_per_char(self, X) -> float:
        return -self.score(X)

    def sample(self, length: int, seed: int = 0, temperature: float = 1.0) -> str:
        self._require_fitted()
        return sample_text(self.model_, self.char_vocab_, Rng(seed).derive(2),
                           length, temperature=temperature, wv=self.word_vocab_)


class CharRNN(_CharLMBase):
    """Plain character-level Elman RNN language model."""

    _kind = "plain"

    def __init__(self, hidden_size=100, learning_rate=0.1, lr_decay=1.5,
                 clip=15.0, bptt_len=32, max_epochs=10, seed=0):
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.clip = clip
        self.bptt_len = bptt_len
        self.max_epochs = max_epochs
        self.seed = seed


class WordConditionedCharRNN(_CharLMBase):
    """Character RNN whose hidden state is conditioned on a slower
    word-level RNN, trained with an interpolated char/word loss."""

    _kind = "mixed"

    def __init__(self, hidden_size=100, word_hidden_size=200, word_topk=10000,
                 word_out_size=5000, interpolation=0.5, learning_rate=0.1,
                 lr_decay=1.5, clip=15.0, bptt_len=32, max_epochs=10, seed=0):
        self.hidden_size = hidden_size
        self.word_hidden_size = word_hidden_size
        self.word_topk = word_topk
        self.word_out_size = word_out_size
        self.interpolation = interpolation
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.clip = clip
        self.bptt_len = bptt_len
        self.max_epochs = max_epochs
        self.seed = seed


class NGramConditionedCharRNN(_CharLMBase):
    """Character RNN with a per-context output matrix selected by the
    longest frequent n-gram of recent history."""

    _kind = "cond"

    def __init__(self, hidden_size=100, ngram_cutoff=1000, ngram_max_order=8,
                 learning_rate=0.1, lr_decay=1.5, clip=15.0, bptt_len=32,
                 max_epochs=10, seed=0):
        self.hidden_size = hidden_size
        self.ngram_cutoff = ngram_cutoff
        self.ngram_max_order = ngram_max_order
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.clip = clip
        self.bptt_len = bptt_len
        self.max_epochs = max_epochs
        self.seed = seed
