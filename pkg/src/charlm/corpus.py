"""Corpus ingestion: vocabularies, char/word aligned encoding, bit-level
encoding, and seeded line splitting."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .kernels import Rng

UNK = "<UNK>"


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CharVocab:
    """Bijection between characters and dense ids, sorted by code point.

    Characters never seen at build time encode to the reserved id ``d``
    (one past the trained alphabet); models keep an extra untrained
    embedding column for it.
    """

    chars: tuple[str, ...]
    id_of: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "id_of", {c: i for i, c in enumerate(self.chars)})

    @property
    def size(self) -> int:
        return len(self.chars)

    @property
    def unseen_id(self) -> int:
        return len(self.chars)

    def encode_char(self, c: str) -> int:
        return self.id_of.get(c, self.unseen_id)

    def decode(self, ids) -> str:
        return "".join(self.chars[i] for i in ids)


@dataclass(frozen=True)
class WordVocab:
    """Most-frequent-word table with ``<UNK>`` reserved at id 0."""

    words: tuple[str, ...]
    id_of: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.words or self.words[0] != UNK:
            raise CorpusError("word vocab must start with the <UNK> entry")
        object.__setattr__(self, "id_of", {w: i for i, w in enumerate(self.words)})

    @property
    def size(self) -> int:
        return len(self.words)

    @property
    def unk_id(self) -> int:
        return 0

    def encode_word(self, w: str) -> int:
        return self.id_of.get(w, 0)


@dataclass
class EncodedStream:
    """A corpus as aligned char-id and word-id sequences.

    ``word_of_char[t]`` is the index of the token character ``t`` belongs
    to; a token's trailing whitespace belongs to that token, and anything
    before the first token belongs to token 0.
    """

    chars: np.ndarray
    words: np.ndarray
    word_of_char: np.ndarray
    alphabet_size: int

    def __len__(self) -> int:
        return self.chars.shape[0]


@dataclass
class BitStream:
    """8-bits-per-character expansion of an ASCII text, MSB first."""

    bits: np.ndarray

    BITS_PER_CHAR = 8

    def __len__(self) -> int:
        return self.bits.shape[0]

    def as_stream(self) -> EncodedStream:
        """View the bits as a 2-symbol EncodedStream for model consumption."""
        n = len(self)
        return EncodedStream(
            chars=self.bits,
            words=np.empty(0, dtype=np.int64),
            word_of_char=np.zeros(n, dtype=np.int64),
            alphabet_size=2,
        )


def tokenize(text: str) -> list[str]:
    """Words are maximal runs of non-whitespace."""
    return text.split()


def build_char_vocab(text: str) -> CharVocab:
    if not text:
        raise CorpusError("cannot build a character vocabulary from empty text")
    return CharVocab(chars=tuple(sorted(set(text))))


def build_word_vocab(text: str, top_k: int) -> WordVocab:
    """Keep the top_k - 1 most frequent tokens plus <UNK>.

    Ties are broken lexicographically so the table is deterministic.
    """
    if top_k < 1:
        raise CorpusError(f"top_k must be >= 1, got {top_k}")
    tokens = tokenize(text)
    if not tokens:
        raise CorpusError("cannot build a word vocabulary from empty text")
    counts = Counter(tokens)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [w for w, _ in ranked[: top_k - 1]]
    return WordVocab(words=(UNK, *kept))


def encode_stream(text: str, cv: CharVocab, wv: WordVocab | None = None) -> EncodedStream:
    """Encode text to aligned char ids, word ids and the char->word map."""
    if not text:
        raise CorpusError("cannot encode empty text")
    char_ids = np.fromiter((cv.encode_char(c) for c in text), dtype=np.int64, count=len(text))

    # token start positions drive word_of_char: a char belongs to the last
    # token starting at or before it (clamped to 0 for a leading gap)
    starts = []
    in_token = False
    for i, c in enumerate(text):
        if not c.isspace() and not in_token:
            starts.append(i)
            in_token = True
        elif c.isspace():
            in_token = False

    word_of_char = np.zeros(len(text), dtype=np.int64)
    p = 0
    next_start = 1
    for t in range(len(text)):
        if next_start < len(starts) and t >= starts[next_start]:
            p += 1
            next_start += 1
        word_of_char[t] = p

    if wv is not None:
        tokens = tokenize(text)
        word_ids = np.fromiter((wv.encode_word(w) for w in tokens), dtype=np.int64, count=len(tokens))
    else:
        word_ids = np.empty(0, dtype=np.int64)

    return EncodedStream(
        chars=char_ids,
        words=word_ids,
        word_of_char=word_of_char,
        alphabet_size=cv.size,
    )


def encode_bits(text: str) -> BitStream:
    """Expand each character to its 8 bits, most significant first."""
    if not text:
        raise CorpusError("cannot encode empty text")
    codes = [ord(c) for c in text]
    bad = next((c for c in codes if c > 255), None)
    if bad is not None:
        raise CorpusError(f"bit mode requires 8-bit text, found code point {bad}")
    arr = np.array(codes, dtype=np.uint8)
    bits = np.unpackbits(arr[:, None], axis=1).reshape(-1).astype(np.int64)
    return BitStream(bits=bits)


def decode_bits(bs: BitStream) -> str:
    packed = np.packbits(bs.bits.astype(np.uint8).reshape(-1, 8), axis=1).reshape(-1)
    return "".join(chr(b) for b in packed)


def split_lines(lines: list[str], seed: int, n_train: int = 60000,
                n_valid: int = 10000, n_test: int = 10000) -> tuple[list[str], list[str], list[str]]:
    """Seeded permutation of the corpus lines, then a train/valid/test cut."""
    total = n_train + n_valid + n_test
    if len(lines) < total:
        raise CorpusError(f"need at least {total} lines, got {len(lines)}")
    order = list(range(len(lines)))
    Rng(seed).shuffle(order)
    picked = [lines[i] for i in order[:total]]
    return (picked[:n_train],
            picked[n_train:n_train + n_valid],
            picked[n_train + n_valid:])


def oov_rate(wv: WordVocab, text: str) -> float:
    """Fraction of tokens falling outside the vocabulary.

    Tokens that are literally an unk marker in the source text (as PTB
    ships them) are not counted as out-of-vocabulary.
    """
    tokens = tokenize(text)
    if not tokens:
        raise CorpusError("cannot compute OOV rate on empty text")
    oov = sum(1 for w in tokens
              if wv.encode_word(w) == wv.unk_id and w.lower() != "<unk>")
    return oov / len(tokens)


def _escape(s: str) -> str:
    return s.encode("unicode_escape").decode("ascii")


def _unescape(s: str) -> str:
    return s.encode("ascii").decode("unicode_escape")


def save_char_vocab(cv: CharVocab, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for c in cv.chars:
            f.write(_escape(c) + "\n")


def load_char_vocab(path: str) -> CharVocab:
    with open(path, encoding="utf-8") as f:
        chars = tuple(_unescape(line[:-1]) for line in f)
    return CharVocab(chars=chars)


def save_word_vocab(wv: WordVocab, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for w in wv.words:
            f.write(w + "\n")


def load_word_vocab(path: str) -> WordVocab:
    with open(path, encoding="utf-8") as f:
        words = tuple(line.rstrip("\n") for line in f)
    return WordVocab(words=words)
