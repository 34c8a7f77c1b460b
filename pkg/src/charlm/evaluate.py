"""Entropy evaluation (bits per character / per bit) and table reporting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .corpus import EncodedStream
from .models import CondCharRNN, MixedCharRNN, word_rnn_step
from .ngrams import contexts_for_stream


@dataclass
class EvalReport:
    nats: float
    count: int            # scored prediction steps
    bpc: float
    bpb: float | None = None
    oov_rate: float | None = None
    unseen_targets: int = 0


def evaluate(model, stream: EncodedStream, bits: bool = False,
             ctxs=None) -> EvalReport:
    """Single forward pass over the stream, hidden state starting at zero.

    Targets outside the training alphabet (the reserved unseen id) cannot
    be scored by a closed softmax; they are skipped and counted
    separately. Bit mode reports bits-per-bit and its 8x bits-per-char
    equivalent.
    """
    chars = stream.chars
    T = len(chars)
    d = stream.alphabet_size

    is_cond = isinstance(model, CondCharRNN)
    is_mixed = isinstance(model, MixedCharRNN)
    if is_cond and ctxs is None:
        ctxs = contexts_for_stream(model.index, chars)

    p = model.params
    h = np.zeros(p.m)
    if is_mixed:
        gcur = np.zeros(p.g)
        zeros_g = np.zeros(p.g)
        last_done = -1
        woc = stream.word_of_char

    from .kernels import sigmoid, softmax
    nll = 0.0
    scored = 0
    unseen = 0
    for t in range(T - 1):
        c = int(chars[t])
        if is_mixed:
            q = int(woc[t])
            while last_done < q - 1:
                last_done += 1
                gcur = word_rnn_step(p, int(stream.words[last_done]), gcur)
            z = gcur if q > 0 else zeros_g
            h = sigmoid(p.A[:, c] + p.R @ h + p.Q @ z)
            y = softmax(p.U @ h)
        elif is_cond:
            h = sigmoid(p.A[:, c] + p.R @ h)
            y = softmax(p.bank[ctxs[t]] @ h)
        else:
            h = sigmoid(p.A[:, c] + p.R @ h)
            y = softmax(p.U @ h)
        target = int(chars[t + 1])
        if target >= d:
            unseen += 1
            continue
        nll -= math.log(y[target])
        scored += 1

    per_symbol_bits = nll / (scored * math.log(2)) if scored else 0.0
    if bits:
        return EvalReport(nats=nll, count=scored, bpc=8.0 * per_symbol_bits,
                          bpb=per_symbol_bits, unseen_targets=unseen)
    return EvalReport(nats=nll, count=scored, bpc=per_symbol_bits,
                      unseen_targets=unseen)


def bpc_from_bpb(bpb: float) -> float:
    """Bits per character from bits per bit under 8-bit encoding."""
    return 8.0 * bpb


def round_half_up(x: float, places: int) -> str:
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def format_report(report: EvalReport) -> str:
    """Two-line TSV rendering of a single evaluation."""
    cols = ["nats", "symbols", "bpc"]
    vals = [repr(report.nats), str(report.count), round_half_up(report.bpc, 2)]
    if report.bpb is not None:
        cols.append("bpb")
        vals.append(round_half_up(report.bpb, 3))
    if report.oov_rate is not None:
        cols.append("oov_rate")
        vals.append(round_half_up(report.oov_rate, 4))
    return "\t".join(cols) + "\n" + "\t".join(vals) + "\n"


def report_table(rows) -> str:
    """TSV summary table, one row per (label, m, kind, valid, test, s/epoch).

    BPC columns use 2-decimal round-half-up; rows keep input order.
    """
    if not rows:
        raise ValueError("report_table needs at least one row")
    out = ["label\tm\tmodel_kind\tvalid_bpc\ttest_bpc\tseconds_per_epoch"]
    for label, m, kind, valid_bpc, test_bpc, seconds in rows:
        valid_s = round_half_up(valid_bpc, 2) if valid_bpc is not None else "NA"
        test_s = round_half_up(test_bpc, 2) if test_bpc is not None else "NA"
        sec_s = round_half_up(seconds, 1) if seconds is not None else "NA"
        out.append(f"{label}\t{m}\t{kind}\t{valid_s}\t{test_s}\t{sec_s}")
    return "\n".join(out) + "\n"
