"""Command-line interface: vocabulary building, training, evaluation,
sampling and corpus splitting.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 training divergence.
"""

from __future__ import annotations

import argparse
import sys

from . import corpus as cp
from . import ngrams as ng
from . import trainer as tr
from .evaluate import evaluate, format_report
from .kernels import Rng
from .models import sample_text

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DIVERGED = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise IOError(f"cannot read {path}: {e}") from e


# keys accepted in a `key = value` config file, mirroring the train flags
_CONFIG_KEYS = {
    "model": str, "hidden": int, "word_hidden": int, "word_topk": int,
    "word_out": int, "lambda": float, "ngram_cutoff": int, "ngram_max": int,
    "lr": float, "lr_decay": float, "clip": float, "bptt": int,
    "max_epochs": int, "seed": int, "bits": bool,
    "train": str, "valid": str, "test": str, "ckpt": str, "log": str,
}


def _load_config_file(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(_read_text(path).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        typ = _CONFIG_KEYS[key]
        if typ is bool:
            values[key] = val.lower() in ("1", "true", "yes")
        else:
            values[key] = typ(val)
    return values


def _build_parser() -> _Parser:
    parser = _Parser(prog="charlm")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-vocab", parents=[], add_help=True)
    p.add_argument("--train", required=True)
    p.add_argument("--word-topk", type=int, default=10000)
    p.add_argument("--out", required=True, help="prefix for .chars/.words files")
    p.add_argument("--valid", help="optional file to report an OOV rate on")

    p = sub.add_parser("train")
    p.add_argument("--config", help="key = value config file; flags override")
    p.add_argument("--model", choices=["plain", "mixed", "cond"])
    p.add_argument("--hidden", type=int)
    p.add_argument("--word-hidden", type=int)
    p.add_argument("--word-topk", type=int)
    p.add_argument("--word-out", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--ngram-cutoff", type=int)
    p.add_argument("--ngram-max", type=int)
    p.add_argument("--bits", action="store_true", default=None)
    p.add_argument("--lr", type=float)
    p.add_argument("--lr-decay", type=float)
    p.add_argument("--clip", type=float)
    p.add_argument("--bptt", type=int)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--train", dest="train_path")
    p.add_argument("--valid", dest="valid_path")
    p.add_argument("--ckpt")
    p.add_argument("--log")

    p = sub.add_parser("eval")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--bits", action="store_true")

    p = sub.add_parser("sample")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--temperature", type=float, default=1.0)

    p = sub.add_parser("split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--sizes", default="60000,10000,10000",
                   help="train,valid,test line counts")
    return parser


def _cmd_build_vocab(args) -> int:
    text = _read_text(args.train)
    cv = cp.build_char_vocab(text)
    wv = cp.build_word_vocab(text, args.word_topk)
    cp.save_char_vocab(cv, args.out + ".chars")
    cp.save_word_vocab(wv, args.out + ".words")
    print(f"d\t{cv.size}")
    print(f"k\t{wv.size}")
    if args.valid:
        rate = cp.oov_rate(wv, _read_text(args.valid))
        print(f"oov_rate\t{rate!r}")
    return EXIT_OK


_TRAIN_DEFAULTS = {
    "model": "plain", "hidden": 100, "word_hidden": 200, "word_topk": 10000,
    "word_out": 5000, "lam": 0.5, "ngram_cutoff": 1000, "ngram_max": 8,
    "bits": False, "lr": 0.1, "lr_decay": 1.5, "clip": 15.0, "bptt": 32,
    "max_epochs": 50, "seed": 0,
}


def _merged_train_options(args) -> dict:
    file_vals = _load_config_file(args.config) if args.config else {}
    # config-file keys use the flag spelling
    rename = {"lambda": "lam", "train": "train_path", "valid": "valid_path"}
    opts = dict(_TRAIN_DEFAULTS)
    opts.update({"train_path": None, "valid_path": None, "ckpt": None, "log": None})
    for key, val in file_vals.items():
        opts[rename.get(key, key)] = val
    for key in list(opts):
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            opts[key] = flag_val
    return opts


def _cmd_train(args) -> int:
    o = _merged_train_options(args)
    if o["train_path"] is None or o["valid_path"] is None:
        raise UsageError("--train and --valid are required")
    if o["ckpt"] is None:
        raise UsageError("--ckpt is required")
    model_kind = o["model"]
    explicitly = lambda *names: [n for n in names if getattr(args, n, None) is not None]
    if model_kind != "mixed" and explicitly("word_hidden", "lam", "word_out"):
        raise UsageError("word-level flags are only valid with --model mixed")
    if model_kind != "cond" and explicitly("ngram_cutoff", "ngram_max"):
        raise UsageError("n-gram flags are only valid with --model cond")
    if model_kind == "mixed" and o["bits"]:
        raise UsageError("bit mode does not apply to the mixed model")

    config = tr.TrainConfig(
        model_kind=model_kind, m=o["hidden"], g=o["word_hidden"],
        word_topk=o["word_topk"], k_out=o["word_out"], gamma=o["lr"],
        alpha=o["lr_decay"], tau=o["clip"], bptt_len=o["bptt"], lam=o["lam"],
        theta=o["ngram_cutoff"], n_max=o["ngram_max"],
        max_epochs=o["max_epochs"], seed=o["seed"], bits=o["bits"])

    train_text = _read_text(o["train_path"])
    valid_text = _read_text(o["valid_path"])

    if config.bits:
        cv = cp.CharVocab(chars=("0", "1"))
        train_stream = cp.encode_bits(train_text).as_stream()
        valid_stream = cp.encode_bits(valid_text).as_stream()
        wv = None
    else:
        cv = cp.build_char_vocab(train_text)
        wv = cp.build_word_vocab(train_text, config.word_topk) \
            if model_kind == "mixed" else None
        train_stream = cp.encode_stream(train_text, cv, wv)
        valid_stream = cp.encode_stream(valid_text, cv, wv)

    index = None
    if model_kind == "cond":
        counts = ng.count_ngrams(train_stream.chars, config.n_max)
        index = ng.build_index(counts, config.theta, config.n_max)

    try:
        ckpt, log = tr.fit(config, train_stream, valid_stream, cv, wv, index)
    except tr.TrainingDivergence as err:
        if o["ckpt"] and getattr(err, "checkpoint", None) is not None:
            tr.save_checkpoint(err.checkpoint, o["ckpt"])
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGED

    tr.save_checkpoint(ckpt, o["ckpt"])
    if o["log"]:
        tr.write_log(log, o["log"])
    model = tr.model_from_checkpoint(ckpt)
    report = evaluate(model, valid_stream, bits=config.bits)
    sys.stdout.write(format_report(report))
    return EXIT_OK


def _cmd_eval(args) -> int:
    ckpt = tr.load_checkpoint(args.ckpt)
    text = _read_text(args.text)
    bits = args.bits or ckpt.config.bits
    if bits:
        stream = cp.encode_bits(text).as_stream()
    else:
        stream = cp.encode_stream(text, ckpt.char_vocab, ckpt.word_vocab)
    model = tr.model_from_checkpoint(ckpt)
    report = evaluate(model, stream, bits=bits)
    if ckpt.word_vocab is not None:
        report.oov_rate = cp.oov_rate(ckpt.word_vocab, text)
    sys.stdout.write(format_report(report))
    return EXIT_OK


def _cmd_sample(args) -> int:
    ckpt = tr.load_checkpoint(args.ckpt)
    model = tr.model_from_checkpoint(ckpt)
    rng = Rng(args.seed).derive(2)
    text = sample_text(model, ckpt.char_vocab, rng, args.length,
                       temperature=args.temperature, wv=ckpt.word_vocab)
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_split(args) -> int:
    try:
        n_train, n_valid, n_test = (int(x) for x in args.sizes.split(","))
    except ValueError:
        raise UsageError(f"bad --sizes value {args.sizes!r}")
    lines = _read_text(args.corpus).splitlines()
    parts = cp.split_lines(lines, args.seed, n_train, n_valid, n_test)
    for part, suffix in zip(parts, (".train", ".valid", ".test")):
        with open(args.out_prefix + suffix, "w", encoding="utf-8") as f:
            for line in part:
                f.write(line + "\n")
    return EXIT_OK


_COMMANDS = {
    "build-vocab": _cmd_build_vocab,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sample": _cmd_sample,
    "split": _cmd_split,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (IOError, OSError, cp.CorpusError, tr.CheckpointError,
            tr.ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
