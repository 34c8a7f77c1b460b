import os

import pytest

from charlm.cli import main


@pytest.fixture
def corpus(tmp_path):
    train = tmp_path / "train.txt"
    valid = tmp_path / "valid.txt"
    train.write_text("the cat sat on the mat and the dog ran off the mat\n" * 6)
    valid.write_text("the cat ran on the mat\n" * 2)
    return tmp_path, str(train), str(valid)


class TestBuildVocab:
    def test_writes_vocab_files(self, corpus, capsys):
        tmp, train, valid = corpus
        out = str(tmp / "vocab")
        rc = main(["build-vocab", "--train", train, "--word-topk", "10",
                   "--out", out, "--valid", valid])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert stdout.startswith("d\t")
        assert "oov_rate" in stdout
        assert os.path.exists(out + ".chars") and os.path.exists(out + ".words")
        words = open(out + ".words").read().splitlines()
        assert words[0] == "<UNK>" and len(words) == 10

    def test_small_corpus(self, tmp_path, capsys):
        p = tmp_path / "t.txt"
        p.write_text("a b c")
        rc = main(["build-vocab", "--train", str(p), "--word-topk", "10",
                   "--out", str(tmp_path / "v")])
        assert rc == 0
        assert "k\t4" in capsys.readouterr().out

    def test_rerun_identical(self, corpus):
        tmp, train, _ = corpus
        out = str(tmp / "vv")
        main(["build-vocab", "--train", train, "--out", out])
        first = open(out + ".words", "rb").read() + open(out + ".chars", "rb").read()
        main(["build-vocab", "--train", train, "--out", out])
        second = open(out + ".words", "rb").read() + open(out + ".chars", "rb").read()
        assert first == second

    def test_missing_file(self, tmp_path):
        rc = main(["build-vocab", "--train", str(tmp_path / "nope.txt"),
                   "--out", str(tmp_path / "v")])
        assert rc == 2


class TestTrainEval:
    def _train(self, corpus, capsys, extra=()):
        tmp, train, valid = corpus
        ckpt = str(tmp / "model.ckpt")
        log = str(tmp / "log.tsv")
        rc = main(["train", "--model", "plain", "--hidden", "4",
                   "--bptt", "8", "--max-epochs", "2", "--seed", "1",
                   "--train", train, "--valid", valid,
                   "--ckpt", ckpt, "--log", log, *extra])
        assert rc == 0
        return ckpt, log, capsys.readouterr().out

    def test_train_then_eval_reproduces_valid_bpc(self, corpus, capsys):
        tmp, train, valid = corpus
        ckpt, log, out = self._train(corpus, capsys)
        logged = open(log).read().splitlines()
        assert logged[0].startswith("epoch\t")
        rc = main(["eval", "--ckpt", ckpt, "--text", valid])
        assert rc == 0
        eval_out = capsys.readouterr().out
        # the checkpoint holds the best epoch; its valid BPC must appear in the log
        best = min(float(line.split("\t")[3]) for line in logged[1:])
        head, vals = eval_out.splitlines()
        bpc_col = head.split("\t").index("bpc")
        nats_col = head.split("\t").index("nats")
        import math
        symbols = int(vals.split("\t")[head.split("\t").index("symbols")])
        got = float(vals.split("\t")[nats_col]) / (symbols * math.log(2))
        assert abs(got - best) < 1e-12

    def test_inconsistent_flags(self, corpus, tmp_path):
        _, train, valid = corpus
        rc = main(["train", "--model", "plain", "--ngram-cutoff", "5",
                   "--train", train, "--valid", valid,
                   "--ckpt", str(tmp_path / "x.ckpt")])
        assert rc == 1
        assert not os.path.exists(str(tmp_path / "x.ckpt"))

    def test_mixed_flags_on_plain(self, corpus, tmp_path):
        _, train, valid = corpus
        rc = main(["train", "--model", "cond", "--word-hidden", "8",
                   "--train", train, "--valid", valid,
                   "--ckpt", str(tmp_path / "x.ckpt")])
        assert rc == 1

    def test_cond_training(self, corpus, capsys):
        tmp, train, valid = corpus
        ckpt = str(tmp / "cond.ckpt")
        rc = main(["train", "--model", "cond", "--hidden", "4",
                   "--ngram-cutoff", "2", "--ngram-max", "3",
                   "--bptt", "8", "--max-epochs", "1", "--seed", "1",
                   "--train", train, "--valid", valid, "--ckpt", ckpt])
        assert rc == 0
        rc = main(["eval", "--ckpt", ckpt, "--text", valid])
        assert rc == 0

    def test_bits_training(self, corpus, capsys):
        tmp, train, valid = corpus
        ckpt = str(tmp / "bits.ckpt")
        rc = main(["train", "--model", "plain", "--hidden", "4", "--bits",
                   "--bptt", "8", "--max-epochs", "1", "--seed", "1",
                   "--train", train, "--valid", valid, "--ckpt", ckpt])
        assert rc == 0
        out = capsys.readouterr().out
        head, vals = out.splitlines()
        cols = head.split("\t")
        assert "bpb" in cols
        bpb = float(vals.split("\t")[cols.index("bpb")])
        bpc = float(vals.split("\t")[cols.index("bpc")])
        # printed values are rounded (2 dp for BPC, 3 dp for BPB)
        assert abs(bpc - 8 * bpb) < 0.01

    def test_config_file(self, corpus, capsys):
        tmp, train, valid = corpus
        cfgfile = tmp / "run.cfg"
        cfgfile.write_text(
            "model = plain\nhidden = 4  # tiny\nbptt = 8\nmax_epochs = 1\n"
            f"seed = 1\ntrain = {train}\nvalid = {valid}\n")
        ckpt = str(tmp / "fromcfg.ckpt")
        rc = main(["train", "--config", str(cfgfile), "--ckpt", ckpt])
        assert rc == 0

    def test_config_file_unknown_key(self, corpus, tmp_path):
        tmp, train, valid = corpus
        cfgfile = tmp_path / "bad.cfg"
        cfgfile.write_text("bogus = 1\n")
        rc = main(["train", "--config", str(cfgfile),
                   "--train", train, "--valid", valid,
                   "--ckpt", str(tmp_path / "x.ckpt")])
        assert rc == 1


class TestSample:
    def _ckpt(self, corpus, capsys):
        tmp, train, valid = corpus
        ckpt = str(tmp / "s.ckpt")
        main(["train", "--model", "plain", "--hidden", "4", "--bptt", "8",
              "--max-epochs", "1", "--seed", "1", "--train", train,
              "--valid", valid, "--ckpt", ckpt])
        capsys.readouterr()
        return ckpt

    def test_zero_length(self, corpus, capsys):
        ckpt = self._ckpt(corpus, capsys)
        rc = main(["sample", "--ckpt", ckpt, "--length", "0"])
        assert rc == 0
        assert capsys.readouterr().out == ""

    def test_deterministic(self, corpus, capsys):
        ckpt = self._ckpt(corpus, capsys)
        main(["sample", "--ckpt", ckpt, "--length", "40", "--seed", "7"])
        a = capsys.readouterr().out
        main(["sample", "--ckpt", ckpt, "--length", "40", "--seed", "7"])
        b = capsys.readouterr().out
        assert a == b and len(a) == 40

    def test_alphabet_closed(self, corpus, capsys):
        tmp, train, _ = corpus
        ckpt = self._ckpt(corpus, capsys)
        main(["sample", "--ckpt", ckpt, "--length", "100", "--seed", "2"])
        out = capsys.readouterr().out
        assert set(out) <= set(open(train).read())

    def test_bad_checkpoint(self, tmp_path, capsys):
        bad = tmp_path / "junk.ckpt"
        bad.write_bytes(b"not a checkpoint at all")
        rc = main(["sample", "--ckpt", str(bad), "--length", "5"])
        assert rc == 2


class TestSplit:
    def test_scaled_split(self, tmp_path, capsys):
        corpus = tmp_path / "lines.txt"
        corpus.write_text("".join(f"sentence {i}\n" for i in range(1000)))
        prefix = str(tmp_path / "part")
        rc = main(["split", "--corpus", str(corpus), "--seed", "5",
                   "--out-prefix", prefix, "--sizes", "600,100,100"])
        assert rc == 0
        sizes = [len(open(prefix + suf).read().splitlines())
                 for suf in (".train", ".valid", ".test")]
        assert sizes == [600, 100, 100]

    def test_deterministic(self, tmp_path):
        corpus = tmp_path / "lines.txt"
        corpus.write_text("".join(f"s{i}\n" for i in range(300)))
        p1, p2 = str(tmp_path / "a"), str(tmp_path / "b")
        for p in (p1, p2):
            main(["split", "--corpus", str(corpus), "--seed", "3",
                  "--out-prefix", p, "--sizes", "200,50,50"])
        assert open(p1 + ".train").read() == open(p2 + ".train").read()

    def test_insufficient_lines(self, tmp_path):
        corpus = tmp_path / "short.txt"
        corpus.write_text("one\ntwo\n")
        rc = main(["split", "--corpus", str(corpus), "--seed", "1",
                   "--out-prefix", str(tmp_path / "p"), "--sizes", "5,2,2"])
        assert rc == 2

    def test_bad_sizes_is_usage_error(self, tmp_path):
        corpus = tmp_path / "c.txt"
        corpus.write_text("x\n")
        rc = main(["split", "--corpus", str(corpus), "--seed", "1",
                   "--out-prefix", str(tmp_path / "p"), "--sizes", "oops"])
        assert rc == 1
