import logging

import pytest

from disfluency.cli import main
from disfluency.corpus import read_tsv, write_dis
from disfluency.synthetic import generate_synthetic

TRAIN_FLAGS = ["--hidden-dim", "4", "--word-dim", "4", "--pos-dim", "2", "--feat-dim", "2",
               "--max-epochs", "2", "--features", "1,2,3,7,9"]


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    write_dis(generate_synthetic(n_sentences=60, max_len=15, seed=1), d / "train.dis")
    write_dis(generate_synthetic(n_sentences=20, max_len=15, seed=2, id_prefix="dev"), d / "dev.dis")
    return d


@pytest.fixture(scope="module")
def model_path(data):
    path = data / "m.ckpt"
    assert main(["train", "--train", str(data / "train.dis"), "--dev", str(data / "dev.dis"),
                 "--output", str(path), *TRAIN_FLAGS]) == 0
    return path


class TestTrain:
    def test_writes_checkpoint_and_log(self, model_path):
        assert model_path.stat().st_size > 0
        rows = (model_path.parent / "m.ckpt.log").read_text().splitlines()
        assert len(rows) == 2
        assert rows[0].split("\t")[0] == "1"

    def test_same_seed_same_bytes(self, data):
        # the resolved config (including the output path) is stored, so reuse the path
        path = data / "again.ckpt"
        blobs = []
        for _ in range(2):
            main(["train", "--train", str(data / "train.dis"), "--dev", str(data / "dev.dis"),
                  "--output", str(path), *TRAIN_FLAGS])
            blobs.append(path.read_bytes())
        assert blobs[0] == blobs[1]

    def test_missing_dev(self, data, capsys):
        code = main(["train", "--train", str(data / "train.dis"), "--dev", str(data / "nope.dis"),
                     "--output", str(data / "x.ckpt")])
        assert code == 2
        assert "nope.dis" in capsys.readouterr().err

    def test_unknown_config_key(self, data, capsys):
        cfg = data / "bad.cfg"
        cfg.write_text("train = a\nlearning_rate = 3\n")
        assert main(["train", "--config", str(cfg)]) == 2
        assert "learning_rate" in capsys.readouterr().err

    def test_config_file_and_echo(self, data, capsys):
        cfg = data / "synth.cfg"
        cfg.write_text(f"output = {data / 'cfg.dis'}\nn_sentences = 3\n")
        assert main(["synth", "--config", str(cfg), "--set", "seed=4"]) == 0
        err = capsys.readouterr().err
        assert "n_sentences = 3" in err and "seed = 4" in err

    def test_parse_error_names_file_line(self, data, capsys):
        bad = data / "bad.dis"
        bad.write_text("a b\n[ c + d\n")
        code = main(["train", "--train", str(bad), "--dev", str(data / "dev.dis"),
                     "--output", str(data / "y.ckpt")])
        assert code == 1
        assert "bad.dis:2" in capsys.readouterr().err

    def test_unwritable_output(self, data):
        code = main(["train", "--train", str(data / "train.dis"), "--dev", str(data / "dev.dis"),
                     "--output", str(data / "missing" / "m.ckpt"), *TRAIN_FLAGS])
        assert code == 1


class TestTag:
    def test_dp_and_ilp_agree(self, data, model_path):
        outs = {}
        for method in ("dp", "ilp"):
            out = data / f"{method}.tsv"
            assert main(["tag", "--checkpoint", str(model_path), "--input", str(data / "dev.dis"),
                         "--decode", method, "--output", str(out)]) == 0
            outs[method] = out.read_text()
        assert outs["dp"] == outs["ilp"]

    def test_long_sentence_processed(self, data, model_path):
        long_in = data / "long.dis"
        long_in.write_text("long\t" + " ".join(["w"] * 80) + "\n")
        out = data / "long.tsv"
        assert main(["tag", "--checkpoint", str(model_path), "--input", str(long_in),
                     "--output", str(out)]) == 0
        assert len(read_tsv(out)[0].labels) == 80

    def test_argmax_warns_about_illegal(self, data, model_path, caplog, monkeypatch):
        import disfluency.cli as cli
        monkeypatch.setattr(cli, "decode", lambda p, scheme, method: ["IE"] * len(p))
        with caplog.at_level(logging.WARNING):
            assert main(["tag", "--checkpoint", str(model_path), "--input", str(data / "dev.dis"),
                         "--decode", "argmax", "--output", str(data / "am.tsv")]) == 0
        assert "20 of 20 sentences have illegal" in caplog.text

    def test_scheme_mismatch(self, data, model_path):
        assert main(["tag", "--checkpoint", str(model_path), "--input", str(data / "dev.dis"),
                     "--scheme", "five"]) == 2

    def test_not_a_checkpoint(self, data, capsys):
        assert main(["tag", "--checkpoint", str(data / "dev.dis"),
                     "--input", str(data / "dev.dis")]) == 1
        assert "not a checkpoint" in capsys.readouterr().err


class TestEval:
    def _gold_tsv(self, data, scheme):
        out = data / f"gold_{scheme}.tsv"
        from disfluency.corpus import gold_labeled, read_dis, write_tsv
        from disfluency.schemes import get_scheme
        write_tsv(gold_labeled(read_dis(data / "dev.dis"), get_scheme(scheme)), out)
        return out

    @pytest.mark.parametrize("scheme", ["five", "eight", "extended"])
    def test_gold_vs_gold(self, data, scheme, capsys):
        pred = self._gold_tsv(data, scheme)
        assert main(["eval", "--pred", str(pred), "--gold", str(data / "dev.dis"),
                     "--scheme", scheme, "--format", "kv"]) == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if ".f=" in l]
        assert lines and all(l.endswith("=1.000000") for l in lines)
        assert any(l.startswith("corrections.") for l in lines) == (scheme == "extended")

    def test_misaligned(self, data, capsys):
        pred = self._gold_tsv(data, "five")
        text = pred.read_text().split("\n\n")
        (data / "short.tsv").write_text("\n\n".join(text[:3] + text[4:]))
        assert main(["eval", "--pred", str(data / "short.tsv"),
                     "--gold", str(data / "dev.dis")]) == 1
        assert "dev-2-3" in capsys.readouterr().err


class TestOther:
    def test_synth_deterministic(self, data):
        for name in ("a.dis", "b.dis"):
            assert main(["synth", "--output", str(data / name), "--seed", "7",
                         "--n-sentences", "30"]) == 0
        assert (data / "a.dis").read_text() == (data / "b.dis").read_text()

    def test_features_two_token_sentence(self, data, capsys):
        src = data / "two.dis"
        src.write_text("s\thello world\n")
        assert main(["features", "--input", str(src), "--features", "7,8,9,10,11,12,13,14,15,16,17"]) == 0
        rows = [l for l in capsys.readouterr().out.splitlines()[2:] if l]
        assert rows == ["\t".join(["0"] * 11)] * 2

    def test_pretrain_then_train(self, data, caplog):
        emb = data / "emb.npz"
        assert main(["pretrain-lm", "--input", str(data / "train.dis"), "--output", str(emb),
                     "--word-dim", "4", "--pos-dim", "2", "--epochs", "1"]) == 0
        with caplog.at_level(logging.INFO):
            assert main(["train", "--train", str(data / "train.dis"), "--dev", str(data / "dev.dis"),
                         "--output", str(data / "pre.ckpt"), "--init-embeddings", str(emb),
                         *TRAIN_FLAGS]) == 0
        assert "initialised embeddings from" in caplog.text

    def test_no_subcommand(self):
        assert main([]) == 2
