import pytest

from xnli.cli import main
from xnli.ingest import read_embeddings, write_dictionary, write_lines, write_snli
from xnli.synthetic import CipherConfig, CipherWorld


@pytest.fixture(scope="module")
def world_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    world = CipherWorld(CipherConfig(n_words=60, n_topics=6))
    par = world.parallel(300, seed=1)
    write_lines([p.src_tokens for p in par.pairs], d / "src.txt")
    write_lines([p.tgt_tokens for p in par.pairs], d / "tgt.txt")
    train = world.nli(60, seed=2)
    test = world.nli(30, seed=3)
    write_snli(train, d / "train.tsv")
    write_snli(world.encipher_examples(test), d / "test.fra.tsv")
    dtrain, _ = world.dictionary(40)
    write_dictionary(dtrain, d / "dict.tsv")
    return d


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


SMALL = ["--dim", "8", "--epochs", "1"]


@pytest.mark.parametrize("method", ["random", "ratio", "invert", "bicvm"])
def test_embed_methods(world_files, tmp_path, capsys, method):
    d = world_files
    code, _, err = run(["embed", "--method", method, "--src", d / "src.txt", "--tgt", d / "tgt.txt",
                        "--src-lang", "eng", "--tgt-lang", "fra", "--out", tmp_path / "vec.txt", *SMALL], capsys)
    assert code == 0, err
    space = read_embeddings(tmp_path / "vec.txt")
    assert space.dim == 8 and set(space.languages()) == {"eng", "fra"}
    assert "method = " + method in err and "seed = 0" in err


def test_embed_map_and_merged(world_files, tmp_path, capsys):
    d = world_files
    code, _, err = run(["embed", "--method", "map", "--src", d / "src.txt", "--tgt", d / "tgt.txt",
                        "--dict", d / "dict.tsv", "--out", tmp_path / "m.txt", *SMALL], capsys)
    assert code == 0, err
    assert set(read_embeddings(tmp_path / "m.txt").languages()) == {"eng", "fra"}
    code, _, _ = run(["embed", "--method", "ratio", "--src", d / "src.txt", "--tgt", d / "tgt.txt",
                      "--write-merged", tmp_path / "merged.txt", "--out", tmp_path / "r.txt", *SMALL], capsys)
    first = (tmp_path / "merged.txt").read_text().splitlines()[0].split()
    assert code == 0 and all(t.startswith(("eng:", "fra:")) for t in first)


def test_pipeline_is_byte_reproducible(world_files, tmp_path, capsys):
    d = world_files
    outs = []
    for rep in ("a", "b"):
        o = tmp_path / rep
        o.mkdir()
        assert run(["embed", "--method", "random", "--src", d / "src.txt", "--tgt", d / "tgt.txt",
                    "--out", o / "vec.txt", "--seed", 7, *SMALL], capsys)[0] == 0
        assert run(["train-nli", "--train", d / "train.tsv", "--embeddings", o / "vec.txt", "--lang", "eng",
                    "--hidden", 8, "--nli-epochs", 2, "--seed", 7, "--out", o / "model.txt"], capsys)[0] == 0
        code, text, _ = run(["evaluate", "--model", o / "model.txt", "--embeddings", o / "vec.txt",
                             "--test", d / "test.fra.tsv", "--lang", "fra", "--out", o / "report.tsv"], capsys)
        assert code == 0 and text.startswith("accuracy ")
        assert run(["predict", "--model", o / "model.txt", "--embeddings", o / "vec.txt",
                    "--test", d / "test.fra.tsv", "--lang", "fra", "--out", o / "pred.tsv"], capsys)[0] == 0
        outs.append([(o / f).read_bytes() for f in ("vec.txt", "model.txt", "report.tsv", "pred.tsv")])
    assert outs[0] == outs[1]
    assert len((tmp_path / "a" / "pred.tsv").read_text().splitlines()) == 31


def test_seed_from_env_and_flag_precedence(world_files, tmp_path, capsys, monkeypatch):
    d = world_files
    base = ["embed", "--method", "random", "--src", d / "src.txt", "--tgt", d / "tgt.txt", *SMALL]
    monkeypatch.setenv("XNLI_SEED", "7")
    _, _, err = run(base + ["--out", tmp_path / "env.txt"], capsys)
    assert "seed = 7" in err
    run(base + ["--out", tmp_path / "flag.txt", "--seed", "7"], capsys)
    run(base + ["--out", tmp_path / "other.txt", "--seed", "8"], capsys)
    assert (tmp_path / "env.txt").read_bytes() == (tmp_path / "flag.txt").read_bytes()
    assert (tmp_path / "env.txt").read_bytes() != (tmp_path / "other.txt").read_bytes()


def test_config_file(world_files, tmp_path, capsys):
    d = world_files
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# toy run\nmethod = ratio\nsrc = {d / 'src.txt'}\ntgt = {d / 'tgt.txt'}\n"
                   f"dim = 6\nepochs = 1\nout = {tmp_path / 'c.txt'}\n")
    code, _, err = run(["embed", "--config", cfg, "--dim", "4"], capsys)
    assert code == 0, err
    assert read_embeddings(tmp_path / "c.txt").dim == 4  # flag beats file
    cfg.write_text("bogus_key = 1\n")
    code, _, err = run(["embed", "--config", cfg], capsys)
    assert code == 2 and "bogus_key" in err and "usage:" in err


def test_config_replays_resolved_settings(world_files, tmp_path, capsys):
    d = world_files
    code, _, err = run(["embed", "--method", "ratio", "--src", d / "src.txt", "--tgt", d / "tgt.txt",
                        "--out", tmp_path / "1.txt", *SMALL], capsys)
    resolved = "".join(l + "\n" for l in err.splitlines() if not l.startswith("#") and " = " in l)
    (tmp_path / "replay.cfg").write_text(resolved.replace(str(tmp_path / "1.txt"), str(tmp_path / "2.txt")))
    assert run(["embed", "--config", tmp_path / "replay.cfg"], capsys)[0] == 0
    assert (tmp_path / "1.txt").read_bytes() == (tmp_path / "2.txt").read_bytes()


def test_usage_errors(capsys, tmp_path):
    code, _, err = run(["frobnicate"], capsys)
    assert code == 2 and "usage:" in err
    code, _, err = run(["embed", "--out", tmp_path / "x"], capsys)
    assert code == 2 and "--method" in err
    code, _, err = run(["embed", "--method", "nope"], capsys)
    assert code == 2
    assert run([], capsys)[0] == 2


def test_missing_model_is_runtime_error(world_files, tmp_path, capsys):
    d = world_files
    missing = tmp_path / "no_such_model.txt"
    code, _, err = run(["evaluate", "--model", missing, "--embeddings", d / "src.txt",
                        "--test", d / "test.fra.tsv"], capsys)
    assert code == 1
    last = err.strip().splitlines()[-1]
    assert str(missing) in last and last.startswith("xnli evaluate: error:")


def test_malformed_input_is_runtime_error(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("only one column\n")
    code, _, err = run(["train-nli", "--train", bad, "--embeddings", bad, "--out", tmp_path / "m"], capsys)
    assert code == 1 and str(bad) in err.strip().splitlines()[-1]


def test_help_lists_defaults(capsys):
    for cmd in ("embed", "train-nli", "predict", "evaluate", "learning-curve", "bleu", "tokenize"):
        assert main([cmd, "--help"]) == 0
        out = capsys.readouterr().out
        assert "--seed" in out and "--config" in out and "default:" in out


def test_bleu_and_tokenize(tmp_path, capsys):
    (tmp_path / "h.txt").write_text("The cat sat on the mat.\n")
    (tmp_path / "r.txt").write_text("the cat sat on the mat .\n")
    code, out, _ = run(["bleu", "--hyp", tmp_path / "h.txt", "--ref", tmp_path / "r.txt",
                        "--out", tmp_path / "b.tsv"], capsys)
    assert code == 0 and "100.0000" in out
    assert "bleu\t100.0000" in (tmp_path / "b.tsv").read_text()
    code, out, _ = run(["tokenize", "--input", tmp_path / "h.txt"], capsys)
    assert out == "the cat sat on the mat .\n"
    code, out, _ = run(["tokenize", "--input", tmp_path / "h.txt", "--no-lowercase"], capsys)
    assert out.startswith("The ")


def test_learning_curve_command(world_files, tmp_path, capsys):
    d = world_files
    code, out, err = run(["learning-curve", "--method", "ratio", "--src", d / "src.txt", "--tgt", d / "tgt.txt",
                          "--train", d / "train.tsv", "--test", d / "test.fra.tsv", "--sizes", "30,300",
                          "--hidden", 8, "--nli-epochs", 1, *SMALL], capsys)
    assert code == 0, err
    lines = out.splitlines()
    assert lines[0] == "parallel_sentences\taccuracy" and [l.split("\t")[0] for l in lines[1:]] == ["30", "300"]
    code, _, err = run(["learning-curve", "--src", d / "src.txt", "--tgt", d / "tgt.txt", "--train", d / "train.tsv",
                        "--test", d / "test.fra.tsv", "--sizes", "5000", *SMALL], capsys)
    assert code == 1 and "5000" in err
