from __future__ import annotations

import pytest

from talarescore.cli import main
from talarescore.core import default_vocabulary, load_sequences


def run(argv):
    return main(argv)


def gen_corpus(tmp_path, name="corpus.txt", tala="tintal", count=4, extra=()):
    out = tmp_path / name
    code = run(
        [
            "gen-corpus",
            "--tala", tala,
            "--cycles", "2",
            "--count", str(count),
            "--seed", "11",
            "--p-sub", "0.05",
            "--out", str(out),
            *extra,
        ]
    )
    assert code == 0
    return out


def test_gen_corpus_writes_labeled_sequences(tmp_path):
    out = gen_corpus(tmp_path)
    seqs = load_sequences(out, default_vocabulary())
    assert len(seqs) == 4
    assert all(s.tala_label == "tintal" for s in seqs)
    assert all(len(s) == 32 for s in seqs)


def test_gen_corpus_missing_seed_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run(["gen-corpus", "--tala", "tintal", "--out", str(tmp_path / "x.txt")])
    assert exc.value.code == 2


def test_gen_corpus_unknown_tala_lists_builtins(tmp_path, capsys):
    code = run(
        ["gen-corpus", "--tala", "wat", "--seed", "1", "--out", str(tmp_path / "x.txt")]
    )
    assert code == 1
    err = capsys.readouterr().err
    assert "tintal" in err and "jhaptal" in err


def test_train_rescore_ser_round_trip(tmp_path, capsys):
    corpus = gen_corpus(tmp_path, count=6)
    model_path = tmp_path / "model.tiprior"
    assert run(["train", "--corpus", str(corpus), "--out", str(model_path)]) == 0
    assert model_path.exists()

    truth = gen_corpus(tmp_path, name="truth.txt", count=2)
    lat_dir = tmp_path / "lats"
    assert (
        run(
            [
                "gen-lattice",
                "--sequences", str(truth),
                "--out-dir", str(lat_dir),
                "--seed", "3",
                "--branching", "3",
                "--noise-sigma", "0.8",
            ]
        )
        == 0
    )
    lats = sorted(lat_dir.glob("*.lat"))
    assert len(lats) == 2

    hyp_path = tmp_path / "hyp.txt"
    code = run(
        ["rescore", *map(str, lats), "--model", str(model_path), "--out", str(hyp_path)]
    )
    assert code == 0
    hyps = load_sequences(hyp_path, default_vocabulary())
    assert len(hyps) == 2

    assert run(["ser", "--ref", str(truth), "--hyp", str(hyp_path)]) == 0
    out = capsys.readouterr().out
    assert "total:" in out and "SER=" in out


def test_rescore_beta_zero_equals_baseline(tmp_path):
    corpus = gen_corpus(tmp_path, count=5)
    model_path = tmp_path / "model.tiprior"
    run(["train", "--corpus", str(corpus), "--out", str(model_path)])
    truth = gen_corpus(tmp_path, name="t.txt", count=2)
    lat_dir = tmp_path / "lats"
    run(
        [
            "gen-lattice",
            "--sequences", str(truth),
            "--out-dir", str(lat_dir),
            "--seed", "9",
            "--branching", "3",
            "--noise-sigma", "0.9",
        ]
    )
    lats = sorted(map(str, lat_dir.glob("*.lat")))
    base_out = tmp_path / "base.txt"
    beta0_out = tmp_path / "beta0.txt"
    assert run(["rescore", *lats, "--model", str(model_path), "--out", str(base_out), "--baseline"]) == 0
    assert run(["rescore", *lats, "--model", str(model_path), "--out", str(beta0_out), "--beta", "0"]) == 0
    assert base_out.read_text() == beta0_out.read_text()


def test_rescore_fixed_lambda_flags(tmp_path):
    corpus = gen_corpus(tmp_path, count=5)
    model_path = tmp_path / "model.tiprior"
    run(["train", "--corpus", str(corpus), "--out", str(model_path)])
    truth = gen_corpus(tmp_path, name="t.txt", count=1)
    lat_dir = tmp_path / "lats"
    run(
        [
            "gen-lattice",
            "--sequences", str(truth),
            "--out-dir", str(lat_dir),
            "--seed", "4",
            "--branching", "2",
            "--noise-sigma", "0.6",
        ]
    )
    lat = str(next(lat_dir.glob("*.lat")))
    for mode in ("fixed:0", "fixed:1", "adaptive"):
        out = tmp_path / f"out_{mode.replace(':', '_')}.txt"
        assert run(["rescore", lat, "--model", str(model_path), "--out", str(out), "--lambda", mode]) == 0
        assert out.exists()


def test_rescore_diagnostics_file(tmp_path):
    corpus = gen_corpus(tmp_path, count=4)
    model_path = tmp_path / "model.tiprior"
    run(["train", "--corpus", str(corpus), "--out", str(model_path)])
    truth = gen_corpus(tmp_path, name="t.txt", count=1)
    lat_dir = tmp_path / "lats"
    run(
        [
            "gen-lattice",
            "--sequences", str(truth),
            "--out-dir", str(lat_dir),
            "--seed", "2",
            "--branching", "2",
            "--noise-sigma", "0.5",
        ]
    )
    lat = str(next(lat_dir.glob("*.lat")))
    out = tmp_path / "hyp.txt"
    diag = tmp_path / "diag.txt"
    assert run(
        ["rescore", lat, "--model", str(model_path), "--out", str(out), "--diagnostics", str(diag)]
    ) == 0
    text = diag.read_text()
    assert "summary pops=" in text
    assert "lambda=" in text and "p_comb=" in text


def test_rescore_reports_failed_lattices(tmp_path, capsys):
    corpus = gen_corpus(tmp_path, count=4)
    model_path = tmp_path / "model.tiprior"
    run(["train", "--corpus", str(corpus), "--out", str(model_path)])
    bad = tmp_path / "bad.lat"
    bad.write_text("not a lattice\n", encoding="utf-8")
    out = tmp_path / "hyp.txt"
    code = run(["rescore", str(bad), "--model", str(model_path), "--out", str(out)])
    assert code == 1
    assert "bad.lat" in capsys.readouterr().err


def test_bench_emits_seven_rows_and_is_byte_stable(tmp_path):
    suite = tmp_path / "suite.cfg"
    suite.write_text(
        "talas=tintal,jhaptal\n"
        "train_per_tala=3\n"
        "test_per_tala=2\n"
        "cycles=2\n"
        "branching=2\n"
        "noise_sigma=0.7\n"
        "p_tihai=0.2\n"
        "p_sub=0.05\n"
        "k_beam=60\n"
        "seed=13\n",
        encoding="utf-8",
    )
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    assert run(["bench", "--suite", str(suite), "--out-dir", str(out1)]) == 0
    assert run(["bench", "--suite", str(suite), "--out-dir", str(out2)]) == 0
    tsv1 = (out1 / "report.tsv").read_bytes()
    tsv2 = (out2 / "report.tsv").read_bytes()
    assert tsv1 == tsv2
    lines = tsv1.decode().splitlines()
    assert len(lines) == 1 + 7  # header + baseline + 5 fixed + adaptive
    labels = [l.split("\t")[0] for l in lines[1:]]
    assert labels == [
        "baseline",
        "lambda=0",
        "lambda=0.25",
        "lambda=0.5",
        "lambda=0.75",
        "lambda=1",
        "adaptive",
    ]
    assert (out1 / "report.txt").exists()


def test_bench_data_efficiency_mode(tmp_path):
    suite = tmp_path / "suite.cfg"
    suite.write_text(
        "talas=tintal\ntrain_per_tala=3\ntest_per_tala=1\ncycles=2\n"
        "branching=2\nnoise_sigma=0.5\nk_beam=40\nseed=3\n",
        encoding="utf-8",
    )
    out = tmp_path / "r"
    assert run(["bench", "--suite", str(suite), "--out-dir", str(out), "--data-efficiency"]) == 0
    tsv = (out / "report.tsv").read_text().splitlines()
    assert tsv[0].startswith("subset\t")
    subsets = {l.split("\t")[0] for l in tsv[1:]}
    assert subsets == {"small", "medium", "large"}


def test_config_file_provides_defaults_flags_override(tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("tala=tintal\ncycles=2\ncount=3\nseed=11\n", encoding="utf-8")
    out = tmp_path / "seqs.txt"
    code = run(["gen-corpus", "--config", str(cfg), "--out", str(out), "--count", "1"])
    assert code == 0
    seqs = load_sequences(out, default_vocabulary())
    assert len(seqs) == 1  # flag overrode the file's count=3
    assert len(seqs[0]) == 32  # file's cycles=2 applied


def test_decode_defaults_pin_standard_hyperparameters():
    from talarescore.cli import build_parser

    args = build_parser().parse_args(
        ["rescore", "x.lat", "--model", "m", "--out", "o"]
    )
    assert args.rho == 0.03
    assert args.beta == 0.5
    assert args.w_dyn == 32
    assert args.w_tau == 16
    assert args.k_beam == 150
    assert args.delta_beam == 10.0
    assert args.lambda_mode == "adaptive"

    train = build_parser().parse_args(["train", "--corpus", "c", "--out", "m"])
    assert train.n == 3
    assert train.laplace_k == 1.0
    assert train.w_tau == 16
    assert train.eps_dir == 1.0
