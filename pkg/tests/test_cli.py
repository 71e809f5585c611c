import json
from fractions import Fraction

import pytest

from pvrc import cli, geometry


@pytest.fixture
def synth_dir(tmp_path):
    assert cli.main(["synth", "--out-dir", str(tmp_path), "--name", "toy", "--classes", "4",
                     "--per-class", "5", "--dim", "20", "--seed", "3"]) == 0
    return tmp_path


def _strip(report):
    report.pop("environment")
    for r in report["classifiers"]:
        r.pop("timing")
    return report


def test_synth_then_eval(synth_dir, capsys):
    out = synth_dir / "r.json"
    code = cli.main(["eval", "--manifest", str(synth_dir / "toy.ini"), "--classifiers", "nn,pvrc",
                     "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert [r["name"] for r in report["classifiers"]] == ["nn", "pvrc"]
    assert all(r["recognition_rate"] == 100.0 for r in report["classifiers"])
    assert report["seed"] == 0
    printed = capsys.readouterr().out
    assert "NN" in printed and "PVRC" in printed


def test_synth_same_seed_byte_identical(tmp_path):
    for sub in ("a", "b"):
        assert cli.main(["synth", "--out-dir", str(tmp_path / sub), "--seed", "11"]) == 0
    assert (tmp_path / "a" / "synth.csv").read_bytes() == (tmp_path / "b" / "synth.csv").read_bytes()


def test_synth_bad_params(tmp_path, capsys):
    assert cli.main(["synth", "--out-dir", str(tmp_path), "--subspace-dim", "50", "--dim", "50"]) == 1
    assert "subspace_dim" in capsys.readouterr().err


def test_unknown_classifier_lists_valid_names(synth_dir, capsys):
    code = cli.main(["eval", "--manifest", str(synth_dir / "toy.ini"), "--classifiers", "nn,knn"])
    assert code == 1
    err = capsys.readouterr().err
    assert "knn" in err and all(n in err for n in ("nn", "cm", "lrc", "crc", "src", "tptssr", "pvrc"))


def test_first_n_one_is_validation_error(synth_dir, capsys):
    code = cli.main(["eval", "--manifest", str(synth_dir / "toy.ini"), "--scheme", "first-n", "--n", "1"])
    assert code == 1
    assert "n >= 2" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["eval"],
        ["eval", "--manifest", "does/not/exist.ini"],
        ["eval", "--manifest", "{m}", "--scheme", "kfold"],
        ["eval", "--manifest", "{m}", "--tptssr-k", "a:b"],
        ["eval", "--manifest", "{m}", "--threads", "0"],
        ["eval", "--manifest", "{m}", "--format", "xml"],
        ["frobnicate"],
    ],
)
def test_validation_errors(synth_dir, argv):
    argv = [a.replace("{m}", str(synth_dir / "toy.ini")) for a in argv]
    assert cli.main(argv) == 1


def test_runtime_error_exit_code(synth_dir, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(cli.evaluation, "run_protocol", boom)
    assert cli.main(["eval", "--manifest", str(synth_dir / "toy.ini")]) == 2


def test_config_file_and_override(synth_dir):
    cfg = synth_dir / "run.json"
    cfg.write_text(json.dumps({"manifest": "toy.ini", "classifiers": "cm,lrc", "scheme": "first-n", "n": 3,
                               "format": "csv", "out": str(synth_dir / "cfg.csv")}))
    assert cli.main(["eval", "--config", str(cfg)]) == 0
    text = (synth_dir / "cfg.csv").read_text()
    assert text.splitlines()[0].startswith("dataset,protocol,n,classifier")
    assert ",cm," in text and ",lrc," in text
    assert cli.main(["eval", "--config", str(cfg), "--classifiers", "nn"]) == 0
    text = (synth_dir / "cfg.csv").read_text()
    assert ",nn," in text and ",cm," not in text


def test_config_file_errors(synth_dir):
    bad = synth_dir / "bad.json"
    bad.write_text('{"manifest": "toy.ini", "colour": 1}')
    assert cli.main(["eval", "--config", str(bad)]) == 1
    bad.write_text("{not json")
    assert cli.main(["eval", "--config", str(bad)]) == 1


def test_tptssr_sweep_reports_best(synth_dir):
    out = synth_dir / "t.json"
    assert cli.main(["eval", "--manifest", str(synth_dir / "toy.ini"), "--classifiers", "pvrc,tptssr",
                     "--tptssr-k", "1:7:3", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    t = rep["classifiers"][1]
    assert t["name"] == "tptssr"
    assert set(t["flags"]["sweep_rr"]) == {"1", "4", "7"}
    assert t["params"]["k"] == t["flags"]["best_k"]
    assert t["recognition_rate"] == max(t["flags"]["sweep_rr"].values())


def test_parse_k():
    assert cli.parse_k("10") == [10]
    assert cli.parse_k("5,10,20") == [5, 10, 20]
    assert cli.parse_k("1:9:4") == [1, 5, 9]
    for bad in ("0", "3:1:0", "x", "1:2:3:4"):
        with pytest.raises(cli.ValidationError):
            cli.parse_k(bad)


def test_eval_twice_identical_modulo_timing(synth_dir):
    reports = []
    for name in ("a.json", "b.json"):
        assert cli.main(["eval", "--manifest", str(synth_dir / "toy.ini"), "--classifiers", "nn,crc,src,pvrc",
                         "--seed", "5", "--threads", "2", "--out", str(synth_dir / name)]) == 0
        reports.append(_strip(json.loads((synth_dir / name).read_text())))
    assert reports[0] == reports[1]


def test_selftest_passes_and_is_repeatable(capsys):
    assert cli.main(["selftest"]) == 0
    first = capsys.readouterr().out
    assert cli.main(["selftest"]) == 0
    assert capsys.readouterr().out == first
    assert first.count("PASS") == 6 and "FAIL" not in first


def test_selftest_negative_control(monkeypatch, capsys):
    real = geometry.unifying_factor

    def perturbed(n):
        return Fraction(1, 280) if n == 4 else real(n)

    monkeypatch.setattr(geometry, "unifying_factor", perturbed)
    assert cli.main(["selftest"]) == 3
    out = capsys.readouterr().out
    assert "FAIL unit_tetrahedron" in out


def test_src_solver_flags(synth_dir):
    out = synth_dir / "s.json"
    assert cli.main(["eval", "--manifest", str(synth_dir / "toy.ini"), "--classifiers", "src", "--src-lambda",
                     "0.5", "--src-tol", "0", "--src-max-iter", "4", "--out", str(out)]) == 0
    r = json.loads(out.read_text())["classifiers"][0]
    assert r["params"] == {"lam": 0.5, "lam_scale": 0.001, "tol": 0.0, "max_iter": 4}
    assert r["flags"]["nonconverged_queries"] == r["total"]
    assert cli.main(["eval", "--manifest", str(synth_dir / "toy.ini"), "--classifiers", "src",
                     "--src-max-iter", "0"]) == 1
