import csv
import io
import json
import math

import pytest

from rcrmimo import cli
from rcrmimo.predictor import SaddleError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def minimal(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('constellation = "qam16"\nrelaxation = "box"\nkappa = 2.0\nsnr_db = [5]\nzeta = 0.0\n')
    return str(path)


def test_minimal_config_fills_defaults(minimal):
    cfg = cli.parse_config(["predict", "--config", minimal])
    assert cfg.constellation.name == "qam16" and cfg.relaxation.kind == "box"
    assert cfg.snr_db == [5.0] and cfg.n == 128 and cfg.trials == 50 and cfg.threads == 1
    assert cfg.seed == 0 and cfg.quadrature_nodes == 64


def test_flag_overrides_file(minimal):
    cfg = cli.parse_config(["predict", "--config", minimal, "--snr-db=10"])
    assert cfg.snr_db == [10.0]


def test_bad_constellation_names_key(capsys):
    code, out, err = run(capsys, "predict", "--constellation", "qam15")
    assert code == 1 and out == ""
    line = err.strip().splitlines()[0]
    assert line.startswith("error: constellation:") and "qam16" in line


def test_unknown_key_rejected(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("snr = 5\ntrials = 0\n")
    code, _, err = run(capsys, "predict", "--config", str(path))
    assert code == 1
    lines = err.strip().splitlines()
    assert any(l.startswith("error: snr: unknown key") for l in lines)
    assert any(l.startswith("error: trials:") for l in lines)


def test_malformed_toml(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("snr_db = [1,\n")
    assert run(capsys, "predict", "--config", str(path))[0] == 1


def test_missing_config_is_io_error(tmp_path, capsys):
    assert run(capsys, "predict", "--config", str(tmp_path / "nope.toml"))[0] == 3


def test_predict_header_and_rls_value(capsys):
    code, out, _ = run(capsys, "predict", "--relaxation", "none", "--snr-db=0", "--kappa", "2")
    assert code == 0
    assert out.splitlines()[0] == ("kappa,snr_db,zeta,alpha_star,beta_star,mse_pred,sep_pred,sep_method,"
                                   "converged")
    (r,) = rows(out)
    assert float(r["mse_pred"]) == pytest.approx(1.0, abs=1e-6)
    assert r["converged"] == "true"


def test_psk_snr_sweep_rows(capsys):
    snrs = ",".join(str(s) for s in range(-5, 16))
    code, out, _ = run(capsys, "predict", "--constellation", "psk16", "--relaxation", "disk", f"--snr-db={snrs}")
    assert code == 0
    mse = [float(r["mse_pred"]) for r in rows(out)]
    assert len(mse) == 21
    assert all(b < a for a, b in zip(mse, mse[1:]))


def test_floats_round_trip(capsys):
    _, out, _ = run(capsys, "predict", "--snr-db=3.3")
    (r,) = rows(out)
    alpha = float(r["alpha_star"])
    assert format(alpha, ".17g") == r["alpha_star"]


def test_json_mirrors_csv(capsys):
    _, out_csv, _ = run(capsys, "predict", "--snr-db=0,10")
    _, out_json, _ = run(capsys, "predict", "--snr-db=0,10", "--format", "json")
    data = json.loads(out_json)
    assert list(data[0]) == cli.PREDICT_COLUMNS
    for a, b in zip(rows(out_csv), data):
        assert float(a["mse_pred"]) == b["mse_pred"]


def test_check_flag(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert run(capsys, "predict", "--out", str(out), "--check")[0] == 0
    assert out.read_text().startswith("kappa,")
    assert run(capsys, "predict", "--format", "json", "--check")[0] == 0


def test_unwritable_output(tmp_path, capsys):
    assert run(capsys, "predict", "--out", str(tmp_path / "no" / "dir.csv"))[0] == 3


def test_simulate_columns_and_single_trial(capsys):
    code, out, _ = run(capsys, "simulate", "--n", "16", "--trials", "1", "--snr-db=10")
    assert code == 0
    (r,) = rows(out)
    assert list(r) == cli.SIM_COLUMNS
    assert r["trials"] == "1" and float(r["mse_stderr"]) == 0.0


def test_compare_from_files(tmp_path, capsys):
    p, s = tmp_path / "p.csv", tmp_path / "s.csv"
    common = ["--constellation", "qam16", "--snr-db=5,10", "--n", "32", "--trials", "4"]
    assert run(capsys, "predict", *common, "--out", str(p))[0] == 0
    assert run(capsys, "simulate", *common, "--out", str(s))[0] == 0
    code, out, _ = run(capsys, "compare", "--predictions", str(p), "--simulations", str(s))
    assert code == 0
    got = rows(out)
    assert list(got[0]) == cli.COMPARE_COLUMNS and len(got) == 2
    direct = rows(run(capsys, "compare", *common)[1])
    for a, b in zip(got, direct):
        assert a["mse_rel_dev"] == b["mse_rel_dev"]


def test_compare_rejects_mismatched_keys(tmp_path, capsys):
    p, s = tmp_path / "p.csv", tmp_path / "s.csv"
    run(capsys, "predict", "--zeta=0.1", "--out", str(p))
    run(capsys, "simulate", "--zeta=0.2", "--n", "8", "--trials", "1", "--out", str(s))
    code, out, err = run(capsys, "compare", "--predictions", str(p), "--simulations", str(s))
    assert code == 1 and out == "" and "join keys" in err


def test_empty_sweep_is_header_only(capsys):
    for cmd in ("compare", "sweep", "predict"):
        code, out, _ = run(capsys, cmd, "--snr-db=")
        assert code == 0
        assert out.count("\n") == 1 and out.startswith(cli.COLUMNS[cmd][0])


def test_sweep_zeta_axis(capsys):
    code, out, _ = run(capsys, "sweep", "--axis", "zeta", "--zeta=0,0.2", "--n", "16", "--trials", "2")
    assert code == 0
    got = rows(out)
    assert [r["value"] for r in got] == ["0", "0.20000000000000001"]
    assert all(r["error"] == "" for r in got)


def test_opt_zeta_degenerate(capsys):
    code, out, _ = run(capsys, "opt-zeta", "--constellation", "qam16", "--zeta-max", "0")
    assert code == 0
    (r,) = rows(out)
    assert float(r["zeta_star"]) == 0.0 and r["interior"] == "false"


def test_saddle_failure_exit_code(monkeypatch, capsys):
    def fail(*a, **k):
        raise SaddleError("no convergence", None, 0.0)

    monkeypatch.setattr(cli, "predict", fail)
    code, _, err = run(capsys, "predict")
    assert code == 2 and "no convergence" in err


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("RCR_THREADS", "3")
    assert cli.parse_config(["simulate"]).threads == 3
    assert cli.parse_config(["simulate", "--threads", "2"]).threads == 2


def test_closed_form_needs_psk(capsys):
    assert run(capsys, "predict", "--constellation", "qam16", "--sep-method", "closed_form_psk")[0] == 1


def test_deviation_guard():
    assert cli.deviations(0.1, 0.1, 0.0, 0.0, 0.0) == (0.0, 0.0)
    assert cli.deviations(0.1, 0.1, 0.1, 0.0, 0.0)[1] == math.inf
