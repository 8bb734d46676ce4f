import numpy as np
import pytest

from eotnet.cli import main
from eotnet.scenario import preset_text


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv("EOT_THREADS", "1")


@pytest.fixture
def tiny_config(tmp_path):
    # s3 trimmed down for fast end-to-end runs
    text = preset_text("s3").replace("steps: 40", "steps: 4")
    text = text.replace("law: poisson", "law: fixed").replace("rate: 5.0", "count: 2")
    path = tmp_path / "tiny.yaml"
    path.write_text(text)
    return path


def read(path):
    return path.read_bytes()


def test_dump_config(capsys):
    assert main(["--scenario", "s1", "--dump-config"]) == 0
    out = capsys.readouterr().out
    assert "name: s1" in out
    assert "measurement_cov: [3.0, 9.0]" in out


def test_run_produces_artifacts(tmp_path, tiny_config):
    out = tmp_path / "out"
    rc = main(["--config", str(tiny_config), "--filter", "ceot",
               "--runs", "2", "--seed", "3", "--out", str(out)])
    assert rc == 0
    csv_text = (out / "metrics.csv").read_text()
    lines = csv_text.splitlines()
    assert lines[0] == "run,step,node,metric,value"
    values = [float(line.split(",")[4]) for line in lines[1:]]
    assert all(np.isfinite(values))
    # 2 runs x 4 steps x 1 center node x 5 metrics (rectangle includes ospa)
    assert len(lines) - 1 == 2 * 4 * 5
    summary = (out / "summary.txt").read_text()
    assert "filter: ceot" in summary
    assert "mean wall time per tracking step" in summary
    assumptions = (out / "assumptions.txt").read_text()
    assert "A3" in assumptions


def test_run_deterministic(tmp_path, tiny_config):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    args = ["--config", str(tiny_config), "--filter", "cm", "--L", "2",
            "--runs", "2", "--seed", "11"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert read(out1 / "metrics.csv") == read(out2 / "metrics.csv")


def test_run_parallel_matches_serial(tmp_path, tiny_config, monkeypatch):
    out1, out2 = tmp_path / "serial", tmp_path / "par"
    args = ["--config", str(tiny_config), "--filter", "ci", "--L", "1",
            "--runs", "3", "--seed", "5"]
    monkeypatch.setenv("EOT_THREADS", "1")
    assert main(args + ["--out", str(out1)]) == 0
    monkeypatch.setenv("EOT_THREADS", "3")
    assert main(args + ["--out", str(out2)]) == 0
    assert read(out1 / "metrics.csv") == read(out2 / "metrics.csv")


def test_distributed_csv_has_network_rows(tmp_path, tiny_config):
    out = tmp_path / "out"
    assert main(["--config", str(tiny_config), "--filter", "cm", "--L", "1",
                 "--runs", "1", "--seed", "0", "--out", str(out)]) == 0
    lines = (out / "metrics.csv").read_text().splitlines()[1:]
    nodes = {int(line.split(",")[2]) for line in lines}
    assert -1 in nodes  # disagreement rows
    assert set(range(20)) <= nodes
    metrics = {line.split(",")[3] for line in lines}
    assert {"gwd", "ospa", "pos_err", "nees_kin", "nees_ext",
            "acee_kin", "acee_ext"} == metrics


def test_sweep_L(tmp_path, tiny_config):
    out = tmp_path / "sweep"
    rc = main(["--config", str(tiny_config), "--filter", "cm",
               "--sweep-L", "1,2", "--runs", "1", "--seed", "2",
               "--out", str(out)])
    assert rc == 0
    assert (out / "L_1" / "metrics.csv").exists()
    assert (out / "L_2" / "metrics.csv").exists()
    combined = (out / "combined.csv").read_text().splitlines()
    assert combined[0] == "setting,metric,mean,std,count"
    assert any(line.startswith("L=1,") for line in combined[1:])
    assert any(line.startswith("L=2,") for line in combined[1:])


def test_sweep_lambda(tmp_path, tiny_config):
    out = tmp_path / "sweep"
    rc = main(["--config", str(tiny_config), "--filter", "ceot",
               "--sweep-lambda", "1,2", "--runs", "1", "--out", str(out)])
    assert rc == 0
    assert (out / "lambda_1" / "metrics.csv").exists()
    assert (out / "lambda_2" / "metrics.csv").exists()
    assert (out / "combined.csv").exists()


def test_usage_errors(tmp_path, tiny_config):
    with pytest.raises(SystemExit):
        main(["--scenario", "s1"])  # no filter/out
    with pytest.raises(SystemExit):
        main(["--config", str(tiny_config), "--filter", "ceot",
              "--out", str(tmp_path), "--lambda", "3", "--fixed-n", "5"])
    with pytest.raises(SystemExit):
        main(["--config", str(tiny_config), "--filter", "cm",
              "--out", str(tmp_path), "--sweep-L", "1,2", "--sweep-lambda", "3"])
    with pytest.raises(SystemExit):
        main(["--scenario", "s1", "--filter", "ci", "--L", "0",
              "--out", str(tmp_path)])
    with pytest.raises(SystemExit):
        main(["--scenario", "s1", "--filter", "cm", "--out", str(tmp_path),
              "--sweep-L", ""])


def test_bad_config_path(tmp_path, capsys):
    rc = main(["--config", str(tmp_path / "nope.yaml"), "--filter", "ceot",
               "--out", str(tmp_path / "o")])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_omega_flag(tmp_path, tiny_config):
    out = tmp_path / "o"
    assert main(["--config", str(tiny_config), "--filter", "cm", "--L", "1",
                 "--runs", "1", "--omega", "G", "--out", str(out)]) == 0
    assert "omega: 20 (node count)" in (out / "summary.txt").read_text()
    out2 = tmp_path / "o2"
    assert main(["--config", str(tiny_config), "--filter", "cm", "--L", "1",
                 "--runs", "1", "--omega", "12.5", "--out", str(out2)]) == 0
    assert "omega: 12.5" in (out2 / "summary.txt").read_text()
