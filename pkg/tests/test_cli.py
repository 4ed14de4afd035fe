import csv
import json

import numpy as np
import pytest

from cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_config(tmp_path, **config):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return str(path)


def test_train_skl_writes_artifacts(capsys, tmp_path, dataset_file, output_dir):
    config = write_config(tmp_path, d=20, optimizer={"max_iter": 10})
    code, out, _ = run(capsys, "train-skl", "--config", config, "--dataset", str(dataset_file),
                       "--output-dir", str(output_dir), "--seed", "5")
    assert code == 0
    metrics = json.loads(out)
    assert metrics["seed"] == 5
    for name in ("model.json", "base_sample.json", "trace.csv", "metrics.json"):
        assert (output_dir / name).is_file()

    with open(output_dir / "trace.csv", newline="") as f:
        objectives = [float(row["objective"]) for row in csv.DictReader(f)]
    assert np.all(np.diff(objectives) <= 0.0)
    assert objectives[-1] == pytest.approx(metrics["validation_objective"])


def test_rerun_is_reproducible(capsys, tmp_path, dataset_file):
    outputs = []
    for name in ("a", "b"):
        code, out, _ = run(capsys, "train-skl", "--dataset", str(dataset_file),
                           "--output-dir", str(tmp_path / name), "--seed", "1")
        assert code == 0
        metrics = json.loads(out)
        metrics.pop("wall_time_seconds")
        outputs.append(metrics)
    assert outputs[0] == outputs[1]
    assert (tmp_path / "a" / "model.json").read_bytes() == (tmp_path / "b" / "model.json").read_bytes()


def test_missing_dataset_exit_code(capsys, tmp_path):
    missing = tmp_path / "absent.txt"
    code, _, err = run(capsys, "train-skl", "--dataset", str(missing), "--output-dir", str(tmp_path / "out"))
    assert code == 2
    error = json.loads(err.strip().splitlines()[-1])
    assert error["error"] == "DatasetNotFoundError"
    assert error["details"]["path"] == str(missing)


def test_invalid_config_exit_code(capsys, tmp_path):
    config = write_config(tmp_path, d=0)
    code, _, err = run(capsys, "embed", "--config", config)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "ConfigError"


def test_train_mkl_at_lambda_max_selects_nothing(capsys, tmp_path, grouped_dataset_file, output_dir):
    config = write_config(tmp_path, d=10, kernels=[{"sigma_init": 1.0}, {"sigma_init": 4.0}],
                          loss={"kind": "quadratic"})
    code, out, _ = run(capsys, "train-mkl", "--config", config, "--dataset", str(grouped_dataset_file),
                       "--output-dir", str(output_dir), "--lambda-fraction", "1.0")
    assert code == 0
    metrics = json.loads(out)
    assert metrics["kernel_weights"] == [0.0, 0.0]
    assert metrics["active_kernels"] == []


def test_train_mkl_rerun_keeps_kernel_ordering(capsys, tmp_path, grouped_dataset_file):
    config = write_config(tmp_path, d=10, kernels=[{"sigma_init": 0.5}, {"sigma_init": 2.0}, {"sigma_init": 8.0}])
    weights = []
    for name in ("a", "b"):
        code, out, _ = run(capsys, "train-mkl", "--config", config, "--dataset", str(grouped_dataset_file),
                           "--output-dir", str(tmp_path / name), "--seed", "3", "--lambda-fraction", "0.1")
        assert code == 0
        weights.append(json.loads(out)["kernel_weights"])
    assert weights[0] == weights[1]
    assert list(np.argsort(weights[0], kind="stable")) == list(np.argsort(weights[1], kind="stable"))
    assert (tmp_path / "a" / "model.json").read_bytes() == (tmp_path / "b" / "model.json").read_bytes()


def test_train_mkl_accepts_overlapping_column_ranges(capsys, tmp_path, grouped_dataset_file, output_dir):
    config = write_config(tmp_path, d=10, kernels=[{"columns": [0, 3]}, {"columns": [1, 4]}])
    code, out, _ = run(capsys, "train-mkl", "--config", config, "--dataset", str(grouped_dataset_file),
                       "--output-dir", str(output_dir))
    assert code == 0
    assert len(json.loads(out)["kernel_weights"]) == 2


@pytest.mark.parametrize("columns", [[3, 3], [-1, 2], [4, 1]])
def test_invalid_column_range_exit_code(capsys, tmp_path, columns):
    config = write_config(tmp_path, kernels=[{"columns": columns}])
    code, _, err = run(capsys, "embed", "--config", config)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "ConfigError"


def test_predict_from_saved_model(capsys, tmp_path, dataset_file):
    train_dir = tmp_path / "train"
    assert run(capsys, "train-skl", "--dataset", str(dataset_file), "--output-dir", str(train_dir))[0] == 0
    code, out, _ = run(capsys, "predict", "--dataset", str(dataset_file), "--model", str(train_dir / "model.json"),
                       "--output-dir", str(tmp_path / "pred"))
    assert code == 0
    assert json.loads(out)["n"] == 40
    assert (tmp_path / "pred" / "predictions.csv").is_file()


def test_verify_with_zero_tolerance_fails(capsys, tmp_path):
    config = write_config(tmp_path, verify={"mc_pairs": 5, "mc_seeds": 2, "mc_small_d": 50, "mc_abs_d": 100,
                                            "mc_large_d": 800, "gradient_draws": 1, "equivalence_n": 40, "equivalence_d": 5})
    code, out, err = run(capsys, "verify-equivalence", "--config", config, "--tolerance", "0",
                         "--output-dir", str(tmp_path / "verify"))
    assert code == 6
    lines = out.splitlines()
    assert any(line.startswith("FAIL ") for line in lines)
    assert all(line.startswith(("PASS ", "FAIL ")) for line in lines)
    assert json.loads(err.strip().splitlines()[-1])["error"] == "VerificationError"
    assert (tmp_path / "verify" / "verify.json").is_file()


def test_bench_single_point_grid(capsys, tmp_path):
    config = write_config(tmp_path, bench={"d": 10, "r": 2, "m": 2, "skl_max_iter": 1, "gl_max_iter": 3,
                                           "include_exact": False})
    out_dir = tmp_path / "bench"
    code, _, _ = run(capsys, "bench-scaling", "--config", config, "--n-grid", "40", "--output-dir", str(out_dir))
    assert code == 0
    with open(out_dir / "bench_slopes.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert rows
    assert {row["status"] for row in rows} == {"insufficient_points"}


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(["not-a-command"])
