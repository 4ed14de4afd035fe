import os
import tempfile

# 必须在导入 app 之前设置，测试产物和日志不落到仓库目录
_SANDBOX = tempfile.mkdtemp(prefix="kernelforge-tests-")
os.environ.setdefault("LOG_ENABLE_FILE", "false")
os.environ.setdefault("LOG_ENABLE_CONSOLE", "false")
os.environ.setdefault("OUTPUT_DIR", os.path.join(_SANDBOX, "outputs"))
os.environ.setdefault("DATASET_DIR", os.path.join(_SANDBOX, "datasets"))
os.environ.setdefault("LOG_DIR", os.path.join(_SANDBOX, "logs"))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from app.core.data_io import Dataset, write_dataset  # noqa: E402


def make_regression_dataset(n: int = 40, m: int = 2, seed: int = 0, groups=None) -> Dataset:
    """[0,1]^m 上的平滑目标加少量噪声"""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, m))
    y = np.sin(2.0 * np.pi * X[:, 0]) + 0.5 * X[:, -1] + 0.05 * rng.standard_normal(n)
    return Dataset(X=X, y=y, groups=groups)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def dataset_file(tmp_path):
    """40 行、2 维的稀疏文本数据集"""
    return write_dataset(make_regression_dataset(), tmp_path / "train.txt")


@pytest.fixture
def grouped_dataset_file(tmp_path):
    """4 维输入，列分成两个描述子分块"""
    ds = make_regression_dataset(n=40, m=4, seed=1, groups=[(0, 2), (2, 4)])
    return write_dataset(ds, tmp_path / "grouped.txt")


@pytest.fixture
def output_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return path


@pytest.fixture
def client():
    from fastapi.testclient import TestClient

    from main import app

    with TestClient(app) as test_client:
        yield test_client
