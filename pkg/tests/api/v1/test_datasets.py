from pathlib import Path

from app.config import DATASET_DIR

SPARSE = "# groups: 0-0,1-1\n1.5 1:0.2 2:0.7\n-0.5 2:0.1\n0.25 1:1\n"


def test_upload_sparse_dataset(client):
    response = client.post("/v1/datasets/files/", files={"file": ("train.txt", SPARSE.encode(), "text/plain")})
    assert response.status_code == 201
    body = response.json()
    assert body["n"] == 3
    assert body["m"] == 2
    assert body["groups"] == [[0, 1], [1, 2]]
    assert body["size"] == len(SPARSE.encode())
    assert Path(body["path"]).is_file()
    assert Path(body["path"]).parent == DATASET_DIR / body["dataset_id"]


def test_upload_dense_csv(client):
    response = client.post("/v1/datasets/files/", files={"file": ("d.csv", b"y,a\n1,2\n3,4\n", "text/csv")})
    assert response.status_code == 201
    assert (response.json()["n"], response.json()["m"]) == (2, 1)


def test_rejects_unsupported_extension(client):
    response = client.post("/v1/datasets/files/", files={"file": ("model.exe", b"1 1:1\n", "application/octet-stream")})
    assert response.status_code == 422
    assert response.json()["detail"]["error"] == "ParameterError"


def test_malformed_dataset_is_not_kept(client):
    response = client.post("/v1/datasets/files/", files={"file": ("bad.txt", b"1 1:0.5\n2 0:1\n", "text/plain")})
    assert response.status_code == 422
    detail = response.json()["detail"]
    assert detail["error"] == "ParseError"
    assert detail["details"]["line"] == 2
    assert not any(DATASET_DIR.glob("*/bad.txt"))


def test_empty_dataset_is_rejected(client):
    response = client.post("/v1/datasets/files/", files={"file": ("empty.txt", b"", "text/plain")})
    assert response.status_code == 422
