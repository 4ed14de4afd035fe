import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import aiofiles
import numpy as np

from app.utils.exceptions import ArtifactError


def _numpy_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def save_json(data: Dict[str, Any], path: Union[str, Path]) -> Path:
    """写 JSON 产物，键排序保证重复运行字节一致；numpy 标量和数组转成内置类型"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False, default=_numpy_default)
    path.write_text(text, encoding="utf-8")
    return path


def load_json(path: Union[str, Path], kind: str = None) -> Dict[str, Any]:
    """读 JSON 产物，kind 不为空时校验产物类型"""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ArtifactError(f"artifact not found: {path}", path=str(path))
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ArtifactError(f"cannot read artifact: {e}", path=str(path))
    if not isinstance(data, dict):
        raise ArtifactError("artifact must be a JSON object", path=str(path))
    if kind is not None and data.get("kind") != kind:
        raise ArtifactError(f"expected a {kind} artifact, got {data.get('kind')!r}", path=str(path))
    return data


def write_csv(rows: Iterable[Sequence[Any]], header: List[str], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _cell(value: Any) -> Any:
    # 17 位有效数字，重新解析时逐位一致
    if isinstance(value, float):
        return repr(value)
    return value


async def save_upload(contents: bytes, path: Union[str, Path]) -> Path:
    """异步保存上传的数据集文件"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, "wb") as f:
        await f.write(contents)
    if not path.exists() or path.stat().st_size != len(contents):
        raise ArtifactError("file write verification failed", path=str(path))
    return path
