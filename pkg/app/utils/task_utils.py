"""
运行记录登记

每次运行一个 16 位 run_id，记录以 JSON 保存在 OUTPUT_DIR/runs 下，
进程重启后仍可查询。
"""

import threading
import uuid
from pathlib import Path
from typing import Dict, List, Optional, Union

from app.config import OUTPUT_DIR
from app.models.schemas import RunRecord
from app.utils.exceptions import ArtifactError
from app.utils.file_utils import load_json, save_json
from app.utils.logger import get_logger

logger = get_logger(__name__)


def new_run_id() -> str:
    """生成16位唯一 run_id"""
    return uuid.uuid4().hex[:16]


class RunRegistry:
    def __init__(self, root: Union[str, Path] = OUTPUT_DIR / "runs"):
        self.root = Path(root)
        self._records: Dict[str, RunRecord] = {}
        self._lock = threading.Lock()

    def _path(self, run_id: str) -> Path:
        return self.root / f"{run_id}.json"

    def save(self, record: RunRecord) -> RunRecord:
        with self._lock:
            self._records[record.run_id] = record
            save_json(record.model_dump(mode="json"), self._path(record.run_id))
        logger.info(f"运行记录已保存 | RunID: {record.run_id} | 命令: {record.command} | 状态: {record.status.value}")
        return record

    def get(self, run_id: str) -> Optional[RunRecord]:
        with self._lock:
            record = self._records.get(run_id)
        if record is not None:
            return record
        path = self._path(run_id)
        if not path.is_file():
            return None
        try:
            record = RunRecord.model_validate(load_json(path))
        except (ArtifactError, ValueError) as e:
            logger.warning(f"运行记录无法读取 | RunID: {run_id} | 错误: {e}")
            return None
        with self._lock:
            self._records[run_id] = record
        return record

    def list(self) -> List[RunRecord]:
        if self.root.is_dir():
            for path in self.root.glob("*.json"):
                self.get(path.stem)
        with self._lock:
            records = list(self._records.values())
        return sorted(records, key=lambda r: (r.created_at, r.run_id))
