from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class RunStatus(str, Enum):
    COMPLETED = "completed"
    FAILED = "failed"


class RunRecord(BaseModel):
    """一次 CLI/API 运行的记录，metrics 与写到磁盘的 metrics.json 相同"""
    run_id: str
    command: str
    status: RunStatus = RunStatus.COMPLETED
    created_at: str = Field(default_factory=lambda: datetime.now().strftime("%Y%m%d%H%M%S"))
    output_dir: str
    artifacts: Dict[str, str] = Field(default_factory=dict)
    metrics: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[Dict[str, Any]] = None


class RunList(BaseModel):
    runs: List[RunRecord]
    total: int


class DatasetUploadResponse(BaseModel):
    dataset_id: str
    filename: str
    path: str
    size: int
    n: int
    m: int
    groups: Optional[List[List[int]]] = None
