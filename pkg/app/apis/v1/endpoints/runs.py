from fastapi import APIRouter, Depends, HTTPException

from app.dependencies import get_run_registry
from app.models.schemas import RunList, RunRecord
from app.utils.task_utils import RunRegistry

router = APIRouter()


@router.get("/{run_id}", response_model=RunRecord)
def get_run(run_id: str, registry: RunRegistry = Depends(get_run_registry)):
    """
    查询指定运行的记录
    :param run_id: 运行ID
    """
    record = registry.get(run_id)
    if record is None:
        raise HTTPException(status_code=404, detail=f"run not found: {run_id}")
    return record


@router.get("", response_model=RunList)
def list_runs(registry: RunRegistry = Depends(get_run_registry)):
    """查询所有运行记录"""
    runs = registry.list()
    return RunList(runs=runs, total=len(runs))
