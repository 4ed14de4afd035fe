from fastapi import APIRouter, Depends

from app.apis.v1.endpoints.jobs import run_job
from app.dependencies import get_run_registry
from app.models.run_config import RunConfig
from app.models.schemas import RunRecord
from app.utils.task_utils import RunRegistry

router = APIRouter()


@router.post("/train", response_model=RunRecord, status_code=201)
def train_single_kernel(config: RunConfig, registry: RunRegistry = Depends(get_run_registry)):
    """
    单核超参数学习，返回运行记录（metrics 与 metrics.json 相同）
    """
    return run_job("train-skl", config, registry)
