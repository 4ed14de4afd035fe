from fastapi import APIRouter, Depends

from app.apis.v1.endpoints.jobs import run_job
from app.dependencies import get_run_registry
from app.models.run_config import RunConfig
from app.models.schemas import RunRecord
from app.utils.task_utils import RunRegistry

router = APIRouter()


@router.post("/train", response_model=RunRecord, status_code=201)
def train_multiple_kernels(config: RunConfig, registry: RunRegistry = Depends(get_run_registry)):
    """
    分组 Lasso 多核学习，metrics.kernel_weights 为每个核的权重 d_t
    """
    return run_job("train-mkl", config, registry)
