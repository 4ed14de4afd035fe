from fastapi import APIRouter, Depends

from app.apis.v1.endpoints.jobs import run_job
from app.dependencies import get_run_registry
from app.models.run_config import RunConfig
from app.models.schemas import RunRecord
from app.utils.task_utils import RunRegistry

router = APIRouter()


@router.post("/embed", response_model=RunRecord, status_code=201)
def embed_dataset(config: RunConfig, registry: RunRegistry = Depends(get_run_registry)):
    """把数据集嵌入成随机特征矩阵（features.npy）"""
    return run_job("embed", config, registry, keep_paths=True)


@router.post("/predict", response_model=RunRecord, status_code=201)
def predict_dataset(config: RunConfig, registry: RunRegistry = Depends(get_run_registry)):
    """用 model_path 指向的模型产物预测，写 predictions.csv"""
    return run_job("predict", config, registry, keep_paths=True)
