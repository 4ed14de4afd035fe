from fastapi import APIRouter, File, HTTPException, UploadFile

from app.models.schemas import DatasetUploadResponse
from app.services.dataset_service import store_dataset
from app.utils.exceptions import KernelForgeError

router = APIRouter()


@router.post("/files/", response_model=DatasetUploadResponse, status_code=201)
async def upload_dataset(file: UploadFile = File(...)):
    """
    上传数据集文件（稀疏文本或 CSV），解析通过后返回可用于训练配置的 path
    """
    try:
        return await store_dataset(file)
    except KernelForgeError as e:
        raise HTTPException(status_code=e.status_code, detail=e.to_dict())
