import shutil
from pathlib import Path

from fastapi import UploadFile

from app.config import ALLOWED_DATASET_EXTENSIONS, DATASET_DIR, MAX_DATASET_SIZE
from app.core.data_io import load_dataset
from app.models.schemas import DatasetUploadResponse
from app.utils.exceptions import KernelForgeError, ParameterError
from app.utils.file_utils import save_upload
from app.utils.logger import get_logger
from app.utils.task_utils import new_run_id

logger = get_logger(__name__)


async def store_dataset(file: UploadFile) -> DatasetUploadResponse:
    """
    保存上传的数据集并立即解析校验

    Raises:
        ParameterError: 文件名为空、扩展名不支持或文件过大
        ParseError: 内容不是合法的数据集（已保存的文件会被删除）
    """
    if not file.filename or not file.filename.strip():
        raise ParameterError("uploaded dataset has an empty filename")
    filename = Path(file.filename).name
    suffix = Path(filename).suffix.lower()
    if suffix not in ALLOWED_DATASET_EXTENSIONS:
        logger.warning(f"数据集类型不支持 | 文件: {filename} | 扩展名: {suffix}")
        raise ParameterError(f"unsupported dataset type: {suffix}", allowed=ALLOWED_DATASET_EXTENSIONS)

    contents = await file.read()
    if len(contents) > MAX_DATASET_SIZE:
        raise ParameterError(f"dataset too large: {len(contents) / 1024 / 1024:.2f}MB",
                             max_mb=MAX_DATASET_SIZE / 1024 / 1024)

    dataset_id = new_run_id()
    target_dir = DATASET_DIR / dataset_id
    path = await save_upload(contents, target_dir / filename)
    try:
        dataset = load_dataset(path)
    except KernelForgeError:
        shutil.rmtree(target_dir, ignore_errors=True)
        raise

    logger.info(f"数据集上传成功 | ID: {dataset_id} | 文件: {filename} | 样本数: {dataset.n} | 维度: {dataset.m}")
    return DatasetUploadResponse(
        dataset_id=dataset_id,
        filename=filename,
        path=str(path),
        size=len(contents),
        n=dataset.n,
        m=dataset.m,
        groups=[list(g) for g in dataset.groups] if dataset.groups else None,
    )
