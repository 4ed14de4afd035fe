from fastapi import HTTPException

from app.config import OUTPUT_DIR
from app.models.run_config import RunConfig
from app.models.schemas import RunRecord
from app.services import kernel_service
from app.utils.exceptions import KernelForgeError
from app.utils.logger import get_logger
from app.utils.task_utils import RunRegistry, new_run_id

logger = get_logger(__name__)


def run_job(command: str, config: RunConfig, registry: RunRegistry, keep_paths: bool = False) -> RunRecord:
    """
    在 OUTPUT_DIR/<run_id> 下执行命令，业务异常转换成对应状态码的 HTTPException

    keep_paths 为 False 时忽略请求里的模型/随机样本路径，产物只写到本次运行目录。
    """
    run_id = new_run_id()
    update = {"output_dir": OUTPUT_DIR / run_id}
    if not keep_paths:
        update.update(model_path=None, base_sample_path=None)
    config = config.model_copy(update=update)
    try:
        return kernel_service.execute(command, config, registry, run_id=run_id)
    except KernelForgeError as e:
        logger.warning(f"任务失败 | RunID: {run_id} | 命令: {command} | 错误: {e.message}")
        raise HTTPException(status_code=e.status_code, detail={**e.to_dict(), "run_id": run_id})
