import time
import uuid
from typing import Callable, Iterable, Optional

from fastapi import Request, Response
from starlette.middleware.base import BaseHTTPMiddleware

from app.utils.logger import clear_run_id, get_logger, set_run_id

logger = get_logger(__name__)

QUIET_PATHS = ("/health", "/docs", "/openapi.json", "/favicon.ico")


def client_ip(request: Request) -> str:
    """优先取反向代理转发的地址"""
    forwarded = request.headers.get("X-Forwarded-For")
    if forwarded:
        return forwarded.split(",")[0].strip()
    return request.headers.get("X-Real-IP") or (request.client.host if request.client else "unknown")


def body_kind(request: Request) -> str:
    if request.method not in ("POST", "PUT", "PATCH"):
        return "无"
    content_type = request.headers.get("content-type", "")
    if "application/json" in content_type:
        return "运行配置"
    if "multipart/form-data" in content_type:
        return "数据集上传"
    return content_type or "未知"


class LoggingMiddleware(BaseHTTPMiddleware):
    """
    请求日志中间件

    每个请求分配一个8位 RequestID，写进日志上下文和 X-Request-ID 响应头；
    训练任务内部的日志会换成任务自己的 run_id。
    """

    def __init__(self, app, quiet_paths: Optional[Iterable[str]] = None):
        super().__init__(app)
        self.quiet_paths = frozenset(quiet_paths or QUIET_PATHS)

    async def dispatch(self, request: Request, call_next: Callable) -> Response:
        request_id = uuid.uuid4().hex[:8]
        token = set_run_id(request_id)
        path = request.url.path
        verbose = path not in self.quiet_paths
        start_time = time.perf_counter()
        try:
            if verbose:
                logger.info(f"请求开始 | 方法: {request.method} | 路径: {path} | "
                            f"客户端: {client_ip(request)} | 请求体: {body_kind(request)}")
            try:
                response = await call_next(request)
            except Exception as e:
                logger.error(f"请求处理异常 | 方法: {request.method} | 路径: {path} | "
                             f"耗时: {time.perf_counter() - start_time:.4f}s | 异常: {e}", exc_info=True)
                raise

            elapsed = time.perf_counter() - start_time
            if verbose:
                self._log_response(request, response.status_code, elapsed)
            response.headers["X-Request-ID"] = request_id
            response.headers["X-Process-Time"] = str(round(elapsed, 4))
            return response
        finally:
            clear_run_id(token)

    @staticmethod
    def _log_response(request: Request, status_code: int, elapsed: float):
        if status_code >= 500:
            log = logger.error
        elif status_code >= 400:
            log = logger.warning
        else:
            log = logger.info
        log(f"请求完成 | 方法: {request.method} | 路径: {request.url.path} | "
            f"状态码: {status_code} | 耗时: {elapsed:.4f}s")
