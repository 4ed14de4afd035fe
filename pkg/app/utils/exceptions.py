"""
统一的异常层级

每个异常类携带 CLI 退出码和 HTTP 状态码，命令行和 API 两个入口用同一套映射。
"""

from typing import Any, Dict, Optional


class KernelForgeError(Exception):
    """所有业务异常的基类"""

    exit_code = 1
    status_code = 500

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        """结构化错误信息（CLI 写到 stderr，API 作为 detail 返回）"""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


class DimensionError(KernelForgeError):
    """矩阵/向量维度不匹配"""
    exit_code = 3
    status_code = 422


class DomainError(KernelForgeError):
    """输入超出函数定义域（分位数端点、对数变换非正等）"""
    exit_code = 3
    status_code = 422


class KernelIndexError(KernelForgeError, IndexError):
    """超参数下标越界"""
    exit_code = 3
    status_code = 422


class ParameterError(KernelForgeError):
    """参数取值非法（λ ≤ 0、比例不在 (0,1) 等）"""
    exit_code = 3
    status_code = 422


class NumericError(KernelForgeError):
    """输入或中间结果出现 NaN/Inf"""
    exit_code = 4
    status_code = 422


class InitializationError(KernelForgeError):
    """优化初始点处目标函数不可用"""
    exit_code = 4
    status_code = 422


class ParseError(KernelForgeError):
    """数据集文件格式错误"""
    exit_code = 3
    status_code = 422

    def __init__(self, message: str, line: Optional[int] = None, **details: Any):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, line=line, **details)
        self.line = line


class ConfigError(KernelForgeError):
    """运行配置校验失败"""
    exit_code = 2
    status_code = 422


class DatasetNotFoundError(KernelForgeError):
    """数据集路径不存在"""
    exit_code = 2
    status_code = 404

    def __init__(self, path: Any):
        super().__init__(f"dataset not found: {path}", path=str(path))
        self.path = path


class ArtifactError(KernelForgeError):
    """模型/随机样本等产物损坏或与当前配置不一致"""
    exit_code = 5
    status_code = 422


class VerificationError(KernelForgeError):
    """不变量校验未通过"""
    exit_code = 6
    status_code = 500


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return str(value)
