import os
from pathlib import Path

# 基础路径配置
BASE_DIR = Path(__file__).resolve().parent.parent
DATASET_DIR = Path(os.getenv("DATASET_DIR", BASE_DIR / "datasets"))
OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", BASE_DIR / "outputs"))
LOG_DIR = Path(os.getenv("LOG_DIR", BASE_DIR / "logs"))

# 日志配置
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_MAX_FILE_SIZE = int(os.getenv("LOG_MAX_FILE_SIZE", 10 * 1024 * 1024))  # 10MB
LOG_BACKUP_COUNT = int(os.getenv("LOG_BACKUP_COUNT", 5))
LOG_ENABLE_CONSOLE = os.getenv("LOG_ENABLE_CONSOLE", "true").lower() == "true"
LOG_ENABLE_FILE = os.getenv("LOG_ENABLE_FILE", "true").lower() == "true"

# 应用配置
APP_NAME = os.getenv("APP_NAME", "ms-kernelforge")
APP_VERSION = os.getenv("APP_VERSION", "1.0.0")
DEBUG = os.getenv("DEBUG", "false").lower() == "true"

# 服务器配置
HOST = os.getenv("HOST", "0.0.0.0")
PORT = int(os.getenv("PORT", 8000))

# 数据集上传配置
MAX_DATASET_SIZE = int(os.getenv("MAX_DATASET_SIZE", 200 * 1024 * 1024))  # 200MB
ALLOWED_DATASET_EXTENSIONS = os.getenv("ALLOWED_DATASET_EXTENSIONS", ".txt,.svm,.libsvm,.csv").split(",")

# CORS配置
CORS_ORIGINS = os.getenv("CORS_ORIGINS", "*").split(",")

# 计算资源配置（线程上限同时作用于 BLAS 和特征嵌入线程池）
MAX_THREADS = int(os.getenv("KERNELFORGE_MAX_THREADS", 0)) or (os.cpu_count() or 1)
EMBED_CHUNK_ROWS = int(os.getenv("EMBED_CHUNK_ROWS", 4096))

# 算法默认值
DEFAULT_FEATURES = int(os.getenv("DEFAULT_FEATURES", 500))
DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", 0))
DEFAULT_SKEW_OFFSET = float(os.getenv("DEFAULT_SKEW_OFFSET", 0.1))
DEFAULT_RIDGE_LAMBDA = float(os.getenv("DEFAULT_RIDGE_LAMBDA", 1.0))
DEFAULT_SIGMA_RHO = float(os.getenv("DEFAULT_SIGMA_RHO", 1e-3))
DEFAULT_LOSS_EPSILON = float(os.getenv("DEFAULT_LOSS_EPSILON", 0.1))
DEFAULT_LOSS_GAMMA = float(os.getenv("DEFAULT_LOSS_GAMMA", 10.0))

# 超过该元素数量的随机样本改用 .npz 二进制保存
BASE_SAMPLE_JSON_LIMIT = int(os.getenv("BASE_SAMPLE_JSON_LIMIT", 200_000))

# 精确核（Gram 矩阵）只允许在小规模上使用
EXACT_KERNEL_MAX_N = int(os.getenv("EXACT_KERNEL_MAX_N", 2000))


# 确保必要的目录存在
def create_directories():
    """创建必要的目录"""
    DATASET_DIR.mkdir(exist_ok=True, parents=True)
    OUTPUT_DIR.mkdir(exist_ok=True, parents=True)
    LOG_DIR.mkdir(exist_ok=True, parents=True)


# 在导入时创建目录
create_directories()
