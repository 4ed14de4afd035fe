import datetime
import uvicorn
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.config import APP_NAME, APP_VERSION, CORS_ORIGINS, DEBUG, HOST, PORT
from app.utils.logger import logger
from app.middleware.logging_middle import LoggingMiddleware
from app.apis.v1.endpoints import datasets, features, mkl, runs, skl

app = FastAPI(title=APP_NAME, version=APP_VERSION)

# CORS配置
app.add_middleware(
    CORSMiddleware,
    allow_origins=CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)
app.add_middleware(LoggingMiddleware)


@app.get("/health")
async def health_check():
    """服务健康检查"""
    return {"status": "healthy", "version": APP_VERSION,
            "timestamp": datetime.datetime.now().strftime("%Y%m%d%H%M%S")}

# 数据集上传
app.include_router(datasets.router, prefix="/v1/datasets", tags=["datasets"])

# 单核超参数学习
app.include_router(skl.router, prefix="/v1/skl", tags=["skl"])

# 多核学习
app.include_router(mkl.router, prefix="/v1/mkl", tags=["mkl"])

# 特征嵌入与预测
app.include_router(features.router, prefix="/v1", tags=["features"])

# 运行记录查询
app.include_router(runs.router, prefix="/v1/runs", tags=["runs"])

logger.info(f"服务初始化完成 | 应用: {APP_NAME} | 版本: {APP_VERSION}")

if __name__ == "__main__":
    uvicorn.run(
        app='main:app',
        host=HOST,
        port=PORT,
        log_level="info",
        access_log=True,
        reload=DEBUG
    )
