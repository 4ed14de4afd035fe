from app.utils.task_utils import RunRegistry

# 单例登记处
run_registry = RunRegistry()


def get_run_registry() -> RunRegistry:
    """FastAPI 依赖注入"""
    return run_registry
