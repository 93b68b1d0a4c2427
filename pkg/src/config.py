import os

# 项目根目录（上两级目录）
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# 日志级别，可选 DEBUG, INFO, WARNING, ERROR, CRITICAL
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

# 默认并行进程数，命令行 --threads 优先
THREADS = max(1, int(os.getenv("RAPTOR_BOUNDS_THREADS", "1")))

# mpmath 工作精度（比特），不低于 113
PRECISION_BITS = max(113, int(os.getenv("RAPTOR_BOUNDS_PRECISION", "128")))

# 组合/联合组合枚举的键数量上限
KEY_LIMIT = int(float(os.getenv("RAPTOR_BOUNDS_KEY_LIMIT", "1e7")))

# 穷举 oracle 的规模上限
BRUTE_LIMIT = int(float(os.getenv("RAPTOR_BOUNDS_BRUTE_LIMIT", "1e7")))

# Monte Carlo 每个任务块包含的试验次数
TRIAL_BLOCK = max(1, int(os.getenv("RAPTOR_BOUNDS_BLOCK", "256")))

# CSV 默认输出目录
OUTPUT_DIR = os.getenv("RAPTOR_BOUNDS_OUTPUT_DIR", os.path.join(BASE_DIR, "output"))

# 调试模式开关，开启后日志级别为 DEBUG
DEBUG = os.getenv("DEBUG", "False").lower() in ("true", "1", "yes")
