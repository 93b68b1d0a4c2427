# 配置常量
from .config import LOG_LEVEL, THREADS, PRECISION_BITS, KEY_LIMIT, BRUTE_LIMIT, DEBUG

# 异常类型
from .errors import ConfigError, FeasibilityError

# 有限域
from .galois import FieldSpec, field_new, field_of_order, phi

# 数据模型
from .models import (
    WeightEnumerator, BivariateWeightEnumerator,
    CompositionEnumerator, BivariateCompositionEnumerator,
    JointComposition, JointWeight, JointEnumerator,
    DegreeDistribution, BivariateDegreeDistribution,
    LinearCode, OuterEnsembleSpec, Construction, LTColumn, RaptorInstance,
    BoundResult, SimResult, Campaign,
)

# 文件读写
from .repository import (
    load_matrix, store_matrix,
    load_degree_distribution, export_enumerator, load_enumerator,
)

# 服务层
from .services import bounds, enumerators, errexp, montecarlo, outercodes, raptor

# 命令行入口
from .cli import run
