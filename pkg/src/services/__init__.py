from . import enumerators, outercodes, bounds, errexp, raptor, montecarlo

__all__ = [
    "enumerators",  # 权重/组成/联合枚举子与 MacWilliams 变换
    "outercodes",  # 外码的线性代数、采样与穷举枚举
    "bounds",  # 失败概率的上下界
    "errexp",  # 误差指数与 ML 门限
    "raptor",  # LT 列采样、ML 判决与精确 oracle
    "montecarlo",  # Monte Carlo 仿真
]
