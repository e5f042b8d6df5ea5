"""
错误类型

每个错误类带有 exit_code，CLI 据此返回退出码：
2 前置条件/格式错误，3 数值失败，4 构造不可行。
"""
from typing import Optional


class HsfError(Exception):
    """所有领域错误的基类"""
    exit_code = 1


class PreconditionError(HsfError, ValueError):
    """输入不满足前置条件"""
    exit_code = 2


class SchemaError(PreconditionError):
    """输入文档不符合格式"""

    def __init__(self, message: str, field: str = ""):
        self.field = field
        super().__init__(f"{message} (字段: {field})" if field else message)


class OutOfChartError(PreconditionError):
    """点不在马蹄模型的局部坐标卡内"""


class HorizonExceededError(PreconditionError):
    """迭代步数超过系统的可靠范围"""


class DegenerateFitError(PreconditionError):
    """回归点数不足"""


class InsufficientSamplesError(PreconditionError):
    """样本不足以完成覆盖计数"""


class NumericalError(HsfError, ArithmeticError):
    """数值计算失败"""
    exit_code = 3


class RangeError(NumericalError):
    """对数量级超出可表示范围"""


class ConstructionInfeasibleError(HsfError):
    """马蹄构造参数不可行"""
    exit_code = 4

    def __init__(self, message: str, magnitude: str = "", log_margin: Optional[float] = None):
        self.magnitude = magnitude
        self.log_margin = log_margin
        super().__init__(message)


class GeometricFailureError(ConstructionInfeasibleError):
    """切片的像违反包含或穿越关系"""

    def __init__(self, inequality: str, log_margin: float, slice_index: Optional[int] = None):
        self.inequality = inequality
        self.slice_index = slice_index
        where = f"切片 j={slice_index}: " if slice_index is not None else ""
        super().__init__(
            f"{where}几何验证失败: {inequality} (对数裕度 {log_margin:.6g})",
            magnitude=inequality,
            log_margin=log_margin,
        )
