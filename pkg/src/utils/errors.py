"""定义换能器工具链使用的异常、警告类别与退出码分类函数。"""  # 模块说明。
# 导入 errno 以识别常见的 I/O 错误码。
import errno
from typing import Any, Dict


# 所有领域异常的共同基类，便于 CLI 统一捕获。
class TransducerError(Exception):
    """工具链内部抛出的全部异常的基类。"""  # 类说明。


# 参数取值非法时抛出，携带出错字段名称。
class InvalidParameterError(TransducerError, ValueError):
    """模式、耦合或记录字段取值不合法。"""  # 类说明。

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")  # 消息中始终包含字段名。
        self.detail = message
        self.field = field  # 保存字段名供调用方定位。


# 结构性配置错误，例如拓扑不是链或缺少外部端口。
class ConfigurationError(TransducerError, ValueError):
    """模型或工具配置在结构上不成立。"""  # 类说明。


# 目录文件解析失败，带有出错行号。
class CatalogParseError(ConfigurationError):
    """器件目录 CSV 不符合列约定。"""  # 类说明。

    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number  # CSV 中的物理行号（表头为第 1 行）。


# 数学定义域错误，例如 η 超出 [0, 1]。
class DomainError(TransducerError, ValueError):
    """输入超出函数定义域。"""  # 类说明。


# 数值计算失败的基类，对应退出码 3。
class NumericalError(TransducerError, ArithmeticError):
    """数值求解失败。"""  # 类说明。


class SingularSystemError(NumericalError):
    """线性方程组奇异，附带条件数估计。"""  # 类说明。

    def __init__(self, message: str, condition: float) -> None:
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition  # 条件数估计，奇异时可能为 inf。


class WindowError(NumericalError):
    """扫描窗口内找不到半高点或峰值。"""  # 类说明。

    def __init__(self, message: str, diagnostics: Dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}  # 窗口边界、峰值等诊断信息。


class ConvergenceError(NumericalError):
    """时域积分的稳态投影未收敛。"""  # 类说明。

    def __init__(self, message: str, diagnostics: Dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class StiffSystemError(NumericalError):
    """速率跨度超出定步长积分器的适用范围。"""  # 类说明。

    def __init__(self, rate_span: float, limit: float) -> None:
        super().__init__(f"rate span {rate_span:.3e} exceeds fixed-step limit {limit:.1e}")
        self.rate_span = rate_span
        self.limit = limit


# 以下为库内通过 warnings 模块报告的警告类别，CLI 会转写为结构化日志。
class PreconditionWarning(UserWarning):
    """近似公式的前提条件未满足。"""  # 类说明。


class UnityEfficiencyWarning(UserWarning):
    """积分网格上出现 η = 1 的采样点，q1 在该点发散。"""  # 类说明。


class ApproximationWarning(UserWarning):
    """结果来自未经解析保证的近似，例如多级链的带宽估计。"""  # 类说明。


# 定义异常分类函数，决定 CLI 的退出码与日志字段。
def classify_exception(exc: BaseException) -> str:
    """根据异常类型返回 usage/numerical/io/unknown 标签。"""  # 函数说明。
    if isinstance(exc, NumericalError):
        return "numerical"
    if isinstance(exc, (InvalidParameterError, ConfigurationError, DomainError)):
        return "usage"
    # 文件不存在或无权限属于用户输入问题。
    if isinstance(exc, (FileNotFoundError, PermissionError, IsADirectoryError)):
        return "io"
    # 针对通用的 OSError，根据 errno 进一步分类。
    if isinstance(exc, OSError):
        if exc.errno in {errno.EACCES, errno.ENOENT, errno.ENOTDIR, errno.EISDIR, errno.ENOSPC, errno.EROFS}:
            return "io"
    # 其余基于 ValueError 的异常多来自第三方校验（如 jsonschema、json 解析）。
    if isinstance(exc, ValueError):
        return "usage"
    return "unknown"


EXIT_CODES = {"usage": 2, "io": 2, "numerical": 3, "unknown": 1}  # 退出码约定：1 为检查失败或未捕获错误。


def exit_code_for(exc: BaseException) -> int:
    """把异常映射为 CLI 退出码。"""  # 函数说明。
    return EXIT_CODES[classify_exception(exc)]
