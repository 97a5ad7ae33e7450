"""时域校验：在单色驱动下用定步长 RK4 积分运动方程，提取稳态输出幅度，与频域 S(ω) 对照。

dc/dt = −A c − B c_in(t)，c_in = U e^{−iωt}，U 的每一列对应一个被驱动端口，其余端口静默。
RK4 对线性方程的一步可写成 c_{k+1} = P c_k + Q G e^{−iω t_k}；解调后 y_k = c_k e^{iω t_k}
满足常系数仿射递推，故长时间推进可用矩阵幂一次完成，结果与逐步推进一致。
"""  # 模块说明。
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

# numpy 负责步进算子的构造与矩阵幂。
import numpy as np

from src.transducer.model import ChainModel
from src.transducer.scattering import DynamicalMatrices, assemble, scattering_matrix
from src.utils.concurrency import raise_first_error, run_with_threadpool
from src.utils.errors import ConvergenceError, InvalidParameterError, StiffSystemError


@dataclass(frozen=True)
class OracleSettings:
    """积分器参数，对应配置的 oracle 段。"""  # 类说明。

    step_factor: float = 80.0  # dt ≤ 1/(step_factor · 最快速率)。
    settle_factor: float = 30.0  # 稳定时间 = settle_factor / min(κ/2)。
    periods: int = 5  # 逐个比较投影的窗口数。
    convergence_tol: float = 1e-8  # 相邻窗口投影的最大允许变化（相对驱动幅度）。
    max_rate_span: float = 1e4  # 最快速率与最慢衰减率之比的上限，超出视为刚性。
    deviation_tol: float = 1e-6  # CLI 判定通过的偏差阈值。

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "OracleSettings":
        # 缺失的键沿用类上的默认值。
        section = config.get("oracle", {}) or {}
        return cls(
            step_factor=float(section.get("step_factor", cls.step_factor)),
            settle_factor=float(section.get("settle_factor", cls.settle_factor)),
            periods=int(section.get("periods", cls.periods)),
            convergence_tol=float(section.get("convergence_tol", cls.convergence_tol)),
            max_rate_span=float(section.get("max_rate_span", cls.max_rate_span)),
            deviation_tol=float(section.get("deviation_tol", cls.deviation_tol)),
        )


# 未传 settings 时使用。
DEFAULT_ORACLE_SETTINGS = OracleSettings()


@dataclass(frozen=True)
class DriveSpec:
    """在单个输入端口施加的单色相干驱动。"""  # 类说明。

    port: int  # 被驱动端口的列号。
    omega: float  # 驱动角频率 [rad/s]。
    amplitude: complex = 1.0  # [√(rad/s)]。

    def __post_init__(self) -> None:
        if not math.isfinite(float(self.omega)):
            raise InvalidParameterError("omega", "drive frequency must be finite")
        if self.amplitude == 0 or not np.isfinite(complex(self.amplitude)):
            raise InvalidParameterError("amplitude", "drive amplitude must be finite and nonzero")

    def check_port(self, model: ChainModel) -> None:
        """端口号依赖具体模型，单独校验。"""  # 方法说明。
        if not 0 <= self.port < model.n_ports:
            raise InvalidParameterError("port", f"port {self.port} outside 0..{model.n_ports - 1}")


def _rate_span(mats: DynamicalMatrices, omega: float) -> tuple[float, float, float]:
    """返回 (最快速率, 最慢衰减率 min κ/2, 二者之比)。"""  # 工具函数说明。
    fastest = max(abs(omega), float(np.max(np.abs(mats.A))))
    # A 的特征值实部不小于对角实部的最小值，可作为最慢衰减率。
    slowest = float(np.min(np.real(np.diag(mats.A))))
    return fastest, slowest, fastest / slowest


def _step_operators(A: np.ndarray, omega: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """解调后的单步算子 P' = e^{iωdt}P 与驱动系数 e^{iωdt}Q。"""  # 工具函数说明。
    n = A.shape[0]
    eye = np.eye(n, dtype=complex)
    # 齐次部分：RK4 对 dc/dt = −Ac 的一步等于 e^{−Adt} 的四阶泰勒截断。
    L = -A * dt
    L2 = L @ L
    L3 = L2 @ L
    P = eye + L + L2 / 2.0 + L3 / 6.0 + (L3 @ L) / 24.0
    # 驱动部分：四个斜率分别在 t、t+dt/2、t+dt/2、t+dt 处取样 e^{−iωt}。
    half = np.exp(-0.5j * omega * dt)
    K2 = L / 2.0 + half * eye
    K3 = L @ K2 / 2.0 + half * eye
    K4 = L @ K3 + half * half * eye
    Q = (eye + 2.0 * K2 + 2.0 * K3 + K4) / 6.0
    rotate = np.exp(1j * omega * dt)
    return rotate * P, rotate * Q


def _integrate(
    mats: DynamicalMatrices,
    omega: float,
    columns: Sequence[int],
    amplitude: complex,
    settings: OracleSettings,
) -> np.ndarray:
    """同时驱动 columns 中的每个端口（各占一列），返回 m×p 的稳态输出/驱动比。"""  # 工具函数说明。

    fastest, slowest, span = _rate_span(mats, omega)
    if span > settings.max_rate_span:
        raise StiffSystemError(span, settings.max_rate_span)
    # n 个模式、m 个端口、p 个同时驱动的列。
    n, m, p = mats.n_modes, mats.n_ports, len(columns)
    # 步长取整，使一个驱动周期恰好包含整数步。
    dt_max = 1.0 / (settings.step_factor * fastest)
    window = 2.0 * math.pi / abs(omega) if omega != 0.0 else 5.0 / slowest
    window_steps = max(1, math.ceil(window / dt_max))
    dt = window / window_steps
    # 稳定时间取最慢衰减时间的 settle_factor 倍。
    settle_steps = math.ceil(settings.settle_factor / slowest / dt)

    # 驱动矩阵：第 k 列只在 columns[k] 行上非零。
    drive = np.zeros((m, p), dtype=complex)
    drive[list(columns), np.arange(p)] = amplitude
    step, forcing = _step_operators(mats.A, omega, dt)
    # 每一步的驱动增量，与步数无关。
    q = forcing @ (-(mats.B @ drive) * dt)

    # 状态 (y, 1)：每一步 y ← P'y + q。
    settle = np.zeros((n + p, n + p), dtype=complex)
    settle[:n, :n] = step
    settle[:n, n:] = q
    settle[n:, n:] = np.eye(p)
    # 状态 (y, Σy, 1)：每一步 y ← P'y + q，Σy ← Σy + y。
    accumulate = np.zeros((2 * n + p, 2 * n + p), dtype=complex)
    accumulate[:n, :n] = step
    accumulate[:n, 2 * n:] = q
    accumulate[n:2 * n, :n] = np.eye(n)
    accumulate[n:2 * n, n:2 * n] = np.eye(n)
    accumulate[2 * n:, 2 * n:] = np.eye(p)
    # 一个窗口的推进算子，各窗口复用。
    window_power = np.linalg.matrix_power(accumulate, window_steps)

    # 从零初始态出发推进到稳定时间，再逐个窗口取输出的平均投影。
    state = np.linalg.matrix_power(settle, settle_steps) @ np.vstack([np.zeros((n, p)), np.eye(p)])
    y = state[:n]
    projections = []
    for _ in range(settings.periods):
        extended = window_power @ np.vstack([y, np.zeros((n, p)), np.eye(p)])
        y = extended[:n]
        mean = extended[n:2 * n] / window_steps
        projections.append(drive + mats.B.T @ mean)  # 输入输出关系 c_out = c_in + Bᵀc。
    # 相邻窗口投影之差衡量是否已到稳态。
    changes = [float(np.max(np.abs(b - a))) for a, b in zip(projections, projections[1:])]
    worst = max(changes, default=0.0) / abs(amplitude)
    if worst > settings.convergence_tol:
        raise ConvergenceError(
            f"steady-state projection varies by {worst:.3e} between windows at omega={omega:.6g} rad/s",
            diagnostics={
                "omega": omega,
                "dt": dt,
                "window_steps": window_steps,
                "settle_steps": settle_steps,
                "rate_span": span,
                "changes": changes,
            },
        )
    # 最后一个窗口的投影最接近稳态。
    return projections[-1] / amplitude


def steady_state_response(
    model: ChainModel,
    drive: DriveSpec,
    *,
    settings: OracleSettings = DEFAULT_ORACLE_SETTINGS,
) -> np.ndarray:
    """返回长度为端口数的复数组：各输出端口稳态幅度与驱动幅度之比。"""  # 函数说明。

    # 端口越界时在积分之前报错。
    drive.check_port(model)
    ratios = _integrate(assemble(model), drive.omega, [drive.port], complex(drive.amplitude), settings)
    # 只驱动一列，取出为一维数组。
    return ratios[:, 0]


def _deviation_at(model: ChainModel, mats: DynamicalMatrices, omega: float, settings: OracleSettings) -> float:
    # 只比较行波端口之间的子矩阵，热浴端口不可直接测量。
    itinerant = [port.index for port in model.itinerant_ports()]
    ratios = _integrate(mats, omega, itinerant, 1.0, settings)
    S = scattering_matrix(model, omega, matrices=mats).S
    sub_ratio = np.abs(ratios[itinerant, :])
    sub_s = np.abs(S[np.ix_(itinerant, itinerant)])
    return float(np.max(np.abs(sub_ratio - sub_s)))


def compare_with_scattering(
    model: ChainModel,
    omegas: Sequence[float],
    *,
    settings: OracleSettings = DEFAULT_ORACLE_SETTINGS,
    max_workers: int = 1,
    on_result: Callable[[int, Any], None] | None = None,
) -> float:
    """各频率下驱动全部行波端口，返回 max | |时域比值| − |S_ij(ω)| |；空列表返回 0。"""  # 函数说明。

    # 频率列表，顺序即结果顺序。
    grid = [float(omega) for omega in omegas]
    if not grid:
        return 0.0
    mats = assemble(model)
    # 每个频率是一个独立任务；任一频率失败时按输入顺序抛出第一个异常。
    results, _, _ = run_with_threadpool(
        grid,
        lambda omega: _deviation_at(model, mats, omega, settings),
        max_workers=max_workers,
        on_result=on_result,
    )
    raise_first_error(results)
    # 取所有频率上的最大偏差。
    return max(results)
