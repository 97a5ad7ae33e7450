"""由链模型组装漂移矩阵 A 与输入矩阵 B，并通过复线性求解得到散射矩阵 S(ω)。

约定：微波与中间模式行使用实验室角频率，光学行使用泵浦旋转系失谐，S(ω) 的 ω 指微波信号频率。
"""  # 模块说明。
from __future__ import annotations  # 允许在注解中使用 X | None 语法。

# 导入 io 以在内存中拼接 CSV 文本。
import io
from dataclasses import dataclass
from typing import NamedTuple, Sequence

# numpy 负责矩阵组装，scipy 提供 LU 分解与 LAPACK 条件数估计。
import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import zgecon

from src.transducer.model import ChainModel
from src.utils.errors import NumericalError, SingularSystemError

PIVOT_FLOOR = 1e-30  # |U_ii| 低于该值视为奇异。
RESIDUAL_TOL = 1e-12  # 相对残差上限。
UNITARITY_TOL = 1e-10  # S†S = I 的逐元素容差。


@dataclass(frozen=True)
class DynamicalMatrices:
    """dc/dt = −A c − B c_in 中的 A (n×n 复) 与 B (n×m 实非负)。"""  # 类说明。

    A: np.ndarray
    B: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.A.shape[0]  # A 的阶数。

    @property
    def n_ports(self) -> int:
        # 端口数，含热浴端口。
        return self.B.shape[1]


@dataclass(frozen=True)
class ScatteringMatrix:
    """某一频率下的 m×m 散射矩阵以及求解时的条件数估计。"""  # 类说明。

    frequency: float  # 信号角频率 ω [rad/s]。
    S: np.ndarray
    condition: float = 1.0  # 求解 (−iωI + A) 时的 1-范数条件数估计。

    def power(self, out_port: int, in_port: int) -> float:
        """|S_out,in|²，端口号从 0 开始。"""  # 方法说明。
        return float(abs(self.S[out_port, in_port]) ** 2)

    def unitarity_error(self) -> float:
        return unitarity_error(self.S)

    def check_unitarity(self, tol: float = UNITARITY_TOL) -> float:
        """所有端口都计入时 S 必为幺正；超出容差说明求解失真，抛出 NumericalError。"""  # 方法说明。
        error = self.unitarity_error()
        # NaN 也视为超限。
        if not error <= tol:
            raise NumericalError(f"unitarity error {error:.3e} exceeds {tol:.1e} at omega={self.frequency:.6g}")
        return error


class LinearSolution(NamedTuple):
    # 与 RHS 同形状。
    solution: np.ndarray
    condition: float  # 1-范数条件数估计。
    residual: float  # 归一化残差 ‖MX−R‖ / (‖M‖‖X‖ + ‖R‖)。


def assemble(model: ChainModel) -> DynamicalMatrices:
    """按链顺序写入 A 的三对角结构，按端口表写入 B 的各列。"""  # 函数说明。

    n = model.n_modes
    A = np.zeros((n, n), dtype=complex)
    # 对角元：iω_μ + κ_μ/2；最后一个模式（光学）改用 −iδω_o。
    for index, mode in enumerate(model.modes):
        if index == n - 1:
            A[index, index] = -1j * model.pump.detuning + mode.kappa / 2.0  # 光学行：旋转系。
        else:
            A[index, index] = 1j * mode.frequency + mode.kappa / 2.0
    # 分束器耦合对称地出现在上下两条次对角线上。
    for link, coupling in enumerate(model.couplings):
        A[link, link + 1] = 1j * coupling.strength
        A[link + 1, link] = 1j * coupling.strength
    # 每个端口一列，只在所属模式行写入 √rate；速率为 0 的端口保留全零列。
    B = np.zeros((n, model.n_ports))
    for port in model.ports:
        B[port.mode, port.index] = np.sqrt(port.rate)
    return DynamicalMatrices(A=A, B=B)


def _relative_residual(M: np.ndarray, X: np.ndarray, rhs: np.ndarray) -> float:
    scale = np.linalg.norm(M, 1) * np.linalg.norm(X, 1) + np.linalg.norm(rhs, 1)
    if scale == 0.0:
        return 0.0  # M 与 RHS 全零时任何 X 都精确成立。
    return float(np.linalg.norm(M @ X - rhs, 1) / scale)


def solve_complex(
    M: np.ndarray,
    rhs: np.ndarray,
    *,
    pivot_floor: float = PIVOT_FLOOR,
    residual_tol: float = RESIDUAL_TOL,
) -> LinearSolution:
    """部分选主元 LU 求解 M X = RHS。

    主元过小抛出 SingularSystemError；残差超限时做一次迭代修正，仍超限则抛出 NumericalError。
    """  # 函数说明。

    M = np.asarray(M, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"solve_complex expects a square matrix, got shape {M.shape}")
    # 向量右端统一按单列矩阵处理，返回前再压回一维。
    vector_rhs = rhs.ndim == 1
    if vector_rhs:
        rhs = rhs[:, None]
    lu, piv = lu_factor(M, check_finite=True)
    pivots = np.abs(np.diag(lu))
    # 条件数在判定奇异之前估计，异常里也能带上它。
    norm_m = float(np.linalg.norm(M, 1))
    rcond, info = zgecon(lu, norm_m, norm="1")
    condition = float(np.inf) if info != 0 or rcond == 0.0 else float(1.0 / rcond)
    if pivots.min() < pivot_floor:
        raise SingularSystemError(f"pivot {pivots.min():.3e} below floor {pivot_floor:.1e}", condition)
    # 首次求解。
    X = lu_solve((lu, piv), rhs)
    residual = _relative_residual(M, X, rhs)
    if residual > residual_tol:
        # 一次迭代修正：复用同一组 LU 因子求残差方程。
        X = X + lu_solve((lu, piv), rhs - M @ X)
        residual = _relative_residual(M, X, rhs)
        if residual > residual_tol:
            raise NumericalError(f"relative residual {residual:.3e} exceeds {residual_tol:.1e} after refinement")
    if vector_rhs:
        X = X[:, 0]
    return LinearSolution(solution=X, condition=condition, residual=residual)


def scattering_matrix(
    model: ChainModel,
    omega: float,
    *,
    matrices: DynamicalMatrices | None = None,
    pivot_floor: float = PIVOT_FLOOR,
    residual_tol: float = RESIDUAL_TOL,
) -> ScatteringMatrix:
    """S(ω) = I − Bᵀ(−iωI + A)⁻¹B。"""  # 函数说明。

    # 频率扫描时由调用方传入已组装的矩阵，避免逐点重复组装。
    mats = matrices if matrices is not None else assemble(model)
    system = -1j * omega * np.eye(mats.n_modes) + mats.A
    result = solve_complex(system, mats.B.astype(complex), pivot_floor=pivot_floor, residual_tol=residual_tol)
    # 输入输出关系 c_out = c_in + Bᵀc。
    S = np.eye(mats.n_ports, dtype=complex) - mats.B.T @ result.solution
    return ScatteringMatrix(frequency=float(omega), S=S, condition=result.condition)


def scattering_spectrum(model: ChainModel, omegas: Sequence[float], **solver_options) -> np.ndarray:
    """在频率网格上逐点求 S，返回形状 (k, m, m) 的数组。"""  # 函数说明。

    mats = assemble(model)
    grid = np.asarray(omegas, dtype=float)
    # 第一维对应频率点。
    spectrum = np.empty((grid.size, mats.n_ports, mats.n_ports), dtype=complex)
    for index, omega in enumerate(grid):
        spectrum[index] = scattering_matrix(model, omega, matrices=mats, **solver_options).S
    return spectrum


def unitarity_error(S: np.ndarray) -> float:
    """max |S†S − I|。"""
    S = np.asarray(S)
    return float(np.max(np.abs(S.conj().T @ S - np.eye(S.shape[0]))))


def format_complex_csv(matrix: np.ndarray) -> str:
    """把复矩阵写成 CSV：每个元素占 re,im 两列，17 位有效数字。"""  # 函数说明。

    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    buffer = io.StringIO()
    # 表头 re_0,im_0,re_1,im_1,...，列号即端口号。
    header = ",".join(f"re_{col},im_{col}" for col in range(matrix.shape[1]))
    buffer.write(header + "\n")
    for row in matrix:
        buffer.write(",".join(f"{value.real:.17g},{value.imag:.17g}" for value in row) + "\n")
    return buffer.getvalue()
