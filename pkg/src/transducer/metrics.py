"""换能器品质因数：极化率与协同度、转换效率（数值与解析）、附加噪声、带宽、量子容量与折衷扫描。

所有频率与速率均为角频率 [rad/s]；Hz 换算只在配置加载与 CLI 输出处进行。
"""  # 模块说明。
from __future__ import annotations  # 允许在注解中使用 X | None 语法。

import math
# warnings 用于近似与 η = 1 剔除等非致命提示，由 CLI 统一转写为日志。
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

# numpy 负责频率网格与逐点数组运算。
import numpy as np
# scipy 提供梯形积分与半高点的二分求根。
from scipy.integrate import trapezoid
from scipy.optimize import bisect

from src.transducer.model import ChainModel, NoiseEnvironment, with_couplings
from src.transducer.physics import CONSTANTS
from src.transducer.scattering import (
    PIVOT_FLOOR,
    RESIDUAL_TOL,
    UNITARITY_TOL,
    assemble,
    scattering_matrix,
)
from src.utils.concurrency import raise_first_error, run_with_threadpool
from src.utils.errors import (
    ApproximationWarning,
    ConfigurationError,
    DomainError,
    UnityEfficiencyWarning,
    WindowError,
)

UNITY_SLACK = 1e-10  # 数值 η 超出 [0, 1] 的容许量，超出部分截断。


@dataclass(frozen=True)
class EvaluationSettings:
    """数值评估参数，对应配置中的 solver/bandwidth/capacity 段。"""  # 类说明。

    # 求解器容差，与 scattering 模块默认值一致。
    residual_tol: float = RESIDUAL_TOL
    pivot_floor: float = PIVOT_FLOOR
    unitarity_tol: float = UNITARITY_TOL  # 仅 matrices 命令检查。
    window_factor: float = 10.0  # 扫描半宽 = window_factor × 解析带宽。
    # 数值带宽扫描的网格点数。
    scan_points: int = 2001
    rel_resolution: float = 1e-6  # 半高点二分精度，相对解析带宽。
    # 容量积分的初始网格，以及步长减半的上限。
    capacity_points: int = 2001
    capacity_rel_tol: float = 1e-4
    max_refinements: int = 8

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "EvaluationSettings":
        # 三个配置段缺失时各自使用默认值。
        solver = config.get("solver", {}) or {}
        bandwidth = config.get("bandwidth", {}) or {}
        capacity = config.get("capacity", {}) or {}
        return cls(
            residual_tol=float(solver.get("residual_tol", RESIDUAL_TOL)),
            pivot_floor=float(solver.get("pivot_floor", PIVOT_FLOOR)),
            unitarity_tol=float(solver.get("unitarity_tol", UNITARITY_TOL)),
            window_factor=float(bandwidth.get("window_factor", 10.0)),
            scan_points=int(bandwidth.get("scan_points", 2001)),
            rel_resolution=float(bandwidth.get("rel_resolution", 1e-6)),
            capacity_points=int(capacity.get("points", 2001)),
            capacity_rel_tol=float(capacity.get("rel_tol", 1e-4)),
            max_refinements=int(capacity.get("max_refinements", 8)),
        )

    @property
    def solver_options(self) -> Dict[str, float]:
        # 直接作为关键字参数传给 scattering_matrix。
        return {"residual_tol": self.residual_tol, "pivot_floor": self.pivot_floor}


DEFAULT_SETTINGS = EvaluationSettings()


# ---------------------------------------------------------------------------
# 极化率与协同度
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResonantResponse:
    """某一信号频率下的模式响应；不适用于当前拓扑的字段为 None。"""  # 类说明。

    omega: float  # 信号角频率。
    chi: Tuple[complex, ...]  # 各模式极化率，链顺序。
    link_cooperativities: Tuple[float, ...]  # 按链路顺序的 4G²/(κ_a κ_b)。
    eta_e: float
    eta_o: float
    chi_e: complex
    chi_o: complex
    chi_m: Optional[complex] = None
    gamma_em: Optional[float] = None  # 微波腔给中间模式带来的诱导损耗。
    gamma_om: Optional[float] = None  # 光学腔给中间模式带来的诱导损耗。
    c_em: Optional[float] = None
    c_om: Optional[float] = None
    c_eo: Optional[float] = None
    eta_m: Optional[float] = None  # 中间模式带行波端口时的端口比。

    def cooperativities(self) -> Dict[str, float]:
        # 只输出当前拓扑有定义的协同度。
        values = {"c_em": self.c_em, "c_om": self.c_om, "c_eo": self.c_eo}
        return {key: value for key, value in values.items() if value is not None}


def cooperativity(strength: float, kappa_a: float, kappa_b: float) -> float:
    """C = 4G²/(κ_a κ_b)。"""  # 函数说明。
    if kappa_a <= 0.0 or kappa_b <= 0.0:
        # 线宽为零时协同度无定义。
        raise DomainError(f"cooperativity needs positive linewidths, got {kappa_a!r}, {kappa_b!r}")
    return 4.0 * strength**2 / (kappa_a * kappa_b)


def _mode_susceptibilities(model: ChainModel, omega: float) -> List[complex]:
    """χ_μ(ω) = [−i(ω−ω_μ) + κ_μ/2]⁻¹；光学模式的中心频率为 −δω_o。"""  # 工具函数说明。

    values = []
    last = model.n_modes - 1
    for index, mode in enumerate(model.modes):
        center = -model.pump.detuning if index == last else mode.frequency
        values.append(1.0 / complex(mode.kappa / 2.0, -(omega - center)))
    return values


def susceptibilities(model: ChainModel, omega: float) -> ResonantResponse:
    """给定信号频率下各模式的极化率、链路协同度与端口比。"""  # 函数说明。
    chi = _mode_susceptibilities(model, omega)
    modes = model.modes
    # 链上每条耦合各有一个协同度 4G²/(κ_a κ_b)。
    links = tuple(
        cooperativity(coupling.strength, modes[k].kappa, modes[k + 1].kappa)
        for k, coupling in enumerate(model.couplings)
    )
    common = dict(
        omega=float(omega),
        chi=tuple(chi),
        link_cooperativities=links,
        eta_e=modes[0].external_ratio,
        eta_o=modes[-1].external_ratio,
        chi_e=chi[0],
        chi_o=chi[-1],
    )
    # 零级只有一条链路，对应 C_eo。
    if model.stage_count == 0:
        return ResonantResponse(c_eo=links[0], **common)
    if model.stage_count == 1:
        g, zeta = model.link_strengths
        # 中间模式感受到的诱导损耗 Γ = 2G² Re χ，共振处即 C·κ_m。
        middle = modes[1]
        return ResonantResponse(
            chi_m=chi[1],
            gamma_em=2.0 * g**2 * chi[0].real,
            gamma_om=2.0 * zeta**2 * chi[-1].real,
            c_em=links[0],
            c_om=links[1],
            eta_m=middle.external_ratio if middle.kappa_ext > 0.0 else None,
            **common,
        )
    # 多级链只保留链路协同度，不定义 C_em/C_om。
    return ResonantResponse(**common)


# ---------------------------------------------------------------------------
# 转换效率
# ---------------------------------------------------------------------------


def _clip_unit(value: float) -> float:
    # 只容许舍入量级的越界，再截断到 [0, 1]。
    if value > 1.0 + UNITY_SLACK or value < -UNITY_SLACK:
        raise DomainError(f"efficiency {value!r} left [0, 1] beyond numerical slack")
    return min(max(value, 0.0), 1.0)


def efficiency(model: ChainModel, omega: float, *, settings: EvaluationSettings = DEFAULT_SETTINGS) -> float:
    """η(ω) = |S[光学行波输出, 微波行波输入]|²。"""  # 函数说明。

    out_port, in_port = model.conversion_ports
    return scattering_matrix(model, omega, **settings.solver_options).power(out_port, in_port)


def efficiency_spectrum(
    model: ChainModel,
    omegas: Sequence[float],
    *,
    settings: EvaluationSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """频率网格上的 η(ω)，返回与网格等长的数组。"""  # 函数说明。
    # 整条网格共用一次组装的 A、B。
    out_port, in_port = model.conversion_ports
    mats = assemble(model)
    grid = np.asarray(omegas, dtype=float)
    values = np.empty(grid.size)
    for index, omega in enumerate(grid):
        values[index] = scattering_matrix(model, omega, matrices=mats, **settings.solver_options).power(out_port, in_port)
    return values


def efficiency_susceptibility_form(model: ChainModel, omega: float) -> float:
    """用极化率表达的 η：κ_e,e κ_o,e ∏G_k² |∏χ|² / |连分式行列式|²。

    三对角行列式用连续式递推 f_k = f_{k−1} + G_{k−1}² χ_{k−1} χ_k f_{k−2}（已对 ∏χ 归一化）。
    """

    chi = _mode_susceptibilities(model, omega)
    strengths = model.link_strengths
    # f_{-1} = f_0 = 1。
    previous, current = 1.0 + 0j, 1.0 + 0j
    for k in range(1, model.n_modes):
        previous, current = current, current + strengths[k - 1] ** 2 * chi[k - 1] * chi[k] * previous
    # 分子只含链路强度与各模式极化率，分母为归一化的三对角行列式。
    numerator = np.prod(np.asarray(strengths) ** 2) * abs(np.prod(chi)) ** 2
    return float(model.modes[0].kappa_ext * model.modes[-1].kappa_ext * numerator / abs(current) ** 2)


def efficiency_lorentzian(model: ChainModel, omega: float) -> float:
    """一级换能的洛伦兹近似；共振处与解析闭式一致。"""  # 函数说明。

    if model.stage_count != 1:
        raise ConfigurationError(f"the Lorentzian form applies to one-stage chains, got {model.kind}")
    response = susceptibilities(model, omega)
    kappa_m = model.modes[1].kappa
    omega_m = model.modes[1].frequency
    # 展宽后的中间模式线宽 κ_m + Γ_em + Γ_om。
    # 诱导损耗在失谐处取 Re χ，近似只在共振附近成立。
    width = kappa_m + response.gamma_em + response.gamma_om
    numerator = 4.0 * response.eta_e * response.eta_o * response.gamma_em * response.gamma_om
    return float(numerator / (width**2 + 4.0 * (omega - omega_m) ** 2))


def _check_ratio(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")


def _check_cooperativity(value: float, name: str) -> None:
    # NaN 与 inf 同样拒绝。
    if not value >= 0.0 or not math.isfinite(value):
        raise DomainError(f"{name} must be a finite non-negative number, got {value!r}")


def efficiency_closed_form_one_stage(c_em: float, c_om: float, eta_e: float, eta_o: float) -> float:
    """共振处的一级效率 η_eη_o·4C_emC_om/(1+C_em+C_om)²。"""  # 函数说明。
    _check_cooperativity(c_em, "c_em")
    _check_cooperativity(c_om, "c_om")
    _check_ratio(eta_e, "eta_e")
    _check_ratio(eta_o, "eta_o")
    # η_e = η_o = 1 时在 C_em = 1 + C_om 处取极大。
    return eta_e * eta_o * 4.0 * c_em * c_om / (1.0 + c_em + c_om) ** 2


def efficiency_closed_form_zero_stage(c_eo: float, eta_e: float, eta_o: float) -> float:
    """共振处的零级效率 η_eη_o·4C_eo/(1+C_eo)²。"""  # 函数说明。
    _check_cooperativity(c_eo, "c_eo")
    _check_ratio(eta_e, "eta_e")
    _check_ratio(eta_o, "eta_o")
    # C_eo = 1 时阻抗匹配。
    return eta_e * eta_o * 4.0 * c_eo / (1.0 + c_eo) ** 2


def efficiency_closed_form_half_cavity(c_mu_m: float, eta_mu: float, eta_m: float) -> float:
    """只有一个腔时的效率；C_μm 按耦合平方定义，η_m 不做上限截断。"""  # 函数说明。

    _check_cooperativity(c_mu_m, "c_mu_m")
    _check_ratio(eta_mu, "eta_mu")
    if not eta_m >= 0.0:
        raise DomainError(f"eta_m must be non-negative, got {eta_m!r}")
    # η_m 可超过 1，结果不截断。
    return eta_mu * eta_m * 4.0 * c_mu_m / (1.0 + c_mu_m) ** 2


def internal_efficiency(eta: float, eta_e: float, eta_o: float) -> float:
    """η_in = η / (η_e η_o)。"""  # 函数说明。
    if eta_e <= 0.0 or eta_o <= 0.0:
        raise DomainError(f"port ratios must be positive, got eta_e={eta_e!r}, eta_o={eta_o!r}")
    return eta / (eta_e * eta_o)


# ---------------------------------------------------------------------------
# 共振矩阵元
# ---------------------------------------------------------------------------


class OnResonanceElements(NamedTuple):
    """一级换能共振处的 |S_ij|²（端口编号从 1 开始，与 e_in, e_th, m_th, o_in, o_th 对应）。"""  # 类说明。

    s41: float
    s42: float
    s43: float
    s11: float
    s12: float
    s13: float


class ZeroStageElements(NamedTuple):
    """零级换能共振处的 |S_ij|²（端口 e_in, e_th, o_in, o_th）。"""  # 类说明。

    s31: float
    s32: float
    s11: float
    s12: float


def onres_matrix_elements(c_em: float, c_om: float, eta_e: float, eta_o: float) -> OnResonanceElements:
    """一级换能在 ω = ω_e = ω_m = −δω_o 时六个矩阵元的闭式。"""  # 函数说明。
    _check_cooperativity(c_em, "c_em")
    _check_cooperativity(c_om, "c_om")
    _check_ratio(eta_e, "eta_e")
    _check_ratio(eta_o, "eta_o")
    # 公共分母 (1 + C_om + C_em)²。
    d = 1.0 + c_om + c_em
    product = 4.0 * c_om * c_em / d**2
    return OnResonanceElements(
        s41=eta_o * eta_e * product,
        s42=eta_o * (1.0 - eta_e) * product,
        s43=eta_o * 4.0 * c_om / d**2,
        # 反射项：η_e = 1/2 且无耦合时为临界耦合，反射为零。
        s11=abs(1.0 - 2.0 * eta_e * (1.0 + c_om) / d) ** 2,
        s12=eta_e * (1.0 - eta_e) * 4.0 * (1.0 + c_om) ** 2 / d**2,
        s13=eta_e * 4.0 * c_em / d**2,
    )


def onres_matrix_elements_zero_stage(c_eo: float, eta_e: float, eta_o: float) -> ZeroStageElements:
    """零级换能共振处四个矩阵元的闭式。"""  # 函数说明。
    _check_cooperativity(c_eo, "c_eo")
    _check_ratio(eta_e, "eta_e")
    _check_ratio(eta_o, "eta_o")
    d = 1.0 + c_eo
    return ZeroStageElements(
        # 各项与一级形式取 C_om → 0 后一致。
        s31=eta_e * eta_o * 4.0 * c_eo / d**2,
        s32=(1.0 - eta_e) * eta_o * 4.0 * c_eo / d**2,
        s11=abs(1.0 - 2.0 * eta_e / d) ** 2,
        s12=eta_e * (1.0 - eta_e) * 4.0 / d**2,
    )


def row_constraints(S: np.ndarray) -> np.ndarray:
    """每一行 Σ_j |S_ij|²；无源链应逐行为 1。"""  # 函数说明。
    # 按行求和，列和由 S 的幺正性同样为 1。
    return np.sum(np.abs(np.asarray(S)) ** 2, axis=1)


# ---------------------------------------------------------------------------
# 附加噪声
# ---------------------------------------------------------------------------


class AddedNoise(NamedTuple):
    """折算到输入端的附加噪声（光子数），以及对应的输出噪声与 η。"""  # 类说明。

    # 参考频率处折算到输入的附加噪声。
    n_add_o: float  # 光学输出端折算到输入的附加噪声。
    n_add_e: float  # 微波输出端折算到输入的附加噪声。
    n_out_o: float  # 光学输出端的总噪声光子数。
    # 微波输出端的总噪声光子数。
    n_out_e: float
    # 同一矩阵上的转换效率。
    eta: float


def _noise_from_scattering(model: ChainModel, S: np.ndarray, occupancies: np.ndarray) -> AddedNoise:
    # 输出端噪声是各输入端口占据数按 |S_out,j|² 的加权和。
    out_port, in_port = model.conversion_ports
    powers = np.abs(S) ** 2
    n_out_o = float(powers[out_port] @ occupancies)
    n_out_e = float(powers[in_port] @ occupancies)
    eta = float(powers[out_port, in_port])
    # 完全没有转换时折算到输入的噪声发散。
    if eta == 0.0:
        return AddedNoise(math.inf, math.inf, n_out_o, n_out_e, eta)
    return AddedNoise(n_out_o / eta, n_out_e / eta, n_out_o, n_out_e, eta)


def added_noise(
    model: ChainModel,
    omega: float,
    env: NoiseEnvironment,
    *,
    settings: EvaluationSettings = DEFAULT_SETTINGS,
) -> AddedNoise:
    """按散射矩阵行求输出噪声 N_out = Σ_j |S_out,j|² N_j，再除以 η；η = 0 时为 inf。"""  # 函数说明。

    # 一次求解同时给出 η 与两条输出行。
    S = scattering_matrix(model, omega, **settings.solver_options).S
    return _noise_from_scattering(model, S, env.occupancies(model, omega))


def added_noise_closed_form_one_stage(
    c_em: float,
    c_om: float,
    eta_e: float,
    eta_o: float,
    n_wg: float,
    n_e_th: float,
    n_m_th: float,
) -> Tuple[float, float]:
    """共振处一级换能的 (N_add,o, N_add,e)，光学侧占据数取 0。"""  # 函数说明。

    _check_ratio(eta_e, "eta_e")
    _check_ratio(eta_o, "eta_o")
    # 无转换或无端口时两侧噪声均发散。
    if c_em <= 0.0 or c_om <= 0.0 or eta_e == 0.0 or eta_o == 0.0:
        return math.inf, math.inf
    # 光学输出端：波导噪声、微波内禀损耗与中间模式热噪声三项之和。
    n_add_o = n_wg + (1.0 / eta_e - 1.0) * n_e_th + n_m_th / (eta_e * c_em)
    # 微波输出端：对称地由三项组成，波导项含反射系数。
    n_add_e = (
        abs(c_em + (1.0 - 2.0 * eta_e) * (1.0 + c_om)) ** 2 / (4.0 * c_om * c_em * eta_o * eta_e) * n_wg
        + (1.0 - eta_e) / eta_o * (1.0 + c_om) ** 2 / (c_om * c_em) * n_e_th
        + n_m_th / (eta_o * c_om)
    )
    return n_add_o, n_add_e


def added_noise_closed_form_zero_stage(
    c_eo: float,
    eta_e: float,
    eta_o: float,
    n_wg: float,
    n_e_th: float,
) -> Tuple[float, float]:
    """共振处零级换能的 (N_add,o, N_add,e)。"""  # 函数说明。
    _check_ratio(eta_e, "eta_e")
    _check_ratio(eta_o, "eta_o")
    if c_eo <= 0.0 or eta_e == 0.0 or eta_o == 0.0:
        return math.inf, math.inf
    # 零级没有中间模式的热噪声项。
    n_add_o = n_wg + (1.0 / eta_e - 1.0) * n_e_th
    n_add_e = abs(1.0 - 2.0 * eta_e + c_eo) ** 2 / (4.0 * c_eo * eta_e * eta_o) * n_wg + (1.0 - eta_e) / (eta_o * c_eo) * n_e_th
    return n_add_o, n_add_e


# ---------------------------------------------------------------------------
# 带宽
# ---------------------------------------------------------------------------


def bandwidth_analytic(model: ChainModel) -> float:
    """一级：κ_m(1+C_em+C_om)；零级：min(κ_e, κ_o)(1+C_eo)；多级链取各内部模式展宽线宽的最小值并给出近似警告。"""  # 函数说明。

    # 逐链路协同度，与 susceptibilities 相同。
    modes = model.modes
    links = [
        cooperativity(coupling.strength, modes[k].kappa, modes[k + 1].kappa)
        for k, coupling in enumerate(model.couplings)
    ]
    if model.stage_count == 0:
        # 零级由较窄的腔决定。
        return min(modes[0].kappa, modes[1].kappa) * (1.0 + links[0])
    if model.stage_count == 1:
        # 一级由中间模式的展宽线宽决定。
        return modes[1].kappa * (1.0 + links[0] + links[1])
    # 多级链没有闭式，按每个内部模式的展宽线宽取最小值。
    warnings.warn(
        f"{model.kind} bandwidth is estimated from per-mode broadened linewidths; use bandwidth_numeric for the FWHM",
        ApproximationWarning,
        stacklevel=2,
    )
    return min(modes[k].kappa * (1.0 + links[k - 1] + links[k]) for k in range(1, model.n_modes - 1))


def bandwidth_numeric(model: ChainModel, *, settings: EvaluationSettings = DEFAULT_SETTINGS) -> float:
    """η(ω) 的半高全宽：网格扫描定位半高点，再用二分细化。"""  # 函数说明。

    # 解析带宽只用于确定扫描窗口与二分精度，多级链的近似警告不必外抛。
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ApproximationWarning)
        scale = bandwidth_analytic(model)
    # 扫描窗口以参考频率为中心。
    center = model.resonance_frequency
    half_width = settings.window_factor * scale
    grid = np.linspace(center - half_width, center + half_width, settings.scan_points)
    values = efficiency_spectrum(model, grid, settings=settings)
    diagnostics = {
        "center": center,
        "half_width": half_width,
        "points": settings.scan_points,
        "peak": float(values.max()),
    }
    # 峰值附近的网格点必须高于半高。
    peak_index = int(np.argmax(values))
    peak = float(values[peak_index])
    if peak <= 0.0:
        raise WindowError("no transmission peak inside the scan window", diagnostics)
    half = peak / 2.0
    below = values < half
    # 峰值左侧最后一个、右侧第一个低于半高的网格点各自包住一个半高交点。
    left_candidates = np.nonzero(below[:peak_index])[0]
    right_candidates = np.nonzero(below[peak_index:])[0]
    if left_candidates.size == 0 or right_candidates.size == 0:
        raise WindowError("half-maximum crossing not found inside the scan window", diagnostics)
    left = int(left_candidates[-1])
    right = peak_index + int(right_candidates[0])
    # 二分过程中 A、B 不变，只组装一次。
    mats = assemble(model)
    out_port, in_port = model.conversion_ports

    def excess(omega: float) -> float:
        return scattering_matrix(model, omega, matrices=mats, **settings.solver_options).power(out_port, in_port) - half

    # 二分精度相对解析带宽给出。
    xtol = settings.rel_resolution * scale
    lower = bisect(excess, grid[left], grid[left + 1], xtol=xtol)
    upper = bisect(excess, grid[right - 1], grid[right], xtol=xtol)
    return float(upper - lower)


# ---------------------------------------------------------------------------
# 量子容量
# ---------------------------------------------------------------------------


def q1(eta):
    """单次信道使用的量子容量 max{log₂(η/(1−η)), 0}，η = 1 时为 +inf。"""  # 函数说明。

    # 标量与数组输入共用同一路径。
    values = np.asarray(eta, dtype=float)
    if np.any(np.isnan(values)) or np.any(values < 0.0) or np.any(values > 1.0):
        raise DomainError(f"q1 expects efficiencies in [0, 1], got {eta!r}")
    # η = 1 时 log 的分母为零，用 np.where 单独赋 inf。
    with np.errstate(divide="ignore", invalid="ignore"):
        result = np.where(values >= 1.0, np.inf, np.maximum(np.log2(values / (1.0 - values)), 0.0))
    # 标量输入返回 float。
    if result.ndim == 0:
        return float(result)
    return result


@dataclass(frozen=True)
class CapacityResult:
    """Q1 积分结果：qubits/s，附带网格细化估计的误差。"""  # 类说明。

    capacity: float  # Q1 [qubits/s]。
    error_estimate: float  # 最后两轮网格结果之差。
    converged: bool
    refinements: int  # 实际执行的步长减半次数。
    # 最后一轮网格及其上的 η 与 q1，供 CLI 输出。
    omegas: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    q1: np.ndarray = field(repr=False)
    unity_points: int = 0  # 因 η = 1 被剔除的网格点数。


def _trapezoid_capacity(omegas: np.ndarray, eta: np.ndarray) -> Tuple[float, np.ndarray, int]:
    # q1 = inf 的点从积分中剔除并发出警告，其余点按梯形公式积分。
    rates = q1(eta)
    # 只有 η = 1 会产生 inf。
    finite = np.isfinite(rates)
    unity = int(np.count_nonzero(~finite))
    if unity:
        warnings.warn(
            f"{unity} grid point(s) with eta == 1 excised from the capacity integral",
            UnityEfficiencyWarning,
            stacklevel=3,
        )
    if np.count_nonzero(finite) < 2:
        # 有限点不足两个时积分为零。
        return 0.0, rates, unity
    # dω/2π：角频率积分换算为每秒。
    return float(trapezoid(rates[finite], omegas[finite]) / (2.0 * math.pi)), rates, unity


def capacity_of_function(
    eta_fn: Callable[[np.ndarray], np.ndarray],
    omega_min: float,
    omega_max: float,
    *,
    points: int = 2001,
    rel_tol: float = 1e-4,
    max_refinements: int = 8,
) -> CapacityResult:
    """Q1 = ∫ dω/2π q1(η(ω))，复合梯形公式，步长逐次减半直到相对变化 < rel_tol。"""  # 函数说明。

    if not omega_max > omega_min:
        raise DomainError(f"capacity window must satisfy omega_max > omega_min, got [{omega_min!r}, {omega_max!r}]")
    if points < 2:
        raise DomainError(f"capacity grid needs at least two points, got {points}")
    # 初始网格。
    omegas = np.linspace(omega_min, omega_max, points)
    # η 截断到 [0, 1] 后再求 q1。
    eta = np.clip(np.asarray(eta_fn(omegas), dtype=float), 0.0, 1.0)
    value, rates, unity = _trapezoid_capacity(omegas, eta)
    error = math.inf
    converged = False
    refinements = 0
    # 每轮把步长减半，新网格包含旧网格的全部节点。
    while refinements < max_refinements:
        refinements += 1
        points = 2 * points - 1
        omegas = np.linspace(omega_min, omega_max, points)
        eta = np.clip(np.asarray(eta_fn(omegas), dtype=float), 0.0, 1.0)
        refined, rates, unity = _trapezoid_capacity(omegas, eta)
        # 误差估计取相邻两轮之差。
        error = abs(refined - value)
        value = refined
        # 容量为零（全程 η ≤ 1/2）时直接视为收敛。
        if error <= rel_tol * abs(value) or (value == 0.0 and error == 0.0):
            converged = True
            break
    return CapacityResult(
        capacity=value,
        error_estimate=error,
        converged=converged,
        refinements=refinements,
        omegas=omegas,
        eta=eta,
        q1=rates,
        unity_points=unity,
    )


def continuous_capacity(
    model: ChainModel,
    omega_min: float,
    omega_max: float,
    *,
    settings: EvaluationSettings = DEFAULT_SETTINGS,
) -> CapacityResult:
    """对模型的数值 η(ω) 在 [omega_min, omega_max] 上积分 q1。"""  # 函数说明。
    # 数值 η 超出 1 的部分只允许在舍入量级内。
    def eta_fn(grid: np.ndarray) -> np.ndarray:
        values = efficiency_spectrum(model, grid, settings=settings)
        if np.any(values > 1.0 + UNITY_SLACK):
            raise DomainError(f"efficiency {values.max()!r} exceeds 1 beyond numerical slack")
        return values

    # 容量积分参数取自配置的 capacity 段。
    return capacity_of_function(
        eta_fn,
        omega_min,
        omega_max,
        points=settings.capacity_points,
        rel_tol=settings.capacity_rel_tol,
        max_refinements=settings.max_refinements,
    )


# ---------------------------------------------------------------------------
# 折衷扫描
# ---------------------------------------------------------------------------


class SweepPoint(NamedTuple):
    """扫描网格上的一个点。"""  # 类说明。

    c_em: float
    c_om: float
    eta: float
    n_add_o: float
    n_add_e: float


def sweep_tradeoff(
    template: ChainModel,
    cem_values: Sequence[float],
    com_values: Sequence[float],
    env: NoiseEnvironment,
    *,
    max_workers: int = 1,
    settings: EvaluationSettings = DEFAULT_SETTINGS,
    on_row: Optional[Callable[[int, Any], None]] = None,
) -> List[SweepPoint]:
    """在 (C_em, C_om) 网格上重设 g 与 ζ，于 ω_m 处计算 η 与附加噪声；输出按 C_em 外层、C_om 内层排列。"""  # 函数说明。

    if template.stage_count != 1:
        raise ConfigurationError(f"trade-off sweeps need a one-stage template, got {template.kind}")
    # 统一转为 float 列表，空序列与非正值都拒绝。
    cem = [float(value) for value in cem_values]
    com = [float(value) for value in com_values]
    if not cem or not com:
        raise DomainError("sweep ranges must not be empty")
    if any(not value > 0.0 for value in cem + com):
        raise DomainError("sweep cooperativities must be positive")
    # 占据数只依赖温度与频率，整个网格共用一份。
    # 模板的线宽不变，只改写两条耦合强度。
    e, m, o = template.modes
    omega = template.resonance_frequency
    occupancies = env.occupancies(template, omega)

    # 每个 C_em 值是一个线程任务，行内按 C_om 顺序依次求解。
    def evaluate_row(c_em: float) -> List[SweepPoint]:
        # 由 C = 4G²/(κ_a κ_b) 反解耦合强度。
        g = math.sqrt(c_em * e.kappa * m.kappa / 4.0)
        row = []
        for c_om in com:
            zeta = math.sqrt(c_om * o.kappa * m.kappa / 4.0)
            model = with_couplings(template, (g, zeta))
            S = scattering_matrix(model, omega, **settings.solver_options).S
            noise = _noise_from_scattering(model, S, occupancies)
            row.append(SweepPoint(c_em, c_om, noise.eta, noise.n_add_o, noise.n_add_e))
        return row

    # 行结果按输入顺序返回，与完成先后无关。
    results, _, _ = run_with_threadpool(cem, evaluate_row, max_workers=max_workers, on_result=on_row)
    raise_first_error(results)
    # 展平为 C_em 外层、C_om 内层。
    return [point for row in results for point in row]


# ---------------------------------------------------------------------------
# 里德堡原子定义
# ---------------------------------------------------------------------------


def rydberg_efficiency(
    laser_power: float,
    laser_omega: float,
    microwave_intensity: float,
    cross_section: float,
    microwave_omega: float,
) -> float:
    """光子通量比 (P_L/ħω_L) / (I_M S_M/ħω_M)。"""  # 函数说明。

    # 五个输入都必须为正的有限值。
    for name, value in (
        ("laser_power", laser_power),
        ("laser_omega", laser_omega),
        ("microwave_intensity", microwave_intensity),
        ("cross_section", cross_section),
        ("microwave_omega", microwave_omega),
    ):
        if not value > 0.0 or not math.isfinite(value):
            raise DomainError(f"{name} must be positive and finite, got {value!r}")
    # 两侧都换算成每秒光子数。
    optical_flux = laser_power / (CONSTANTS.hbar * laser_omega)
    microwave_flux = microwave_intensity * cross_section / (CONSTANTS.hbar * microwave_omega)
    return optical_flux / microwave_flux


# ---------------------------------------------------------------------------
# 综合报告
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerformanceReport:
    """report 子命令的全部输出；频率与带宽为 rad/s，CLI 输出时再换算成 Hz。"""  # 类说明。

    kind: str  # zero-stage、one-stage 或 N-stage。
    # η 峰值所在角频率。
    omega_peak: float
    eta_peak: float  # 网格与共振点中较大的 η，已截断到 [0, 1]。
    eta_resonance: float  # 参考频率处的 η。
    eta_internal: Optional[float]  # η / (η_e η_o)。
    n_add_o: float
    n_add_e: float
    bandwidth_analytic: float
    # 扫描窗口内找不到半高点时为 None。
    bandwidth_numeric: Optional[float]
    # 峰值 η 对应的单次使用容量。
    q1_peak: float
    capacity: CapacityResult
    response: ResonantResponse
    window: Tuple[float, float]  # 扫描与容量积分共用的频率窗口。
    spectrum_omegas: np.ndarray = field(repr=False)
    spectrum_eta: np.ndarray = field(repr=False)
    notes: Tuple[str, ...] = ()  # 非致命问题，CLI 以 WARNING 记录。


def performance_report(
    model: ChainModel,
    env: NoiseEnvironment,
    *,
    window: Optional[Tuple[float, float]] = None,
    settings: EvaluationSettings = DEFAULT_SETTINGS,
) -> PerformanceReport:
    """汇总 η 峰值、附加噪声、带宽与容量；数值带宽失败时记为缺失并保留报告。"""  # 函数说明。

    center = model.resonance_frequency
    analytic = bandwidth_analytic(model)
    if window is None:
        # 默认窗口：参考频率两侧各 window_factor 个解析带宽。
        half_width = settings.window_factor * analytic
        window = (center - half_width, center + half_width)
    omegas = np.linspace(window[0], window[1], settings.capacity_points)
    spectrum = efficiency_spectrum(model, omegas, settings=settings)
    eta_center = efficiency(model, center, settings=settings)
    # 网格可能错过峰顶，共振点本身也参与比较。
    peak_index = int(np.argmax(spectrum))
    if eta_center >= spectrum[peak_index]:
        omega_peak, eta_peak = center, eta_center
    else:
        omega_peak, eta_peak = float(omegas[peak_index]), float(spectrum[peak_index])
    eta_peak = _clip_unit(eta_peak)
    # 附加噪声只在参考频率处求值。
    noise = added_noise(model, center, env, settings=settings)
    notes: List[str] = []
    # 数值带宽失败不影响其余字段，记为缺失。
    try:
        numeric: Optional[float] = bandwidth_numeric(model, settings=settings)
    except WindowError as exc:
        numeric = None
        notes.append(f"bandwidth_numeric unavailable: {exc}")
    # 容量积分窗口与效率谱窗口相同。
    capacity = continuous_capacity(model, window[0], window[1], settings=settings)
    # 细化次数用尽仍未收敛时保留最后一次的结果并附注。
    if not capacity.converged:
        notes.append(f"capacity refinement stopped after {capacity.refinements} halvings")
    response = susceptibilities(model, center)
    return PerformanceReport(
        kind=model.kind,
        omega_peak=omega_peak,
        eta_peak=eta_peak,
        eta_resonance=eta_center,
        eta_internal=internal_efficiency(eta_peak, response.eta_e, response.eta_o),
        n_add_o=noise.n_add_o,
        n_add_e=noise.n_add_e,
        bandwidth_analytic=analytic,
        bandwidth_numeric=numeric,
        q1_peak=q1(eta_peak),
        capacity=capacity,
        response=response,
        window=(float(window[0]), float(window[1])),
        spectrum_omegas=omegas,
        spectrum_eta=spectrum,
        notes=tuple(notes),
    )
