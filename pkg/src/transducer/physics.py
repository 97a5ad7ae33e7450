"""标量物理计算器：热占据数、零点振幅、腔内光子数以及各平台的耦合强度公式。

所有角频率与速率均以 rad/s 表示，长度与体积用 SI 单位。
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from typing import Callable, Dict

from src.utils.errors import ConfigurationError, DomainError, InvalidParameterError, PreconditionWarning


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 常数，全仓库唯一来源。"""  # 类说明。

    hbar: float = 1.054571817e-34  # 约化普朗克常数 [J·s]。
    h: float = 6.62607015e-34  # 普朗克常数 [J·s]。
    k_B: float = 1.380649e-23  # 玻尔兹曼常数 [J/K]。
    c: float = 299792458.0  # 真空光速 [m/s]。
    epsilon_0: float = 8.8541878128e-12  # 真空介电常数 [F/m]。
    mu_0: float = 1.25663706212e-6  # 真空磁导率 [H/m]。


CONSTANTS = PhysicalConstants()

# ħω/k_BT 超过该值时 1/(e^x − 1) 与 e^{-x} 在双精度下不可区分，且避免 expm1 溢出。
_LARGE_EXPONENT = 700.0
# 稀土耦合公式的大失谐前提按 10 倍裕度检查。
_DETUNING_MARGIN = 10.0


def _ensure_finite(value: float, name: str) -> float:
    number = float(value)
    if not math.isfinite(number):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return number


def _ensure_positive(value: float, name: str) -> float:
    number = _ensure_finite(value, name)
    if number <= 0.0:
        raise DomainError(f"{name} must be positive, got {value!r}")
    return number


def _ensure_non_negative(value: float, name: str) -> float:
    number = _ensure_finite(value, name)
    if number < 0.0:
        raise DomainError(f"{name} must be non-negative, got {value!r}")
    return number


def bose_occupation(omega: float, temperature: float) -> float:
    """返回角频率 omega 的模式在温度 T 下的玻色占据数 1/(e^{ħω/k_BT} − 1)。

    T = 0 精确返回 0；高温区使用 expm1 避免相消误差。
    """

    omega = _ensure_positive(omega, "omega")
    temperature = _ensure_non_negative(temperature, "temperature")
    if temperature == 0.0:
        return 0.0
    x = CONSTANTS.hbar * omega / (CONSTANTS.k_B * temperature)
    if x > _LARGE_EXPONENT:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def thermal_occupation_hz(frequency_hz: float, temperature: float) -> float:
    """以普通频率 [Hz] 调用 bose_occupation 的便捷包装。"""  # 函数说明。

    return bose_occupation(2.0 * math.pi * _ensure_positive(frequency_hz, "frequency_hz"), temperature)


def zero_point_amplitude(m_eff: float, omega_m: float) -> float:
    """机械零点涨落振幅 x_ZPF = √(ħ / 2 m_eff ω_m) [m]。"""  # 函数说明。

    m_eff = _ensure_positive(m_eff, "m_eff")
    omega_m = _ensure_positive(omega_m, "omega_m")
    return math.sqrt(CONSTANTS.hbar / (2.0 * m_eff * omega_m))


def optomechanical_single_photon_coupling(omega_cav: float, cavity_length: float, x_zpf: float) -> float:
    """单光子光机耦合 g = (ω_cav / L) · x_ZPF。"""  # 函数说明。

    omega_cav = _ensure_positive(omega_cav, "omega_cav")
    cavity_length = _ensure_positive(cavity_length, "cavity_length")
    x_zpf = _ensure_non_negative(x_zpf, "x_zpf")
    return omega_cav / cavity_length * x_zpf


def intracavity_photon_number(drive: complex, detuning: float, kappa: float) -> float:
    """泵浦驱动 ℰ 下的平均腔内光子数 |ℰ|² / (δω² + κ²/4)。"""  # 函数说明。

    kappa = _ensure_positive(kappa, "kappa")
    detuning = _ensure_finite(detuning, "detuning")
    amplitude = abs(complex(drive))
    if not math.isfinite(amplitude):
        raise DomainError(f"drive must be finite, got {drive!r}")
    return amplitude**2 / (detuning**2 + 0.25 * kappa**2)


def linearized_coupling(g_single: float, photon_number: float) -> float:
    """线性化（腔增强）耦合 G = g √n。"""  # 函数说明。

    g_single = _ensure_non_negative(g_single, "g_single")
    photon_number = _ensure_non_negative(photon_number, "photon_number")
    return g_single * math.sqrt(photon_number)


def magnon_microwave_coupling(gyromagnetic_ratio: float, omega_e: float, cavity_volume: float, spin_count: float) -> float:
    """磁振子-微波集体耦合 g_em = (|γ|/2) √(ħ ω_e μ₀ / V_c) · √N_s。"""  # 函数说明。

    gamma = abs(_ensure_finite(gyromagnetic_ratio, "gyromagnetic_ratio"))
    if gamma == 0.0:
        raise DomainError("gyromagnetic_ratio must be nonzero")
    omega_e = _ensure_positive(omega_e, "omega_e")
    cavity_volume = _ensure_positive(cavity_volume, "cavity_volume")
    spin_count = _ensure_positive(spin_count, "spin_count")
    g_single = 0.5 * gamma * math.sqrt(CONSTANTS.hbar * omega_e * CONSTANTS.mu_0 / cavity_volume)
    return g_single * math.sqrt(spin_count)


def magnon_optical_coupling(faraday_rotation: float, permittivity: float, spin_count: float, photon_number: float) -> float:
    """磁振子-光学耦合 G_MO = c θ_F / (4 √(2 ε_r N_s)) · √n̄_cav。"""  # 函数说明。

    theta = _ensure_positive(faraday_rotation, "faraday_rotation")
    permittivity = _ensure_positive(permittivity, "permittivity")
    spin_count = _ensure_positive(spin_count, "spin_count")
    photon_number = _ensure_non_negative(photon_number, "photon_number")
    g_single = CONSTANTS.c * theta / (4.0 * math.sqrt(2.0 * permittivity * spin_count))
    return g_single * math.sqrt(photon_number)


def electro_optic_single_photon(
    r_coefficient: float,
    permittivity_e: float,
    permittivity_p: float,
    permittivity_o: float,
    omega_e: float,
    omega_p: float,
    omega_o: float,
    volume_e: float,
    volume_p: float,
    volume_o: float,
    overlap: float,
) -> float:
    """三模电光单光子耦合，overlap 为归一化三模重叠积分的数值。"""  # 函数说明。

    r_coefficient = _ensure_positive(r_coefficient, "r_coefficient")
    eps_e = _ensure_positive(permittivity_e, "permittivity_e")
    eps_p = _ensure_positive(permittivity_p, "permittivity_p")
    eps_o = _ensure_positive(permittivity_o, "permittivity_o")
    omegas = [_ensure_positive(value, name) for value, name in ((omega_e, "omega_e"), (omega_p, "omega_p"), (omega_o, "omega_o"))]
    volumes = [_ensure_positive(value, name) for value, name in ((volume_e, "volume_e"), (volume_p, "volume_p"), (volume_o, "volume_o"))]
    overlap = _ensure_finite(overlap, "overlap")
    field_factor = math.sqrt(
        CONSTANTS.hbar * omegas[0] * omegas[1] * omegas[2] / (8.0 * CONSTANTS.epsilon_0 * volumes[0] * volumes[1] * volumes[2])
    )
    return r_coefficient * math.sqrt(eps_p * eps_o / eps_e) * field_factor * overlap


def rei_collective_coupling(
    ion_count: float,
    rabi: float,
    g_e: float,
    g_o: float,
    delta_2: float,
    delta_3: float,
    *,
    exact: bool = False,
) -> float:
    """均匀稀土离子系综的集体耦合 G ≈ N Ω g_e g_o / (δ₃ δ₂)。

    大失谐前提不满足时只发出 PreconditionWarning。exact=True 时分母保留 δ₂δ₃ − |Ω|²。
    """

    ion_count = _ensure_positive(ion_count, "ion_count")
    rabi = _ensure_finite(rabi, "rabi")
    g_e = _ensure_finite(g_e, "g_e")
    g_o = _ensure_finite(g_o, "g_o")
    delta_2 = _ensure_finite(delta_2, "delta_2")
    delta_3 = _ensure_finite(delta_3, "delta_3")
    if delta_2 == 0.0 or delta_3 == 0.0:
        raise DomainError("detunings delta_2 and delta_3 must be nonzero")
    violated = []
    if abs(delta_3) < _DETUNING_MARGIN * abs(g_o):
        violated.append("|delta_3| >> |g_o|")
    if abs(delta_2) < _DETUNING_MARGIN * abs(g_e):
        violated.append("|delta_2| >> |g_e|")
    if abs(delta_2 * delta_3) < _DETUNING_MARGIN * rabi**2:
        violated.append("|delta_2 delta_3| >> |Omega|^2")
    if violated:
        warnings.warn(
            "rare-earth coupling outside large-detuning regime: " + ", ".join(violated),
            PreconditionWarning,
            stacklevel=2,
        )
    denominator = delta_2 * delta_3
    if exact:
        denominator -= rabi**2
        if denominator == 0.0:
            raise DomainError("delta_2 * delta_3 - |Omega|^2 vanishes")
    return ion_count * rabi * g_e * g_o / denominator


@dataclass(frozen=True)
class CouplingInputs:
    """各平台耦合公式的标量输入，未使用的字段保持 None。"""  # 类说明。

    m_eff: float | None = None
    omega_m: float | None = None
    omega_cav: float | None = None
    cavity_length: float | None = None
    photon_number: float | None = None
    gyromagnetic_ratio: float | None = None
    omega_e: float | None = None
    cavity_volume: float | None = None
    spin_count: float | None = None
    faraday_rotation: float | None = None
    permittivity: float | None = None
    r_coefficient: float | None = None
    permittivity_e: float | None = None
    permittivity_p: float | None = None
    permittivity_o: float | None = None
    omega_p: float | None = None
    omega_o: float | None = None
    volume_e: float | None = None
    volume_p: float | None = None
    volume_o: float | None = None
    overlap: float | None = None
    ion_count: float | None = None
    rabi: float | None = None
    g_e: float | None = None
    g_o: float | None = None
    delta_2: float | None = None
    delta_3: float | None = None

    def require(self, *names: str) -> list[float]:
        values = []
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise InvalidParameterError(name, "required by the selected coupling formula")
            values.append(value)
        return values

    @classmethod
    def from_mapping(cls, payload: Dict[str, float]) -> "CouplingInputs":
        known = {item.name for item in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise InvalidParameterError(unknown[0], "unknown coupling input")
        return cls(**payload)


def _optomechanical(inputs: CouplingInputs) -> float:
    m_eff, omega_m, omega_cav, length, photons = inputs.require("m_eff", "omega_m", "omega_cav", "cavity_length", "photon_number")
    g_single = optomechanical_single_photon_coupling(omega_cav, length, zero_point_amplitude(m_eff, omega_m))
    return linearized_coupling(g_single, photons)


def _magnon_microwave(inputs: CouplingInputs) -> float:
    return magnon_microwave_coupling(*inputs.require("gyromagnetic_ratio", "omega_e", "cavity_volume", "spin_count"))


def _magnon_optical(inputs: CouplingInputs) -> float:
    return magnon_optical_coupling(*inputs.require("faraday_rotation", "permittivity", "spin_count", "photon_number"))


def _electro_optic(inputs: CouplingInputs) -> float:
    values = inputs.require(
        "r_coefficient",
        "permittivity_e",
        "permittivity_p",
        "permittivity_o",
        "omega_e",
        "omega_p",
        "omega_o",
        "volume_e",
        "volume_p",
        "volume_o",
        "overlap",
    )
    g_single = electro_optic_single_photon(*values)
    photons = inputs.photon_number if inputs.photon_number is not None else 1.0
    return linearized_coupling(abs(g_single), photons)


def _rare_earth(inputs: CouplingInputs) -> float:
    return rei_collective_coupling(*inputs.require("ion_count", "rabi", "g_e", "g_o", "delta_2", "delta_3"))


# 平台名称到耦合计算函数的注册表，新增平台时在此登记。
COUPLING_CALCULATORS: Dict[str, Callable[[CouplingInputs], float]] = {
    "optomechanical": _optomechanical,
    "magnon-microwave": _magnon_microwave,
    "magnon-optical": _magnon_optical,
    "electro-optic": _electro_optic,
    "rare-earth": _rare_earth,
}


def compute_coupling(platform: str, inputs: CouplingInputs) -> float:
    """根据平台名称选择公式并返回耦合强度 [rad/s]。"""  # 函数说明。

    key = platform.strip().lower()
    if key not in COUPLING_CALCULATORS:
        raise ConfigurationError(
            f"Unsupported coupling platform '{platform}'. Available options: {', '.join(sorted(COUPLING_CALCULATORS))}"
        )
    return COUPLING_CALCULATORS[key](inputs)
