"""换能链路的领域类型与构造器：模式、耦合、泵浦、噪声环境以及零级/一级/一般线性链模型。

频率统一存为实验室角频率 [rad/s]；光学模式在泵浦旋转系下的对角元由构造器根据 PumpSpec 计算。
"""  # 模块说明。
from __future__ import annotations  # 允许在注解中使用 X | None 语法。

# json 读取模型配置文件，math 做有限性检查与 2π 换算。
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

# numpy 用于噪声占据数向量。
import numpy as np

from src.transducer.physics import CouplingInputs, bose_occupation, compute_coupling
from src.utils.errors import ConfigurationError, InvalidParameterError
from src.utils.schema import validate_model_config

TWO_PI = 2.0 * math.pi  # Hz 到 rad/s 的换算因子。
MODE_LABELS = ("microwave", "intermediate", "optical", "custom")  # 允许的模式标签。
PORT_CLASSES = ("itinerant", "bath")  # 端口类别：行波端口与内禀损耗浴。
_SHORT_NAMES = {"microwave": "e", "intermediate": "m", "optical": "o", "custom": "c"}  # 端口标签前缀。


def _finite(value: float, field_name: str) -> float:
    """转为 float 并拒绝 NaN 与 inf，错误里带上字段名。"""  # 工具函数说明。
    number = float(value)
    if not math.isfinite(number):
        raise InvalidParameterError(field_name, f"must be finite, got {value!r}")
    return number


@dataclass(frozen=True)
class ModeSpec:
    """单个玻色模式：微波腔、中间模式（声子/磁振子）或光学腔。"""  # 类说明。

    label: str  # microwave/intermediate/optical/custom。
    frequency: float  # 共振角频率 ω_μ [rad/s]。
    kappa_int: float  # 内禀损耗 κ_μ,i [rad/s]。
    kappa_ext: float  # 外部耦合 κ_μ,e [rad/s]，0 表示没有行波端口。
    bath_temperature: float = 0.0  # 热浴温度 T_μ [K]。

    def __post_init__(self) -> None:
        # 逐字段校验，错误携带字段名，便于定位到配置文件中的具体键。
        if self.label not in MODE_LABELS:
            raise InvalidParameterError("label", f"must be one of {MODE_LABELS}, got {self.label!r}")
        if _finite(self.frequency, "frequency") <= 0.0:
            raise InvalidParameterError("frequency", f"{self.label} mode frequency must be positive")
        if _finite(self.kappa_int, "kappa_int") < 0.0:
            raise InvalidParameterError("kappa_int", f"{self.label} intrinsic loss must be non-negative")
        if _finite(self.kappa_ext, "kappa_ext") < 0.0:
            raise InvalidParameterError("kappa_ext", f"{self.label} external coupling must be non-negative")
        # 内禀与外部损耗都为 0 的模式没有稳态。
        if self.kappa <= 0.0:
            raise InvalidParameterError("kappa", f"{self.label} total loss kappa_int + kappa_ext must be positive")
        if _finite(self.bath_temperature, "bath_temperature") < 0.0:
            raise InvalidParameterError("bath_temperature", f"{self.label} bath temperature must be non-negative")

    @property
    def kappa(self) -> float:
        """总损耗 κ_μ = κ_μ,i + κ_μ,e。"""  # 方法说明。
        return self.kappa_int + self.kappa_ext

    @property
    def external_ratio(self) -> float:
        """外部端口比 η_μ = κ_μ,e / κ_μ。"""  # 方法说明。
        return self.kappa_ext / self.kappa


@dataclass(frozen=True)
class CouplingSpec:
    """相邻两模式间的分束器型耦合，强度取实非负。"""  # 类说明。

    mode_a: int
    mode_b: int
    strength: float  # g、ζ 或 G_eo [rad/s]。
    # 双模压缩等其他耦合类型不建模。
    kind: str = "beam_splitter"

    def __post_init__(self) -> None:
        if self.kind != "beam_splitter":
            raise ConfigurationError(f"unsupported coupling kind {self.kind!r}; only beam_splitter chains are modelled")
        # 拓扑（是否相邻、是否成链）在 build_chain 中统一检查。
        if self.mode_a == self.mode_b:
            raise ConfigurationError(f"coupling connects mode {self.mode_a} to itself")
        if _finite(self.strength, "strength") < 0.0:
            raise InvalidParameterError("strength", "coupling strength must be non-negative")

    @property
    def link(self) -> Tuple[int, int]:
        # 无序对，(1, 0) 与 (0, 1) 视为同一链路。
        return (min(self.mode_a, self.mode_b), max(self.mode_a, self.mode_b))


@dataclass(frozen=True)
class PumpSpec:
    """红失谐泵浦：δω_o = ω_p − ω_o < 0。"""  # 类说明。

    pump_frequency: float  # ω_p [rad/s]。
    detuning: float  # δω_o [rad/s]。
    # 只接受红边带。
    sideband: str = "red"

    def __post_init__(self) -> None:
        if self.sideband != "red":
            raise ConfigurationError(f"only red-sideband pumps are supported, got {self.sideband!r}")
        _finite(self.pump_frequency, "pump_frequency")
        # 蓝失谐对应放大过程，不在本模型范围内。
        if _finite(self.detuning, "detuning") >= 0.0:
            raise ConfigurationError(
                f"pump detuning {self.detuning!r} rad/s is not red-detuned; blue or resonant pumps are rejected"
            )

    @classmethod
    def from_frequency(cls, pump_frequency: float, optical_frequency: float) -> "PumpSpec":
        """由泵浦频率推出失谐 δω_o = ω_p − ω_o。"""  # 方法说明。
        return cls(pump_frequency=pump_frequency, detuning=pump_frequency - optical_frequency)

    @classmethod
    def from_detuning(cls, detuning: float, optical_frequency: float) -> "PumpSpec":
        """由失谐反推泵浦频率。"""  # 方法说明。
        return cls(pump_frequency=optical_frequency + detuning, detuning=detuning)


@dataclass(frozen=True)
class PortSpec:
    """B 矩阵的一列：一个行波端口或一个损耗浴。"""  # 类说明。

    index: int  # 0 起始的列号。
    mode: int  # 所属模式序号。
    rate: float  # 耦合速率 [rad/s]，列的 ℓ² 范数为 √rate。
    port_class: str  # itinerant 或 bath。
    label: str  # 例如 e_in、m_th。


@dataclass(frozen=True)
class NoiseEnvironment:
    """噪声环境：波导温度与光学占据数开关；各模式浴温度取自 ModeSpec。"""  # 类说明。

    waveguide_temperature: float = 0.0  # 两端行波端口所接波导的温度 [K]。
    optical_occupancy_forced_zero: bool = True  # 光学频率下热占据数可忽略，默认直接置 0。

    def __post_init__(self) -> None:
        if _finite(self.waveguide_temperature, "waveguide_temperature") < 0.0:
            raise InvalidParameterError("waveguide_temperature", "must be non-negative")

    def occupancies(self, model: "ChainModel", omega: float) -> np.ndarray:
        """返回每个输入端口的热占据数向量，顺序与端口一致。"""  # 方法说明。

        # 光学模式总在链尾。
        optical_index = model.n_modes - 1
        values = np.zeros(model.n_ports)
        for port in model.ports:
            mode = model.modes[port.mode]
            # 光学端口保持 0。
            if port.mode == optical_index and self.optical_occupancy_forced_zero:
                continue
            # 热浴端口按所属模式的频率与浴温度计算。
            if port.port_class == "bath":
                values[port.index] = bose_occupation(mode.frequency, mode.bath_temperature)
            elif port.mode == 0:  # 微波输入端口按信号频率与波导温度计算。
                signal = omega if omega > 0.0 else mode.frequency
                values[port.index] = bose_occupation(signal, self.waveguide_temperature)
            else:
                values[port.index] = bose_occupation(mode.frequency, self.waveguide_temperature)
        return values


@dataclass(frozen=True)
class ChainModel:
    """已校验的换能链：微波端在前、光学端在后，相邻模式间各有一条耦合。"""  # 类说明。

    modes: Tuple[ModeSpec, ...]
    couplings: Tuple[CouplingSpec, ...]  # 按链路顺序排列，第 k 条连接模式 k 与 k+1。
    pump: PumpSpec
    # 由 build_chain 生成，不由调用方填写。
    ports: Tuple[PortSpec, ...] = field(default=())

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def n_ports(self) -> int:
        return len(self.ports)

    @property
    def stage_count(self) -> int:
        """中间模式数目：0 为零级，1 为一级换能。"""  # 方法说明。
        return self.n_modes - 2

    @property
    def kind(self) -> str:
        if self.stage_count == 0:
            return "zero-stage"
        if self.stage_count == 1:
            return "one-stage"
        return f"{self.stage_count}-stage"

    @property
    def link_strengths(self) -> Tuple[float, ...]:
        return tuple(coupling.strength for coupling in self.couplings)

    @property
    def resonance_frequency(self) -> float:
        """η(ω) 峰值附近的参考频率：一级链取 ω_m，其余取 ω_e。"""  # 方法说明。
        if self.stage_count == 1:
            return self.modes[1].frequency
        return self.modes[0].frequency

    @property
    def port_map(self) -> Dict[int, List[PortSpec]]:
        # 模式序号到端口列表；没有端口的模式对应空列表。
        mapping: Dict[int, List[PortSpec]] = {index: [] for index in range(self.n_modes)}
        for port in self.ports:
            mapping[port.mode].append(port)
        return mapping

    def itinerant_ports(self) -> List[PortSpec]:
        # 可直接测量的行波端口，按列号排列。
        return [port for port in self.ports if port.port_class == "itinerant"]

    @property
    def input_port(self) -> int:
        """微波行波输入端口的列号。"""  # 方法说明。
        return self._itinerant_port_of(0)

    @property
    def output_port(self) -> int:
        """光学行波输出端口的列号。"""  # 方法说明。
        return self._itinerant_port_of(self.n_modes - 1)

    @property
    def conversion_ports(self) -> Tuple[int, int]:
        """(光学输出, 微波输入)，η = |S[out, in]|²。"""  # 方法说明。
        return (self.output_port, self.input_port)

    def _itinerant_port_of(self, mode_index: int) -> int:
        for port in self.ports:
            if port.mode == mode_index and port.port_class == "itinerant":
                return port.index
        raise ConfigurationError(f"mode {mode_index} has no itinerant port")


def _port_labels(modes: Sequence[ModeSpec]) -> List[str]:
    """端口标签前缀：同类模式只出现一次时用 e/m/o，重复时追加序号（m1、m2）。"""  # 工具函数说明。
    # 先统计各标签出现次数，再逐个编号。
    counts: Dict[str, int] = {}
    for mode in modes:
        counts[mode.label] = counts.get(mode.label, 0) + 1
    seen: Dict[str, int] = {}
    names = []
    for mode in modes:
        short = _SHORT_NAMES[mode.label]
        seen[mode.label] = seen.get(mode.label, 0) + 1
        names.append(f"{short}{seen[mode.label]}" if counts[mode.label] > 1 else short)
    return names


def _build_ports(modes: Sequence[ModeSpec]) -> Tuple[PortSpec, ...]:
    """按模式顺序分配端口：端点模式先行波后热浴，内部模式仅热浴；内部行波端口追加在末尾。"""  # 工具函数说明。

    names = _port_labels(modes)
    last = len(modes) - 1
    ports: List[PortSpec] = []
    for index, mode in enumerate(modes):
        # 两端模式：行波端口在前，热浴端口在后。
        if index in (0, last):
            ports.append(PortSpec(len(ports), index, mode.kappa_ext, "itinerant", f"{names[index]}_in"))
        ports.append(PortSpec(len(ports), index, mode.kappa_int, "bath", f"{names[index]}_th"))
    # 内部模式的行波端口追加在末尾，一级换能的端口顺序因此不变。
    for index, mode in enumerate(modes):
        if 0 < index < last and mode.kappa_ext > 0.0:
            ports.append(PortSpec(len(ports), index, mode.kappa_ext, "itinerant", f"{names[index]}_in"))
    return tuple(ports)


def _order_couplings(n_modes: int, couplings: Iterable[CouplingSpec]) -> Tuple[CouplingSpec, ...]:
    """检查耦合恰好构成 0-1-…-(n−1) 的路径，并按链路顺序返回。"""  # 工具函数说明。
    by_link: Dict[Tuple[int, int], CouplingSpec] = {}
    for coupling in couplings:
        low, high = coupling.link
        # 越界、非相邻与重复链路都是配置错误。
        if low < 0 or high >= n_modes:
            raise ConfigurationError(f"coupling ({coupling.mode_a}, {coupling.mode_b}) references a mode outside 0..{n_modes - 1}")
        if high - low != 1:
            raise ConfigurationError(f"coupling ({coupling.mode_a}, {coupling.mode_b}) is not between adjacent modes")
        if (low, high) in by_link:
            raise ConfigurationError(f"duplicate coupling between modes {low} and {high}")
        by_link[(low, high)] = coupling
    # 每条相邻链路都必须出现，缺一条链就断开。
    missing = [(k, k + 1) for k in range(n_modes - 1) if (k, k + 1) not in by_link]
    if missing:
        raise ConfigurationError(f"couplings do not form a path over the modes; missing links {missing}")
    return tuple(by_link[(k, k + 1)] for k in range(n_modes - 1))


def build_chain(modes: Sequence[ModeSpec], couplings: Sequence[CouplingSpec], pump: PumpSpec) -> ChainModel:
    """构造一般线性链；两端模式必须具备行波端口。"""  # 函数说明。

    modes = tuple(modes)
    if len(modes) < 2:
        raise ConfigurationError(f"a transduction chain needs at least two modes, got {len(modes)}")
    # 两端缺少行波端口时无法定义转换效率。
    for end, name in ((modes[0], "first"), (modes[-1], "last")):
        if end.kappa_ext <= 0.0:
            raise ConfigurationError(f"{name} mode ({end.label}) has no itinerant port: kappa_ext must be positive")
    # 泵浦的频率与失谐必须自洽。
    expected = modes[-1].frequency + pump.detuning
    if abs(pump.pump_frequency - expected) > 1e-9 * max(modes[-1].frequency, 1.0):
        raise ConfigurationError("pump frequency and detuning disagree with the optical mode frequency")
    ordered = _order_couplings(len(modes), couplings)
    return ChainModel(modes=modes, couplings=ordered, pump=pump, ports=_build_ports(modes))


def build_one_stage(e: ModeSpec, m: ModeSpec, o: ModeSpec, g: float, zeta: float, pump: PumpSpec) -> ChainModel:
    """一级换能：微波腔 → 中间模式 → 光学腔，端口顺序 (e_in, e_th, m_th, o_in, o_th)。"""  # 函数说明。

    if m.kappa_ext != 0.0:
        raise ConfigurationError("intermediate mode must have kappa_ext = 0 in a one-stage build (bath port only)")
    couplings = (CouplingSpec(0, 1, g), CouplingSpec(1, 2, zeta))
    return build_chain((e, m, o), couplings, pump)


def build_zero_stage(e: ModeSpec, o: ModeSpec, g_eo: float, pump: PumpSpec) -> ChainModel:
    """零级换能：微波腔直接耦合光学腔，端口顺序 (e_in, e_th, o_in, o_th)。"""  # 函数说明。

    return build_chain((e, o), (CouplingSpec(0, 1, g_eo),), pump)


def with_couplings(model: ChainModel, strengths: Sequence[float]) -> ChainModel:
    """返回链路强度替换后的新模型，其余参数保持不变。"""  # 函数说明。

    if len(strengths) != len(model.couplings):
        raise ConfigurationError(f"expected {len(model.couplings)} coupling strengths, got {len(strengths)}")
    # 端口由线宽决定，与耦合强度无关，直接沿用。
    couplings = tuple(replace(coupling, strength=float(value)) for coupling, value in zip(model.couplings, strengths))
    return replace(model, couplings=couplings)


def _mode_from_payload(entry: Dict[str, Any]) -> ModeSpec:
    return ModeSpec(
        # 文件中的 Hz 在此换算为 rad/s。
        label=entry.get("label", "custom"),
        frequency=TWO_PI * entry["frequency_hz"],
        kappa_int=TWO_PI * entry["kappa_int_hz"],
        kappa_ext=TWO_PI * entry["kappa_ext_hz"],
        bath_temperature=entry.get("bath_temperature_k", 0.0),
    )


def _coupling_from_payload(entry: Dict[str, Any]) -> CouplingSpec:
    if "strength_hz" in entry:
        return CouplingSpec(entry["a"], entry["b"], TWO_PI * entry["strength_hz"])
    # 平台公式直接以 SI 单位给出 rad/s，不再乘 2π；取模值作为分束器强度。
    strength = compute_coupling(entry["platform"], CouplingInputs.from_mapping(entry["inputs"]))
    return CouplingSpec(entry["a"], entry["b"], abs(strength))


def model_from_payload(payload: Dict[str, Any]) -> Tuple[ChainModel, NoiseEnvironment]:
    """把已解析的 JSON 配置转换为模型与噪声环境；Hz 到 rad/s 的换算只在这里发生。"""  # 函数说明。

    validate_model_config(payload)
    modes = [_mode_from_payload(entry) for entry in payload["modes"]]
    # 泵浦可以给频率或失谐，二者择一。
    optical_hz = payload["modes"][-1]["frequency_hz"]
    pump_payload = payload["pump"]
    if "frequency_hz" in pump_payload:
        # 先在 Hz 下求差再乘 2π，减少大数相减的舍入。
        pump = PumpSpec(
            pump_frequency=TWO_PI * pump_payload["frequency_hz"],
            detuning=TWO_PI * (pump_payload["frequency_hz"] - optical_hz),
        )
    else:
        pump = PumpSpec.from_detuning(TWO_PI * pump_payload["detuning_hz"], modes[-1].frequency)
    couplings = [_coupling_from_payload(item) for item in payload["couplings"]]
    ordered = _order_couplings(len(modes), couplings)
    # 两模式与不带行波端口的三模式走专用构造器，端口布局与其一致。
    if len(modes) == 2:
        model = build_zero_stage(modes[0], modes[1], ordered[0].strength, pump)
    elif len(modes) == 3 and modes[1].kappa_ext == 0.0:
        model = build_one_stage(modes[0], modes[1], modes[2], ordered[0].strength, ordered[1].strength, pump)
    else:
        model = build_chain(modes, ordered, pump)
    # environment 段可省略，默认零温波导并忽略光学占据数。
    environment_payload = payload.get("environment", {})
    environment = NoiseEnvironment(
        waveguide_temperature=environment_payload.get("waveguide_temperature_k", 0.0),
        optical_occupancy_forced_zero=environment_payload.get("optical_occupancy_forced_zero", True),
    )
    return model, environment


def load_model_config(path: str | Path) -> Tuple[ChainModel, NoiseEnvironment]:
    """读取 UTF-8 JSON 模型配置文件。"""  # 函数说明。

    config_path = Path(path)
    if not config_path.is_file():
        raise FileNotFoundError(f"Model config not found: {config_path}")
    with config_path.open("r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{config_path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return model_from_payload(payload)
