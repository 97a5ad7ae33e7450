"""测试共享的模型工厂夹具；频率与速率直接以 rad/s 给出。"""
import sys
from pathlib import Path
from typing import Callable

sys.path.append(str(Path(__file__).resolve().parents[1]))  # 将仓库根目录加入 sys.path 以导入 src.* 模块。

import numpy as np
import pytest

from src.transducer.model import ChainModel, ModeSpec, PumpSpec, build_one_stage, build_zero_stage

OPTICAL_OMEGA = 1.2e3  # 光学模式频率只进入泵浦换算，不影响旋转系中的动力学。


def _one_stage(
    *,
    omega: float = 10.0,
    kappa_e: tuple[float, float] = (0.2, 1.0),
    kappa_m: float = 0.5,
    kappa_o: tuple[float, float] = (0.1, 1.0),
    g: float = 0.4,
    zeta: float = 0.4,
    omega_m: float | None = None,
    temperatures: tuple[float, float] = (0.0, 0.0),
) -> ChainModel:
    """三模式共振的一级链：ω_e = ω_m = −δ = omega。"""
    e = ModeSpec("microwave", omega, kappa_e[0], kappa_e[1], bath_temperature=temperatures[0])
    m = ModeSpec("intermediate", omega if omega_m is None else omega_m, kappa_m, 0.0, bath_temperature=temperatures[1])
    o = ModeSpec("optical", OPTICAL_OMEGA, kappa_o[0], kappa_o[1])
    return build_one_stage(e, m, o, g, zeta, PumpSpec.from_detuning(-omega, OPTICAL_OMEGA))


def _zero_stage(
    *,
    omega: float = 10.0,
    kappa_e: tuple[float, float] = (0.2, 1.0),
    kappa_o: tuple[float, float] = (0.1, 1.0),
    g_eo: float = 0.4,
) -> ChainModel:
    e = ModeSpec("microwave", omega, kappa_e[0], kappa_e[1])
    o = ModeSpec("optical", OPTICAL_OMEGA, kappa_o[0], kappa_o[1])
    return build_zero_stage(e, o, g_eo, PumpSpec.from_detuning(-omega, OPTICAL_OMEGA))


@pytest.fixture
def one_stage() -> Callable[..., ChainModel]:
    return _one_stage


@pytest.fixture
def zero_stage() -> Callable[..., ChainModel]:
    return _zero_stage


@pytest.fixture
def random_one_stage() -> Callable[[np.random.Generator], ChainModel]:
    """随机线宽与耦合的共振一级链，内禀损耗可以为 0。"""

    def build(rng: np.random.Generator) -> ChainModel:
        kappa_e = (float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.1, 2.0)))
        kappa_o = (float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.1, 2.0)))
        return _one_stage(
            omega=float(rng.uniform(5.0, 50.0)),
            kappa_e=kappa_e,
            kappa_m=float(rng.uniform(0.01, 1.0)),
            kappa_o=kappa_o,
            g=float(rng.uniform(0.0, 2.0)),
            zeta=float(rng.uniform(0.0, 2.0)),
        )

    return build


@pytest.fixture
def random_zero_stage() -> Callable[[np.random.Generator], ChainModel]:
    def build(rng: np.random.Generator) -> ChainModel:
        return _zero_stage(
            omega=float(rng.uniform(5.0, 50.0)),
            kappa_e=(float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.1, 2.0))),
            kappa_o=(float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.1, 2.0))),
            g_eo=float(rng.uniform(0.0, 2.0)),
        )

    return build
