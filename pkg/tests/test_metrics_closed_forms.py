"""共振矩阵元、附加噪声闭式与行约束：数值散射矩阵与解析表达逐项对照。"""
import math
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).resolve().parents[1]))

import numpy as np
import pytest

from src.transducer.metrics import (
    added_noise,
    added_noise_closed_form_one_stage,
    added_noise_closed_form_zero_stage,
    cooperativity,
    efficiency_closed_form_half_cavity,
    efficiency_closed_form_one_stage,
    efficiency_lorentzian,
    internal_efficiency,
    onres_matrix_elements,
    onres_matrix_elements_zero_stage,
    row_constraints,
    susceptibilities,
)
from src.transducer.model import TWO_PI, ModeSpec, NoiseEnvironment, PumpSpec, build_one_stage, build_zero_stage
from src.transducer.physics import bose_occupation
from src.transducer.scattering import scattering_matrix
from src.utils.errors import ConfigurationError, DomainError

OMEGA = TWO_PI * 5.0e9
OPTICAL = TWO_PI * 1.94e14


def _physical_one_stage(rng: np.random.Generator) -> tuple:
    """GHz 量级、带有限温热浴的共振一级链，返回 (模型, 噪声环境)。"""
    e = ModeSpec(
        "microwave",
        OMEGA,
        TWO_PI * rng.uniform(1e4, 5e5),
        TWO_PI * rng.uniform(2e5, 2e6),
        bath_temperature=float(rng.uniform(0.02, 0.2)),
    )
    m = ModeSpec("intermediate", OMEGA, TWO_PI * rng.uniform(1e3, 5e4), 0.0, bath_temperature=float(rng.uniform(0.05, 0.5)))
    o = ModeSpec("optical", OPTICAL, TWO_PI * rng.uniform(1e5, 1e6), TWO_PI * rng.uniform(5e5, 5e6))
    g = TWO_PI * rng.uniform(1e3, 2e5)
    zeta = TWO_PI * rng.uniform(1e3, 2e5)
    model = build_one_stage(e, m, o, g, zeta, PumpSpec.from_detuning(-OMEGA, OPTICAL))
    return model, NoiseEnvironment(waveguide_temperature=float(rng.uniform(0.01, 0.1)))


def test_one_stage_matrix_elements_match_scattering(random_one_stage) -> None:
    rng = np.random.default_rng(314)
    for _ in range(30):
        model = random_one_stage(rng)
        omega = model.resonance_frequency
        response = susceptibilities(model, omega)
        elements = onres_matrix_elements(response.c_em, response.c_om, response.eta_e, response.eta_o)
        power = np.abs(scattering_matrix(model, omega).S) ** 2
        # 端口顺序 e_in, e_th, m_th, o_in, o_th。
        expected = {"s41": power[3, 0], "s42": power[3, 1], "s43": power[3, 2], "s11": power[0, 0], "s12": power[0, 1], "s13": power[0, 2]}
        for name, value in expected.items():
            assert getattr(elements, name) == pytest.approx(value, rel=1e-9, abs=1e-13), name


def test_zero_stage_matrix_elements_match_scattering(random_zero_stage) -> None:
    rng = np.random.default_rng(2718)
    for _ in range(30):
        model = random_zero_stage(rng)
        omega = model.resonance_frequency
        response = susceptibilities(model, omega)
        elements = onres_matrix_elements_zero_stage(response.c_eo, response.eta_e, response.eta_o)
        power = np.abs(scattering_matrix(model, omega).S) ** 2
        # 端口顺序 e_in, e_th, o_in, o_th。
        assert elements.s31 == pytest.approx(power[2, 0], rel=1e-9, abs=1e-13)
        assert elements.s32 == pytest.approx(power[2, 1], rel=1e-9, abs=1e-13)
        assert elements.s11 == pytest.approx(power[0, 0], rel=1e-9, abs=1e-13)
        assert elements.s12 == pytest.approx(power[0, 1], rel=1e-9, abs=1e-13)


def test_row_constraints_are_unity(random_one_stage, random_zero_stage) -> None:
    rng = np.random.default_rng(5)
    for _ in range(20):
        for model in (random_one_stage(rng), random_zero_stage(rng)):
            omega = model.resonance_frequency + rng.uniform(-1.0, 1.0)
            np.testing.assert_allclose(row_constraints(scattering_matrix(model, omega).S), 1.0, atol=1e-10)


def test_closed_form_row_sums_are_consistent() -> None:
    """解析矩阵元自身满足光学行与微波行的求和约束（光学热浴项补足）。"""
    c_em, c_om, eta_e, eta_o = 2.0, 3.0, 0.8, 0.7
    elements = onres_matrix_elements(c_em, c_om, eta_e, eta_o)
    d = 1.0 + c_em + c_om
    s11_s12_s13 = elements.s11 + elements.s12 + elements.s13
    s14 = eta_e * eta_o * 4.0 * c_em * c_om / d**2
    s15 = eta_e * (1.0 - eta_o) * 4.0 * c_em * c_om / d**2
    assert s11_s12_s13 + s14 + s15 == pytest.approx(1.0, rel=1e-12)


def test_one_stage_noise_matches_closed_form() -> None:
    rng = np.random.default_rng(1234)
    for _ in range(20):
        model, env = _physical_one_stage(rng)
        omega = model.resonance_frequency
        response = susceptibilities(model, omega)
        e, m, _ = model.modes
        n_wg = bose_occupation(omega, env.waveguide_temperature)
        n_e = bose_occupation(e.frequency, e.bath_temperature)
        n_m = bose_occupation(m.frequency, m.bath_temperature)
        expected = added_noise_closed_form_one_stage(response.c_em, response.c_om, response.eta_e, response.eta_o, n_wg, n_e, n_m)
        noise = added_noise(model, omega, env)
        assert noise.n_add_o == pytest.approx(expected[0], rel=1e-7)
        assert noise.n_add_e == pytest.approx(expected[1], rel=1e-7)
        assert noise.eta == pytest.approx(
            efficiency_closed_form_one_stage(response.c_em, response.c_om, response.eta_e, response.eta_o), rel=1e-8
        )


def test_zero_stage_noise_matches_closed_form() -> None:
    rng = np.random.default_rng(4321)
    for _ in range(20):
        e = ModeSpec(
            "microwave",
            OMEGA,
            TWO_PI * rng.uniform(1e4, 5e5),
            TWO_PI * rng.uniform(2e5, 2e6),
            bath_temperature=float(rng.uniform(0.02, 0.2)),
        )
        o = ModeSpec("optical", OPTICAL, TWO_PI * rng.uniform(1e5, 1e6), TWO_PI * rng.uniform(5e5, 5e6))
        model = build_zero_stage(e, o, TWO_PI * rng.uniform(1e4, 1e6), PumpSpec.from_detuning(-OMEGA, OPTICAL))
        env = NoiseEnvironment(waveguide_temperature=float(rng.uniform(0.01, 0.1)))
        response = susceptibilities(model, OMEGA)
        n_wg = bose_occupation(OMEGA, env.waveguide_temperature)
        n_e = bose_occupation(OMEGA, e.bath_temperature)
        expected = added_noise_closed_form_zero_stage(response.c_eo, response.eta_e, response.eta_o, n_wg, n_e)
        noise = added_noise(model, OMEGA, env)
        assert noise.n_add_o == pytest.approx(expected[0], rel=1e-7)
        assert noise.n_add_e == pytest.approx(expected[1], rel=1e-7)


def test_noise_is_infinite_without_conversion(one_stage) -> None:
    model = one_stage(g=0.0)
    noise = added_noise(model, model.resonance_frequency, NoiseEnvironment())
    assert noise.eta == 0.0
    assert math.isinf(noise.n_add_o) and math.isinf(noise.n_add_e)
    assert added_noise_closed_form_one_stage(0.0, 1.0, 1.0, 1.0, 0.1, 0.1, 0.1) == (math.inf, math.inf)
    assert added_noise_closed_form_zero_stage(0.0, 1.0, 1.0, 0.1, 0.1) == (math.inf, math.inf)


def test_zero_temperature_gives_zero_noise(one_stage) -> None:
    model = one_stage()
    noise = added_noise(model, model.resonance_frequency, NoiseEnvironment(waveguide_temperature=0.0))
    assert noise.n_add_o == 0.0
    assert noise.n_add_e == 0.0


def test_closed_form_limits_and_domain() -> None:
    assert efficiency_closed_form_one_stage(1.0, 1.0, 1.0, 1.0) == pytest.approx(4.0 / 9.0)
    # C_em = C_om = C 时 η 随 C 增大趋近于 1。
    assert efficiency_closed_form_one_stage(1e6, 1e6, 1.0, 1.0) == pytest.approx(1.0, abs=1e-5)
    assert efficiency_closed_form_half_cavity(1.0, 1.0, 1.0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        efficiency_closed_form_one_stage(-1.0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        efficiency_closed_form_one_stage(1.0, 1.0, 1.2, 1.0)
    with pytest.raises(DomainError):
        cooperativity(1.0, 0.0, 1.0)
    assert internal_efficiency(0.25, 0.5, 1.0) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        internal_efficiency(0.25, 0.0, 1.0)


def test_lorentzian_agrees_on_resonance(random_one_stage) -> None:
    rng = np.random.default_rng(11)
    for _ in range(20):
        model = random_one_stage(rng)
        omega = model.resonance_frequency
        response = susceptibilities(model, omega)
        expected = efficiency_closed_form_one_stage(response.c_em, response.c_om, response.eta_e, response.eta_o)
        assert efficiency_lorentzian(model, omega) == pytest.approx(expected, rel=1e-10, abs=1e-14)


def test_lorentzian_needs_one_stage(zero_stage) -> None:
    with pytest.raises(ConfigurationError):
        efficiency_lorentzian(zero_stage(), 10.0)


def test_susceptibility_fields_by_topology(one_stage, zero_stage) -> None:
    one = susceptibilities(one_stage(), 10.0)
    assert one.c_eo is None
    assert set(one.cooperativities()) == {"c_em", "c_om"}
    assert one.gamma_em == pytest.approx(one.c_em * 0.5)  # 共振处 Γ_em = C_em κ_m。
    zero = susceptibilities(zero_stage(), 10.0)
    assert zero.c_em is None and zero.chi_m is None
    assert set(zero.cooperativities()) == {"c_eo"}
