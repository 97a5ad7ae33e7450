"""带宽：解析展宽线宽与数值半高全宽的一致性、窗口失败与多级近似警告。"""
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).resolve().parents[1]))

import numpy as np
import pytest

from src.transducer.metrics import EvaluationSettings, bandwidth_analytic, bandwidth_numeric
from src.transducer.model import TWO_PI, CouplingSpec, ModeSpec, PumpSpec, build_chain, load_model_config, with_couplings
from src.utils.errors import ApproximationWarning, WindowError

MODELS = Path(__file__).resolve().parents[1] / "config" / "models"


def test_one_stage_numeric_tracks_analytic(one_stage) -> None:
    """κ_m ≪ κ_e、κ_o 且 C ≤ 10 时，数值 FWHM 与 κ_m(1+C_em+C_om) 相差不超过 5%。"""
    rng = np.random.default_rng(42)
    template = one_stage(omega=100.0, kappa_e=(0.0, 1.0), kappa_m=1e-3, kappa_o=(0.0, 1.0))
    for _ in range(15):
        c_em, c_om = rng.uniform(0.1, 10.0, size=2)
        g = np.sqrt(c_em * 1.0 * 1e-3 / 4.0)
        zeta = np.sqrt(c_om * 1.0 * 1e-3 / 4.0)
        model = with_couplings(template, (g, zeta))
        analytic = bandwidth_analytic(model)
        assert analytic == pytest.approx(1e-3 * (1.0 + c_em + c_om), rel=1e-12)
        assert bandwidth_numeric(model) == pytest.approx(analytic, rel=0.05)


def test_zero_stage_numeric_tracks_analytic(zero_stage) -> None:
    rng = np.random.default_rng(43)
    for _ in range(10):
        c_eo = float(rng.uniform(0.1, 10.0))
        kappa_e, kappa_o = 1.0, 1e3
        model = zero_stage(omega=100.0, kappa_e=(0.0, kappa_e), kappa_o=(0.0, kappa_o), g_eo=np.sqrt(c_eo * kappa_e * kappa_o / 4.0))
        analytic = bandwidth_analytic(model)
        assert analytic == pytest.approx(kappa_e * (1.0 + c_eo), rel=1e-12)
        assert bandwidth_numeric(model) == pytest.approx(analytic, rel=0.05)


def test_resolution_setting_refines_crossings(one_stage) -> None:
    model = one_stage(omega=100.0, kappa_e=(0.0, 1.0), kappa_m=1e-3, kappa_o=(0.0, 1.0), g=0.02, zeta=0.02)
    coarse = bandwidth_numeric(model, settings=EvaluationSettings(scan_points=201, rel_resolution=1e-3))
    fine = bandwidth_numeric(model, settings=EvaluationSettings(scan_points=201, rel_resolution=1e-9))
    assert coarse == pytest.approx(fine, rel=1e-2)


def test_magneto_optic_example_width() -> None:
    """强耦合到微波腔、弱耦合到光学腔的磁振子链：约 6.08 MHz。"""
    model, _ = load_model_config(MODELS / "zhu_like.json")
    assert bandwidth_analytic(model) / TWO_PI == pytest.approx(6.08e6, rel=1e-3)


def test_window_without_peak_raises(one_stage) -> None:
    model = one_stage(g=0.0, zeta=0.0)
    with pytest.raises(WindowError) as exc:
        bandwidth_numeric(model)
    assert exc.value.diagnostics["peak"] == 0.0


def test_window_too_narrow_raises(one_stage) -> None:
    model = one_stage(omega=100.0, kappa_e=(0.0, 1.0), kappa_m=1e-3, kappa_o=(0.0, 1.0), g=0.02, zeta=0.02)
    with pytest.raises(WindowError):
        bandwidth_numeric(model, settings=EvaluationSettings(window_factor=0.2, scan_points=101))


def test_longer_chain_warns_about_approximation() -> None:
    modes = (
        ModeSpec("microwave", 10.0, 0.0, 1.0),
        ModeSpec("intermediate", 10.0, 0.01, 0.0),
        ModeSpec("intermediate", 10.0, 0.01, 0.0),
        ModeSpec("optical", 100.0, 0.0, 1.0),
    )
    chain = build_chain(
        modes,
        [CouplingSpec(0, 1, 0.05), CouplingSpec(1, 2, 0.01), CouplingSpec(2, 3, 0.05)],
        PumpSpec.from_detuning(-10.0, 100.0),
    )
    with pytest.warns(ApproximationWarning):
        estimate = bandwidth_analytic(chain)
    assert estimate > 0.0
