"""(C_em, C_om) 折衷扫描：排列顺序、与闭式一致、并行结果不变以及输入校验。"""
import sys
import time
from pathlib import Path

sys.path.append(str(Path(__file__).resolve().parents[1]))

import numpy as np
import pytest

from src.transducer.metrics import (
    SweepPoint,
    added_noise_closed_form_one_stage,
    efficiency_closed_form_one_stage,
    sweep_tradeoff,
)
from src.transducer.model import TWO_PI, ModeSpec, NoiseEnvironment, PumpSpec, build_one_stage
from src.transducer.physics import bose_occupation
from src.utils.errors import ConfigurationError, DomainError

OMEGA = TWO_PI * 5.0e9
OPTICAL = TWO_PI * 1.94e14


@pytest.fixture
def template():
    e = ModeSpec("microwave", OMEGA, TWO_PI * 2e5, TWO_PI * 1e6, bath_temperature=0.05)
    m = ModeSpec("intermediate", OMEGA, TWO_PI * 1e4, 0.0, bath_temperature=0.1)
    o = ModeSpec("optical", OPTICAL, TWO_PI * 5e5, TWO_PI * 2e6)
    return build_one_stage(e, m, o, 0.0, 0.0, PumpSpec.from_detuning(-OMEGA, OPTICAL))


def test_sweep_order_and_closed_forms(template) -> None:
    env = NoiseEnvironment(waveguide_temperature=0.03)
    cem = [0.1, 1.0, 30.0]
    com = [0.5, 5.0]
    points = sweep_tradeoff(template, cem, com, env)
    assert len(points) == 6
    assert all(isinstance(point, SweepPoint) for point in points)
    assert [(p.c_em, p.c_om) for p in points] == [(a, b) for a in cem for b in com]  # C_em 外层。
    e, m, o = template.modes
    n_wg = bose_occupation(OMEGA, 0.03)
    n_e = bose_occupation(OMEGA, 0.05)
    n_m = bose_occupation(OMEGA, 0.1)
    for point in points:
        expected_eta = efficiency_closed_form_one_stage(point.c_em, point.c_om, e.external_ratio, o.external_ratio)
        assert point.eta == pytest.approx(expected_eta, rel=1e-8)
        n_add_o, n_add_e = added_noise_closed_form_one_stage(
            point.c_em, point.c_om, e.external_ratio, o.external_ratio, n_wg, n_e, n_m
        )
        assert point.n_add_o == pytest.approx(n_add_o, rel=1e-7)
        assert point.n_add_e == pytest.approx(n_add_e, rel=1e-7)


def test_parallel_sweep_matches_serial(template) -> None:
    env = NoiseEnvironment(waveguide_temperature=0.02)
    grid = np.logspace(-1, 2, 6)
    serial = sweep_tradeoff(template, grid, grid, env, max_workers=1)
    parallel = sweep_tradeoff(template, grid, grid, env, max_workers=4)
    assert serial == parallel  # 每个点的计算与线程调度无关，逐位相同。


def test_row_callback_reports_each_row(template) -> None:
    seen = []
    sweep_tradeoff(template, [1.0, 2.0, 3.0], [1.0], NoiseEnvironment(), on_row=lambda index, _: seen.append(index))
    assert sorted(seen) == [0, 1, 2]


def test_more_cooperativity_is_not_always_better(template) -> None:
    """C_om 固定时 η 在 C_em = 1 + C_om 处取极大。"""
    com = 3.0
    cem = [1.0, 4.0, 16.0]
    etas = [point.eta for point in sweep_tradeoff(template, cem, [com], NoiseEnvironment())]
    assert etas[1] > etas[0]
    assert etas[1] > etas[2]


def test_sweep_input_validation(template, zero_stage) -> None:
    env = NoiseEnvironment()
    with pytest.raises(DomainError):
        sweep_tradeoff(template, [], [1.0], env)
    with pytest.raises(DomainError):
        sweep_tradeoff(template, [1.0], [0.0], env)
    with pytest.raises(ConfigurationError):
        sweep_tradeoff(zero_stage(), [1.0], [1.0], env)


def test_diagonal_efficiency_and_noise_trends(template) -> None:
    """沿 C_em = C_om 的对角线 η 单调上升；C_om 固定时 N_add,o 随 C_em 单调下降。"""
    grid = np.logspace(-2, 3, 12)
    points = sweep_tradeoff(template, grid, grid, NoiseEnvironment(waveguide_temperature=0.02))
    n = len(grid)
    diagonal = [points[i * n + i].eta for i in range(n)]
    assert all(b > a for a, b in zip(diagonal, diagonal[1:]))
    column = [points[i * n + 3].n_add_o for i in range(n)]
    assert all(b < a for a, b in zip(column, column[1:]))


def test_full_grid_peak_follows_stationarity() -> None:
    """η_e = η_o = 1 时 50×50 对数网格在 5 s 内完成；每个 C_om 行的 η 峰值落在 C_em = 1 + C_om 一格之内。"""
    e = ModeSpec("microwave", OMEGA, 0.0, TWO_PI * 1e6, bath_temperature=0.05)
    m = ModeSpec("intermediate", OMEGA, TWO_PI * 1e4, 0.0, bath_temperature=0.1)
    o = ModeSpec("optical", OPTICAL, 0.0, TWO_PI * 2e6)
    lossless = build_one_stage(e, m, o, 0.0, 0.0, PumpSpec.from_detuning(-OMEGA, OPTICAL))
    grid = np.logspace(-2, 3, 50)
    cell = np.log10(grid[1] / grid[0])

    start = time.perf_counter()
    points = sweep_tradeoff(lossless, grid, grid, NoiseEnvironment(waveguide_temperature=0.02), max_workers=4)
    assert time.perf_counter() - start < 5.0
    assert len(points) == 2500

    n = len(grid)
    eta = np.array([point.eta for point in points]).reshape(n, n)  # eta[i, j]：第 i 个 C_em、第 j 个 C_om。
    for j in (0, 10, 20, 30, 40, 49):
        best = grid[int(np.argmax(eta[:, j]))]
        assert abs(np.log10(best) - np.log10(1.0 + grid[j])) <= cell + 1e-12
    assert np.all(np.diff(np.diagonal(eta)) > 0.0)

    n_add_o = np.array([point.n_add_o for point in points]).reshape(n, n)
    for j in (5, 25, 45):
        assert np.all(np.diff(n_add_o[:, j]) < 0.0)
