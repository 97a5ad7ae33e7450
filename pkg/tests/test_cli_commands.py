"""通过子进程运行各 CLI 子命令的端到端测试：输出格式、退出码与库函数一致性。"""
import csv
import io
import os
import subprocess
import sys
from pathlib import Path
from typing import Dict

sys.path.append(str(Path(__file__).resolve().parents[1]))

import pytest

from src.transducer.metrics import EvaluationSettings, performance_report
from src.transducer.model import load_model_config
from src.utils.config import load_and_merge_config
from src.utils.io import format_float

ROOT = Path(__file__).resolve().parents[1]
MODELS = ROOT / "config" / "models"


def _run_cli(args: list[str], cwd: Path) -> subprocess.CompletedProcess:
    """使用当前 Python 解释器运行 CLI 并返回进程结果。"""

    env = os.environ.copy()
    env["PYTHONPATH"] = str(ROOT)
    for key in list(env):
        if key.startswith("TRANSDUCER_LAB_"):
            env.pop(key)  # 避免外部环境改变默认配置。
    command = [sys.executable, "-m", "src.cli.main", *args]
    return subprocess.run(
        command,
        cwd=cwd,
        env=env,
        check=False,
        capture_output=True,
        text=True,
    )


def _parse_report(stdout: str) -> Dict[str, str]:
    """把 key = value 行解析为字典；note 行单独忽略。"""
    values: Dict[str, str] = {}
    for line in stdout.splitlines():
        key, sep, value = line.partition(" = ")
        if sep and key != "note":
            values[key] = value
    return values


def test_report_one_stage_matches_closed_form(tmp_path: Path) -> None:
    """C_em = C_om = 1、端口比为 1 时 η 峰值为 4/9。"""
    spectrum = tmp_path / "spectrum.csv"
    result = _run_cli(
        ["report", "--model", str(MODELS / "one_stage.json"), "--profile", "quick", "--no-progress", "--out", str(spectrum)],
        cwd=tmp_path,
    )
    assert result.returncode == 0, result.stderr
    report = _parse_report(result.stdout)
    assert report["kind"] == "one-stage"
    assert float(report["eta_peak"]) == pytest.approx(4.0 / 9.0, rel=1e-9)
    assert float(report["c_em"]) == pytest.approx(1.0, rel=1e-12)
    assert float(report["c_om"]) == pytest.approx(1.0, rel=1e-12)
    assert report["c_eo"] == "NA"
    assert float(report["bandwidth_analytic_hz"]) == pytest.approx(3.0e4, rel=1e-12)
    assert float(report["omega_peak_hz"]) == pytest.approx(5.0e9, rel=1e-9)
    rows = list(csv.reader(spectrum.read_text(encoding="utf-8").splitlines()))
    assert rows[0] == ["omega_hz", "eta", "q1"]
    assert len(rows) == 1 + 401


def test_report_eta_peak_is_bitwise_library_value(tmp_path: Path) -> None:
    """CLI 打印的 η 峰值与直接调用库函数的结果逐位一致。"""
    model_path = MODELS / "zhu_like.json"
    result = _run_cli(["report", "--model", str(model_path), "--profile", "quick", "--no-progress"], cwd=tmp_path)
    assert result.returncode == 0, result.stderr
    bundle = load_and_merge_config(profile_name="quick", environ={})
    model, env = load_model_config(model_path)
    expected = performance_report(model, env, settings=EvaluationSettings.from_config(bundle.config))
    assert _parse_report(result.stdout)["eta_peak"] == format_float(expected.eta_peak)


def test_report_decoupled_chain(tmp_path: Path) -> None:
    """耦合全为零时 η 为 0，数值带宽缺失但命令仍成功。"""
    result = _run_cli(["report", "--model", str(MODELS / "decoupled.json"), "--profile", "quick", "--no-progress"], cwd=tmp_path)
    assert result.returncode == 0, result.stderr
    report = _parse_report(result.stdout)
    assert float(report["eta_peak"]) == 0.0
    assert report["bandwidth_numeric_hz"] == "NA"
    assert report["n_add_o"] == "inf"
    assert float(report["capacity_qubits_per_s"]) == 0.0
    assert "note = bandwidth_numeric unavailable" in result.stdout


def test_report_rejects_inverted_window(tmp_path: Path) -> None:
    result = _run_cli(
        ["report", "--model", str(MODELS / "one_stage.json"), "--omega-min-hz", "5.1e9", "--omega-max-hz", "4.9e9"],
        cwd=tmp_path,
    )
    assert result.returncode == 2


def test_sweep_csv_layout(tmp_path: Path) -> None:
    result = _run_cli(
        [
            "sweep",
            "--model",
            str(MODELS / "one_stage.json"),
            "--cem-range",
            "0.1:10:3",
            "--com-range",
            "1:1:1",
            "--no-progress",
        ],
        cwd=tmp_path,
    )
    assert result.returncode == 0, result.stderr
    rows = list(csv.DictReader(io.StringIO(result.stdout)))
    assert list(rows[0].keys()) == ["c_em", "c_om", "eta", "n_add_o", "n_add_e"]
    assert len(rows) == 3
    assert [float(row["c_em"]) for row in rows] == pytest.approx([0.1, 1.0, 10.0])
    assert float(rows[1]["eta"]) == pytest.approx(4.0 / 9.0, rel=1e-9)


def test_sweep_empty_range_is_usage_error(tmp_path: Path) -> None:
    result = _run_cli(
        ["sweep", "--model", str(MODELS / "one_stage.json"), "--cem-range", "1:10:0", "--com-range", "1:10:3"],
        cwd=tmp_path,
    )
    assert result.returncode == 2
    assert "ConfigurationError" in result.stderr


def test_capacity_below_threshold_is_zero(tmp_path: Path) -> None:
    """η 处处低于 1/2 时容量恰为 0。"""
    result = _run_cli(["capacity", "--model", str(MODELS / "subthreshold.json"), "--profile", "quick"], cwd=tmp_path)
    assert result.returncode == 0, result.stderr
    values = _parse_report(result.stdout)
    assert values["capacity_qubits_per_s"] == "0"
    assert values["converged"] == "true"


def test_catalog_shipped_table_passes(tmp_path: Path) -> None:
    exported = tmp_path / "catalog_export.csv"
    result = _run_cli(["catalog", "--out", str(exported)], cwd=tmp_path)
    assert result.returncode == 0, result.stderr
    rows = list(csv.DictReader(io.StringIO(result.stdout)))
    assert rows and set(rows[0].keys()) == {"ref", "check", "status", "values", "detail"}
    assert all(row["status"] in {"pass", "skipped"} for row in rows)
    zhu = [row for row in rows if row["ref"] == "zhu2020" and row["check"] == "bandwidth_ratio"]
    assert zhu and zhu[0]["status"] == "pass"
    header = exported.read_text(encoding="utf-8").splitlines()[0].split(",")
    assert header[-3:] == ["q1", "bound", "occupancy"]


def test_catalog_fabricated_efficiency_fails(tmp_path: Path) -> None:
    """报道效率超过协同度上限的记录使命令以 1 退出。"""
    catalog = tmp_path / "fake.csv"
    catalog.write_text(
        "ref,year,method,platform,freq_hz,eta,c_em,c_om,c_eo,added_noise,bandwidth_hz,temperature_k,qubit_demo\n"
        "fake2030,2030,electro-optomechanical,Si3N4,5e9,0.9,0.1,0.1,--,NR,1e6,0.01,false\n",
        encoding="utf-8",
    )
    result = _run_cli(["catalog", "--catalog", str(catalog)], cwd=tmp_path)
    assert result.returncode == 1
    assert "fake2030,cooperativity_bound,fail" in result.stdout


def test_catalog_missing_file(tmp_path: Path) -> None:
    result = _run_cli(["catalog", "--catalog", str(tmp_path / "missing.csv")], cwd=tmp_path)
    assert result.returncode == 2


def test_oracle_check_agrees_on_soft_model(tmp_path: Path) -> None:
    result = _run_cli(["oracle-check", "--model", str(MODELS / "oracle_demo.json"), "--no-progress"], cwd=tmp_path)
    assert result.returncode == 0, result.stderr
    values = _parse_report(result.stdout)
    assert values["status"] == "pass"
    assert values["frequencies"] == "5"
    assert float(values["max_deviation"]) <= 1e-6


def test_oracle_check_rejects_stiff_model(tmp_path: Path) -> None:
    """GHz 模型的速率跨度超出定步长积分器的范围，属于数值错误。"""
    result = _run_cli(["oracle-check", "--model", str(MODELS / "one_stage.json"), "--no-progress"], cwd=tmp_path)
    assert result.returncode == 3
    assert "StiffSystemError" in result.stderr


def test_matrices_written_to_directory(tmp_path: Path) -> None:
    target = tmp_path / "mats"
    result = _run_cli(["matrices", "--model", str(MODELS / "one_stage.json"), "--out", str(target)], cwd=tmp_path)
    assert result.returncode == 0, result.stderr
    for name in ("A", "B", "S"):
        assert (target / f"{name}.csv").is_file()
    s_lines = (target / "S.csv").read_text(encoding="utf-8").splitlines()
    assert s_lines[0] == ",".join(f"re_{col},im_{col}" for col in range(5))
    assert len(s_lines) == 1 + 5


def test_print_config_and_bad_override(tmp_path: Path) -> None:
    printed = _run_cli(["catalog", "--print-config"], cwd=tmp_path)
    assert printed.returncode == 0, printed.stderr
    assert "step_factor" in printed.stdout
    rejected = _run_cli(["catalog", "--set", "threads=-1"], cwd=tmp_path)
    assert rejected.returncode == 2
    assert "threads" in rejected.stderr


def test_missing_model_flag(tmp_path: Path) -> None:
    result = _run_cli(["report"], cwd=tmp_path)
    assert result.returncode == 2
    assert "--model" in result.stderr
