"""工具配置的层级合并、Profile、.env 与校验测试。"""  # 模块说明。
from __future__ import annotations

from pathlib import Path

import sys

sys.path.append(str(Path(__file__).resolve().parents[1]))  # 将仓库根目录加入 sys.path 以导入 src.* 模块。

import pytest

from src.utils.config import (
    ConfigError,
    load_and_merge_config,
    parse_cli_set_items,
    render_effective_config,
    save_config,
)


def _write_yaml(path: Path, text: str) -> None:
    """辅助函数：将 YAML 字符串写入指定路径。"""  # 函数说明。
    path.write_text(text, encoding="utf-8")


def test_layer_precedence(tmp_path: Path) -> None:
    """验证默认→用户→ENV→CLI→--set 的覆盖顺序。"""  # 测试说明。
    user_cfg = tmp_path / "user.yaml"
    _write_yaml(
        user_cfg,
        """solver:
  residual_tol: 1.0e-11
bandwidth:
  scan_points: 501
  window_factor: 6
""",
    )
    environ = {
        "TRANSDUCER_LAB_BANDWIDTH__SCAN_POINTS": "601",  # 环境层覆盖用户层。
        "TRANSDUCER_LAB_LOG_LEVEL": "debug",
        "UNRELATED_VARIABLE": "ignored",
    }
    bundle = load_and_merge_config(
        cli_overrides={"threads": 2},
        cli_set_overrides=parse_cli_set_items(["bandwidth.scan_points=701"]),
        config_path=str(user_cfg),
        environ=environ,
    )
    config = bundle.config
    assert config["bandwidth"]["scan_points"] == 701  # --set 最高优先级。
    assert config["bandwidth"]["window_factor"] == 6  # 用户层覆盖默认值。
    assert config["solver"]["residual_tol"] == pytest.approx(1e-11)
    assert config["log_level"] == "DEBUG"  # 环境层生效并被规范化为大写。
    assert config["threads"] == 2
    assert bundle.threads == 2
    assert bundle.sources["bandwidth"]["scan_points"] == "cli:set"
    assert bundle.sources["log_level"].startswith("env:")
    assert bundle.sources["solver"]["residual_tol"].startswith("user:")


def test_profile_application_and_override() -> None:
    """quick profile 生效，且 --set 仍可继续覆盖。"""  # 测试说明。
    bundle = load_and_merge_config(
        cli_set_overrides=parse_cli_set_items(["capacity.points=99"]),
        profile_name="quick",
        environ={},
    )
    config = bundle.config
    assert config["bandwidth"]["scan_points"] == 401  # profile 写入粗网格。
    assert config["capacity"]["points"] == 99  # --set 覆盖 profile。
    assert config["sweep"]["cem_range"] == "1e-2:1e3:20"
    assert config["meta"]["profile"] == "quick"
    assert bundle.profile_source == "profile:quick"


def test_unknown_profile_rejected() -> None:
    with pytest.raises(ConfigError) as exc:
        load_and_merge_config(profile_name="does-not-exist", environ={})
    assert "does-not-exist" in str(exc.value)


def test_env_file_support(tmp_path: Path) -> None:
    """验证用户配置同目录下的 .env 会被解析并应用。"""  # 测试说明。
    config_dir = tmp_path / "cfg"
    config_dir.mkdir()
    user_cfg = config_dir / "user.yaml"
    _write_yaml(user_cfg, "threads: 1\n")
    (config_dir / ".env").write_text(
        "# comment\nTRANSDUCER_LAB_ORACLE__STEP_FACTOR=120\nTRANSDUCER_LAB_CATALOG__ETA_E='0.5'\n",
        encoding="utf-8",
    )
    bundle = load_and_merge_config(config_path=str(user_cfg), environ={})
    assert bundle.config["oracle"]["step_factor"] == 120
    assert bundle.config["catalog"]["eta_e"] == pytest.approx(0.5)
    assert bundle.config["threads"] == 1


def test_process_environment_beats_env_file(tmp_path: Path) -> None:
    config_dir = tmp_path / "cfg"
    config_dir.mkdir()
    user_cfg = config_dir / "user.yaml"
    _write_yaml(user_cfg, "{}\n")
    (config_dir / ".env").write_text("TRANSDUCER_LAB_THREADS=3\n", encoding="utf-8")
    bundle = load_and_merge_config(config_path=str(user_cfg), environ={"TRANSDUCER_LAB_THREADS": "5"})
    assert bundle.config["threads"] == 5


@pytest.mark.parametrize(
    "text, key",
    [
        ("threads: -1\n", "threads"),
        ("capacity:\n  points: 1\n", "capacity.points"),
        ("bandwidth:\n  scan_points: 3\n", "bandwidth.scan_points"),
        ("oracle:\n  step_factor: 0\n", "oracle.step_factor"),
        ("catalog:\n  eta_e: 1.5\n", "catalog.eta_e"),
        ("catalog:\n  bandwidth_ratio_bounds: [5, 1]\n", "catalog.bandwidth_ratio_bounds"),
        ("log_format: xml\n", "log_format"),
    ],
)
def test_validation_failure(tmp_path: Path, text: str, key: str) -> None:
    """非法取值应抛出 ConfigError，消息包含点分键名与来源。"""  # 测试说明。
    bad_cfg = tmp_path / "bad.yaml"
    _write_yaml(bad_cfg, text)
    with pytest.raises(ConfigError) as exc:
        load_and_merge_config(config_path=str(bad_cfg), environ={})
    message = str(exc.value)
    assert key in message
    assert "user:" in message


def test_invalid_yaml_reported(tmp_path: Path) -> None:
    bad_cfg = tmp_path / "broken.yaml"
    _write_yaml(bad_cfg, "solver: [unclosed\n")
    with pytest.raises(ConfigError):
        load_and_merge_config(config_path=str(bad_cfg), environ={})


def test_missing_explicit_config_path(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        load_and_merge_config(config_path=str(tmp_path / "absent.yaml"), environ={})


def test_set_items_parse_lists_and_reject_garbage() -> None:
    overrides = parse_cli_set_items(["catalog.bandwidth_ratio_bounds=[0.5, 2]", "progress=false"])
    assert overrides == {"catalog": {"bandwidth_ratio_bounds": [0.5, 2]}, "progress": False}
    with pytest.raises(ConfigError):
        parse_cli_set_items(["no-equals-sign"])


def test_render_and_save_snapshot(tmp_path: Path) -> None:
    """render_effective_config 与 save_config 应生成带来源注释的 YAML 文本。"""  # 测试说明。
    bundle = load_and_merge_config(profile_name="precise", environ={})
    snapshot = render_effective_config(bundle, include_sources=True)
    assert "profile" in snapshot
    assert "profile:precise" in snapshot  # 被 profile 覆盖的叶子带来源注释。
    target_path = tmp_path / "snapshot.yaml"
    save_config(bundle, target_path)
    saved_text = target_path.read_text(encoding="utf-8")
    assert "step_factor" in saved_text
    reloaded = load_and_merge_config(config_path=str(target_path), environ={})
    assert reloaded.config["oracle"]["step_factor"] == 160
