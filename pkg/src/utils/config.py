"""工具配置：默认→用户→Profile→.env→环境变量→CLI→--set 分层加载，带来源追踪、校验与快照导出。

这里只管工具行为（日志、求解容差、扫描网格、目录检查假设等）；器件物理参数放在独立的模型 JSON 中。
"""  # 模块说明。
from __future__ import annotations

import copy
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping

import yaml

from src.utils.concurrency import resolve_workers
from src.utils.errors import ConfigurationError
from src.utils.io import atomic_write_text

ENV_PREFIX = "TRANSDUCER_LAB_"  # 只解析带此前缀的环境变量，双下划线表示层级。
LOG_FORMATS = ("human", "jsonl")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class ConfigBundle:
    """合并后的配置、与之同构的来源树以及生效的 Profile。"""  # 数据类说明。

    config: Dict[str, Any]
    sources: Dict[str, Any]  # 叶子为 "default:..."、"env:..."、"cli:args" 等标签。
    profile: str | None
    profile_source: str | None

    @property
    def threads(self) -> int:
        """解析后的线程数，0 表示 min(32, cpu+4)。"""
        return resolve_workers(int(self.config.get("threads", 0) or 0))


class ConfigError(ConfigurationError):
    """配置校验失败，消息中包含点分键名与来源层。"""  # 自定义异常说明。


def _project_root() -> Path:
    return Path(__file__).resolve().parents[2]  # src/utils 上两级即仓库根。


def _load_yaml(path: Path) -> Dict[str, Any]:
    with path.open("r", encoding="utf-8") as handle:
        try:
            data = yaml.safe_load(handle)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _build_source_tree(node: Any, label: str) -> Any:
    """构造与 node 同结构、叶子全为 label 的来源树。"""  # 工具函数说明。
    if isinstance(node, dict):
        return {key: _build_source_tree(value, label) for key, value in node.items()}
    return label


def _deep_merge(base: Dict[str, Any], incoming: Dict[str, Any], sources: Dict[str, Any], incoming_sources: Any) -> None:
    """把 incoming 递归并入 base，同时更新来源树；None 不覆盖已有非空值。"""  # 工具函数说明。
    for key, value in incoming.items():
        source_info = incoming_sources.get(key) if isinstance(incoming_sources, dict) else incoming_sources
        if isinstance(value, dict):
            base_child = base.get(key)
            source_child = sources.get(key)
            if not isinstance(base_child, dict):
                base_child = {}
            if not isinstance(source_child, dict):
                source_child = {}
            base[key] = base_child
            sources[key] = source_child
            if isinstance(source_info, str):
                source_info = _build_source_tree(value, source_info)
            _deep_merge(base_child, value, source_child, source_info)
            continue
        if value is None and base.get(key) is not None:
            continue
        base[key] = copy.deepcopy(value)
        sources[key] = source_info


def _parse_scalar(value: str) -> Any:
    """字符串依次尝试解析为布尔、null、整数、浮点、YAML 流式列表，失败保留原文。"""  # 工具函数说明。
    stripped = value.strip()
    lowered = stripped.lower()
    if lowered in {"true", "false"}:
        return lowered == "true"
    if lowered in {"null", "none"}:
        return None
    if stripped.startswith("[") and stripped.endswith("]"):
        try:
            return yaml.safe_load(stripped)
        except yaml.YAMLError:
            return stripped
    try:
        return int(lowered)
    except ValueError:
        pass
    try:
        return float(lowered)
    except ValueError:
        return stripped


def _keypath_to_tree(keypath: Iterable[str], value: Any) -> Dict[str, Any]:
    result: Dict[str, Any] = {}
    cursor = result
    components = list(keypath)
    for part in components[:-1]:
        cursor = cursor.setdefault(part, {})
    cursor[components[-1]] = value
    return result


def _collect_env_from_mapping(env: Mapping[str, str], source_prefix: str) -> tuple[Dict[str, Any], Dict[str, Any]]:
    """提取 TRANSDUCER_LAB_* 变量；TRANSDUCER_LAB_THREADS → threads，A__B → a.b。"""  # 工具函数说明。
    values: Dict[str, Any] = {}
    value_sources: Dict[str, Any] = {}
    for key in sorted(env):
        if not key.startswith(ENV_PREFIX):
            continue
        path = [segment.lower() for segment in key[len(ENV_PREFIX):].split("__") if segment]
        if not path:
            continue
        tree = _keypath_to_tree(path, _parse_scalar(env[key]))
        _deep_merge(values, tree, value_sources, _keypath_to_tree(path, f"env:{source_prefix}{key}"))
    return values, value_sources


def _parse_dotenv_file(path: Path) -> Dict[str, str]:
    result: Dict[str, str] = {}
    if not path.is_file():
        return result
    with path.open("r", encoding="utf-8") as handle:
        for line in handle:
            stripped = line.strip()
            if not stripped or stripped.startswith("#") or "=" not in stripped:
                continue
            key, _, raw_value = stripped.partition("=")
            result[key.strip()] = raw_value.strip().strip("\"'")
    return result


def _normalize_path(value: str) -> str:
    expanded = os.path.expanduser(os.path.expandvars(value.strip()))
    if expanded not in {"/", ""}:
        expanded = expanded.rstrip("/\\")
    return expanded


def _normalize_config(config: Dict[str, Any]) -> None:
    """就地规范化：日志格式小写、等级大写、路径展开、sweep 范围与线宽表统一为字符串/浮点。"""  # 工具函数说明。
    if isinstance(config.get("log_format"), str):
        config["log_format"] = config["log_format"].strip().lower()
    if isinstance(config.get("log_level"), str):
        config["log_level"] = config["log_level"].strip().upper()
    for key in ("log_file", "metrics_file"):
        value = config.get(key)
        if isinstance(value, str) and value.strip():
            config[key] = _normalize_path(value)
    catalog = config.get("catalog")
    if isinstance(catalog, dict):
        if isinstance(catalog.get("path"), str) and catalog["path"].strip():
            catalog["path"] = _normalize_path(catalog["path"])
        linewidths = catalog.get("linewidths_hz")
        if isinstance(linewidths, dict):
            catalog["linewidths_hz"] = {
                str(ref).strip().lower(): value for ref, value in linewidths.items()
            }
    sweep = config.get("sweep")
    if isinstance(sweep, dict):
        for key in ("cem_range", "com_range"):
            if sweep.get(key) is not None and not isinstance(sweep[key], str):
                sweep[key] = str(sweep[key])


def _source_for_path(path: Iterable[str], sources: Dict[str, Any]) -> str:
    cursor: Any = sources
    for part in path:
        if not isinstance(cursor, dict):
            return "unknown"
        cursor = cursor.get(part)
        if cursor is None:
            return "unknown"
    return cursor if isinstance(cursor, str) else "unknown"


def _assert_condition(condition: bool, path: List[str], message: str, value: Any, sources: Dict[str, Any]) -> None:
    """条件不成立时抛出 ConfigError，消息带点分键名与来源。"""  # 工具函数说明。
    if condition:
        return
    dotted = ".".join(path)
    origin = _source_for_path(path, sources)
    raise ConfigError(f"Invalid value for {dotted}: {message} (value={value!r}, source={origin})")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _section(config: Dict[str, Any], name: str) -> Dict[str, Any]:
    node = config.get(name)
    return node if isinstance(node, dict) else {}


def _check_positive(config: Dict[str, Any], sources: Dict[str, Any], path: List[str], *, integer: bool = False, allow_zero: bool = False) -> None:
    node: Any = config
    for part in path:
        node = node.get(part) if isinstance(node, dict) else None
    kind = "integer" if integer else "number"
    ok = (isinstance(node, int) and not isinstance(node, bool)) if integer else _is_number(node)
    ok = ok and (node >= 0 if allow_zero else node > 0)
    _assert_condition(ok, path, f"must be a {'non-negative' if allow_zero else 'positive'} {kind}", node, sources)


def _validate_config(config: Dict[str, Any], sources: Dict[str, Any]) -> None:
    """语义校验：枚举值、正数与整数约束、成对区间。"""  # 工具函数说明。
    _assert_condition(config.get("log_format") in LOG_FORMATS, ["log_format"], f"must be one of {LOG_FORMATS}", config.get("log_format"), sources)
    _assert_condition(config.get("log_level") in LOG_LEVELS, ["log_level"], f"must be one of {LOG_LEVELS}", config.get("log_level"), sources)
    sample = config.get("log_sample_rate")
    _assert_condition(_is_number(sample) and 0.0 < float(sample) <= 1.0, ["log_sample_rate"], "must be within (0, 1]", sample, sources)
    _check_positive(config, sources, ["threads"], integer=True, allow_zero=True)
    for path in (["solver", "residual_tol"], ["solver", "pivot_floor"], ["solver", "unitarity_tol"]):
        _check_positive(config, sources, path)
    _check_positive(config, sources, ["bandwidth", "window_factor"])
    _check_positive(config, sources, ["bandwidth", "rel_resolution"])
    scan_points = _section(config, "bandwidth").get("scan_points")
    _assert_condition(isinstance(scan_points, int) and scan_points >= 5, ["bandwidth", "scan_points"], "must be an integer >= 5", scan_points, sources)
    points = _section(config, "capacity").get("points")
    _assert_condition(isinstance(points, int) and points >= 2, ["capacity", "points"], "must be an integer >= 2", points, sources)
    _check_positive(config, sources, ["capacity", "rel_tol"])
    _check_positive(config, sources, ["capacity", "max_refinements"], integer=True, allow_zero=True)
    for key in ("step_factor", "settle_factor", "convergence_tol", "max_rate_span", "deviation_tol"):
        _check_positive(config, sources, ["oracle", key])
    _check_positive(config, sources, ["oracle", "periods"], integer=True)
    catalog = _section(config, "catalog")
    for key in ("eta_e", "eta_o"):
        value = catalog.get(key)
        _assert_condition(_is_number(value) and 0.0 < float(value) <= 1.0, ["catalog", key], "must be within (0, 1]", value, sources)
    bounds = catalog.get("bandwidth_ratio_bounds")
    _assert_condition(
        isinstance(bounds, list) and len(bounds) == 2 and all(_is_number(b) and b > 0 for b in bounds) and bounds[0] < bounds[1],
        ["catalog", "bandwidth_ratio_bounds"],
        "must be [low, high] with 0 < low < high",
        bounds,
        sources,
    )
    linewidths = catalog.get("linewidths_hz") or {}
    _assert_condition(isinstance(linewidths, dict), ["catalog", "linewidths_hz"], "must map reference tags to linewidths in Hz", linewidths, sources)
    for ref, value in linewidths.items():
        _assert_condition(_is_number(value) and value > 0, ["catalog", "linewidths_hz", ref], "must be a positive linewidth in Hz", value, sources)


def parse_cli_set_items(items: Iterable[str]) -> Dict[str, Any]:
    """把 --set KEY.PATH=VALUE 列表解析为嵌套字典。"""  # 公共函数说明。
    overrides: Dict[str, Any] = {}
    for raw in items:
        if "=" not in raw:
            raise ConfigError(f"Invalid --set entry '{raw}', expected KEY=VALUE")
        key, value = raw.split("=", 1)
        path = [segment.strip().lower() for segment in key.split(".") if segment.strip()]
        if not path:
            continue
        tree = _keypath_to_tree(path, _parse_scalar(value))
        _deep_merge(overrides, tree, {}, tree)
    return overrides


def load_and_merge_config(
    cli_overrides: Dict[str, Any] | None = None,
    cli_set_overrides: Dict[str, Any] | None = None,
    config_path: str | None = None,
    profile_name: str | None = None,
    environ: Mapping[str, str] | None = None,
) -> ConfigBundle:
    """按默认→用户→profile→.env→环境→CLI→--set 顺序合并并校验。"""  # 主函数说明。
    root = _project_root()
    default_path = root / "config" / "default.yaml"
    if not default_path.exists():
        raise FileNotFoundError(f"Default config not found: {default_path}")
    config = _load_yaml(default_path)
    sources = _build_source_tree(config, f"default:{default_path}")
    user_path = Path(config_path) if config_path else root / "config" / "user.yaml"
    if config_path and not user_path.is_file():
        raise FileNotFoundError(f"Config file not found: {user_path}")
    user_config: Dict[str, Any] = {}
    if user_path.is_file():
        user_config = _load_yaml(user_path)
        _deep_merge(config, user_config, sources, _build_source_tree(user_config, f"user:{user_path}"))
    effective_profile = (
        profile_name
        or (user_config.get("meta") or {}).get("profile")
        or (config.get("meta") or {}).get("profile")
    )
    profile_source = None
    if effective_profile:
        profile_data = (config.get("profiles") or {}).get(effective_profile)
        if profile_data is None:
            raise ConfigError(f"Unknown profile '{effective_profile}'")
        profile_source = f"profile:{effective_profile}"
        _deep_merge(config, profile_data, sources, _build_source_tree(profile_data, profile_source))
    environ = os.environ if environ is None else environ
    env_layers: list[tuple[Dict[str, Any], Dict[str, Any]]] = []
    dotenv_candidates = [root / ".env"]
    if user_path.is_file() and user_path.parent != root:
        dotenv_candidates.append(user_path.parent / ".env")
    for dotenv_path in dotenv_candidates:
        env_map = _parse_dotenv_file(dotenv_path)
        if env_map:
            env_layers.append(_collect_env_from_mapping(env_map, f"{dotenv_path}:"))
    env_layers.append(_collect_env_from_mapping(environ, ""))
    for values, source_tree in env_layers:
        if values:
            _deep_merge(config, values, sources, source_tree)
    if cli_overrides:
        _deep_merge(config, cli_overrides, sources, _build_source_tree(cli_overrides, "cli:args"))
    if cli_set_overrides:
        _deep_merge(config, cli_set_overrides, sources, _build_source_tree(cli_set_overrides, "cli:set"))
    _normalize_config(config)
    _validate_config(config, sources)
    meta = config.setdefault("meta", {})
    meta_sources = sources.setdefault("meta", {})
    if not isinstance(meta_sources, dict):
        meta_sources = {}
        sources["meta"] = meta_sources
    meta["profile"] = effective_profile
    if effective_profile is not None:
        meta_sources["profile"] = profile_source or "profile:derived"
    meta["config_generated_at"] = datetime.now(timezone.utc).isoformat()
    meta_sources["config_generated_at"] = "runtime:generated"
    return ConfigBundle(config=config, sources=sources, profile=effective_profile, profile_source=profile_source)


def render_effective_config(bundle: ConfigBundle, include_sources: bool = True) -> str:
    """渲染为按键排序的 YAML 文本，叶子行尾附来源注释。"""  # 导出函数说明。

    def _render(node: Any, source_node: Any, indent: int) -> list[str]:
        lines: list[str] = []
        prefix = " " * indent
        for key in sorted(node.keys(), key=str):
            value = node[key]
            child_source = source_node.get(key) if isinstance(source_node, dict) else source_node
            if isinstance(value, dict) and value:
                lines.append(f"{prefix}{key}:")
                lines.extend(_render(value, child_source, indent + 2))
                continue
            rendered = yaml.safe_dump(value, default_flow_style=True).strip()
            if rendered.endswith("\n..."):
                rendered = rendered[: -len("\n...")]
            rendered = rendered.replace("\n...", "")
            line = f"{prefix}{key}: {rendered}"
            if include_sources and isinstance(child_source, str):
                line += f"  # {child_source}"
            lines.append(line)
        return lines

    return "\n".join(_render(bundle.config, bundle.sources, 0)) + "\n"


def save_config(bundle: ConfigBundle, path: str | os.PathLike[str], include_sources: bool = True) -> None:
    atomic_write_text(path, render_effective_config(bundle, include_sources=include_sources))
