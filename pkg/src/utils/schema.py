"""模型 JSON 的结构校验；失败时抛出带 JSON 路径的 ConfigurationError。"""
import json
from functools import lru_cache
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator, FormatChecker, ValidationError

from src.utils.errors import ConfigurationError

SCHEMA_DIR = Path(__file__).resolve().parents[2] / "schemas"
SCHEMA_FILES = {"model": "model.schema.json"}


@lru_cache(maxsize=None)
def _validator(name: str) -> Draft202012Validator:
    try:
        filename = SCHEMA_FILES[name]
    except KeyError:
        raise KeyError(f"Unknown schema: {name}") from None
    schema = json.loads((SCHEMA_DIR / filename).read_text(encoding="utf-8"))
    Draft202012Validator.check_schema(schema)
    return Draft202012Validator(schema, format_checker=FormatChecker())


def load_schema(name: str) -> dict:
    return _validator(name.strip().lower()).schema


def _json_path(error: ValidationError) -> str:
    """deque(['modes', 1, 'kappa_int_hz']) -> modes[1].kappa_int_hz"""
    parts = []
    for part in error.absolute_path:
        if isinstance(part, int):
            parts.append(f"[{part}]")
        else:
            parts.append(f".{part}" if parts else str(part))
    return "".join(parts) or "<root>"


def validate_payload(name: str, payload: Any) -> None:
    """按路径排序后报告第一个错误，同一份输入的报错信息保持稳定。"""
    validator = _validator(name.strip().lower())
    errors = sorted(validator.iter_errors(payload), key=lambda err: [str(p) for p in err.absolute_path])
    if errors:
        first = errors[0]
        raise ConfigurationError(f"{name} config invalid at {_json_path(first)}: {first.message}")


def validate_model_config(payload: Any) -> None:
    validate_payload("model", payload)
