"""结构化日志、进度展示、警告转写与运行汇总。"""  # 模块文档说明。
from __future__ import annotations  # 启用延迟求值的注解语义以支持联合类型语法。
import contextlib
import json  # JSONL 格式下序列化日志记录。
import logging  # 未提供结构化日志器时的回退输出。
import sys
import traceback
import uuid  # 生成 TraceID。
import warnings
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

from src.utils.io import locked_append, safe_mkdirs

try:  # tqdm 为可选依赖，缺失时退化为日志进度。
    from tqdm import tqdm  # type: ignore
except Exception:  # noqa: BLE001
    tqdm = None

_LEVELS = {  # 与 logging 模块一致的数值等级。
    "DEBUG": 10,
    "INFO": 20,
    "WARNING": 30,
    "ERROR": 40,
    "CRITICAL": 50,
}


def new_trace_id() -> str:
    """生成 12 字符的短 TraceID，贯穿一次命令执行。"""  # 函数说明。
    return uuid.uuid4().hex[:12]


def _normalize_level(level: str) -> str:
    upper = level.upper()
    if upper not in _LEVELS:
        raise ValueError(f"Unsupported log level: {level}")
    return upper


def _json_default(value: Any) -> Any:
    """把 numpy 标量、inf 等不能直接序列化的值转为字符串或 Python 数值。"""
    if hasattr(value, "item"):
        return value.item()
    return str(value)


class _LoggerCore:
    """日志格式化与写入的内部核心：等级过滤、采样、控制台与文件输出。"""  # 类说明。

    def __init__(
        self,
        log_format: str,
        level: str,
        log_file: str | None,
        sample_rate: float,
        quiet: bool,
        *,
        force_flush: bool = False,
    ) -> None:
        normalized = log_format.lower()
        if normalized not in {"human", "jsonl"}:
            raise ValueError(f"Unsupported log format: {log_format}")
        self.format = normalized
        self.level = _LEVELS[_normalize_level(level)]
        self.log_file = Path(log_file) if log_file else None
        self.sample_rate = max(min(sample_rate, 1.0), 0.0)  # 截断到 [0, 1]。
        self.quiet = quiet
        self._sample_counter = 0
        self._console = sys.stderr  # 日志走 stderr，stdout 留给报告与 CSV。
        self._force_flush = force_flush
        if self.log_file is not None:
            safe_mkdirs(self.log_file.parent)

    def _should_emit(self, level_value: int) -> bool:
        """等级过滤后，对 INFO 及以下按周期采样。"""  # 方法说明。
        if level_value < self.level:
            return False
        if level_value <= _LEVELS["INFO"] and self.sample_rate < 1.0:
            period = max(1, int(round(1.0 / self.sample_rate))) if self.sample_rate > 0 else 0
            if period == 0:
                return False
            keep = self._sample_counter % period == 0
            self._sample_counter += 1
            if not keep:
                return False
        return True

    def _timestamp(self) -> str:
        now = datetime.now(timezone.utc)
        return now.isoformat(timespec="milliseconds").replace("+00:00", "Z")

    def _render_human(self, record: Dict[str, Any]) -> str:
        """渲染为 `[LEVEL] ts trace=.. cmd=.. msg`，错误信息与堆栈缩进附在后面。"""  # 方法说明。
        parts = [f"[{record['level']}]", record["ts"]]
        trace_id = record.get("trace_id")
        if trace_id:
            parts.append(f"trace={trace_id}")
        command = record.get("command")
        if command:
            parts.append(f"cmd={command}")
        parts.append(record["msg"])
        base = " ".join(parts)

        extra_lines: list[str] = []
        error_fields: list[str] = []
        error_type = record.get("error_type")
        if error_type:
            error_fields.append(f"error_type={error_type}")
        error_message = record.get("error")
        if error_message:
            error_fields.append(f"error={error_message}")
        if error_fields:
            extra_lines.append("    " + " ".join(error_fields))
        trace_text = record.get("trace")
        if isinstance(trace_text, str) and trace_text.strip():
            for line in trace_text.rstrip().splitlines():
                extra_lines.append("    " + line)
        if extra_lines:
            return "\n".join([base, *extra_lines])
        return base

    def emit(self, level: str, message: str, fields: Dict[str, Any]) -> None:
        normalized = _normalize_level(level)
        if not self._should_emit(_LEVELS[normalized]):
            return
        record: Dict[str, Any] = {"ts": self._timestamp(), "level": normalized, "msg": message}
        record.update(fields)
        if self.format == "human":
            rendered = self._render_human(record)
        else:
            rendered = json.dumps(record, ensure_ascii=False, default=_json_default)
        if not self.quiet:
            self._console.write(rendered + "\n")
            self._console.flush()
        if self.log_file is not None:
            locked_append(self.log_file, rendered, force_flush=self._force_flush)

    def human(self, record: Dict[str, Any]) -> str:
        return self._render_human(record)


class StructuredLogger:
    """对外暴露的结构化日志器，支持上下文绑定。"""  # 类说明。

    def __init__(self, core: _LoggerCore, context: Optional[Dict[str, Any]] = None, parent: "StructuredLogger" | None = None) -> None:
        self._core = core
        self._context = context or {}
        self._parent = parent

    def _collect_context(self) -> Dict[str, Any]:
        aggregated: Dict[str, Any] = {}
        if self._parent is not None:
            aggregated.update(self._parent._collect_context())
        aggregated.update(self._context)
        return aggregated

    def bind(self, **kwargs: Any) -> "StructuredLogger":
        """返回追加了上下文字段（trace_id、command、model 等）的子日志器。"""  # 方法说明。
        return StructuredLogger(self._core, context=kwargs, parent=self)

    def log(self, level: str, message: str, **fields: Any) -> None:
        payload = self._collect_context()
        payload.update(fields)
        self._core.emit(level, message, payload)

    def debug(self, message: str, **fields: Any) -> None:
        self.log("DEBUG", message, **fields)

    def info(self, message: str, **fields: Any) -> None:
        self.log("INFO", message, **fields)

    def warning(self, message: str, **fields: Any) -> None:
        self.log("WARNING", message, **fields)

    def error(self, message: str, **fields: Any) -> None:
        self.log("ERROR", message, **fields)

    def exception(self, message: str, exc: BaseException | None = None, **fields: Any) -> None:
        """ERROR 级日志，附带异常类型、消息与堆栈。"""  # 方法说明。
        exception_obj = exc
        if exception_obj is None:
            _, exception_obj, _ = sys.exc_info()
        if exception_obj is not None:
            fields.setdefault("error", str(exception_obj))
            fields.setdefault("error_type", exception_obj.__class__.__name__)
            fields.setdefault(
                "trace",
                "".join(traceback.format_exception(exception_obj.__class__, exception_obj, exception_obj.__traceback__)),
            )
        self.log("ERROR", message, **fields)

    def human(self, record: Dict[str, Any]) -> str:
        return self._core.human(record)


def get_logger(
    format: str = "human",
    level: str = "INFO",
    log_file: str | None = None,
    sample_rate: float = 1.0,
    quiet: bool = False,
    *,
    force_flush: bool = False,
) -> StructuredLogger:
    """创建结构化日志器，支持 human/jsonl 两种模式。"""  # 函数说明。
    core = _LoggerCore(format, level, log_file, sample_rate, quiet, force_flush=force_flush)
    return StructuredLogger(core)


def bind_context(logger: StructuredLogger, **kwargs: Any) -> StructuredLogger:
    return logger.bind(**kwargs)


@contextlib.contextmanager
def capture_warnings(logger: StructuredLogger) -> Iterator[list]:
    """收集库内 warnings.warn 发出的警告，退出时逐条转写为 WARNING 日志。"""  # 函数说明。
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            yield caught
        finally:
            for item in caught:
                logger.warning(
                    str(item.message),
                    warning_category=item.category.__name__,
                    source=f"{Path(item.filename).name}:{item.lineno}",
                )


class ProgressPrinter:
    """终端下显示 tqdm 进度条；非 TTY 时以结构化日志报告进度。"""  # 类说明。

    def __init__(
        self,
        total: int,
        description: str,
        enabled: bool,
        logger: StructuredLogger | None = None,
        *,
        is_tty: bool | None = None,
        log_every: int = 10,
    ) -> None:
        tty_status = is_tty
        if tty_status is None:
            try:
                tty_status = sys.stderr.isatty()
            except Exception:  # noqa: BLE001
                tty_status = False
        self.enabled = enabled and total > 0
        self.description = description
        self.total = total
        self.count = 0
        self.logger = logger
        self.log_every = max(1, log_every)  # 非 TTY 下每完成 total/log_every 个单位记录一次。
        self._bar = None
        if self.enabled and tqdm is not None and tty_status:
            self._bar = tqdm(total=total, desc=description, leave=False, file=sys.stderr)

    def update(self, message: str | None = None) -> None:
        if not self.enabled:
            return
        self.count += 1
        if self._bar is not None:
            self._bar.update(1)
            if message:
                self._bar.set_postfix_str(message, refresh=False)
            return
        stride = max(1, self.total // self.log_every)
        if self.count % stride and self.count != self.total:
            return
        percent = (self.count / self.total) * 100 if self.total else 0.0
        if self.logger is not None:
            self.logger.info(
                "progress",
                progress={"stage": self.description, "completed": self.count, "total": self.total, "percent": percent},
            )
        else:
            logging.info("%s %d/%d (%.1f%%)", self.description, self.count, self.total, percent)

    def close(self) -> None:
        if self._bar is not None:
            self._bar.close()


def print_summary(command: str, summary: dict, logger: StructuredLogger | logging.Logger | None = None) -> str:
    """输出一次命令的运行汇总（评估点数、检查结果与各阶段耗时），并返回人类可读字符串。"""  # 函数说明。
    ordered = {key: summary[key] for key in sorted(summary)}
    fragments = []
    for key, value in ordered.items():
        if isinstance(value, float):
            fragments.append(f"{key}={value:.4g}")
        else:
            fragments.append(f"{key}={value}")
    message = f"Summary {command} " + " ".join(fragments)
    if isinstance(logger, StructuredLogger):
        logger.info("run summary", summary=ordered, text=message)
    elif isinstance(logger, logging.Logger):
        logger.info(message)
    else:
        logging.getLogger("transducer_lab").info(message)
    return message
