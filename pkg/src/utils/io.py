"""输出工具：原子写入、17 位有效数字的 CSV 渲染，以及加锁追加日志行。"""  # 模块说明。
import csv
import io
import json
import os
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

try:
    import fcntl  # type: ignore
except ImportError:  # pragma: no cover - 非 POSIX 平台。
    fcntl = None  # 退化为 O_EXCL 锁文件。

LOCK_TIMEOUT_SEC = 30.0
_LOCK_POLL_SEC = 0.05


def safe_mkdirs(path: str | os.PathLike[str]) -> None:
    Path(path).mkdir(parents=True, exist_ok=True)


def atomic_write_text(path: str | os.PathLike[str], text: str) -> None:
    """写入同目录临时文件后 os.replace；读者只会看到完整的旧文件或新文件。"""  # 函数说明。
    target = Path(path)
    safe_mkdirs(target.parent)
    staging = target.with_name(f".{target.name}.{os.getpid()}.tmp")
    try:
        staging.write_text(text, encoding="utf-8", newline="")
        os.replace(staging, target)
    finally:
        staging.unlink(missing_ok=True)


def format_float(value: float) -> str:
    """17 位有效数字，双精度往返无损；inf/nan 写作 inf、-inf、nan。"""  # 函数说明。
    return f"{float(value):.17g}"


def _csv_cell(cell: Any) -> Any:
    if cell is None:
        return ""
    if isinstance(cell, float):
        return format_float(cell)
    return cell


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """渲染 CSV 文本：None 写为空单元格，浮点数见 format_float，行尾统一为 \\n。"""  # 函数说明。
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_csv_cell(cell) for cell in row] for row in rows)
    return buffer.getvalue()


def write_csv(path: str | os.PathLike[str], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    atomic_write_text(path, render_csv(header, rows))


@contextmanager
def file_lock(lock_path: str | os.PathLike[str], timeout_sec: float = LOCK_TIMEOUT_SEC) -> Iterator[None]:
    """独占锁：POSIX 下用 flock，其他平台用 O_EXCL 创建锁文件；超时抛出 TimeoutError。"""  # 函数说明。
    path = Path(lock_path)
    safe_mkdirs(path.parent)
    deadline = time.monotonic() + timeout_sec
    while True:
        try:
            if fcntl is not None:
                fd = os.open(path, os.O_RDWR | os.O_CREAT, 0o600)
                try:
                    fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
                    break
                except BlockingIOError:
                    os.close(fd)
            else:
                fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_RDWR, 0o600)
                break
        except FileExistsError:
            pass
        if time.monotonic() >= deadline:
            raise TimeoutError(f"Timed out acquiring lock: {path}")
        time.sleep(_LOCK_POLL_SEC)
    try:
        yield
    finally:
        if fcntl is not None:
            fcntl.flock(fd, fcntl.LOCK_UN)
        os.close(fd)
        if fcntl is None:
            path.unlink(missing_ok=True)


def locked_append(path: str | os.PathLike[str], line: str, *, force_flush: bool = False) -> None:
    """在 <path>.lock 的保护下追加一行，多进程共用同一日志文件时行不交错。"""  # 函数说明。
    target = Path(path)
    safe_mkdirs(target.parent)
    with file_lock(target.with_name(target.name + ".lock")):
        with target.open("a", encoding="utf-8") as handle:
            handle.write(line.rstrip("\n") + "\n")
            handle.flush()
            if force_flush:
                os.fsync(handle.fileno())


def jsonl_append(path: str | os.PathLike[str], record: dict, *, force_flush: bool = False, default: Any = None) -> None:
    locked_append(path, json.dumps(record, ensure_ascii=False, default=default), force_flush=force_flush)
