"""按点并行：扫描的每一行、时域校验的每个频率各是一个任务。"""
import os
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar

T = TypeVar("T")
R = TypeVar("R")

MAX_AUTO_WORKERS = 32


def resolve_workers(threads: int | None) -> int:
    """threads 为 0、负数或 None 时按 CPU 数自动选择，上限 MAX_AUTO_WORKERS。"""
    if threads is None or threads <= 0:
        return min(MAX_AUTO_WORKERS, (os.cpu_count() or 1) + 4)
    return int(threads)


def raise_first_error(results: Sequence[Any]) -> None:
    for item in results:
        if isinstance(item, BaseException):
            raise item


def run_with_threadpool(
    tasks: Iterable[T],
    worker_fn: Callable[[T], R],
    *,
    max_workers: int,
    fail_fast: bool = False,
    on_result: Optional[Callable[[int, Any], None]] = None,
) -> Tuple[List[Any], int, int]:
    """执行全部任务，返回 (结果列表, 已提交数, 已完成数)。

    结果位置与输入位置一一对应，和完成先后无关。worker 抛出的异常存入对应位置，
    不在此处重新抛出；fail_fast 为真时，首个异常之后不再提交新任务，未提交的位置保持 None。
    on_result(index, value) 在每个任务完成时于调用线程中执行。
    """
    pending = list(tasks)
    results: List[Any] = [None] * len(pending)
    limit = max(1, max_workers)
    next_index = 0
    finished = 0
    halted = False
    with ThreadPoolExecutor(max_workers=limit) as pool:
        running: Dict[Future, int] = {}
        while True:
            while not halted and next_index < len(pending) and len(running) < limit:
                running[pool.submit(worker_fn, pending[next_index])] = next_index
                next_index += 1
            if not running:
                break
            done, _ = wait(running, return_when=FIRST_COMPLETED)
            for future in done:
                index = running.pop(future)
                error = future.exception()
                results[index] = future.result() if error is None else error
                if error is not None and fail_fast:
                    halted = True
                finished += 1
                if on_result is not None:
                    on_result(index, results[index])
    return results, next_index, finished
