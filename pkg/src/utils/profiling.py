"""阶段计时：with 块结束时把耗时写入 MetricsSink 的 phase_<name>_sec。"""
import time
from typing import Any, Dict

from src.utils.metrics import MetricsSink


class PhaseTimer:
    """未启用时为空操作，便于在命令中无条件包裹各阶段。"""  # 类说明。

    def __init__(
        self,
        metrics: MetricsSink,
        phase: str,
        labels: Dict[str, Any] | None = None,
        enabled: bool = False,
    ) -> None:
        self.metrics = metrics
        self.phase = phase  # 例如 solve、bandwidth、capacity、oracle。
        self.labels = labels or {}
        self.enabled = enabled
        self._start: float | None = None
        self.elapsed: float | None = None

    def __enter__(self) -> "PhaseTimer":
        if self.enabled:
            self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:  # noqa: ANN001
        if not self.enabled or self._start is None:
            return
        self.elapsed = time.perf_counter() - self._start
        self.metrics.observe(f"phase_{self.phase}_sec", self.elapsed, labels=self.labels)
        self._start = None  # 同一实例可再次进入。
