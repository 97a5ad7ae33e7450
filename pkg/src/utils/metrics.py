"""运行指标的收集、汇总与导出：计数器（评估点数、检查结果、时域校验次数）与阶段耗时观测。"""  # 模块文档说明。
import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Tuple

from src.utils.io import atomic_write_text, jsonl_append, safe_mkdirs

COUNTERS = (  # summary() 固定输出的计数器。
    "points_evaluated",
    "records_checked",
    "checks_passed",
    "checks_failed",
    "checks_skipped",
    "oracle_runs",
)

_LabelKey = Tuple[Tuple[str, Any], ...]


@dataclass
class _SummaryStats:
    """观测值的计数、总和与极值。"""  # 类说明。

    count: int = 0
    total: float = 0.0
    minimum: float | None = None
    maximum: float | None = None

    def update(self, value: float) -> None:
        self.count += 1
        self.total += value
        self.minimum = value if self.minimum is None else min(self.minimum, value)
        self.maximum = value if self.maximum is None else max(self.maximum, value)

    def as_record(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "sum": self.total,
            "min": self.minimum,
            "max": self.maximum,
            "avg": self.total / self.count if self.count else 0.0,
        }


class MetricsSink:
    """收集计数器与观测值，并导出为 CSV 或 JSONL。"""  # 类说明。

    def __init__(self) -> None:
        self._counters: Dict[Tuple[str, _LabelKey], float] = {}
        self._summaries: Dict[Tuple[str, _LabelKey], _SummaryStats] = {}

    @staticmethod
    def _normalize_labels(labels: Dict[str, Any] | None) -> _LabelKey:
        """标签字典转为排序后的元组，用作字典键。"""  # 方法说明。
        if not labels:
            return tuple()
        return tuple(sorted((str(key), labels[key]) for key in labels))

    def inc(self, name: str, value: float = 1.0, labels: Dict[str, Any] | None = None) -> None:
        key = (name, self._normalize_labels(labels))
        self._counters[key] = self._counters.get(key, 0.0) + value

    def observe(self, name: str, value: float, labels: Dict[str, Any] | None = None) -> None:
        key = (name, self._normalize_labels(labels))
        self._summaries.setdefault(key, _SummaryStats()).update(value)

    def _iter_counters(self) -> Iterable[Dict[str, Any]]:
        for (name, labels), value in sorted(self._counters.items()):
            yield {"type": "counter", "metric": name, "value": value, "labels": dict(labels)}

    def _iter_summaries(self) -> Iterable[Dict[str, Any]]:
        for (name, labels), stats in sorted(self._summaries.items(), key=lambda item: item[0]):
            record = {"type": "summary", "metric": name, "labels": dict(labels)}
            record.update(stats.as_record())
            yield record

    def export_jsonl(self, path: str) -> None:
        """覆盖写出 JSONL：先删除旧文件，再逐行追加。"""  # 方法说明。
        target = Path(path)
        safe_mkdirs(target.parent)
        target.unlink(missing_ok=True)
        for record in list(self._iter_counters()) + list(self._iter_summaries()):
            jsonl_append(path, record)

    def export_csv(self, path: str) -> None:
        buffer = io.StringIO()
        fieldnames = ["type", "metric", "value", "count", "sum", "min", "max", "avg", "labels"]
        writer = csv.DictWriter(buffer, fieldnames=fieldnames)
        writer.writeheader()
        for record in self._iter_counters():
            writer.writerow({**record, "labels": json.dumps(record["labels"], ensure_ascii=False)})
        for record in self._iter_summaries():
            writer.writerow({**record, "labels": json.dumps(record["labels"], ensure_ascii=False)})
        atomic_write_text(path, buffer.getvalue())

    def export(self, path: str) -> None:
        """按后缀选择格式：.csv 写表格，其余写 JSONL。"""  # 方法说明。
        if Path(path).suffix.lower() == ".csv":
            self.export_csv(path)
        else:
            self.export_jsonl(path)

    def get_counter(self, name: str, labels: Dict[str, Any] | None = None) -> float:
        return self._counters.get((name, self._normalize_labels(labels)), 0.0)

    def phase_total(self, phase: str, labels: Dict[str, Any] | None = None) -> float:
        stats = self._summaries.get((f"phase_{phase}_sec", self._normalize_labels(labels)))
        return stats.total if stats else 0.0

    def summary(self, labels: Dict[str, Any] | None = None) -> Dict[str, Any]:
        """概览：固定计数器加上每个阶段的累计耗时，供 print_summary 使用。"""  # 方法说明。
        base = self._normalize_labels(labels)
        label_dict = dict(base)
        result: Dict[str, Any] = {name: int(self.get_counter(name, label_dict)) for name in COUNTERS}
        for (name, key_labels), stats in self._summaries.items():
            if key_labels == base and name.startswith("phase_"):
                result[name] = stats.total
        return result
