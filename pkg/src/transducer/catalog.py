"""器件目录：读取实验对比表 CSV，计算派生指标并对每条记录做一致性检查。"""  # 模块说明。
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Sequence, Tuple

from src.transducer.metrics import (
    efficiency_closed_form_one_stage,
    efficiency_closed_form_zero_stage,
    q1,
)
from src.transducer.physics import thermal_occupation_hz
from src.utils.errors import CatalogParseError, InvalidParameterError
from src.utils.io import format_float, write_csv

METHODS = (
    "electro-optomechanical",
    "piezo-optomechanical",
    "bulk-acoustic",
    "electro-optic",
    "magneto-optic",
    "rare-earth",
    "rydberg",
)
REQUIRED_COLUMNS = (
    "ref",
    "year",
    "method",
    "platform",
    "freq_hz",
    "eta",
    "c_em",
    "c_om",
    "c_eo",
    "added_noise",
    "bandwidth_hz",
    "temperature_k",
    "qubit_demo",
)
OPTIONAL_COLUMNS = ("approximate", "qubit_freq_hz")
DERIVED_COLUMNS = ("q1", "bound", "occupancy")
ABSENT_MARKERS = {"", "nr", "--"}  # 表中未报道的单元格。
BOUND_SLACK = 1e-12
CHECKS = ("cooperativity_bound", "q1", "thermal_occupancy", "bandwidth_ratio")


@dataclass(frozen=True)
class DeviceRecord:
    """对比表中的一行；可选字段缺失时为 None，不做零填充。"""  # 类说明。

    ref: str
    year: int
    method: str
    platform: str
    freq_hz: float | None
    eta: float | None
    c_em: float | None
    c_om: float | None
    c_eo: float | None
    added_noise: float | None
    bandwidth_hz: float | None
    temperature_k: float | None
    qubit_demo: bool
    approximate: bool = False  # 表中带 ∼ 或 < 的数值。
    qubit_freq_hz: float | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise InvalidParameterError("method", f"{self.ref}: unknown method class {self.method!r}")
        if self.eta is not None and not 0.0 <= self.eta <= 1.0:
            raise InvalidParameterError("eta", f"{self.ref}: reported efficiency {self.eta!r} outside [0, 1]")
        for name in ("freq_hz", "c_em", "c_om", "c_eo", "added_noise", "bandwidth_hz", "temperature_k", "qubit_freq_hz"):
            value = getattr(self, name)
            if value is not None and value < 0.0:
                raise InvalidParameterError(name, f"{self.ref}: must be non-negative, got {value!r}")
        if self.temperature_k is None and self.method != "rydberg":
            raise InvalidParameterError("temperature_k", f"{self.ref}: temperature is required for {self.method} records")


@dataclass(frozen=True)
class CatalogAssumptions:
    """检查所用的假设：端口比默认取 1，以及已知中间模式线宽。"""  # 类说明。

    eta_e: float = 1.0
    eta_o: float = 1.0
    bandwidth_ratio_bounds: Tuple[float, float] = (0.1, 10.0)
    linewidths_hz: Mapping[str, float] = field(default_factory=dict)

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "CatalogAssumptions":
        section = config.get("catalog", {}) or {}
        low, high = section.get("bandwidth_ratio_bounds", (0.1, 10.0))
        return cls(
            eta_e=float(section.get("eta_e", 1.0)),
            eta_o=float(section.get("eta_o", 1.0)),
            bandwidth_ratio_bounds=(float(low), float(high)),
            linewidths_hz={str(k): float(v) for k, v in (section.get("linewidths_hz") or {}).items()},
        )


DEFAULT_ASSUMPTIONS = CatalogAssumptions()


class CheckResult(NamedTuple):
    ref: str
    check: str  # CHECKS 之一。
    status: str  # pass、fail 或 skipped。
    values: Dict[str, float]
    detail: str = ""


def _parse_float(raw: str | None, column: str, line: int) -> float | None:
    text = (raw or "").strip()
    if text.lower() in ABSENT_MARKERS:
        return None
    try:
        value = float(text)
    except ValueError as exc:
        raise CatalogParseError(line, f"column {column}: {text!r} is not a number") from exc
    if not math.isfinite(value):
        raise CatalogParseError(line, f"column {column}: {text!r} is not finite")
    return value


def _parse_bool(raw: str | None, column: str, line: int, *, default: bool | None = None) -> bool:
    text = (raw or "").strip().lower()
    if text == "" and default is not None:
        return default
    if text not in {"true", "false"}:
        raise CatalogParseError(line, f"column {column}: expected true/false, got {raw!r}")
    return text == "true"


def _record_from_row(row: Mapping[str, str | None], line: int) -> DeviceRecord:
    ref = (row.get("ref") or "").strip()
    if not ref:
        raise CatalogParseError(line, "column ref: empty reference tag")
    year_text = (row.get("year") or "").strip()
    try:
        year = int(year_text)
    except ValueError as exc:
        raise CatalogParseError(line, f"column year: {year_text!r} is not an integer") from exc
    method = (row.get("method") or "").strip().lower()
    if method not in METHODS:
        raise CatalogParseError(line, f"column method: {method!r} not in {METHODS}")
    numbers = {
        name: _parse_float(row.get(name), name, line)
        for name in ("freq_hz", "eta", "c_em", "c_om", "c_eo", "added_noise", "bandwidth_hz", "temperature_k", "qubit_freq_hz")
    }
    try:
        return DeviceRecord(
            ref=ref,
            year=year,
            method=method,
            platform=(row.get("platform") or "").strip(),
            qubit_demo=_parse_bool(row.get("qubit_demo"), "qubit_demo", line),
            approximate=_parse_bool(row.get("approximate"), "approximate", line, default=False),
            **numbers,
        )
    except InvalidParameterError as exc:
        raise InvalidParameterError(exc.field, f"line {line}: {exc.detail}") from exc


def load_catalog(path: str | Path) -> List[DeviceRecord]:
    """读取 UTF-8 目录 CSV；NR、-- 与空单元格视为缺失，多余的列被忽略。"""  # 函数说明。

    catalog_path = Path(path)
    if not catalog_path.is_file():
        raise FileNotFoundError(f"Catalog not found: {catalog_path}")
    records: List[DeviceRecord] = []
    seen: Dict[str, int] = {}
    with catalog_path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        header = [name.strip() for name in (reader.fieldnames or [])]
        missing = [name for name in REQUIRED_COLUMNS if name not in header]
        if missing:
            raise CatalogParseError(1, f"missing columns {missing}")
        reader.fieldnames = header
        for row in reader:
            line = reader.line_num
            if None in row:
                raise CatalogParseError(line, f"expected {len(header)} cells, found more")
            if all(not (value or "").strip() for value in row.values()):
                continue
            record = _record_from_row(row, line)
            if record.ref in seen:
                raise CatalogParseError(line, f"duplicate reference tag {record.ref!r} (first on line {seen[record.ref]})")
            seen[record.ref] = line
            records.append(record)
    return records


def cooperativity_bound(record: DeviceRecord, assumptions: CatalogAssumptions = DEFAULT_ASSUMPTIONS) -> float | None:
    """由报道的协同度给出的效率上限；一级换能优先，没有协同度时返回 None。"""  # 函数说明。
    if record.c_em is not None and record.c_om is not None:
        return efficiency_closed_form_one_stage(record.c_em, record.c_om, assumptions.eta_e, assumptions.eta_o)
    if record.c_eo is not None:
        return efficiency_closed_form_zero_stage(record.c_eo, assumptions.eta_e, assumptions.eta_o)
    return None


def occupancy(record: DeviceRecord) -> float | None:
    if record.freq_hz is None or record.temperature_k is None or record.freq_hz <= 0.0:
        return None
    return thermal_occupation_hz(record.freq_hz, record.temperature_k)


def _check_bound(record: DeviceRecord, assumptions: CatalogAssumptions) -> CheckResult:
    name = "cooperativity_bound"
    if record.method == "rydberg":
        return CheckResult(record.ref, name, "skipped", {}, "efficiency is a flux ratio, not a scattering element")
    if record.eta is None:
        return CheckResult(record.ref, name, "skipped", {}, "no reported efficiency")
    bound = cooperativity_bound(record, assumptions)
    if bound is None:
        return CheckResult(record.ref, name, "skipped", {}, "no cooperativities reported")
    status = "pass" if record.eta <= bound + BOUND_SLACK else "fail"
    return CheckResult(record.ref, name, status, {"eta": record.eta, "bound": bound})


def _check_q1(record: DeviceRecord) -> CheckResult:
    if record.eta is None:
        return CheckResult(record.ref, "q1", "skipped", {}, "no reported efficiency")
    return CheckResult(record.ref, "q1", "pass", {"eta": record.eta, "q1": q1(record.eta)})


def _check_occupancy(record: DeviceRecord) -> CheckResult:
    value = occupancy(record)
    if value is None:
        return CheckResult(record.ref, "thermal_occupancy", "skipped", {}, "frequency or temperature not reported")
    return CheckResult(
        record.ref,
        "thermal_occupancy",
        "pass",
        {"freq_hz": record.freq_hz, "temperature_k": record.temperature_k, "n_th": value},
    )


def _check_bandwidth(record: DeviceRecord, assumptions: CatalogAssumptions) -> CheckResult:
    name = "bandwidth_ratio"
    linewidth = assumptions.linewidths_hz.get(record.ref)
    if linewidth is None:
        return CheckResult(record.ref, name, "skipped", {}, "intermediate linewidth unknown")
    if record.bandwidth_hz is None or record.bandwidth_hz <= 0.0:
        return CheckResult(record.ref, name, "skipped", {}, "no reported bandwidth")
    if record.c_em is not None or record.c_om is not None:
        broadening = 1.0 + (record.c_em or 0.0) + (record.c_om or 0.0)
    elif record.c_eo is not None:
        broadening = 1.0 + record.c_eo
    else:
        return CheckResult(record.ref, name, "skipped", {}, "no cooperativities reported")
    predicted = linewidth * broadening
    ratio = predicted / record.bandwidth_hz
    low, high = assumptions.bandwidth_ratio_bounds
    status = "pass" if low <= ratio <= high else "fail"
    return CheckResult(
        record.ref,
        name,
        status,
        {"predicted_hz": predicted, "reported_hz": record.bandwidth_hz, "ratio": ratio},
    )


def consistency_report(record: DeviceRecord, assumptions: CatalogAssumptions = DEFAULT_ASSUMPTIONS) -> List[CheckResult]:
    """按 CHECKS 的顺序返回四项检查结果；数据缺失时为 skipped，不抛异常。"""  # 函数说明。
    return [
        _check_bound(record, assumptions),
        _check_q1(record),
        _check_occupancy(record),
        _check_bandwidth(record, assumptions),
    ]


def _cell(value: Any) -> Any:
    if value is None:
        return None
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return value


def catalog_rows(records: Iterable[DeviceRecord], assumptions: CatalogAssumptions = DEFAULT_ASSUMPTIONS) -> List[List[Any]]:
    rows = []
    for record in records:
        original = [_cell(getattr(record, spec.name)) for spec in fields(DeviceRecord)]
        derived = [
            None if record.eta is None else q1(record.eta),
            cooperativity_bound(record, assumptions),
            occupancy(record),
        ]
        rows.append(original + [_cell(value) for value in derived])
    return rows


def export_csv(
    records: Sequence[DeviceRecord],
    path: str | Path,
    assumptions: CatalogAssumptions = DEFAULT_ASSUMPTIONS,
) -> None:
    """原始列加 q1、bound、occupancy 三个派生列，列顺序固定；缺失值写空单元格。"""  # 函数说明。
    header = [spec.name for spec in fields(DeviceRecord)] + list(DERIVED_COLUMNS)
    write_csv(path, header, catalog_rows(records, assumptions))


def summarize_catalog(records: Iterable[DeviceRecord]) -> Dict[str, Dict[str, Any]]:
    """按方法类别统计记录数与最高报道效率。"""  # 函数说明。
    summary: Dict[str, Dict[str, Any]] = {}
    for record in records:
        entry = summary.setdefault(record.method, {"count": 0, "best_eta": None, "best_ref": None})
        entry["count"] += 1
        if record.eta is not None and (entry["best_eta"] is None or record.eta > entry["best_eta"]):
            entry["best_eta"] = record.eta
            entry["best_ref"] = record.ref
    return {method: summary[method] for method in METHODS if method in summary}
