"""命令行入口：report、sweep、capacity、catalog、oracle-check、matrices 六个子命令。

退出码：0 成功，1 检查未通过或未捕获错误，2 用法/配置/I/O 错误，3 数值错误。
报告与 CSV 写 stdout 或 --out，日志写 stderr；Hz 与 rad/s 的换算只发生在这里和模型加载处。
"""  # 模块说明。
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence, Tuple

try:
    sys.stdout.reconfigure(line_buffering=True)  # type: ignore[attr-defined]
except Exception:  # noqa: BLE001
    pass

import numpy as np

from src.transducer.catalog import (
    CatalogAssumptions,
    consistency_report,
    export_csv,
    load_catalog,
    summarize_catalog,
)
from src.transducer.metrics import (
    EvaluationSettings,
    PerformanceReport,
    bandwidth_analytic,
    continuous_capacity,
    performance_report,
    q1,
    sweep_tradeoff,
)
from src.transducer.model import TWO_PI, load_model_config
from src.transducer.oracle import OracleSettings, compare_with_scattering
from src.transducer.scattering import assemble, format_complex_csv, scattering_matrix
from src.utils.config import (
    ConfigBundle,
    load_and_merge_config,
    parse_cli_set_items,
    render_effective_config,
    save_config,
)
from src.utils.errors import ConfigurationError, DomainError, classify_exception, exit_code_for
from src.utils.io import atomic_write_text, format_float, render_csv, write_csv
from src.utils.logging import (
    ProgressPrinter,
    StructuredLogger,
    bind_context,
    capture_warnings,
    get_logger,
    new_trace_id,
    print_summary,
)
from src.utils.metrics import MetricsSink
from src.utils.profiling import PhaseTimer

PROJECT_ROOT = Path(__file__).resolve().parents[2]
SWEEP_HEADER = ("c_em", "c_om", "eta", "n_add_o", "n_add_e")
SPECTRUM_HEADER = ("omega_hz", "eta", "q1")
ORACLE_DEFAULT_POINTS = 5  # 未给 --omega-hz 时在 ±解析带宽内取的频点数。


@dataclass
class CommandContext:
    """子命令共享的运行上下文。"""  # 数据类说明。

    config: Dict[str, Any]
    logger: StructuredLogger
    metrics: MetricsSink
    settings: EvaluationSettings
    threads: int
    progress: bool
    profile_enabled: bool

    def phase(self, name: str) -> PhaseTimer:
        return PhaseTimer(self.metrics, name, enabled=self.profile_enabled)


def parse_range(text: str) -> np.ndarray:
    """把 'start:stop:count' 解析为对数等距网格，start、stop 须为正数。"""  # 函数说明。
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"range {text!r} must look like start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigurationError(f"range {text!r} has a non-numeric component") from exc
    if count < 1:
        raise ConfigurationError(f"range {text!r} is empty")
    if not (start > 0.0 and stop > 0.0 and math.isfinite(start) and math.isfinite(stop)):
        raise ConfigurationError(f"range {text!r} needs positive finite bounds for a log grid")
    return np.logspace(math.log10(start), math.log10(stop), count)


def _resolve_input(path: str | None, flag: str) -> Path:
    """校验输入文件存在；相对路径在当前目录找不到时回退到仓库根目录。"""
    if not path:
        raise ConfigurationError(f"{flag} is required")
    candidate = Path(path)
    if not candidate.is_absolute() and not candidate.exists() and (PROJECT_ROOT / candidate).exists():
        candidate = PROJECT_ROOT / candidate
    if not candidate.is_file():
        raise FileNotFoundError(f"{flag} file not found: {path}")
    return candidate


def _window_from_args(args: argparse.Namespace) -> Tuple[float, float] | None:
    low, high = args.omega_min_hz, args.omega_max_hz
    if low is None and high is None:
        return None
    if low is None or high is None:
        raise ConfigurationError("--omega-min-hz and --omega-max-hz must be given together")
    if not high > low:
        raise DomainError(f"frequency window must satisfy max > min, got [{low}, {high}] Hz")
    return (TWO_PI * low, TWO_PI * high)


def _hz(value: float | None) -> float | None:
    return None if value is None else value / TWO_PI


def _fmt(value: Any) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _emit(text: str) -> None:
    sys.stdout.write(text)
    sys.stdout.flush()


def _spectrum_rows(omegas: np.ndarray, eta: np.ndarray, rates: np.ndarray | None = None) -> List[List[float]]:
    clipped = np.clip(eta, 0.0, 1.0)
    rates = q1(clipped) if rates is None else rates
    return [[float(w) / TWO_PI, float(e), float(r)] for w, e, r in zip(omegas, eta, rates)]


def render_report(report: PerformanceReport) -> str:
    """report 子命令的文本输出，每行 key = value，频率与带宽以 Hz 表示。"""
    response = report.response
    lines = [
        ("kind", report.kind),
        ("omega_peak_hz", _hz(report.omega_peak)),
        ("eta_peak", report.eta_peak),
        ("eta_resonance", report.eta_resonance),
        ("eta_internal", report.eta_internal),
        ("eta_e", response.eta_e),
        ("eta_o", response.eta_o),
        ("c_em", response.c_em),
        ("c_om", response.c_om),
        ("c_eo", response.c_eo),
        ("link_cooperativities", ";".join(format_float(c) for c in response.link_cooperativities)),
        ("n_add_o", report.n_add_o),
        ("n_add_e", report.n_add_e),
        ("bandwidth_analytic_hz", _hz(report.bandwidth_analytic)),
        ("bandwidth_numeric_hz", _hz(report.bandwidth_numeric)),
        ("q1_peak", report.q1_peak),
        ("capacity_qubits_per_s", report.capacity.capacity),
        ("capacity_error", report.capacity.error_estimate),
        ("window_hz", f"{format_float(report.window[0] / TWO_PI)}:{format_float(report.window[1] / TWO_PI)}"),
    ]
    text = "".join(f"{key} = {_fmt(value)}\n" for key, value in lines)
    text += "".join(f"note = {note}\n" for note in report.notes)
    return text


def cmd_report(args: argparse.Namespace, ctx: CommandContext) -> int:
    model_path = _resolve_input(args.model, "--model")
    window = _window_from_args(args)
    with ctx.phase("load"):
        model, env = load_model_config(model_path)
    log = ctx.logger.bind(model=str(model_path))
    log.info("model loaded", kind=model.kind, modes=model.n_modes, ports=model.n_ports)
    with ctx.phase("evaluate"):
        report = performance_report(model, env, window=window, settings=ctx.settings)
    ctx.metrics.inc("points_evaluated", len(report.spectrum_omegas) + len(report.capacity.omegas))
    for note in report.notes:
        log.warning(note)
    _emit(render_report(report))
    if args.out:
        with ctx.phase("export"):
            write_csv(args.out, SPECTRUM_HEADER, _spectrum_rows(report.spectrum_omegas, report.spectrum_eta))
        log.info("spectrum written", path=args.out, rows=len(report.spectrum_omegas))
    return 0


def cmd_sweep(args: argparse.Namespace, ctx: CommandContext) -> int:
    model_path = _resolve_input(args.model, "--model")
    sweep_cfg = ctx.config.get("sweep", {}) or {}
    cem = parse_range(args.cem_range or sweep_cfg.get("cem_range", ""))
    com = parse_range(args.com_range or sweep_cfg.get("com_range", ""))
    with ctx.phase("load"):
        template, env = load_model_config(model_path)
    log = ctx.logger.bind(model=str(model_path))
    progress = ProgressPrinter(len(cem), "sweep rows", ctx.progress, log)
    try:
        with ctx.phase("evaluate"):
            points = sweep_tradeoff(
                template,
                cem,
                com,
                env,
                max_workers=ctx.threads,
                settings=ctx.settings,
                on_row=lambda index, _: progress.update(),
            )
    finally:
        progress.close()
    ctx.metrics.inc("points_evaluated", len(points))
    rows = [list(point) for point in points]
    if args.out:
        with ctx.phase("export"):
            write_csv(args.out, SWEEP_HEADER, rows)
        log.info("sweep written", path=args.out, rows=len(rows), grid=f"{len(cem)}x{len(com)}")
    else:
        _emit(render_csv(SWEEP_HEADER, rows))
    return 0


def cmd_capacity(args: argparse.Namespace, ctx: CommandContext) -> int:
    model_path = _resolve_input(args.model, "--model")
    window = _window_from_args(args)
    with ctx.phase("load"):
        model, _ = load_model_config(model_path)
    if window is None:
        half_width = ctx.settings.window_factor * bandwidth_analytic(model)
        window = (model.resonance_frequency - half_width, model.resonance_frequency + half_width)
    log = ctx.logger.bind(model=str(model_path))
    with ctx.phase("evaluate"):
        result = continuous_capacity(model, window[0], window[1], settings=ctx.settings)
    ctx.metrics.inc("points_evaluated", len(result.omegas))
    if not result.converged:
        log.warning("capacity refinement did not reach tolerance", refinements=result.refinements, error=result.error_estimate)
    _emit(
        f"capacity_qubits_per_s = {format_float(result.capacity)}\n"
        f"error_estimate = {format_float(result.error_estimate)}\n"
        f"converged = {str(result.converged).lower()}\n"
        f"refinements = {result.refinements}\n"
        f"points = {len(result.omegas)}\n"
        f"window_hz = {format_float(window[0] / TWO_PI)}:{format_float(window[1] / TWO_PI)}\n"
    )
    if args.out:
        with ctx.phase("export"):
            write_csv(args.out, SPECTRUM_HEADER, _spectrum_rows(result.omegas, result.eta, result.q1))
        log.info("capacity grid written", path=args.out, rows=len(result.omegas))
    return 0


def _format_values(values: Dict[str, float]) -> str:
    return ";".join(f"{key}={_fmt(float(value))}" for key, value in values.items())


def cmd_catalog(args: argparse.Namespace, ctx: CommandContext) -> int:
    catalog_cfg = ctx.config.get("catalog", {}) or {}
    catalog_path = _resolve_input(args.catalog or catalog_cfg.get("path"), "--catalog")
    assumptions = CatalogAssumptions.from_config(ctx.config)
    with ctx.phase("load"):
        records = load_catalog(catalog_path)
    log = ctx.logger.bind(catalog=str(catalog_path))
    rows = []
    failures = 0
    with ctx.phase("evaluate"):
        for record in records:
            ctx.metrics.inc("records_checked")
            for result in consistency_report(record, assumptions):
                ctx.metrics.inc({"pass": "checks_passed", "fail": "checks_failed", "skipped": "checks_skipped"}[result.status])
                if result.status == "fail":
                    failures += 1
                    log.warning("catalog check failed", ref=result.ref, check=result.check, values=result.values)
                rows.append([result.ref, result.check, result.status, _format_values(result.values), result.detail])
    _emit(render_csv(("ref", "check", "status", "values", "detail"), rows))
    for method, entry in summarize_catalog(records).items():
        log.info("catalog method summary", method=method, **entry)
    if args.out:
        with ctx.phase("export"):
            export_csv(records, args.out, assumptions)
        log.info("catalog exported", path=args.out, records=len(records))
    return 1 if failures else 0


def cmd_oracle_check(args: argparse.Namespace, ctx: CommandContext) -> int:
    model_path = _resolve_input(args.model, "--model")
    oracle_settings = OracleSettings.from_config(ctx.config)
    with ctx.phase("load"):
        model, _ = load_model_config(model_path)
    if args.omega_hz:
        omegas = [TWO_PI * value for value in args.omega_hz]
    else:
        width = bandwidth_analytic(model)
        omegas = list(model.resonance_frequency + width * np.linspace(-1.0, 1.0, ORACLE_DEFAULT_POINTS))
    log = ctx.logger.bind(model=str(model_path))
    progress = ProgressPrinter(len(omegas), "oracle frequencies", ctx.progress, log)
    try:
        with ctx.phase("oracle"):
            deviation = compare_with_scattering(
                model,
                omegas,
                settings=oracle_settings,
                max_workers=ctx.threads,
                on_result=lambda index, _: progress.update(),
            )
    finally:
        progress.close()
    ctx.metrics.inc("oracle_runs", len(omegas))
    passed = deviation <= oracle_settings.deviation_tol
    _emit(
        f"frequencies = {len(omegas)}\n"
        f"max_deviation = {format_float(deviation)}\n"
        f"tolerance = {format_float(oracle_settings.deviation_tol)}\n"
        f"status = {'pass' if passed else 'fail'}\n"
    )
    if not passed:
        log.warning("time-domain response disagrees with S(omega)", deviation=deviation, tolerance=oracle_settings.deviation_tol)
    return 0 if passed else 1


def cmd_matrices(args: argparse.Namespace, ctx: CommandContext) -> int:
    model_path = _resolve_input(args.model, "--model")
    with ctx.phase("load"):
        model, _ = load_model_config(model_path)
    omega = TWO_PI * args.omega_hz[0] if args.omega_hz else model.resonance_frequency
    mats = assemble(model)
    result = scattering_matrix(model, omega, matrices=mats, **ctx.settings.solver_options)
    ctx.metrics.inc("points_evaluated")
    ctx.logger.info(
        "scattering matrix evaluated",
        omega_hz=omega / TWO_PI,
        condition=result.condition,
        unitarity_error=result.unitarity_error(),
        ports=[port.label for port in model.ports],
    )
    result.check_unitarity(ctx.settings.unitarity_tol)
    blocks = {"A": mats.A, "B": mats.B, "S": result.S}
    if args.out:
        target = Path(args.out)
        for name, matrix in blocks.items():
            atomic_write_text(target / f"{name}.csv", format_complex_csv(matrix))
        ctx.logger.info("matrices written", directory=str(target))
    else:
        _emit("".join(f"# {name}\n{format_complex_csv(matrix)}" for name, matrix in blocks.items()))
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace, CommandContext], int]] = {
    "report": cmd_report,
    "sweep": cmd_sweep,
    "capacity": cmd_capacity,
    "catalog": cmd_catalog,
    "oracle-check": cmd_oracle_check,
    "matrices": cmd_matrices,
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="用户配置 YAML，默认查找 config/user.yaml")
    common.add_argument("--profile", dest="profile_name", default=None, help="预设 profile 名称（quick/precise）")
    common.add_argument("--set", dest="set_items", action="append", default=[], help="KEY.PATH=VALUE 覆盖任意配置，可重复")
    common.add_argument("--print-config", action="store_true", help="打印带来源注释的最终配置后退出")
    common.add_argument("--save-config", default=None, help="保存最终配置快照后退出")
    common.add_argument("--log-format", choices=["human", "jsonl"], default=None)
    common.add_argument("--log-level", default=None, help="DEBUG/INFO/WARNING/ERROR")
    common.add_argument("--log-file", default=None, help="日志追加写入的文件")
    common.add_argument("--quiet", action="store_true", help="不向 stderr 输出日志")
    common.add_argument("--force-flush", action="store_true", help="日志写文件后立即 fsync")
    common.add_argument("--metrics-file", default=None, help="导出计数器与阶段耗时（.csv 或 .jsonl）")
    common.add_argument("--enable-profiler", action="store_true", help="记录各阶段耗时")
    common.add_argument("--threads", type=int, default=None, help="线程数，0 表示自动")
    common.add_argument("--no-progress", action="store_true", help="关闭进度条，改用日志报告进度")
    return common


def build_parser() -> argparse.ArgumentParser:
    """创建带六个子命令的解析器；公共选项写在子命令之后。"""  # 函数说明。
    parser = argparse.ArgumentParser(prog="transducer-lab", description="Microwave-to-optical transducer performance toolkit")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    common = _common_parser()

    def model_command(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.add_argument("--model", default=None, help="模型 JSON 配置路径")
        sub.add_argument("--out", default=None, help="输出路径")
        return sub

    for name, help_text in (("report", "η、噪声、带宽与容量汇总"), ("capacity", "频窗内的 Q1 积分")):
        sub = model_command(name, help_text)
        sub.add_argument("--omega-min-hz", type=float, default=None)
        sub.add_argument("--omega-max-hz", type=float, default=None)
        sub.add_argument("--points", type=int, default=None, help="网格点数，覆盖 capacity.points")
    sweep = model_command("sweep", "(C_em, C_om) 对数网格上的效率/噪声折衷")
    sweep.add_argument("--cem-range", default=None, help="start:stop:count")
    sweep.add_argument("--com-range", default=None, help="start:stop:count")
    oracle = model_command("oracle-check", "时域积分与 S(ω) 对照")
    oracle.add_argument("--omega-hz", type=float, action="append", default=None, help="检查频率，可重复")
    matrices = model_command("matrices", "导出 A、B、S 矩阵")
    matrices.add_argument("--omega-hz", type=float, action="append", default=None, help="信号频率，默认取共振频率")
    catalog = subparsers.add_parser("catalog", parents=[common], help="器件目录一致性检查")
    catalog.add_argument("--catalog", default=None, help="目录 CSV，默认取 catalog.path")
    catalog.add_argument("--out", default=None, help="带派生列的 CSV 导出路径")
    return parser


def _build_cli_overrides(args: argparse.Namespace) -> dict:
    """只收集用户显式给出的选项。"""  # 工具函数说明。
    overrides: dict[str, Any] = {}
    for key in ("log_format", "log_level", "log_file", "metrics_file"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.quiet:
        overrides["quiet"] = True
    if args.force_flush:
        overrides["force_flush"] = True
    if args.no_progress:
        overrides["progress"] = False
    if args.enable_profiler:
        overrides["profiling"] = {"enabled": True}
    if args.threads is not None:
        overrides["threads"] = args.threads
    if getattr(args, "points", None) is not None:
        overrides["capacity"] = {"points": args.points}
    return overrides


def _export_metrics(ctx: CommandContext, command: str) -> None:
    metrics_file = ctx.config.get("metrics_file")
    if metrics_file:
        ctx.metrics.export(metrics_file)
        ctx.logger.info("metrics exported", path=metrics_file)
    print_summary(command, ctx.metrics.summary(), ctx.logger)


def main(argv: Sequence[str] | None = None) -> int:
    """解析参数、加载配置并分派子命令，返回退出码。"""  # 函数说明。
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        bundle: ConfigBundle = load_and_merge_config(
            cli_overrides=_build_cli_overrides(args),
            cli_set_overrides=parse_cli_set_items(args.set_items),
            config_path=args.config,
            profile_name=args.profile_name,
        )
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"error: {exc}\n")
        return exit_code_for(exc)
    if args.print_config:
        _emit(render_effective_config(bundle, include_sources=True))
        return 0
    if args.save_config:
        save_config(bundle, args.save_config)
        return 0
    config = bundle.config
    logger = get_logger(
        format=config.get("log_format", "human"),
        level=config.get("log_level", "INFO"),
        log_file=config.get("log_file") or None,
        sample_rate=float(config.get("log_sample_rate", 1.0)),
        quiet=bool(config.get("quiet", False)),
        force_flush=bool(config.get("force_flush", False)),
    )
    run_logger = bind_context(logger, trace_id=new_trace_id(), command=args.command)
    ctx = CommandContext(
        config=config,
        logger=run_logger,
        metrics=MetricsSink(),
        settings=EvaluationSettings.from_config(config),
        threads=bundle.threads,
        progress=bool(config.get("progress", True)),
        profile_enabled=bool((config.get("profiling") or {}).get("enabled", False)),
    )
    run_logger.debug("effective profile", profile=bundle.profile or "default", threads=ctx.threads)
    try:
        with capture_warnings(run_logger):
            code = COMMANDS[args.command](args, ctx)
    except Exception as exc:  # noqa: BLE001
        category = classify_exception(exc)
        if category == "unknown":
            run_logger.exception("Uncaught error")
        else:
            diagnostics = getattr(exc, "diagnostics", None)
            run_logger.error(
                f"{args.command} failed",
                error=str(exc),
                error_type=exc.__class__.__name__,
                category=category,
                **({"diagnostics": diagnostics} if diagnostics else {}),
            )
        code = exit_code_for(exc)
    _export_metrics(ctx, args.command)
    return code


if __name__ == "__main__":
    sys.exit(main())
