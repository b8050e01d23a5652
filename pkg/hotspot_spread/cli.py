"""
hotspot_spread.cli

命令行入口：每个子命令读取上一阶段的产物，写出本阶段的产物与运行清单
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import __version__
from .analysis import (
    AnalysisConfig,
    FlowKind,
    FlowLevel,
    PopulationMode,
    aggregate_by_year,
    build_mobility_network,
    compare_networks,
    region_metrics,
    rollup_planning_areas,
    stability_series,
)
from .config import resolve_config
from .evaluation import score_forecasts, summarize_by_year
from .exceptions import EmptyInput, HotspotSpreadError, InvalidConfig
from .fetch import Downloader, load_sources
from .forecaster import forecast_weeks
from .hotspot import binarize
from .ingest import IngestConfig, assign_grid_cells, build_weekly_counts, load_subzone_index, read_snapshots
from .learner import LearnerConfig, learn_weeks
from .manifest import RunManifest
from .progress import BatchProgressDisplay, format_size
from .serialization import (
    comparison_to_dict,
    read_commutes,
    read_counts,
    read_dense,
    read_forecasts,
    read_grid_centroids,
    read_grid_map,
    read_hotspots,
    read_models,
    region_metrics_geojson,
    write_counts,
    write_dense,
    write_edge_list,
    write_forecasts,
    write_grid_map,
    write_hotspots,
    write_json,
    write_metrics,
    write_models,
    write_region_metrics,
    write_stability,
)
from .synth import SynthScenario, generate, to_counts
from .utils.utils import raise_for_statement
from .weeks import select_range


LOGGER = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """把命令行参数映射到配置分区"""
    get = lambda name: getattr(args, name, None)
    return {
        "seed": get("seed"),
        "ingest": {
            "week_start": get("week_start"),
            "exclude_low_density": True if get("exclude_low_density") else None,
        },
        "hotspot": {"threshold": get("hotspot_threshold")},
        "learner": {
            "lookback": get("lookback"),
            "lambda1": get("lambda1"),
            "lambda2": get("lambda2"),
            "max_concurrent": get("max_concurrent"),
        },
        "analysis": {
            "top_k": get("top_k"),
            "population_mode": get("population_mode"),
            "zero_tolerance": get("zero_tolerance"),
        },
    }


def _finish(args: argparse.Namespace, config: Dict[str, Any], inputs: Sequence[Any], seed: Optional[int] = None) -> None:
    RunManifest.create(
        command=" ".join(["hotspot-spread", *args.argv]),
        config_snapshot=config,
        inputs=[p for p in inputs if p],
        seed=config["seed"] if seed is None else seed,
    ).write(args.out)
    LOGGER.info("输出已写入 %s", args.out)


def cmd_ingest(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    ingest_config = IngestConfig.from_mapping(config["ingest"])
    paths: List[Path] = []
    for item in args.input:
        item = Path(item)
        paths.extend(sorted(item.glob("*.csv")) if item.is_dir() else [item])
    raise_for_statement(len(paths) > 0, "没有找到快照文件", EmptyInput)

    index = load_subzone_index(args.subzones, ingest_config)
    parsed = read_snapshots(paths, ingest_config)
    counts = build_weekly_counts(parsed.records, index, ingest_config).select(args.weeks)
    LOGGER.info(
        "%d 个文件, %d 条记录, 跳过 %d 行, %d 条不在任何分区内, %d 条重复",
        len(paths),
        len(parsed.records),
        parsed.skipped,
        counts.unmapped,
        counts.duplicates,
    )
    write_counts(counts, args.out)
    if args.grid_centroids:
        write_grid_map(assign_grid_cells(read_grid_centroids(args.grid_centroids), index), Path(args.out) / "grid_map.csv")
    _finish(args, config, [*paths, args.subzones, args.grid_centroids])
    return 0


def cmd_binarize(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    counts = read_counts(args.input).select(args.weeks)
    series = binarize(counts, config["hotspot"]["threshold"])
    write_hotspots(series, args.out)
    LOGGER.info("%d 个分区 × %d 周, 热点格 %d 个", series.N, series.T, int(series.y.sum()))
    _finish(args, config, [args.input])
    return 0


def cmd_learn(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    learner_config = LearnerConfig.from_mapping(config["learner"])
    hotspots = read_hotspots(args.hotspots)
    labels = select_range(hotspots.week_labels, args.weeks)
    display = BatchProgressDisplay("逐周学习", enabled=not args.quiet)
    models = asyncio.run(learn_weeks(hotspots, learner_config, labels, display.callback()))
    raise_for_statement(len(models) > 0, f"所选周中没有历史足够 {learner_config.H} 周的目标周", EmptyInput)
    display.finish(len(models), 0)
    write_models(models, args.out)
    _finish(args, config, [args.hotspots], seed=learner_config.seed)
    return 0


def cmd_forecast(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    hotspots = read_hotspots(args.hotspots)
    models = read_models(args.models)
    if args.weeks:
        wanted = set(select_range([m.target_week for m in models], args.weeks))
        models = [m for m in models if m.target_week in wanted]
    forecasts = forecast_weeks(models, hotspots)
    write_forecasts(forecasts, args.out)
    _finish(args, config, [args.hotspots, args.models])
    return 0


def cmd_evaluate(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    hotspots = read_hotspots(args.hotspots)
    forecasts = read_forecasts(args.forecasts)
    scores = score_forecasts(forecasts, hotspots)
    raise_for_statement(len(scores) > 0, "没有目标周落在观测序列内的预测", EmptyInput)
    summaries = summarize_by_year(scores, {f.target_week: f.weights for f in forecasts if f.weights})
    write_metrics(scores, summaries, args.out)
    for summary in summaries:
        LOGGER.info(
            "%s: %d 周, accuracy %.4f±%.4f, precision %.4f, recall %.4f, f1 %.4f",
            summary.year,
            summary.weeks,
            summary.accuracy_mean,
            summary.accuracy_std,
            summary.precision_mean,
            summary.recall_mean,
            summary.f1_mean,
        )
    _finish(args, config, [args.hotspots, args.forecasts])
    return 0


def cmd_stability(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    analysis_config = AnalysisConfig.from_mapping(config["analysis"])
    series = stability_series(read_models(args.models), analysis_config)
    values = [value for _, _, value in series]
    write_stability(series, Path(args.out) / "stability.csv")
    write_json(
        {
            "pairs": [{"week": a, "next_week": b, "ssim": v} for a, b, v in series],
            "mean": sum(values) / len(values) if values else None,
            "min": min(values) if values else None,
            "zero_tolerance": analysis_config.zero_tolerance,
        },
        Path(args.out) / "stability.json",
    )
    _finish(args, config, [args.models])
    return 0


def cmd_network(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    ingest_config = IngestConfig.from_mapping(config["ingest"])
    out = Path(args.out)
    index = load_subzone_index(args.subzones, ingest_config) if args.subzones else None

    models = read_models(args.models)
    if index is not None and models[0].subzone_ids:
        # 与模型的分区集合及顺序对齐，低密度剔除等在 ingest 阶段已生效
        index = index.restricted_to(models[0].subzone_ids)
    yearly = aggregate_by_year(models)
    if args.year is not None:
        raise_for_statement(args.year in yearly, f"模型中没有 {args.year} 年的周", EmptyInput)
        yearly = {args.year: yearly[args.year]}
    for year, net in yearly.items():
        write_dense(net, out / f"learned_{year}.csv")
        write_edge_list(net, out / f"learned_{year}_edges.csv")
        if args.rollup:
            raise_for_statement(index is not None, "--rollup 需要 --subzones", InvalidConfig)
            rolled = rollup_planning_areas(net, index)
            write_dense(rolled, out / f"learned_{year}_planning_area.csv")

    if args.commutes:
        raise_for_statement(index is not None and args.grid_map, "构建流动网络需要 --subzones 与 --grid-map", InvalidConfig)
        mobility = build_mobility_network(read_commutes(args.commutes), read_grid_map(args.grid_map), index)
        write_dense(mobility, out / "mobility.csv")
        write_edge_list(mobility, out / "mobility_edges.csv")
        if args.rollup:
            write_dense(rollup_planning_areas(mobility, index), out / "mobility_planning_area.csv")
    _finish(args, config, [args.models, args.subzones, args.commutes, args.grid_map])
    return 0


def _learned_network_file(networks: Path, year: Optional[int]) -> Path:
    if year is not None:
        return networks / f"learned_{year}.csv"
    candidates = sorted(p for p in networks.glob("learned_*.csv") if p.stem[len("learned_"):].isdigit())
    raise_for_statement(len(candidates) == 1, f"{networks} 中有 {len(candidates)} 个年度网络，请用 --year 指定", InvalidConfig)
    return candidates[0]


def cmd_compare(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    analysis_config = AnalysisConfig.from_mapping(config["analysis"])
    index = load_subzone_index(args.subzones, IngestConfig.from_mapping(config["ingest"]))
    networks = Path(args.networks)
    learned_file = _learned_network_file(networks, args.year)
    G_L = read_dense(learned_file, FlowKind.LEARNED)
    G_M = read_dense(networks / "mobility.csv", FlowKind.MOBILITY)
    index = index.restricted_to(G_L.labels)

    metrics = region_metrics(G_L, G_M, index, PopulationMode(analysis_config.population_mode))
    report = compare_networks(metrics, analysis_config.top_k)
    for reason in report.undefined:
        LOGGER.warning("相关系数无定义 %s", reason)

    out = Path(args.out)
    write_region_metrics(metrics, out / "region_metrics.csv")
    write_json(region_metrics_geojson(metrics, index), out / "region_metrics.geojson")
    write_json(comparison_to_dict(report), out / "comparison.json")
    _finish(args, config, [learned_file, networks / "mobility.csv", args.subzones])
    return 0


def cmd_synth(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    scenario = SynthScenario.from_mapping(config["synth"])
    series = generate(scenario)
    write_hotspots(series, args.out)
    write_counts(to_counts(series), args.out)
    write_json({**scenario.to_dict(), "P_star": scenario.planted_matrix()}, Path(args.out) / "scenario.json")
    _finish(args, config, [args.config], seed=scenario.seed)
    return 0


def cmd_fetch(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    sources = load_sources(args.sources)
    raise_for_statement(len(sources) > 0, "来源列表为空", EmptyInput)
    display = BatchProgressDisplay("下载数据集", enabled=not args.quiet)
    report = asyncio.run(
        Downloader(args.max_concurrent).download_batch(sources, args.out, force=args.force, progress_callback=display.callback())
    )
    display.finish(report.success, report.failed, report.errors)
    LOGGER.info("共下载 %s", format_size(sum(task.downloaded for task in report.tasks)))
    return 1 if report.failed else 0


def _common(parser: argparse.ArgumentParser, out_required: bool = True) -> None:
    parser.add_argument("--config", help="配置文件 (.yaml/.toml/.json)")
    parser.add_argument("--out", required=out_required, help="输出目录")
    parser.add_argument("--seed", type=int, help="随机种子")
    parser.add_argument("--week-start", choices=["sunday", "monday"], help="每周起始日：sunday 为 CDC 周，monday 为 ISO 周")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="输出调试日志")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="只输出警告与错误")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hotspot-spread", description="登革热热点传播网络学习与预测")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler: Callable, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.set_defaults(handler=handler)
        return p

    p = add("ingest", cmd_ingest, "解析周快照并生成周计数")
    p.add_argument("--input", nargs="+", required=True, help="快照 CSV 文件或目录")
    p.add_argument("--subzones", required=True, help="分区边界 GeoJSON")
    p.add_argument("--weeks", help="周区间 A:B")
    p.add_argument("--exclude-low-density", action="store_true", help="剔除低人口密度分区")
    p.add_argument("--grid-centroids", help="网格中心点 CSV，同时输出 grid_map.csv")

    p = add("binarize", cmd_binarize, "按阈值生成热点序列")
    p.add_argument("--input", required=True, help="counts.json 或其所在目录")
    p.add_argument("--hotspot-threshold", type=int, help="热点阈值 c")
    p.add_argument("--weeks", help="周区间 A:B")

    p = add("learn", cmd_learn, "逐周学习传播矩阵与时间权重")
    p.add_argument("--hotspots", required=True, help="热点序列目录")
    p.add_argument("--weeks", help="目标周区间 A:B")
    p.add_argument("--lookback", type=int, help="回看周数 H")
    p.add_argument("--lambda1", type=float, help="L2 正则系数")
    p.add_argument("--lambda2", type=float, help="L1 正则系数")
    p.add_argument("--max-concurrent", type=int, help="并发学习的周数")

    p = add("forecast", cmd_forecast, "预测下一周热点")
    p.add_argument("--hotspots", required=True, help="热点序列目录")
    p.add_argument("--models", required=True, help="模型目录")
    p.add_argument("--weeks", help="只使用目标周在区间内的模型")

    p = add("evaluate", cmd_evaluate, "评估预测结果")
    p.add_argument("--hotspots", required=True, help="热点序列目录")
    p.add_argument("--forecasts", required=True, help="forecasts.json 或其所在目录")

    p = add("stability", cmd_stability, "相邻周传播矩阵的 SSIM")
    p.add_argument("--models", required=True, help="模型目录")
    p.add_argument("--zero-tolerance", type=float, help="相对最大值低于此比例的元素视为 0，0 表示不做稀疏化")

    p = add("network", cmd_network, "构建年度传播网络与流动网络")
    p.add_argument("--models", required=True, help="模型目录")
    p.add_argument("--subzones", help="分区边界 GeoJSON")
    p.add_argument("--commutes", help="通勤记录 CSV (home_grid, work_grid)")
    p.add_argument("--grid-map", help="网格到分区的映射 CSV (grid_id, subzone_id)")
    p.add_argument("--year", type=int, help="只输出该年份")
    p.add_argument("--rollup", action="store_true", help="同时输出规划区级网络")

    p = add("compare", cmd_compare, "比较传播网络与流动网络")
    p.add_argument("--networks", required=True, help="network 子命令的输出目录")
    p.add_argument("--subzones", required=True, help="分区边界 GeoJSON")
    p.add_argument("--year", type=int, help="年度网络的年份")
    p.add_argument("--top-k", type=int, help="Jaccard 重合度使用的前 k 个区域")
    p.add_argument("--population-mode", choices=[m.value for m in PopulationMode], help="D(k) 取人口或人口密度")

    add("synth", cmd_synth, "生成合成热点序列")

    p = add("fetch", cmd_fetch, "下载数据集文件")
    p.add_argument("--sources", required=True, help="来源列表 JSON：{\"files\": [{\"url\": ..., \"filename\": ...}]}")
    p.add_argument("--max-concurrent", type=int, default=3, help="最大并发下载数")
    p.add_argument("--force", action="store_true", help="覆盖已存在的文件")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    执行一个子命令

    Args:
        argv (Sequence[str]): 命令行参数，默认取 sys.argv[1:]

    Returns:
        int: 退出码，0 成功，1 数据错误，2 参数错误
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    args.argv = argv
    _configure_logging(args)

    try:
        config = resolve_config(args.config, _overrides(args))
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return args.handler(args, config)
    except HotspotSpreadError as e:
        LOGGER.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    except OSError as e:
        # 输出目录不可写等
        LOGGER.error("%s: %s", type(e).__name__, e)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
