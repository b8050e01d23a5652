"""
hotspot_spread.serialization

各阶段产物的 CSV / JSON / GeoJSON 读写。浮点数统一按固定小数位输出，便于逐字节比较。
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from shapely.geometry import mapping

from .analysis import FlowKind, FlowLevel, FlowNetwork, NetworkComparison, RegionMetrics
from .evaluation import WeeklyScore, YearlySummary
from .exceptions import DimensionMismatch, EmptyInput, MissingHeader
from .forecaster import ForecastResult
from .hotspot import HotspotSeries
from .ingest import SubzoneIndex, WeeklyCaseCounts
from .learner import SpreadingModel
from .utils.utils import raise_for_statement, reads_input


DECIMALS = 10
FLOAT_FORMAT = f"%.{DECIMALS}f"

PathLike = Union[str, Path]


def _round(value: Any) -> Any:
    """递归地把浮点数舍入到固定小数位"""
    if isinstance(value, (float, np.floating)):
        return round(float(value), DECIMALS)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return _round(value.tolist())
    if isinstance(value, Mapping):
        return {str(k): _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    return value


def write_json(data: Any, path: PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf8", newline="\n") as f:
        json.dump(_round(data), f, ensure_ascii=False, indent=2)
        f.write("\n")


@reads_input
def read_json(path: PathLike) -> Any:
    with open(path, encoding="utf8") as f:
        return json.load(f)


def _write_frame(frame: pd.DataFrame, path: PathLike, index: bool = True) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")


@reads_input
def _read_matrix(path: PathLike, index_name: str) -> pd.DataFrame:
    frame = pd.read_csv(path, dtype={index_name: str})
    raise_for_statement(index_name in frame.columns, f"{path} 缺少 {index_name} 列", MissingHeader)
    return frame.set_index(index_name)


# 计数


def write_counts(counts: WeeklyCaseCounts, out_dir: PathLike) -> None:
    """
    写出 counts.csv（行为分区、列为周）与 counts.json（带元数据）

    Args:
        counts (WeeklyCaseCounts): 周计数
        out_dir (str | Path): 输出目录
    """
    frame = pd.DataFrame(counts.counts, index=pd.Index(counts.subzone_ids, name="subzone_id"), columns=counts.week_labels)
    _write_frame(frame, Path(out_dir) / "counts.csv")
    write_json(
        {
            "week_start": counts.week_start,
            "week_labels": counts.week_labels,
            "subzone_ids": counts.subzone_ids,
            "unmapped": counts.unmapped,
            "duplicates": counts.duplicates,
            "counts": counts.counts,
        },
        Path(out_dir) / "counts.json",
    )


@reads_input
def read_counts(path: PathLike) -> WeeklyCaseCounts:
    """读取 counts.json，或目录下的 counts.json"""
    path = Path(path)
    if path.is_dir():
        path = path / "counts.json"
    data = read_json(path)
    return WeeklyCaseCounts(
        counts=np.asarray(data["counts"], dtype=np.int64).reshape(len(data["subzone_ids"]), len(data["week_labels"])),
        week_labels=list(data["week_labels"]),
        subzone_ids=[str(s) for s in data["subzone_ids"]],
        week_start=data.get("week_start", "sunday"),
        unmapped=data.get("unmapped", 0),
        duplicates=data.get("duplicates", 0),
    )


# 热点


def write_hotspots(series: HotspotSeries, out_dir: PathLike) -> None:
    """写出 y.csv、y_hat.csv 与 hotspots.json"""
    out_dir = Path(out_dir)
    index = pd.Index(series.subzone_ids, name="subzone_id")
    _write_frame(pd.DataFrame(series.y, index=index, columns=series.week_labels), out_dir / "y.csv")
    _write_frame(pd.DataFrame(series.y_hat, index=index, columns=series.week_labels), out_dir / "y_hat.csv")
    write_json(
        {
            "c": series.c,
            "week_start": series.week_start,
            "week_labels": series.week_labels,
            "subzone_ids": series.subzone_ids,
        },
        out_dir / "hotspots.json",
    )


@reads_input
def read_hotspots(path: PathLike) -> HotspotSeries:
    """从 write_hotspots 的输出目录读回热点序列"""
    path = Path(path)
    if path.is_file():
        path = path.parent
    meta = read_json(path / "hotspots.json")
    y = _read_matrix(path / "y.csv", "subzone_id")
    y_hat = _read_matrix(path / "y_hat.csv", "subzone_id")
    labels = list(meta["week_labels"])
    ids = [str(s) for s in meta["subzone_ids"]]
    raise_for_statement(
        list(y.columns) == labels and list(y.index) == ids,
        f"{path} 中 y.csv 与 hotspots.json 的行列不一致",
        DimensionMismatch,
    )
    return HotspotSeries(
        y=y.loc[ids, labels].to_numpy(),
        y_hat=y_hat.loc[ids, labels].to_numpy(),
        c=int(meta["c"]),
        week_labels=labels,
        subzone_ids=ids,
        week_start=meta.get("week_start", "sunday"),
    )


# 模型


def write_models(models: Sequence[SpreadingModel], out_dir: PathLike) -> List[Path]:
    """
    每个目标周写出 <周>.json（w、损失、元数据）与 <周>_P.csv

    Args:
        models (Sequence[SpreadingModel]): 模型
        out_dir (str | Path): 输出目录

    Returns:
        List[Path]: 写出的 JSON 文件
    """
    out_dir = Path(out_dir)
    written = []
    for model in models:
        ids = model.subzone_ids or [str(i) for i in range(model.P.shape[0])]
        p_file = f"{model.target_week}_P.csv"
        _write_frame(pd.DataFrame(model.P, index=pd.Index(ids, name="subzone_id"), columns=ids), out_dir / p_file)
        write_json(
            {
                "target_week": model.target_week,
                "w": model.w,
                "final_loss": model.final_loss,
                "iterations_used": model.iterations_used,
                "subzone_ids": ids,
                "P_file": p_file,
                "loss_history": model.loss_history,
                "search_trace": [{"w": list(w), "loss": value} for w, value in model.search_trace],
            },
            out_dir / f"{model.target_week}.json",
        )
        written.append(out_dir / f"{model.target_week}.json")
    return written


@reads_input
def read_models(path: PathLike) -> List[SpreadingModel]:
    """读取目录下所有模型，按目标周排序"""
    path = Path(path)
    files = sorted(p for p in path.glob("*.json") if p.name != "manifest.json")
    raise_for_statement(len(files) > 0, f"{path} 中没有模型文件", EmptyInput)
    models = []
    for file in files:
        data = read_json(file)
        ids = [str(s) for s in data["subzone_ids"]]
        P = _read_matrix(path / data["P_file"], "subzone_id")
        raise_for_statement(
            list(P.index) == ids and [str(c) for c in P.columns] == ids,
            f"{data['P_file']} 的行列与模型的分区不一致",
            DimensionMismatch,
        )
        models.append(
            SpreadingModel(
                P=P.to_numpy(dtype=float),
                w=np.asarray(data["w"], dtype=float),
                target_week=data["target_week"],
                final_loss=float(data["final_loss"]),
                iterations_used=int(data["iterations_used"]),
                subzone_ids=ids,
                loss_history=list(data.get("loss_history", [])),
                search_trace=[(tuple(entry["w"]), entry["loss"]) for entry in data.get("search_trace", [])],
            )
        )
    return sorted(models, key=lambda m: m.target_week)


# 预测


def write_forecasts(forecasts: Sequence[ForecastResult], out_dir: PathLike) -> None:
    """写出 forecasts.json 与扁平的 forecasts.csv"""
    records, rows = [], []
    for forecast in forecasts:
        subzones = [
            {"id": sid, "score": float(score), "prediction": int(pred)}
            for sid, score, pred in zip(forecast.subzone_ids, forecast.scores, forecast.predictions)
        ]
        records.append(
            {
                "week": forecast.target_week,
                "issued_week": forecast.issued_week,
                "threshold": forecast.threshold_value,
                "weights": forecast.weights,
                "subzones": subzones,
            }
        )
        rows.extend({"week": forecast.target_week, "subzone_id": s["id"], "score": s["score"], "prediction": s["prediction"]} for s in subzones)
    write_json(records, Path(out_dir) / "forecasts.json")
    _write_frame(pd.DataFrame(rows, columns=["week", "subzone_id", "score", "prediction"]), Path(out_dir) / "forecasts.csv", index=False)


@reads_input
def read_forecasts(path: PathLike) -> List[ForecastResult]:
    path = Path(path)
    if path.is_dir():
        path = path / "forecasts.json"
    return [
        ForecastResult(
            scores=np.asarray([s["score"] for s in record["subzones"]], dtype=float),
            predictions=np.asarray([s["prediction"] for s in record["subzones"]], dtype=np.int8),
            threshold_value=float(record["threshold"]),
            target_week=record["week"],
            issued_week=record.get("issued_week", ""),
            subzone_ids=[str(s["id"]) for s in record["subzones"]],
            weights=list(record.get("weights", [])),
        )
        for record in read_json(path)
    ]


# 指标


def write_metrics(scores: Sequence[WeeklyScore], summaries: Sequence[YearlySummary], out_dir: PathLike) -> None:
    """写出 metrics.json 与 metrics.csv（每周一行，每年一行汇总）"""
    weekly = [vars(score) for score in scores]
    yearly = [
        {**{k: v for k, v in vars(summary).items() if k != "weight_stats"}, "weight_stats": [vars(ws) for ws in summary.weight_stats]}
        for summary in summaries
    ]
    write_json({"weekly": weekly, "yearly": yearly}, Path(out_dir) / "metrics.json")

    rows = [{"kind": "week", "label": s.week, "accuracy": s.accuracy, "precision": s.precision, "recall": s.recall, "f1": s.f1} for s in scores]
    rows.extend(
        {
            "kind": "year",
            "label": summary.year,
            "accuracy": summary.accuracy_mean,
            "precision": summary.precision_mean,
            "recall": summary.recall_mean,
            "f1": summary.f1_mean,
        }
        for summary in summaries
    )
    _write_frame(pd.DataFrame(rows, columns=["kind", "label", "accuracy", "precision", "recall", "f1"]), Path(out_dir) / "metrics.csv", index=False)


# 网络


def write_dense(net: FlowNetwork, path: PathLike) -> None:
    index = pd.Index(net.labels, name="region_id")
    _write_frame(pd.DataFrame(net.weights, index=index, columns=net.labels), path)


@reads_input
def read_dense(path: PathLike, kind: FlowKind, level: FlowLevel = FlowLevel.SUBZONE) -> FlowNetwork:
    frame = _read_matrix(path, "region_id")
    return FlowNetwork(
        weights=frame.to_numpy(dtype=float),
        kind=kind,
        level=level,
        labels=[str(label) for label in frame.index],
    )


def write_edge_list(net: FlowNetwork, path: PathLike) -> None:
    """只写出非零边 (src_id, dst_id, weight)，P[i, j] 为 j → i"""
    rows = [
        {"src_id": net.labels[j], "dst_id": net.labels[i], "weight": float(net.weights[i, j])}
        for i, j in zip(*np.nonzero(net.weights))
    ]
    _write_frame(pd.DataFrame(rows, columns=["src_id", "dst_id", "weight"]), path, index=False)


def write_stability(series: Iterable[Tuple[str, str, float]], path: PathLike) -> None:
    frame = pd.DataFrame(list(series), columns=["week", "next_week", "ssim"])
    _write_frame(frame, path, index=False)


def comparison_to_dict(report: NetworkComparison) -> Dict[str, Any]:
    return {
        "top_k": report.top_k,
        "correlations": report.correlations,
        "jaccard": report.jaccard,
        "top_regions": report.top_regions,
        "undefined": report.undefined,
    }


def metrics_to_frame(metrics: RegionMetrics) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "transmission_in": metrics.transmission_in,
            "transmission_out": metrics.transmission_out,
            "mobility_ratio": metrics.mobility_ratio,
            "population": metrics.population,
        },
        index=pd.Index(metrics.labels, name="subzone_id"),
    )


def write_region_metrics(metrics: RegionMetrics, path: PathLike) -> None:
    _write_frame(metrics_to_frame(metrics), path)


def region_metrics_geojson(metrics: RegionMetrics, index: SubzoneIndex) -> Dict[str, Any]:
    """
    把区域指标附加到分区多边形上，生成 GeoJSON FeatureCollection

    Args:
        metrics (RegionMetrics): 区域指标
        index (SubzoneIndex): 分区索引

    Returns:
        dict: FeatureCollection
    """
    raise_for_statement(metrics.labels == index.ids, "区域指标与分区索引的顺序不一致", DimensionMismatch)
    features = []
    for k, subzone in enumerate(index.subzones):
        features.append(
            {
                "type": "Feature",
                "geometry": mapping(subzone.polygon),
                "properties": {
                    "subzone_id": subzone.subzone_id,
                    "planning_area_id": subzone.planning_area_id,
                    "transmission_in": float(metrics.transmission_in[k]),
                    "transmission_out": float(metrics.transmission_out[k]),
                    "mobility_ratio": float(metrics.mobility_ratio[k]),
                    "population": float(metrics.population[k]),
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


# 通勤与网格映射


@reads_input
def read_commutes(path: PathLike) -> List[Tuple[str, str]]:
    """读取 home_grid, work_grid 两列的通勤 CSV"""
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = {"home_grid", "work_grid"} - set(frame.columns)
    raise_for_statement(not missing, f"{path} 缺少列: {sorted(missing)}", MissingHeader)
    return list(zip(frame["home_grid"], frame["work_grid"]))


@reads_input
def read_grid_map(path: PathLike) -> Dict[str, str]:
    """读取 grid_id, subzone_id 两列的映射 CSV，subzone_id 为空的行忽略"""
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = {"grid_id", "subzone_id"} - set(frame.columns)
    raise_for_statement(not missing, f"{path} 缺少列: {sorted(missing)}", MissingHeader)
    return {grid: subzone for grid, subzone in zip(frame["grid_id"], frame["subzone_id"]) if subzone}


def write_grid_map(grid_map: Mapping[str, Any], path: PathLike) -> None:
    rows = [{"grid_id": grid, "subzone_id": subzone or ""} for grid, subzone in grid_map.items()]
    _write_frame(pd.DataFrame(rows, columns=["grid_id", "subzone_id"]), path, index=False)


@reads_input
def read_grid_centroids(path: PathLike) -> Dict[str, Tuple[float, float]]:
    """读取 grid_id, lng, lat 三列的网格中心点 CSV"""
    frame = pd.read_csv(path, dtype={"grid_id": str})
    missing = {"grid_id", "lng", "lat"} - set(frame.columns)
    raise_for_statement(not missing, f"{path} 缺少列: {sorted(missing)}", MissingHeader)
    return {grid: (float(lng), float(lat)) for grid, lng, lat in zip(frame["grid_id"], frame["lng"], frame["lat"])}
