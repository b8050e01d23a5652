"""
hotspot_spread.ingest

病例地点快照解析、分区空间连接与周计数矩阵构建
"""

import io
import json
import logging
import math
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from shapely import STRtree
from shapely.geometry import MultiPolygon, Point, Polygon, shape

from .exceptions import (
    DimensionMismatch,
    EmptyAfterFiltering,
    EmptyInput,
    InvalidConfig,
    InvalidSubzoneIndex,
    MalformedInput,
    MissingHeader,
    NoDateSource,
)
from .utils.utils import get_config, raise_for_statement, reads_input
from .weeks import EpiWeekCalendar, select_range


LOGGER = logging.getLogger(__name__)

FILENAME_DATE = re.compile(r"(?<!\d)(\d{6})(?!\d)")

# 每纬度约 110.574 km，每经度约 111.320·cos(lat) km
KM_PER_DEG_LAT = 110.574
KM_PER_DEG_LON = 111.320


@dataclass
class IngestConfig:
    """
    数据导入配置

    Args:
        columns (dict): 逻辑字段名到 CSV 列名的映射
        date_formats (list): 日期列可接受的格式
        week_start (str): 每周起始日
        low_density_threshold (float): 低人口密度阈值（人/km²）
        exclude_low_density (bool): 是否从分区索引中剔除低密度分区
    """

    columns: Dict[str, str] = field(default_factory=lambda: dict(get_config("ingest", "columns")))
    date_formats: List[str] = field(default_factory=lambda: list(get_config("ingest", "date_formats")))
    week_start: str = field(default_factory=lambda: get_config("ingest").get("week_start", "sunday"))
    low_density_threshold: float = field(
        default_factory=lambda: get_config("ingest").get("low_density_threshold", 10.0)
    )
    exclude_low_density: bool = field(default_factory=lambda: get_config("ingest").get("exclude_low_density", False))

    @classmethod
    def from_mapping(cls, data: Mapping) -> "IngestConfig":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        raise_for_statement(not unknown, f"未知的 ingest 配置项: {sorted(unknown)}", InvalidConfig)
        if "columns" in data:
            columns = dict(get_config("ingest", "columns"))
            columns.update(data["columns"])
            data["columns"] = columns
        return cls(**data)

    @property
    def calendar(self) -> EpiWeekCalendar:
        return EpiWeekCalendar(self.week_start)


@dataclass(frozen=True)
class LocalityRecord:
    """
    快照中的一条病例地点记录
    """

    street_address: str
    latitude: float
    longitude: float
    cluster_number: Optional[int]
    recent_cases: int
    total_cluster_cases: int
    collection_date: date
    source: str = ""


@dataclass
class SnapshotParseResult:
    records: List[LocalityRecord]
    skipped: int


@dataclass(frozen=True)
class Subzone:
    subzone_id: str
    planning_area_id: str
    polygon: Union[Polygon, MultiPolygon]
    population: float
    area: float

    @property
    def density(self) -> float:
        return self.population / self.area if self.area > 0 else 0.0


@dataclass
class SubzoneIndex:
    """
    分区索引，所有矩阵的行列顺序都以此为准

    Args:
        subzones (list): 有序分区列表
        low_density_threshold (float): 低人口密度阈值（人/km²）
    """

    subzones: List[Subzone]
    low_density_threshold: float = 10.0
    _tree: STRtree = field(init=False, repr=False)

    def __post_init__(self):
        raise_for_statement(len(self.subzones) > 0, "分区索引为空", InvalidSubzoneIndex)
        ids = [sz.subzone_id for sz in self.subzones]
        duplicated = sorted({i for i in ids if ids.count(i) > 1})
        raise_for_statement(not duplicated, f"分区编号重复: {duplicated}", InvalidSubzoneIndex)
        for sz in self.subzones:
            raise_for_statement(sz.polygon.is_valid, f"分区 {sz.subzone_id} 的多边形不合法", InvalidSubzoneIndex)
            raise_for_statement(sz.population >= 0, f"分区 {sz.subzone_id} 人口为负", InvalidSubzoneIndex)
        self._tree = STRtree([sz.polygon for sz in self.subzones])
        self._positions = {sz.subzone_id: i for i, sz in enumerate(self.subzones)}

    @property
    def N(self) -> int:
        return len(self.subzones)

    @property
    def ids(self) -> List[str]:
        return [sz.subzone_id for sz in self.subzones]

    @property
    def planning_area_ids(self) -> List[str]:
        return [sz.planning_area_id for sz in self.subzones]

    @property
    def population(self) -> np.ndarray:
        return np.array([sz.population for sz in self.subzones], dtype=float)

    @property
    def density(self) -> np.ndarray:
        return np.array([sz.density for sz in self.subzones], dtype=float)

    @property
    def low_density(self) -> np.ndarray:
        """低密度标记，保留在索引中，由调用方决定是否剔除"""
        return self.density < self.low_density_threshold

    def __contains__(self, subzone_id: object) -> bool:
        return subzone_id in self._positions

    def position(self, subzone_id: str) -> int:
        return self._positions[subzone_id]

    def locate(self, longitude: float, latitude: float) -> Optional[str]:
        """
        查找包含该点的分区

        点落在多个分区的公共边界上时取字典序最小的编号。

        Args:
            longitude (float): 经度
            latitude (float): 纬度

        Returns:
            str | None: 分区编号
        """
        point = Point(longitude, latitude)
        hits = [
            self.subzones[i].subzone_id
            for i in self._tree.query(point)
            if self.subzones[i].polygon.covers(point)
        ]
        return min(hits) if hits else None

    def without_low_density(self) -> "SubzoneIndex":
        kept = [sz for sz, low in zip(self.subzones, self.low_density) if not low]
        return SubzoneIndex(kept, self.low_density_threshold)

    def restricted_to(self, subzone_ids: Sequence[str]) -> "SubzoneIndex":
        """
        按给定编号及顺序取子索引

        Raises:
            DimensionMismatch: 有编号不在索引中
        """
        missing = [sid for sid in subzone_ids if sid not in self._positions]
        raise_for_statement(not missing, f"分区边界中没有这些分区: {missing[:5]}", DimensionMismatch)
        return SubzoneIndex([self.subzones[self._positions[sid]] for sid in subzone_ids], self.low_density_threshold)


@dataclass
class WeeklyCaseCounts:
    """
    N×T 周地点计数矩阵

    Args:
        counts (np.ndarray): 计数 l_i^t
        week_labels (list): 周标签，严格递增且无缺口
        subzone_ids (list): 分区编号，与索引顺序一致
    """

    counts: np.ndarray
    week_labels: List[str]
    subzone_ids: List[str]
    week_start: str = "sunday"
    unmapped: int = 0
    duplicates: int = 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        raise_for_statement(
            self.counts.shape == (len(self.subzone_ids), len(self.week_labels)),
            f"计数矩阵形状 {self.counts.shape} 与 {len(self.subzone_ids)} 个分区、{len(self.week_labels)} 周不符",
            DimensionMismatch,
        )
        raise_for_statement(bool((self.counts >= 0).all()), "计数矩阵存在负值", InvalidConfig)
        raise_for_statement(
            all(a < b for a, b in zip(self.week_labels, self.week_labels[1:])),
            "周标签不是严格递增",
            InvalidConfig,
        )

    def select(self, week_range: Optional[str]) -> "WeeklyCaseCounts":
        labels = select_range(self.week_labels, week_range)
        columns = [self.week_labels.index(label) for label in labels]
        return WeeklyCaseCounts(
            counts=self.counts[:, columns],
            week_labels=labels,
            subzone_ids=list(self.subzone_ids),
            week_start=self.week_start,
            unmapped=self.unmapped,
            duplicates=self.duplicates,
        )


def _filename_date(filename: str) -> Optional[date]:
    match = FILENAME_DATE.search(Path(filename).stem)
    if match is None:
        return None
    try:
        return datetime.strptime(match.group(1), "%y%m%d").date()
    except ValueError:
        return None


def _parse_date(value: str, formats: Sequence[str]) -> Optional[date]:
    value = value.strip()
    if not value:
        return None
    for fmt in formats:
        try:
            return datetime.strptime(value, fmt).date()
        except ValueError:
            continue
    return None


def _parse_count(value: str) -> int:
    value = value.strip()
    if not value:
        return 0
    count = float(value)
    if not math.isfinite(count) or count < 0:
        raise ValueError(f"非法计数: {value}")
    return int(count)


def parse_snapshot(
    raw_csv: Union[bytes, BinaryIO],
    filename: str,
    config: Optional[IngestConfig] = None,
) -> SnapshotParseResult:
    """
    解析一个周快照 CSV

    坐标无法解析或越界、计数非法、日期缺失的行会被跳过并计数。

    Args:
        raw_csv (bytes | BinaryIO): 文件内容
        filename (str): 文件名，可按 YYMMDD 提供日期
        config (IngestConfig): 导入配置

    Returns:
        SnapshotParseResult: 记录列表与跳过行数
    """
    config = config or IngestConfig()
    columns = config.columns
    data = raw_csv if isinstance(raw_csv, (bytes, bytearray)) else raw_csv.read()
    try:
        frame = pd.read_csv(io.BytesIO(data), dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise MissingHeader(f"{filename}: 文件为空或缺少表头")
    except pd.errors.ParserError as e:
        raise MalformedInput(f"{filename}: CSV 结构错误 ({e})") from e
    except UnicodeDecodeError as e:
        raise MalformedInput(f"{filename}: 不是 UTF-8 编码") from e
    frame.columns = [str(c).strip().lower() for c in frame.columns]

    required = [columns["address"], columns["latitude"], columns["longitude"]]
    missing = [c for c in required if c.lower() not in frame.columns]
    raise_for_statement(not missing, f"{filename}: 缺少必需列 {missing}", MissingHeader)

    date_column = columns["collection_date"].lower()
    has_date_column = date_column in frame.columns
    fallback_date = _filename_date(filename)
    raise_for_statement(
        has_date_column or fallback_date is not None,
        f"{filename}: 文件名不含 YYMMDD 日期且没有日期列",
        NoDateSource,
    )

    def column(name: str) -> Optional[str]:
        key = columns[name].lower()
        return key if key in frame.columns else None

    cluster_col, recent_col, total_col = column("cluster_number"), column("recent_cases"), column("total_cluster_cases")

    records = []
    skipped = 0
    for row in frame.to_dict(orient="records"):
        try:
            latitude = float(row[columns["latitude"].lower()])
            longitude = float(row[columns["longitude"].lower()])
            if not (-90 <= latitude <= 90 and -180 <= longitude <= 180):
                raise ValueError("坐标越界")
            recent = _parse_count(row[recent_col]) if recent_col else 0
            total = _parse_count(row[total_col]) if total_col else 0
            cluster = row[cluster_col].strip() if cluster_col else ""
            cluster_number = int(float(cluster)) if cluster else None
        except (ValueError, TypeError):
            skipped += 1
            continue

        collected = _parse_date(row[date_column], config.date_formats) if has_date_column else None
        collected = collected or fallback_date
        if collected is None:
            skipped += 1
            continue

        records.append(
            LocalityRecord(
                street_address=row[columns["address"].lower()].strip(),
                latitude=latitude,
                longitude=longitude,
                cluster_number=cluster_number,
                recent_cases=recent,
                total_cluster_cases=total,
                collection_date=collected,
                source=filename,
            )
        )

    if skipped:
        LOGGER.warning("%s: 跳过 %d 行无法解析的记录", filename, skipped)
    return SnapshotParseResult(records=records, skipped=skipped)


@reads_input
def _read_bytes(path: Path) -> bytes:
    return path.read_bytes()


def read_snapshots(paths: Iterable[Union[str, Path]], config: Optional[IngestConfig] = None) -> SnapshotParseResult:
    """
    依次解析多个快照文件

    Args:
        paths (Iterable): 文件路径
        config (IngestConfig): 导入配置

    Returns:
        SnapshotParseResult: 合并后的记录与跳过行数
    """
    records, skipped = [], 0
    for path in sorted(Path(p) for p in paths):
        result = parse_snapshot(_read_bytes(path), path.name, config)
        records.extend(result.records)
        skipped += result.skipped
    return SnapshotParseResult(records=records, skipped=skipped)


def _area_km2(geometry) -> float:
    # 以质心纬度做等距圆柱投影
    lat0 = geometry.centroid.y
    return geometry.area * KM_PER_DEG_LAT * KM_PER_DEG_LON * math.cos(math.radians(lat0))


@reads_input
def load_subzone_index(path: Union[str, Path], config: Optional[IngestConfig] = None) -> SubzoneIndex:
    """
    读取分区边界 GeoJSON FeatureCollection

    要素属性需包含 subzone_id、planning_area_id、population，可选 area_km2。

    Args:
        path (str | Path): GeoJSON 文件
        config (IngestConfig): 导入配置

    Returns:
        SubzoneIndex: 分区索引
    """
    config = config or IngestConfig()
    with open(path, encoding="utf8") as f:
        collection = json.load(f)
    raise_for_statement(
        collection.get("type") == "FeatureCollection",
        f"{path}: 不是 GeoJSON FeatureCollection",
        InvalidSubzoneIndex,
    )

    subzones = []
    for feature in collection.get("features", []):
        props = feature.get("properties") or {}
        subzone_id = props.get("subzone_id")
        raise_for_statement(subzone_id is not None, f"{path}: 要素缺少 subzone_id", InvalidSubzoneIndex)
        geometry = shape(feature["geometry"])
        raise_for_statement(
            isinstance(geometry, (Polygon, MultiPolygon)),
            f"{path}: 分区 {subzone_id} 不是多边形",
            InvalidSubzoneIndex,
        )
        area = float(props["area_km2"]) if props.get("area_km2") is not None else _area_km2(geometry)
        planning_area = props.get("planning_area_id")
        subzones.append(
            Subzone(
                subzone_id=str(subzone_id),
                planning_area_id="" if planning_area is None else str(planning_area),
                polygon=geometry,
                population=float(props.get("population") or 0),
                area=area,
            )
        )

    index = SubzoneIndex(subzones, config.low_density_threshold)
    flagged = int(index.low_density.sum())
    if flagged:
        LOGGER.info("%d 个分区人口密度低于 %.1f/km²", flagged, config.low_density_threshold)
    if config.exclude_low_density:
        index = index.without_low_density()
    return index


def assign_subzone(record: LocalityRecord, index: SubzoneIndex) -> Optional[str]:
    """
    将地点映射到分区

    Args:
        record (LocalityRecord): 地点记录
        index (SubzoneIndex): 分区索引

    Returns:
        str | None: 分区编号，落在所有分区之外时为 None
    """
    return index.locate(record.longitude, record.latitude)


def assign_grid_cells(
    grid_centroids: Mapping[str, Tuple[float, float]],
    index: SubzoneIndex,
) -> Dict[str, str]:
    """
    按网格质心 (经度, 纬度) 预计算网格到分区的映射，落在分区外的网格不出现在结果中
    """
    mapping = {}
    for grid_id, (longitude, latitude) in grid_centroids.items():
        subzone_id = index.locate(longitude, latitude)
        if subzone_id is not None:
            mapping[str(grid_id)] = subzone_id
    dropped = len(grid_centroids) - len(mapping)
    if dropped:
        LOGGER.warning("%d 个网格质心不在任何分区内", dropped)
    return mapping


def _normalize_address(address: str) -> str:
    return " ".join(address.split()).upper()


def build_weekly_counts(
    records: Sequence[LocalityRecord],
    index: SubzoneIndex,
    week_rule: Optional[IngestConfig] = None,
) -> WeeklyCaseCounts:
    """
    构建周计数矩阵

    同一 (地址, 周, 分区) 只计一次；连续多周出现的活跃地点在每一周都计数。

    Args:
        records (Sequence[LocalityRecord]): 地点记录
        index (SubzoneIndex): 分区索引
        week_rule (IngestConfig): 提供周起始日的配置

    Returns:
        WeeklyCaseCounts: 周计数矩阵
    """
    raise_for_statement(len(records) > 0, "没有可用的地点记录", EmptyInput)
    week_rule = week_rule or IngestConfig()
    calendar = week_rule.calendar

    localities = set()
    unmapped = 0
    for record in records:
        subzone_id = assign_subzone(record, index)
        if subzone_id is None:
            unmapped += 1
            continue
        week = calendar.week_start_of(record.collection_date)
        localities.add((_normalize_address(record.street_address), week, subzone_id))

    raise_for_statement(
        len(localities) > 0,
        f"全部 {len(records)} 条记录都不在任何分区内",
        EmptyAfterFiltering,
    )
    if unmapped:
        LOGGER.warning("%d 条记录不在任何分区内，已排除", unmapped)

    weeks = sorted({week for _, week, _ in localities})
    labels = calendar.labels_between(weeks[0], weeks[-1])
    column = {label: t for t, label in enumerate(labels)}

    counts = np.zeros((index.N, len(labels)), dtype=np.int64)
    for _, week, subzone_id in localities:
        counts[index.position(subzone_id), column[calendar.label_for(week)]] += 1

    empty = [label for t, label in enumerate(labels) if counts[:, t].sum() == 0]
    if empty:
        LOGGER.warning("以下周没有任何记录，按全零列补齐: %s", ", ".join(empty))

    return WeeklyCaseCounts(
        counts=counts,
        week_labels=labels,
        subzone_ids=index.ids,
        week_start=week_rule.week_start,
        unmapped=unmapped,
        duplicates=len(records) - unmapped - len(localities),
    )
