"""Region boundaries, response corpora and grid files.

Synthetic corpora are drawn with ``numpy.random.Generator(PCG64(seed))``:
one ``uniform(-1, 1, size=n)`` call per corpus, so a given
(region bbox, model, n) always reproduces the same polygons.
"""
from __future__ import annotations
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Tuple

import geojson
import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, ValidationError

from geometry import (
    BoundingBox,
    GeoPoint,
    InvalidGeometry,
    Rejection,
    SimplePolygon,
    bounding_box,
    validate_polygon,
)
from grid_builder import FuzzyGrid, GranularitySpec
from schemas import GridDocument
from utils import DescriptorError

GRID_FORMAT_VERSION = 1
# round(x, n) leaves floats untouched once n passes their decimal range
COORD_PRECISION = 400

__all__ = [
    "COORD_PRECISION", "CleaningReport", "EmptyCorpus", "InvalidGeometry", "ParseError", "RegionBoundary",
    "ResponseSet", "Side", "SynthKind", "SynthModel", "VersionMismatch", "demo_region",
    "descriptor_label", "load_grid", "load_region", "load_responses", "region_to_geojson",
    "responses_to_geojson", "save_grid", "synth_responses",
]


class ParseError(DescriptorError):
    pass


class EmptyCorpus(DescriptorError):
    pass


class VersionMismatch(DescriptorError):
    pass


def descriptor_label(raw: str) -> str:
    """Normalize a descriptor id: case-insensitive, nonempty token."""
    label = str(raw or "").strip().lower()
    if not label or any(ch.isspace() for ch in label):
        raise ValueError(f"invalid descriptor label {raw!r}")
    return label


@dataclass(frozen=True)
class RegionBoundary:
    shape: SimplePolygon

    @cached_property
    def bbox(self) -> BoundingBox:
        return bounding_box(self.shape)


@dataclass(frozen=True)
class ResponseSet:
    label: str
    polygons: Tuple[SimplePolygon, ...]

    def __post_init__(self):
        object.__setattr__(self, "label", descriptor_label(self.label))
        object.__setattr__(self, "polygons", tuple(self.polygons))
        if not self.polygons:
            raise EmptyCorpus(f"EmptyCorpus: no polygons for '{self.label}'")

    def __len__(self) -> int:
        return len(self.polygons)


@dataclass
class CleaningReport:
    accepted_count: int = 0
    rejected: List[Tuple[int, Rejection]] = field(default_factory=list)

    @property
    def input_count(self) -> int:
        return self.accepted_count + len(self.rejected)


class SynthKind(str, Enum):
    LATITUDE = "latitude_halfplane"
    LONGITUDE = "longitude_halfplane"


class Side(str, Enum):
    HIGH = "high"
    LOW = "low"


@dataclass(frozen=True)
class SynthModel:
    """Jittered half-plane respondents.

    latitude/high reads as north, latitude/low as south, longitude/high as
    east, longitude/low as west.
    """
    kind: SynthKind = SynthKind.LATITUDE
    center_fraction: float = 0.5
    jitter_fraction: float = 0.05
    side: Side = Side.HIGH
    seed: int = 11

    def __post_init__(self):
        object.__setattr__(self, "kind", SynthKind(self.kind))
        object.__setattr__(self, "side", Side(self.side))
        c, j = float(self.center_fraction), float(self.jitter_fraction)
        if not 0.0 < c < 1.0:
            raise ValueError(f"center_fraction {c} outside (0, 1)")
        if not 0.0 <= j < 0.5:
            raise ValueError(f"jitter_fraction {j} outside [0, 0.5)")
        if not (0.0 < c - j and c + j < 1.0):
            raise ValueError(f"center {c} +/- jitter {j} leaves (0, 1)")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError(f"seed {self.seed} is not a 64-bit unsigned integer")

    def complement(self) -> "SynthModel":
        """Same respondents, opposite side: the rest of the bbox for each one."""
        return replace(self, side=Side.LOW if self.side == Side.HIGH else Side.HIGH)


# ---------- GeoJSON parsing ----------

def _parse(document: str) -> Dict[str, Any]:
    try:
        # plain dicts: geojson objects round coordinates to 6 decimals on load
        obj = geojson.loads(document, object_hook=dict)
    except (TypeError, ValueError) as e:
        raise ParseError(f"ParseError: malformed GeoJSON ({e})") from e
    if not isinstance(obj, dict):
        raise ParseError("ParseError: document is not a GeoJSON object")
    return obj


def _features(obj: Dict[str, Any]) -> List[Dict[str, Any]]:
    kind = obj.get("type")
    if kind == "FeatureCollection":
        feats = obj.get("features")
        if not isinstance(feats, list):
            raise ParseError("ParseError: FeatureCollection without a features list")
        return feats
    if kind == "Feature":
        return [obj]
    raise ParseError(f"ParseError: expected Feature or FeatureCollection, got {kind!r}")


def _exterior_ring(feature: Dict[str, Any], index: int) -> list:
    geom = feature.get("geometry") if isinstance(feature, dict) else None
    if not isinstance(geom, dict) or geom.get("type") != "Polygon":
        raise ParseError(f"ParseError: feature {index} is not a Polygon")
    rings = geom.get("coordinates")
    if not isinstance(rings, list) or not rings or not isinstance(rings[0], list):
        raise ParseError(f"ParseError: feature {index} has no exterior ring")
    if len(rings) > 1:
        logger.debug("Feature {} has {} interior rings; ignored", index, len(rings) - 1)
    return rings[0]


def load_region(document: str) -> RegionBoundary:
    feats = _features(_parse(document))
    if not feats:
        raise ParseError("ParseError: empty feature collection")
    shape = validate_polygon(_exterior_ring(feats[0], 0))
    if isinstance(shape, Rejection):
        raise InvalidGeometry(shape)
    region = RegionBoundary(shape)
    logger.debug("Region loaded | vertices={} | bbox={}", len(shape), region.bbox.as_list())
    return region


def load_responses(document: str, label: str) -> Tuple[ResponseSet, CleaningReport]:
    label = descriptor_label(label)
    feats = _features(_parse(document))
    accepted: List[SimplePolygon] = []
    report = CleaningReport()
    for i, feat in enumerate(feats):
        props = (feat.get("properties") or {}) if isinstance(feat, dict) else {}
        tagged = props.get("descriptor")
        if tagged is not None and str(tagged).strip().lower() != label:
            continue
        out = validate_polygon(_exterior_ring(feat, i))
        if isinstance(out, Rejection):
            report.rejected.append((i, out))
            logger.info("Rejected response {} for '{}': {}", i, label, out.value)
        else:
            accepted.append(out)
    report.accepted_count = len(accepted)
    if not accepted:
        raise EmptyCorpus(f"EmptyCorpus: no valid polygons for '{label}'")
    logger.info("Responses '{}' | accepted={} | rejected={}", label, report.accepted_count, len(report.rejected))
    return ResponseSet(label, tuple(accepted)), report


# ---------- synthetic corpora ----------

def synth_responses(region: RegionBoundary, label: str, model: SynthModel, n: int) -> ResponseSet:
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    bb = region.bbox
    u = np.random.Generator(np.random.PCG64(int(model.seed))).uniform(-1.0, 1.0, size=int(n))
    fracs = model.center_fraction + u * model.jitter_fraction

    polys = []
    for frac in fracs:
        if model.kind == SynthKind.LATITUDE:
            cut = bb.min_lat + float(frac) * bb.lat_extent
            lo, hi = (cut, bb.max_lat) if model.side == Side.HIGH else (bb.min_lat, cut)
            ring = [(bb.min_lon, lo), (bb.max_lon, lo), (bb.max_lon, hi), (bb.min_lon, hi)]
        else:
            cut = bb.min_lon + float(frac) * bb.lon_extent
            lo, hi = (cut, bb.max_lon) if model.side == Side.HIGH else (bb.min_lon, cut)
            ring = [(lo, bb.min_lat), (hi, bb.min_lat), (hi, bb.max_lat), (lo, bb.max_lat)]
        polys.append(SimplePolygon(tuple(GeoPoint(x, y) for x, y in ring)))
    return ResponseSet(label, tuple(polys))


def demo_region() -> RegionBoundary:
    """Convex octagon spanning the north-west Iberian box (-9.3, 41.8, -6.7, 43.8)."""
    return RegionBoundary(SimplePolygon.from_coords([
        (-8.6, 41.8), (-7.2, 41.8), (-6.7, 42.3), (-6.8, 43.2),
        (-7.6, 43.8), (-8.4, 43.8), (-9.3, 43.1), (-9.1, 42.2),
    ]))


def _ring(poly: SimplePolygon) -> list:
    ring = [(v.lon, v.lat) for v in poly.vertices]
    return ring + ring[:1]


def region_to_geojson(region: RegionBoundary) -> str:
    ring = geojson.Polygon([_ring(region.shape)], precision=COORD_PRECISION)
    fc = geojson.FeatureCollection([geojson.Feature(geometry=ring, properties={})])
    return geojson.dumps(fc, sort_keys=True)


def responses_to_geojson(responses: ResponseSet) -> str:
    fc = geojson.FeatureCollection([
        geojson.Feature(geometry=geojson.Polygon([_ring(p)], precision=COORD_PRECISION),
                        properties={"descriptor": responses.label})
        for p in responses.polygons
    ])
    return geojson.dumps(fc, sort_keys=True)


# ---------- grid files ----------

class _Envelope(BaseModel):
    model_config = ConfigDict(extra="allow")
    format_version: int


def save_grid(grid: FuzzyGrid) -> str:
    doc = GridDocument(
        format_version=GRID_FORMAT_VERSION,
        descriptor=grid.label,
        granularity_pct=grid.granularity.percent,
        bbox=tuple(grid.bbox.as_list()),
        response_count=grid.response_count,
        points=list(zip(grid.lon.tolist(), grid.lat.tolist(), grid.md.tolist())),
    )
    return doc.model_dump_json(indent=2)


def load_grid(content: str) -> FuzzyGrid:
    try:
        version = _Envelope.model_validate_json(content).format_version
    except ValidationError as e:
        raise ParseError(f"ParseError: malformed grid file ({e.error_count()} errors)") from e
    if version != GRID_FORMAT_VERSION:
        raise VersionMismatch(f"VersionMismatch: format_version {version}, expected {GRID_FORMAT_VERSION}")
    try:
        doc = GridDocument.model_validate_json(content)
    except ValidationError as e:
        first = e.errors()[0].get("msg", "")
        raise ParseError(f"ParseError: invalid grid file ({first})") from e

    pts = pd.DataFrame(doc.points, columns=["lon", "lat", "md"], dtype="float64")
    try:
        return FuzzyGrid(
            label=descriptor_label(doc.descriptor),
            granularity=GranularitySpec(doc.granularity_pct),
            bbox=BoundingBox(*doc.bbox),
            points=pts,
            response_count=doc.response_count,
        )
    except ValueError as e:
        raise ParseError(f"ParseError: {e}") from e
