"""Grid-tour planning over a geographic rectangle plus per-tile pixel/geo transforms.

Tiles are laid out row-major from the north-west corner of the area with a
configurable overlap; the last row/column may extend past the south/east
edges so that the whole area is covered. Each tile carries a local
equirectangular model anchored at its own center: 1 m of northing is
1/111320 degrees of latitude and 1 m of easting is 1/(111320 * cos(lat))
degrees of longitude. At city scale and sub-meter GSD the model error is far
below one pixel, which keeps the transforms dependency-free.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

M_PER_DEG_LAT = 111320.0

# guard against a spurious extra tile when (L - footprint) / stride lands an
# epsilon above an integer
_CEIL_EPS = 1e-9


class OutOfFootprintWarning(UserWarning):
    """Point lies outside the tile footprint but inside the tolerance zone."""


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 coordinate in decimal degrees; longitude normalized to [-180, 180)."""

    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.lat_deg) and math.isfinite(self.lon_deg)):
            raise ValueError("coordinates must be finite")
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude out of bounds: {self.lat_deg}")
        if not -180.0 <= self.lon_deg < 180.0:
            object.__setattr__(self, "lon_deg", (self.lon_deg + 180.0) % 360.0 - 180.0)


@dataclass(frozen=True)
class GeoRect:
    """Axis-aligned geographic rectangle. Antimeridian crossing is unsupported."""

    south: float
    west: float
    north: float
    east: float

    def __post_init__(self):
        vals = (self.south, self.west, self.north, self.east)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("rectangle bounds must be finite")
        if not (-90.0 <= self.south < self.north <= 90.0):
            raise ValueError("invalid rectangle: need -90 <= south < north <= 90")
        if not (-180.0 <= self.west < self.east <= 180.0):
            raise ValueError("invalid rectangle: need -180 <= west < east <= 180")


@dataclass(frozen=True)
class TileSpec:
    """Capture geometry: tile size in pixels, GSD in m/px and grid overlap."""

    width_px: int = 416
    height_px: int = 416
    gsd_m_per_px: float = 0.3
    overlap_fraction: float = 0.2

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError("tile dimensions must be >= 1 px")
        if not (math.isfinite(self.gsd_m_per_px) and self.gsd_m_per_px > 0):
            raise ValueError("GSD must be a positive number of meters per pixel")
        if not 0.0 <= self.overlap_fraction <= 0.9:
            raise ValueError("overlap_fraction must lie in [0, 0.9]")

    @property
    def footprint_m(self) -> tuple[float, float]:
        return (self.width_px * self.gsd_m_per_px, self.height_px * self.gsd_m_per_px)


@dataclass(frozen=True)
class TileJob:
    """One planned capture: grid position, geographic center and tile spec."""

    row: int
    col: int
    center: GeoPoint
    footprint_m: tuple[float, float]
    spec: TileSpec

    def __post_init__(self):
        if self.row < 0 or self.col < 0:
            raise ValueError("grid indices must be >= 0")
        if self.footprint_m != self.spec.footprint_m:
            raise ValueError("footprint_m must equal (width_px * gsd, height_px * gsd)")


def _axis_count(extent_m: float, footprint_m: float, stride_m: float) -> int:
    if extent_m <= footprint_m:
        return 1
    return math.ceil((extent_m - footprint_m) / stride_m - _CEIL_EPS) + 1


def plan_grid(area: GeoRect, spec: TileSpec) -> list[TileJob]:
    """Plan a row-major overlapping tile grid covering ``area``.

    Stride between adjacent tile centers is footprint * (1 - overlap). The
    first tile's top-left footprint corner coincides with the area's NW
    corner. Column count is sized from the widest row (the one closest to the
    equator) so the coverage guarantee holds at every latitude of the area.
    """
    f_w, f_h = spec.footprint_m
    s_w = f_w * (1.0 - spec.overlap_fraction)
    s_h = f_h * (1.0 - spec.overlap_fraction)

    extent_s_m = (area.north - area.south) * M_PER_DEG_LAT
    n_rows = _axis_count(extent_s_m, f_h, s_h)
    row_lats = [area.north - (f_h / 2.0 + r * s_h) / M_PER_DEG_LAT for r in range(n_rows)]

    max_cos = max(math.cos(math.radians(lat)) for lat in row_lats)
    extent_e_m = (area.east - area.west) * M_PER_DEG_LAT * max_cos
    n_cols = _axis_count(extent_e_m, f_w, s_w)

    jobs: list[TileJob] = []
    for r, lat in enumerate(row_lats):
        m_per_deg_lon = M_PER_DEG_LAT * math.cos(math.radians(lat))
        for c in range(n_cols):
            lon = area.west + (f_w / 2.0 + c * s_w) / m_per_deg_lon
            jobs.append(TileJob(r, c, GeoPoint(lat, lon), (f_w, f_h), spec))
    return jobs


def pixel_to_geo(tile: TileJob, px: tuple[float, float]) -> GeoPoint:
    """Map a (possibly fractional) pixel position on ``tile`` to a GeoPoint.

    Pixel (width/2, height/2) maps to the tile center; y grows southward.
    """
    x, y = px
    spec = tile.spec
    if not (0 <= x < spec.width_px and 0 <= y < spec.height_px):
        raise ValueError(f"pixel ({x}, {y}) outside tile bounds")
    gsd = spec.gsd_m_per_px
    east_m = (x - spec.width_px / 2.0) * gsd
    south_m = (y - spec.height_px / 2.0) * gsd
    lat = tile.center.lat_deg - south_m / M_PER_DEG_LAT
    m_per_deg_lon = M_PER_DEG_LAT * math.cos(math.radians(tile.center.lat_deg))
    lon = tile.center.lon_deg + east_m / m_per_deg_lon
    return GeoPoint(lat, lon)


def geo_to_pixel(tile: TileJob, p: GeoPoint) -> tuple[float, float]:
    """Inverse of :func:`pixel_to_geo` under the same local model.

    Points up to one footprint beyond the tile are tolerated with an
    :class:`OutOfFootprintWarning`; anything farther raises ``ValueError``.
    """
    spec = tile.spec
    gsd = spec.gsd_m_per_px
    m_per_deg_lon = M_PER_DEG_LAT * math.cos(math.radians(tile.center.lat_deg))
    east_m = (p.lon_deg - tile.center.lon_deg) * m_per_deg_lon
    south_m = (tile.center.lat_deg - p.lat_deg) * M_PER_DEG_LAT
    x = spec.width_px / 2.0 + east_m / gsd
    y = spec.height_px / 2.0 + south_m / gsd
    w, h = spec.width_px, spec.height_px
    if not (-w <= x < 2 * w and -h <= y < 2 * h):
        raise ValueError(f"point {p} outside the tolerance zone of tile ({tile.row}, {tile.col})")
    if not (0 <= x < w and 0 <= y < h):
        warnings.warn(
            f"point {p} outside tile ({tile.row}, {tile.col}) footprint",
            OutOfFootprintWarning,
            stacklevel=2,
        )
    return (x, y)


def footprint_contains(tile: TileJob, p: GeoPoint, tol_m: float = 1e-6) -> bool:
    """True when ``p`` lies inside the tile footprint (edges inclusive)."""
    half_w = tile.footprint_m[0] / 2.0
    half_h = tile.footprint_m[1] / 2.0
    south_m = (tile.center.lat_deg - p.lat_deg) * M_PER_DEG_LAT
    east_m = (p.lon_deg - tile.center.lon_deg) * M_PER_DEG_LAT * math.cos(
        math.radians(tile.center.lat_deg)
    )
    return abs(south_m) <= half_h + tol_m and abs(east_m) <= half_w + tol_m


def _tour_line(job: TileJob) -> str:
    # fixed 9-decimal degrees so re-exports are byte-identical
    s = job.spec
    return (
        f'{{"row": {job.row}, "col": {job.col}, '
        f'"center_lat": {job.center.lat_deg:.9f}, "center_lon": {job.center.lon_deg:.9f}, '
        f'"width_px": {s.width_px}, "height_px": {s.height_px}, "gsd": {s.gsd_m_per_px!r}}}\n'
    )


def export_tour(jobs: list[TileJob], path: str | Path) -> None:
    """Write one JSON-Lines record per tile, row-major, LF line endings."""
    if not jobs:
        raise ValueError("no tile jobs to export")
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for job in jobs:
            fh.write(_tour_line(job))


def import_tour(path: str | Path) -> list[TileJob]:
    """Re-read an exported tour file.

    The overlap fraction is a planning parameter and is not stored in the
    file; imported specs carry overlap_fraction = 0.
    """
    jobs: list[TileJob] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                spec = TileSpec(
                    width_px=int(rec["width_px"]),
                    height_px=int(rec["height_px"]),
                    gsd_m_per_px=float(rec["gsd"]),
                    overlap_fraction=0.0,
                )
                job = TileJob(
                    row=int(rec["row"]),
                    col=int(rec["col"]),
                    center=GeoPoint(float(rec["center_lat"]), float(rec["center_lon"])),
                    footprint_m=spec.footprint_m,
                    spec=spec,
                )
            except (KeyError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed tour record: {exc}") from exc
            jobs.append(job)
    return jobs
