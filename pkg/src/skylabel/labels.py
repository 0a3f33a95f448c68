"""Detection label files, dataset manifests and category transforms.

Labels use the detector-standard plain-text format: one detection per line,
``<category> <cx> <cy> <w> <h>[ <conf>]`` with box fields normalized to the
image dimensions and written with six decimal places. Manifests are JSON
Lines with one entry record per image (an optional leading header record
carries the category names).
"""

from __future__ import annotations

import json
import math
import random
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

SPLITS = ("train", "val", "test")


class LabelFormatError(ValueError):
    """A label line or file violates the plain-text detection format."""


class BackgroundShortfallWarning(UserWarning):
    """Fewer background entries available than the balance target requests."""


@dataclass(frozen=True)
class NormBox:
    """Box as fractions of the image: center (cx, cy) and size (w, h)."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.cx, self.cy, self.w, self.h)):
            raise ValueError("box fields must be finite")
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"box center out of range: ({self.cx}, {self.cy})")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(f"box size out of range: ({self.w}, {self.h})")

    def corners(self) -> tuple[float, float, float, float]:
        """(x0, y0, x1, y1) in normalized coordinates."""
        return (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )


@dataclass(frozen=True)
class Detection:
    """One object hypothesis. Ground truth has no confidence; inference does."""

    category_id: int
    box: NormBox
    confidence: float | None = None

    def __post_init__(self):
        if self.category_id < 0:
            raise ValueError("category_id must be >= 0")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {self.confidence}")


@dataclass
class LabelFile:
    """Detections of one image, in exactly the on-disk order."""

    image_id: str
    detections: list[Detection] = field(default_factory=list)


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    label_path: str | None
    split: str
    is_background: bool

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    category_names: list[str] = field(default_factory=list)


@dataclass
class ManifestStats:
    image_count: int
    total_objects: int
    objects_per_category: dict[int, int]
    mean_objects_per_image: float
    max_objects_in_image: int
    background_fraction: float
    errors: list[str] = field(default_factory=list)


def parse_label_line(line: str) -> Detection:
    """Parse ``<category> <cx> <cy> <w> <h>[ <conf>]``."""
    fields = line.split()
    if len(fields) not in (5, 6):
        raise LabelFormatError(f"expected 5 or 6 fields, got {len(fields)}: {line!r}")
    try:
        category = int(fields[0])
        values = [float(f) for f in fields[1:]]
    except ValueError as exc:
        raise LabelFormatError(f"non-numeric field in {line!r}") from exc
    try:
        box = NormBox(values[0], values[1], values[2], values[3])
        conf = values[4] if len(values) == 5 else None
        return Detection(category, box, conf)
    except ValueError as exc:
        raise LabelFormatError(f"out-of-range value in {line!r}: {exc}") from exc


def format_label_line(det: Detection, with_confidence: bool = False) -> str:
    b = det.box
    line = f"{det.category_id} {b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}"
    if with_confidence:
        if det.confidence is None:
            raise ValueError("with_confidence requested but detection has no confidence")
        line += f" {det.confidence:.6f}"
    return line


def format_label_file(lf: LabelFile, with_confidence: bool = False) -> str:
    return "".join(format_label_line(d, with_confidence) + "\n" for d in lf.detections)


def parse_label_text(text: str, image_id: str) -> LabelFile:
    dets = [parse_label_line(line) for line in text.splitlines() if line.strip()]
    return LabelFile(image_id, dets)


def read_label_file(path: str | Path) -> LabelFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise LabelFormatError(f"cannot read label file {path}: {exc}") from exc
    try:
        return parse_label_text(text, path.stem)
    except LabelFormatError as exc:
        raise LabelFormatError(f"{path}: {exc}") from exc


def write_label_file(lf: LabelFile, with_confidence: bool, path: str | Path) -> None:
    """One line per detection, 6-decimal fixed point, single spaces, LF endings."""
    text = format_label_file(lf, with_confidence)
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def remap_categories(lf: LabelFile, keep: list[int]) -> LabelFile:
    """Drop detections outside ``keep`` and renumber the rest to their index in it."""
    if not keep:
        raise ValueError("keep must be non-empty")
    if len(set(keep)) != len(keep):
        raise ValueError("keep must not contain duplicates")
    index = {cat: i for i, cat in enumerate(keep)}
    dets = [
        replace(d, category_id=index[d.category_id])
        for d in lf.detections
        if d.category_id in index
    ]
    return LabelFile(lf.image_id, dets)


def split_by_subtype(lf: LabelFile, assignments: list[int]) -> LabelFile:
    """Replace each detection's category by its subtype index; geometry untouched."""
    if len(assignments) != len(lf.detections):
        raise ValueError(
            f"{len(assignments)} assignments for {len(lf.detections)} detections"
        )
    dets = [replace(d, category_id=a) for d, a in zip(lf.detections, assignments)]
    return LabelFile(lf.image_id, dets)


# --- manifests ---------------------------------------------------------------


def write_manifest(m: DatasetManifest, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        if m.category_names:
            fh.write(json.dumps({"category_names": m.category_names}) + "\n")
        for e in m.entries:
            rec = {
                "image_path": e.image_path,
                "label_path": e.label_path,
                "split": e.split,
                "is_background": e.is_background,
            }
            fh.write(json.dumps(rec) + "\n")


def read_manifest(path: str | Path) -> DatasetManifest:
    entries: list[ManifestEntry] = []
    names: list[str] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed manifest record") from exc
            if "category_names" in rec:
                names = [str(n) for n in rec["category_names"]]
                continue
            entries.append(
                ManifestEntry(
                    image_path=str(rec["image_path"]),
                    label_path=rec.get("label_path"),
                    split=str(rec.get("split", "train")),
                    is_background=bool(rec.get("is_background", rec.get("label_path") is None)),
                )
            )
    return DatasetManifest(entries, names)


def build_manifest(
    images_dir: str | Path,
    labels_dir: str | Path | None,
    split: str = "train",
    category_names: list[str] | None = None,
) -> DatasetManifest:
    """Scan a directory of PNGs and pair each with its label file, if any.

    An image is a background entry when its label file is absent or empty.
    """
    images_dir = Path(images_dir)
    entries = []
    for img in sorted(images_dir.glob("*.png")):
        label_path = None
        background = True
        if labels_dir is not None:
            cand = Path(labels_dir) / (img.stem + ".txt")
            if cand.exists():
                label_path = str(cand)
                background = cand.stat().st_size == 0
        entries.append(ManifestEntry(str(img), label_path, split, background))
    return DatasetManifest(entries, category_names or [])


def balance_background(
    m: DatasetManifest, target_fraction: float, seed: int
) -> DatasetManifest:
    """Subsample background entries to hit ``target_fraction`` of the output.

    Labeled entries are always kept. The background subset is a seeded
    shuffle prefix of size b = round(t / (1 - t) * labeled_count); if the
    pool is smaller than b everything is kept and a
    :class:`BackgroundShortfallWarning` is emitted. Relative entry order is
    preserved.
    """
    if not 0.0 < target_fraction < 1.0:
        raise ValueError("target_fraction must lie strictly inside (0, 1)")
    labeled = [e for e in m.entries if not e.is_background]
    pool = [e for e in m.entries if e.is_background]
    if not labeled:
        raise ValueError("manifest has no labeled entries")
    want = round(target_fraction / (1.0 - target_fraction) * len(labeled))
    if want >= len(pool):
        if want > len(pool):
            warnings.warn(
                f"background pool ({len(pool)}) smaller than target ({want}); keeping all",
                BackgroundShortfallWarning,
                stacklevel=2,
            )
        return DatasetManifest(list(m.entries), list(m.category_names))
    indices = list(range(len(pool)))
    random.Random(seed).shuffle(indices)
    chosen = {id(pool[i]) for i in indices[:want]}
    entries = [e for e in m.entries if not e.is_background or id(e) in chosen]
    return DatasetManifest(entries, list(m.category_names))


def manifest_stats(m: DatasetManifest, base_dir: str | Path | None = None) -> ManifestStats:
    """Exact object counts over a manifest; unreadable label files are reported
    per entry rather than aborting the scan."""
    per_category: dict[int, int] = {}
    errors: list[str] = []
    total = 0
    max_in_image = 0
    bg_count = 0
    for e in m.entries:
        if e.is_background:
            bg_count += 1
        if e.label_path is None:
            continue
        path = Path(e.label_path)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        try:
            lf = read_label_file(path)
        except LabelFormatError as exc:
            errors.append(str(exc))
            continue
        n = len(lf.detections)
        total += n
        max_in_image = max(max_in_image, n)
        for d in lf.detections:
            per_category[d.category_id] = per_category.get(d.category_id, 0) + 1
    count = len(m.entries)
    mean = round(total / count, 2) if count else 0.0
    bg_fraction = bg_count / count if count else 0.0
    return ManifestStats(
        image_count=count,
        total_objects=total,
        objects_per_category=dict(sorted(per_category.items())),
        mean_objects_per_image=mean,
        max_objects_in_image=max_in_image,
        background_fraction=bg_fraction,
        errors=errors,
    )
