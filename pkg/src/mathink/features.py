"""Stroke to fixed-length feature vector.

Pipeline: recursive farthest-point polyline simplification (tolerance is a
fraction of the stroke bbox diagonal), arc-length resampling to a fixed
vertex count, aspect-preserving normalization into the unit square, then
the (x, y) vertex coordinates concatenated. The result is invariant to
translation and uniform scaling of the stroke.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .ink import InkPoint, Stroke, bbox_of

DEFAULT_EPSILON = 0.02
DEFAULT_VERTICES = 16


@dataclass(frozen=True)
class SimplifyParams:
    """Feature-pipeline constants, persisted with the model."""

    epsilon: float = DEFAULT_EPSILON  # tolerance as a fraction of bbox diagonal
    target_vertices: int = DEFAULT_VERTICES

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.target_vertices < 2:
            raise ValueError(f"target_vertices must be >= 2, got {self.target_vertices}")

    @property
    def feature_count(self) -> int:
        return 2 * self.target_vertices


def _point_segment_distance(p: tuple[float, float], a: tuple[float, float],
                            b: tuple[float, float]) -> float:
    """Euclidean distance from p to segment a-b."""
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0.0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / seg_sq
    t = max(0.0, min(1.0, t))
    cx, cy = ax + t * dx, ay + t * dy
    return math.hypot(p[0] - cx, p[1] - cy)


def _rdp(points: list[tuple[float, float]], first: int, last: int,
         tolerance: float, keep: list[int]) -> None:
    # Keeps the farthest interior point when it deviates more than tolerance,
    # then recurses on both halves. Interior points at exactly the tolerance
    # (collinear points at tolerance 0 included) are dropped.
    max_dist = tolerance
    index = -1
    a, b = points[first], points[last]
    for i in range(first + 1, last):
        d = _point_segment_distance(points[i], a, b)
        if d > max_dist:
            index = i
            max_dist = d
    if index >= 0:
        _rdp(points, first, index, tolerance, keep)
        keep.append(index)
        _rdp(points, index, last, tolerance, keep)


def simplify_polyline(stroke: Stroke, params: SimplifyParams) -> list[InkPoint]:
    """Simplify a stroke to a vertex subsequence within epsilon * bbox diagonal.

    Endpoints are always preserved; every dropped point lies within the
    tolerance of the returned polyline.
    """
    pts = [(p.x, p.y) for p in stroke.points]
    tolerance = params.epsilon * bbox_of(stroke).diagonal
    keep: list[int] = [0]
    _rdp(pts, 0, len(pts) - 1, tolerance, keep)
    keep.append(len(pts) - 1)
    return [stroke.points[i] for i in keep]


def resample_polyline(vertices: list[tuple[float, float]], count: int) -> list[tuple[float, float]]:
    """Resample a polyline to `count` vertices equally spaced by arc length.

    A zero-length polyline resamples to `count` copies of its first vertex.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    lengths = []
    total = 0.0
    for a, b in zip(vertices, vertices[1:]):
        seg = math.hypot(b[0] - a[0], b[1] - a[1])
        lengths.append(seg)
        total += seg
    if total == 0.0:
        return [vertices[0]] * count
    out: list[tuple[float, float]] = []
    step = total / (count - 1)
    seg_idx = 0
    seg_start = 0.0
    for k in range(count):
        target = min(k * step, total)
        while seg_idx < len(lengths) - 1 and seg_start + lengths[seg_idx] < target:
            seg_start += lengths[seg_idx]
            seg_idx += 1
        seg_len = lengths[seg_idx]
        t = 0.0 if seg_len == 0.0 else (target - seg_start) / seg_len
        a, b = vertices[seg_idx], vertices[seg_idx + 1]
        out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    return out


def normalize_vertices(vertices: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Map vertices into the unit square preserving aspect ratio, centered.

    The longer bbox axis spans [0, 1]; the shorter axis is centered around
    0.5. Degenerate input (all vertices identical) maps everything to
    (0.5, 0.5) so that dot-like strokes classify stably.
    """
    xs = [v[0] for v in vertices]
    ys = [v[1] for v in vertices]
    min_x, max_x = min(xs), max(xs)
    min_y, max_y = min(ys), max(ys)
    extent = max(max_x - min_x, max_y - min_y)
    if extent == 0.0:
        return [(0.5, 0.5)] * len(vertices)
    cx = (min_x + max_x) / 2.0
    cy = (min_y + max_y) / 2.0
    scale = 1.0 / extent
    out = []
    for x, y in vertices:
        nx = (x - cx) * scale + 0.5
        ny = (y - cy) * scale + 0.5
        # guard float rounding at the box edges
        out.append((min(1.0, max(0.0, nx)), min(1.0, max(0.0, ny))))
    return out


def extract_features(stroke: Stroke, params: SimplifyParams) -> list[float]:
    """Fixed-length feature vector: normalized resampled vertex coordinates.

    Length is 2 * target_vertices; every component lies in [0, 1].
    """
    simplified = simplify_polyline(stroke, params)
    vertices = resample_polyline([(p.x, p.y) for p in simplified], params.target_vertices)
    normalized = normalize_vertices(vertices)
    features: list[float] = []
    for x, y in normalized:
        features.append(x)
        features.append(y)
    return features
