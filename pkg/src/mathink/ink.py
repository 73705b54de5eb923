"""Pen-input data model: points, strokes, bounding boxes, ink sessions.

Coordinate convention: device-independent units, y grows downward.
Timestamps are integer milliseconds relative to the session start.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

INK_FORMAT_VERSION = 1


class InkError(ValueError):
    """Malformed ink data (bad geometry, timestamps, or file format)."""


@dataclass(frozen=True)
class InkPoint:
    x: float
    y: float
    t: int  # ms since session start

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InkError(f"non-finite coordinates ({self.x}, {self.y})")
        if self.t < 0:
            raise InkError(f"negative timestamp {self.t}")


@dataclass(frozen=True)
class Stroke:
    """One pen-down..pen-up trajectory; the unit the classifier sees."""

    id: str
    points: tuple[InkPoint, ...]

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise InkError(f"stroke {self.id!r} has {len(self.points)} points, need >= 2")
        prev = self.points[0].t
        for p in self.points[1:]:
            if p.t < prev:
                raise InkError(f"stroke {self.id!r}: timestamps decrease ({prev} -> {p.t})")
            prev = p.t


@dataclass(frozen=True)
class BBox:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self) -> None:
        if self.min_x > self.max_x or self.min_y > self.max_y:
            raise InkError(f"inverted bbox {self}")

    @property
    def width(self) -> float:
        return self.max_x - self.min_x

    @property
    def height(self) -> float:
        return self.max_y - self.min_y

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.min_x + self.max_x) / 2.0, (self.min_y + self.max_y) / 2.0)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def union(self, other: "BBox") -> "BBox":
        return BBox(
            min(self.min_x, other.min_x),
            min(self.min_y, other.min_y),
            max(self.max_x, other.max_x),
            max(self.max_y, other.max_y),
        )

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.min_x + dx, self.min_y + dy, self.max_x + dx, self.max_y + dy)

    def contains_point(self, x: float, y: float) -> bool:
        return self.min_x <= x <= self.max_x and self.min_y <= y <= self.max_y


def bbox_of(stroke: Stroke) -> BBox:
    """Tight axis-aligned bounds of all stroke points."""
    xs = [p.x for p in stroke.points]
    ys = [p.y for p in stroke.points]
    return BBox(min(xs), min(ys), max(xs), max(ys))


def bbox_of_points(points: list[tuple[float, float]]) -> BBox:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return BBox(min(xs), min(ys), max(xs), max(ys))


# Edit events: the session's append-only log. Replaying the log from an
# empty session must reproduce `strokes` exactly.
@dataclass(frozen=True)
class AddStroke:
    stroke: Stroke


@dataclass(frozen=True)
class DeleteStroke:
    stroke_id: str


@dataclass(frozen=True)
class CorrectLabel:
    stroke_id: str
    label: str


EditEvent = AddStroke | DeleteStroke | CorrectLabel


@dataclass
class InkSession:
    """Ordered strokes plus the edit log that produced them.

    Owned by a single session owner; value types inside are immutable.
    """

    strokes: list[Stroke] = field(default_factory=list)
    edit_log: list[EditEvent] = field(default_factory=list)

    def stroke_ids(self) -> list[str]:
        return [s.id for s in self.strokes]

    def find(self, stroke_id: str) -> Stroke | None:
        for s in self.strokes:
            if s.id == stroke_id:
                return s
        return None

    def add(self, stroke: Stroke) -> None:
        if self.find(stroke.id) is not None:
            raise InkError(f"duplicate stroke id {stroke.id!r}")
        self.strokes.append(stroke)
        self.edit_log.append(AddStroke(stroke))

    def delete(self, stroke_id: str) -> Stroke:
        for i, s in enumerate(self.strokes):
            if s.id == stroke_id:
                del self.strokes[i]
                self.edit_log.append(DeleteStroke(stroke_id))
                return s
        raise InkError(f"unknown stroke id {stroke_id!r}")

    @staticmethod
    def replay(events: list[EditEvent]) -> "InkSession":
        session = InkSession()
        for ev in events:
            if isinstance(ev, AddStroke):
                session.add(ev.stroke)
            elif isinstance(ev, DeleteStroke):
                session.delete(ev.stroke_id)
            elif isinstance(ev, CorrectLabel):
                session.edit_log.append(ev)
        return session


# ---------------------------------------------------------------------------
# Canonical ink file: {"version": 1, "strokes": [{"id": ..., "points": [[x,y,t], ...]}]}


def session_to_dict(session: InkSession) -> dict:
    return {
        "version": INK_FORMAT_VERSION,
        "strokes": [
            {"id": s.id, "points": [[p.x, p.y, p.t] for p in s.points]}
            for s in session.strokes
        ],
    }


def serialize_ink(session: InkSession) -> bytes:
    return json.dumps(session_to_dict(session)).encode("utf-8")


def session_from_dict(doc: object) -> InkSession:
    if not isinstance(doc, dict):
        raise InkError("ink document must be an object")
    version = doc.get("version")
    if version != INK_FORMAT_VERSION:
        raise InkError(f"unsupported ink format version {version!r}")
    raw_strokes = doc.get("strokes")
    if not isinstance(raw_strokes, list):
        raise InkError("'strokes' must be an array")
    session = InkSession()
    for i, raw in enumerate(raw_strokes):
        if not isinstance(raw, dict) or "id" not in raw or "points" not in raw:
            raise InkError(f"strokes[{i}]: expected object with 'id' and 'points'")
        sid = raw["id"]
        if not isinstance(sid, str):
            raise InkError(f"strokes[{i}].id must be a string")
        pts = raw["points"]
        if not isinstance(pts, list):
            raise InkError(f"strokes[{i}].points must be an array")
        points = []
        for j, triple in enumerate(pts):
            if (
                not isinstance(triple, list)
                or len(triple) != 3
                or not all(isinstance(v, (int, float)) for v in triple)
            ):
                raise InkError(f"strokes[{i}].points[{j}]: expected [x, y, t]")
            points.append(InkPoint(float(triple[0]), float(triple[1]), int(triple[2])))
        try:
            session.add(Stroke(sid, tuple(points)))
        except InkError as exc:
            raise InkError(f"strokes[{i}] (id {sid!r}): {exc}") from exc
    return session


def parse_ink(data: bytes) -> InkSession:
    """Parse the canonical ink file format; errors carry the byte offset."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise InkError(f"ink file is not valid UTF-8 at byte {exc.start}") from exc
    except json.JSONDecodeError as exc:
        raise InkError(f"malformed ink file at byte {exc.pos}: {exc.msg}") from exc
    return session_from_dict(doc)
