"""Scene ingestion and keyframe selection.

Shot detection happens upstream; this module consumes its output (a JSONL
file of scene boundaries per video), picks the first / middle / last frame
of every scene, and emits the keyframe manifest that the rest of the
engine is keyed on. Keyframe ids are dense 0..m-1 and assigned in
(video_id lexicographic, frame_index ascending) order so that two builds
over the same scenes file are identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterable, Optional

from .errors import IngestionError, NotFoundError, ValidationError

DEFAULT_IMAGE_PATTERN = "{video_id}/{frame_index}.jpg"


@dataclass(frozen=True)
class SceneBoundary:
    """One contiguous shot of a video, in absolute frame indices (inclusive)."""

    video_id: str
    scene_index: int
    start_frame: int
    end_frame: int

    def validate(self) -> None:
        if not self.video_id:
            raise ValidationError("scene has empty video_id")
        if self.scene_index < 1:
            raise ValidationError(
                f"{self.video_id}: scene_index must be >= 1, got {self.scene_index}"
            )
        if self.start_frame < 1:
            raise ValidationError(
                f"{self.video_id} scene {self.scene_index}: start_frame must be >= 1"
            )
        if self.end_frame < self.start_frame:
            raise ValidationError(
                f"{self.video_id} scene {self.scene_index}: "
                f"end_frame {self.end_frame} < start_frame {self.start_frame}"
            )

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame + 1


@dataclass(frozen=True)
class KeyframeRecord:
    """One indexed frame. keyframe_id doubles as the embedding-store row."""

    keyframe_id: int
    video_id: str
    scene_index: int
    frame_index: int
    image_path: str
    ocr_text: Optional[str] = None

    def to_json(self) -> dict:
        d = asdict(self)
        if d["ocr_text"] is None:
            del d["ocr_text"]
        return d


@dataclass(frozen=True)
class ManifestSummary:
    video_count: int
    scene_count: int
    keyframe_count: int


def select_keyframes(scene: SceneBoundary) -> list[int]:
    """Absolute frame indices of the scene's first, middle, and last frames.

    The middle position is floor((e-1)/2) (1-based within the scene, e =
    scene length), clamped to 1 for scenes too short to have a distinct
    middle. Duplicates collapse, so the result has 1..3 entries and always
    contains both endpoints.
    """
    scene.validate()
    e = scene.length
    positions = {1, max(1, (e - 1) // 2), e}
    return sorted(scene.start_frame + p - 1 for p in positions)


def read_scenes(path: str | Path) -> list[SceneBoundary]:
    """Parse a scenes JSONL file and validate per-video invariants.

    Scenes within one video must have unique scene_index values, must not
    overlap, and scene_index order must agree with frame order. Errors name
    the offending line/record.
    """
    scenes: list[SceneBoundary] = []
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read scenes file {path}: {exc}") from exc

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            scene = SceneBoundary(
                video_id=str(obj["video_id"]),
                scene_index=int(obj["scene_index"]),
                start_frame=int(obj["start_frame"]),
                end_frame=int(obj["end_frame"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise IngestionError(f"{path}:{lineno}: malformed scene record: {exc}") from exc
        try:
            scene.validate()
        except ValidationError as exc:
            raise IngestionError(f"{path}:{lineno}: {exc}") from exc
        scenes.append(scene)

    _check_scene_consistency(scenes)
    return scenes


def _check_scene_consistency(scenes: Iterable[SceneBoundary]) -> None:
    by_video: dict[str, list[SceneBoundary]] = {}
    for scene in scenes:
        by_video.setdefault(scene.video_id, []).append(scene)
    for video_id, video_scenes in by_video.items():
        seen: dict[int, SceneBoundary] = {}
        for scene in video_scenes:
            if scene.scene_index in seen:
                raise IngestionError(
                    f"video {video_id}: duplicate scene_index {scene.scene_index}"
                )
            seen[scene.scene_index] = scene
        ordered = sorted(video_scenes, key=lambda s: s.scene_index)
        prev = None
        for scene in ordered:
            if prev is not None and scene.start_frame <= prev.end_frame:
                raise IngestionError(
                    f"video {video_id}: scene {scene.scene_index} "
                    f"[{scene.start_frame}, {scene.end_frame}] overlaps or precedes "
                    f"scene {prev.scene_index} [{prev.start_frame}, {prev.end_frame}]"
                )
            prev = scene


def read_ocr_sidecar(path: str | Path) -> dict[tuple[str, int], str]:
    """Load per-frame OCR text: JSONL of {video_id, frame_index, text}."""
    ocr: dict[tuple[str, int], str] = {}
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read OCR sidecar {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            ocr[(str(obj["video_id"]), int(obj["frame_index"]))] = str(obj["text"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise IngestionError(f"{path}:{lineno}: malformed OCR record: {exc}") from exc
    return ocr


def build_manifest(
    scenes: list[SceneBoundary],
    image_root: str | Path = "",
    image_pattern: str = DEFAULT_IMAGE_PATTERN,
    ocr: Optional[dict[tuple[str, int], str]] = None,
) -> tuple[list[KeyframeRecord], ManifestSummary]:
    """Select keyframes for every scene and assign dense keyframe ids.

    Returns the manifest ordered by (video_id, frame_index) plus a summary
    with the video count, scene count, and keyframe count m (bounded above
    by 3 x scene count; short scenes contribute fewer frames).
    """
    selected: list[tuple[str, int, int]] = []  # (video_id, frame_index, scene_index)
    for scene in scenes:
        for frame_index in select_keyframes(scene):
            selected.append((scene.video_id, frame_index, scene.scene_index))
    selected.sort(key=lambda t: (t[0], t[1]))

    root = str(image_root)
    records: list[KeyframeRecord] = []
    for keyframe_id, (video_id, frame_index, scene_index) in enumerate(selected):
        rel = image_pattern.format(video_id=video_id, frame_index=frame_index)
        image_path = str(Path(root) / rel) if root else rel
        records.append(
            KeyframeRecord(
                keyframe_id=keyframe_id,
                video_id=video_id,
                scene_index=scene_index,
                frame_index=frame_index,
                image_path=image_path,
                ocr_text=ocr.get((video_id, frame_index)) if ocr else None,
            )
        )

    summary = ManifestSummary(
        video_count=len({s.video_id for s in scenes}),
        scene_count=len(scenes),
        keyframe_count=len(records),
    )
    return records, summary


def write_manifest(records: Iterable[KeyframeRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")


class Manifest:
    """Immutable keyframe manifest with id and per-video lookups.

    Safe for concurrent reads once constructed.
    """

    def __init__(self, records: list[KeyframeRecord]):
        self.records = list(records)
        self._by_id: dict[int, KeyframeRecord] = {}
        self._by_video: dict[str, list[KeyframeRecord]] = {}
        for record in self.records:
            if record.keyframe_id in self._by_id:
                raise IngestionError(f"duplicate keyframe_id {record.keyframe_id}")
            self._by_id[record.keyframe_id] = record
            self._by_video.setdefault(record.video_id, []).append(record)
        for frames in self._by_video.values():
            frames.sort(key=lambda r: r.frame_index)
        expected = set(range(len(self.records)))
        if set(self._by_id) != expected:
            raise IngestionError(
                f"keyframe ids are not dense 0..{len(self.records) - 1}"
            )

    def __len__(self) -> int:
        return len(self.records)

    def get(self, keyframe_id: int) -> KeyframeRecord:
        try:
            return self._by_id[keyframe_id]
        except KeyError:
            raise NotFoundError(f"unknown keyframe_id {keyframe_id}") from None

    def __contains__(self, keyframe_id: int) -> bool:
        return keyframe_id in self._by_id

    def video_frames(self, video_id: str) -> list[KeyframeRecord]:
        try:
            return self._by_video[video_id]
        except KeyError:
            raise NotFoundError(f"unknown video_id {video_id!r}") from None

    @classmethod
    def load(cls, path: str | Path) -> "Manifest":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IngestionError(f"cannot read manifest {path}: {exc}") from exc
        records: list[KeyframeRecord] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                records.append(
                    KeyframeRecord(
                        keyframe_id=int(obj["keyframe_id"]),
                        video_id=str(obj["video_id"]),
                        scene_index=int(obj["scene_index"]),
                        frame_index=int(obj["frame_index"]),
                        image_path=str(obj["image_path"]),
                        ocr_text=obj.get("ocr_text"),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise IngestionError(f"{path}:{lineno}: malformed manifest record: {exc}") from exc
        return cls(records)
