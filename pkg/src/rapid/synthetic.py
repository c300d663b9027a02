"""Synthetic corpus generator for offline experiments and demos.

Builds a grid of events: each subject (noun + verb) occurs once per
location, one scene per event, three keyframes per scene. Captions carry
subject tokens plus the location token; ground-truth queries carry only
the subject tokens. Location words therefore discriminate between the
events a naive query cannot separate, which is exactly the gap the
drafting stage is meant to close (the generated gazetteer is the location
vocabulary).

Output directory layout: scenes.jsonl, manifest.jsonl, captions.jsonl,
store.bin, dataset.jsonl, gazetteer.txt, video_meta.jsonl, config.json,
and optionally images/ with placeholder thumbnails.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .embedding import CaptionSidecar, MockEmbeddingBackend, embed_keyframes
from .errors import ValidationError
from .keyframes import SceneBoundary, build_manifest, write_manifest

NOUNS = [
    "monk", "cyclist", "firefighter", "dancer", "vendor", "fisherman",
    "teacher", "drummer", "welder", "farmer", "barber", "painter",
    "goalkeeper", "diver", "pilot", "nurse", "carpenter", "juggler",
    "skater", "climber", "beekeeper", "potter", "rower", "florist",
    "surveyor", "butcher", "tailor", "glassblower", "falconer", "printer",
]
VERBS = [
    "writing", "riding", "climbing", "spinning", "grilling", "casting",
    "lecturing", "drumming", "welding", "harvesting", "trimming", "sketching",
    "diving", "swimming", "taxiing", "bandaging", "sawing", "tossing",
    "gliding", "rappelling", "smoking", "glazing", "sculling", "arranging",
    "measuring", "carving", "stitching", "shaping", "feeding", "pressing",
]
LOCATIONS = [
    "pagoda", "stadium", "market", "riverbank", "museum", "harbor",
    "orchard", "rooftop", "station", "plaza", "quarry", "greenhouse",
]

FRAME_GAP = 100  # frames between consecutive scene starts within a video


@dataclass(frozen=True)
class SyntheticCorpus:
    root: Path
    scenes_path: Path
    manifest_path: Path
    captions_path: Path
    store_path: Path
    dataset_path: Path
    gazetteer_path: Path
    video_meta_path: Path
    config_path: Path
    event_count: int
    keyframe_count: int


def _word(pool: list[str], prefix: str, i: int) -> str:
    return pool[i] if i < len(pool) else f"{prefix}{i:03d}"


def generate_corpus(
    out_dir: str | Path,
    subjects: int = 25,
    locations: int = 5,
    frames_per_scene: int = 9,
    dim: int = 128,
    images: bool = False,
) -> SyntheticCorpus:
    """Write a complete mock-backend corpus under out_dir and return its paths."""
    if subjects < 1 or locations < 1:
        raise ValidationError("subjects and locations must be >= 1")
    if frames_per_scene < 5:
        raise ValidationError("frames_per_scene must be >= 5 so scenes yield 3 keyframes")
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)

    location_words = [_word(LOCATIONS, "place", l) for l in range(locations)]
    scenes: list[SceneBoundary] = []
    dataset_rows: list[dict] = []
    ocr: dict[tuple[str, int], str] = {}
    event_caption: dict[tuple[str, int], str] = {}  # (video_id, scene_index) -> caption

    event_index = 0
    for s in range(subjects):
        video_id = f"video{s:03d}"
        subject_phrase = f"{_word(NOUNS, 'subject', s)} {_word(VERBS, 'action', s)}"
        for l in range(locations):
            scene_index = l + 1
            start = l * FRAME_GAP + 1
            end = start + frames_per_scene - 1
            scenes.append(SceneBoundary(video_id, scene_index, start, end))
            caption = f"{subject_phrase} {location_words[l]}"
            event_caption[(video_id, scene_index)] = caption
            middle = start + max(1, (frames_per_scene - 1) // 2) - 1
            ocr[(video_id, middle)] = f"{location_words[l].upper()} NEWS"
            dataset_rows.append(
                {
                    "query_id": f"q{event_index:03d}",
                    "query": subject_phrase,
                    "video_id": video_id,
                    "frame_start": start,
                    "frame_end": end,
                    "frame_type": 2 if event_index % 6 == 0 else 1,
                }
            )
            event_index += 1

    scenes_path = root / "scenes.jsonl"
    with scenes_path.open("w", encoding="utf-8") as fh:
        for scene in scenes:
            fh.write(
                json.dumps(
                    {
                        "video_id": scene.video_id,
                        "scene_index": scene.scene_index,
                        "start_frame": scene.start_frame,
                        "end_frame": scene.end_frame,
                    }
                )
                + "\n"
            )

    records, _summary = build_manifest(scenes, image_root="images", ocr=ocr)
    manifest_path = root / "manifest.jsonl"
    write_manifest(records, manifest_path)

    captions_path = root / "captions.jsonl"
    caption_map: dict[int, str] = {}
    with captions_path.open("w", encoding="utf-8") as fh:
        for record in records:
            caption = event_caption[(record.video_id, record.scene_index)]
            caption_map[record.keyframe_id] = caption
            fh.write(
                json.dumps({"keyframe_id": record.keyframe_id, "caption_tokens": caption}) + "\n"
            )

    backend = MockEmbeddingBackend(dim)
    store = embed_keyframes(records, backend, CaptionSidecar(caption_map))
    store_path = root / "store.bin"
    store.save(store_path)

    dataset_path = root / "dataset.jsonl"
    with dataset_path.open("w", encoding="utf-8") as fh:
        for row in dataset_rows:
            fh.write(json.dumps(row) + "\n")

    gazetteer_path = root / "gazetteer.txt"
    gazetteer_path.write_text("\n".join(location_words) + "\n", encoding="utf-8")

    video_meta_path = root / "video_meta.jsonl"
    with video_meta_path.open("w", encoding="utf-8") as fh:
        for s in range(subjects):
            video_id = f"video{s:03d}"
            fh.write(
                json.dumps(
                    {"video_id": video_id, "url": f"https://videos.example/watch/{video_id}", "fps": 25}
                )
                + "\n"
            )

    config_path = root / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "store.path": "store.bin",
                "manifest.path": "manifest.jsonl",
                "embedding.backend": "mock",
                "embedding.dimension": dim,
                "drafting.mock_gazetteer_path": "gazetteer.txt",
                "video_meta.path": "video_meta.jsonl",
                "defaults.n_drafts": 6,
                "defaults.n_selected": 4,
                "defaults.k_per_draft": 30,
                "defaults.final_k": 100,
                "defaults.neighbor_radius": 5,
                "serve.host": "127.0.0.1",
                "serve.port": 8765,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    if images:
        _render_placeholder_images(root, records, caption_map)

    return SyntheticCorpus(
        root=root,
        scenes_path=scenes_path,
        manifest_path=manifest_path,
        captions_path=captions_path,
        store_path=store_path,
        dataset_path=dataset_path,
        gazetteer_path=gazetteer_path,
        video_meta_path=video_meta_path,
        config_path=config_path,
        event_count=event_index,
        keyframe_count=len(records),
    )


def _render_placeholder_images(root: Path, records, caption_map: dict[int, str]) -> None:
    """Small solid-color thumbnails so the UI grid has something to show."""
    from hashlib import blake2b

    from PIL import Image, ImageDraw

    for record in records:
        digest = blake2b(caption_map[record.keyframe_id].encode(), digest_size=3).digest()
        color = tuple(64 + b % 160 for b in digest)
        img = Image.new("RGB", (96, 54), color)
        draw = ImageDraw.Draw(img)
        draw.text((4, 4), f"{record.video_id}\n#{record.frame_index}", fill=(255, 255, 255))
        path = root / record.image_path
        path.parent.mkdir(parents=True, exist_ok=True)
        img.save(path, format="JPEG", quality=80)
