"""Retrieval quality metrics (MRR, P@k, R@k) and the comparison experiment.

A ground-truth record names a query and the frame-index range of its
event; a retrieved keyframe is relevant iff it lies in that range of that
video. P@k uses the fixed denominator k, R@k divides by the number of
manifest keyframes inside the ground-truth range, and records whose range
contains no manifest keyframe are rejected at load time (their recall
would be undefined).

``run_eval`` evaluates one engine configuration in either mode: *naive*
issues each query as-is, *augmented* expands it through a drafter first.
Per-record engine failures score zero and are annotated, never fatal.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .drafting import Drafter, generate_drafts
from .errors import IngestionError, NotFoundError, ValidationError
from .index import RankedResult
from .keyframes import KeyframeRecord, Manifest
from .pipeline import SearchEngine, SearchRequest

PRECISION_KS = (1, 5, 10, 20)
RECALL_KS = (10, 20)
FRAME_TYPES = (1, 2)


@dataclass(frozen=True)
class EvalRecord:
    query_id: str
    query: str
    video_id: str
    frame_start: int
    frame_end: int
    frame_type: int

    def validate(self) -> None:
        if not self.query.strip():
            raise ValidationError(f"record {self.query_id}: empty query")
        if self.frame_end < self.frame_start:
            raise ValidationError(
                f"record {self.query_id}: frame_end {self.frame_end} < frame_start {self.frame_start}"
            )
        if self.frame_type not in FRAME_TYPES:
            raise ValidationError(
                f"record {self.query_id}: frame_type must be 1 or 2, got {self.frame_type}"
            )


def is_relevant(keyframe: KeyframeRecord, record: EvalRecord) -> bool:
    return (
        keyframe.video_id == record.video_id
        and record.frame_start <= keyframe.frame_index <= record.frame_end
    )


def relevant_ids(record: EvalRecord, manifest: Manifest) -> set[int]:
    try:
        frames = manifest.video_frames(record.video_id)
    except NotFoundError:
        return set()
    return {f.keyframe_id for f in frames if is_relevant(f, record)}


def load_dataset(path: str | Path, manifest: Manifest) -> list[EvalRecord]:
    """Load and validate ground truth; every record must have at least one
    relevant keyframe in the manifest."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read dataset {path}: {exc}") from exc
    records: list[EvalRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            record = EvalRecord(
                query_id=str(obj["query_id"]),
                query=str(obj["query"]),
                video_id=str(obj["video_id"]),
                frame_start=int(obj["frame_start"]),
                frame_end=int(obj["frame_end"]),
                frame_type=int(obj["frame_type"]),
            )
            record.validate()
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as exc:
            raise IngestionError(f"{path}:{lineno}: malformed eval record: {exc}") from exc
        if not relevant_ids(record, manifest):
            raise IngestionError(
                f"{path}:{lineno}: record {record.query_id} has no relevant keyframes in the manifest"
            )
        records.append(record)
    return records


def reciprocal_rank(ranked: RankedResult, record: EvalRecord, manifest: Manifest) -> float:
    """1/rank of the first relevant result, 0.0 when none is present."""
    targets = relevant_ids(record, manifest)
    for rank, (keyframe_id, _score) in enumerate(ranked, start=1):
        if keyframe_id in targets:
            return 1.0 / rank
    return 0.0


def first_relevant_rank(ranked: RankedResult, record: EvalRecord, manifest: Manifest) -> Optional[int]:
    targets = relevant_ids(record, manifest)
    for rank, (keyframe_id, _score) in enumerate(ranked, start=1):
        if keyframe_id in targets:
            return rank
    return None


def precision_recall_at(
    ranked: RankedResult, record: EvalRecord, k: int, manifest: Manifest
) -> tuple[float, float]:
    """(P@k, R@k) with fixed denominator k and per-record relevant total."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    targets = relevant_ids(record, manifest)
    if not targets:
        raise ValidationError(
            f"record {record.query_id} has no relevant keyframes in the manifest"
        )
    hits = sum(1 for keyframe_id, _ in list(ranked)[:k] if keyframe_id in targets)
    return hits / k, hits / len(targets)


@dataclass
class MetricReport:
    mrr: float
    p_at: dict[int, float]
    r_at: dict[int, float]
    per_type: dict[int, dict]
    query_count: int
    mode: str = ""
    records: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "query_count": self.query_count,
            "mrr": self.mrr,
            "p_at": {str(k): v for k, v in self.p_at.items()},
            "r_at": {str(k): v for k, v in self.r_at.items()},
            "per_type": {str(t): v for t, v in self.per_type.items()},
            "records": self.records,
        }

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        return cls(
            mrr=float(data["mrr"]),
            p_at={int(k): float(v) for k, v in data["p_at"].items()},
            r_at={int(k): float(v) for k, v in data["r_at"].items()},
            per_type={int(t): v for t, v in data.get("per_type", {}).items()},
            query_count=int(data["query_count"]),
            mode=str(data.get("mode", "")),
            records=list(data.get("records", [])),
        )

    @classmethod
    def load(cls, path: str | Path) -> "MetricReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _aggregate(rows: list[dict]) -> dict:
    n = len(rows)
    if n == 0:
        return {
            "query_count": 0,
            "mrr": 0.0,
            "p_at": {k: 0.0 for k in PRECISION_KS},
            "r_at": {k: 0.0 for k in RECALL_KS},
        }
    return {
        "query_count": n,
        "mrr": sum(r["reciprocal_rank"] for r in rows) / n,
        "p_at": {k: sum(r["p_at"][k] for r in rows) / n for k in PRECISION_KS},
        "r_at": {k: sum(r["r_at"][k] for r in rows) / n for k in RECALL_KS},
    }


def run_eval(
    records: Sequence[EvalRecord],
    engine: SearchEngine,
    mode: str,
    drafter: Optional[Drafter] = None,
    n_drafts: int = 6,
    k_per_draft: int = 600,
    final_k: int = 600,
    include_original_as_draft: bool = True,
) -> MetricReport:
    """Evaluate all records in naive or augmented mode and aggregate metrics."""
    if mode not in ("naive", "augmented"):
        raise ValidationError(f"mode must be 'naive' or 'augmented', got {mode!r}")
    if mode == "augmented" and drafter is None:
        raise ValidationError("augmented mode requires a drafter")

    rows: list[dict] = []
    for record in records:
        row: dict = {"query_id": record.query_id, "frame_type": record.frame_type}
        try:
            if mode == "naive":
                drafts: tuple[str, ...] = (record.query,)
            else:
                drafts = tuple(generate_drafts(record.query, n_drafts, drafter))
            request = SearchRequest(
                original_query=record.query,
                drafts=drafts,
                k_per_draft=k_per_draft,
                final_k=final_k,
                include_original_as_draft=include_original_as_draft,
            )
            ranked = engine.search(request)
            rank = first_relevant_rank(ranked, record, engine.manifest)
            row["first_relevant_rank"] = rank
            row["reciprocal_rank"] = 0.0 if rank is None else 1.0 / rank
            pr = {k: precision_recall_at(ranked, record, k, engine.manifest) for k in set(PRECISION_KS) | set(RECALL_KS)}
            row["p_at"] = {k: pr[k][0] for k in PRECISION_KS}
            row["r_at"] = {k: pr[k][1] for k in RECALL_KS}
        except Exception as exc:  # record the failure, keep evaluating
            row["error"] = str(exc)
            row["first_relevant_rank"] = None
            row["reciprocal_rank"] = 0.0
            row["p_at"] = {k: 0.0 for k in PRECISION_KS}
            row["r_at"] = {k: 0.0 for k in RECALL_KS}
        rows.append(row)

    overall = _aggregate(rows)
    per_type = {}
    for frame_type in FRAME_TYPES:
        bucket = _aggregate([r for r in rows if r["frame_type"] == frame_type])
        bucket["p_at"] = {str(k): v for k, v in bucket["p_at"].items()}
        bucket["r_at"] = {str(k): v for k, v in bucket["r_at"].items()}
        per_type[frame_type] = bucket

    serializable_rows = [
        {**row, "p_at": {str(k): v for k, v in row["p_at"].items()},
         "r_at": {str(k): v for k, v in row["r_at"].items()}}
        for row in rows
    ]
    return MetricReport(
        mrr=overall["mrr"],
        p_at=overall["p_at"],
        r_at=overall["r_at"],
        per_type=per_type,
        query_count=overall["query_count"],
        mode=mode,
        records=serializable_rows,
    )


def compare_reports(a: MetricReport, b: MetricReport) -> list[str]:
    """Human-readable metric deltas between two reports (b relative to a)."""

    def line(name: str, va: float, vb: float) -> str:
        delta = vb - va
        rel = f" ({delta / va:+.1%})" if va else ""
        return f"{name:<8} {va:.4f} -> {vb:.4f}  delta {delta:+.4f}{rel}"

    lines = [f"comparing {a.mode or 'A'} ({a.query_count} queries) vs {b.mode or 'B'} ({b.query_count} queries)"]
    lines.append(line("MRR", a.mrr, b.mrr))
    for k in PRECISION_KS:
        lines.append(line(f"P@{k}", a.p_at.get(k, 0.0), b.p_at.get(k, 0.0)))
    for k in RECALL_KS:
        lines.append(line(f"R@{k}", a.r_at.get(k, 0.0), b.r_at.get(k, 0.0)))
    return lines
