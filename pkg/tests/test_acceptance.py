"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they complete.
"""
import json
import time
from contextlib import contextmanager

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from rapid.cli import main as cli_main
from rapid.config import load_config
from rapid.drafting import MockDrafter
from rapid.embedding import MockEmbeddingBackend
from rapid.evaluation import load_dataset, precision_recall_at, reciprocal_rank, run_eval
from rapid.index import EmbeddingIndex, RankedResult, parallel_retrieve, similarity_matrix, top_k
from rapid.keyframes import Manifest, SceneBoundary, select_keyframes
from rapid.pipeline import SearchEngine, SearchRequest
from rapid.service import create_app
from rapid.synthetic import generate_corpus

from conftest import VectorBackend, make_manifest, random_unit_rows, unit


@contextmanager
def criterion(number: int, description: str):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"[FAIL] criterion {number}: {description}")
        raise
    print(f"[PASS] criterion {number}: {description} ({time.perf_counter() - start:.2f}s)")


def sort_oracle(scores, k):
    order = sorted(range(len(scores)), key=lambda i: (-float(scores[i]), i))
    return order[: min(k, len(scores))]


def test_criterion_1_top_k_oracle_equivalence():
    with criterion(1, "top-k identical to full-sort oracle on 200 random instances, < 10 s"):
        rng = np.random.default_rng(101)
        start = time.perf_counter()
        for case in range(200):
            m = int(rng.integers(1, 2001))
            d = int(rng.integers(2, 65))
            k = int(rng.integers(1, m + 50))
            query = random_unit_rows(rng, 1, d)[0]
            rows = random_unit_rows(rng, m, d)
            scores = EmbeddingIndex(rows).score_against(query)
            if case % 2 == 0:  # force score ties half the time
                scores = np.round(scores, 1).astype(np.float32)
            result = top_k(scores, k)
            expected = sort_oracle(scores, k)
            assert result.ids.tolist() == expected, f"mismatch on case {case}"
        assert time.perf_counter() - start < 10.0


def test_criterion_2_similarity_matches_scalar_reference():
    with criterion(2, "batched similarity within 1e-5 of scalar triple loop on 50 instances"):
        rng = np.random.default_rng(202)
        for _ in range(50):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(1, 81))
            d = int(rng.integers(2, 65))
            queries = random_unit_rows(rng, n, d)
            rows = random_unit_rows(rng, m, d)
            fast = similarity_matrix(queries, EmbeddingIndex(rows))
            for i in range(n):
                for j in range(m):
                    ref = 0.0
                    for x in range(d):
                        ref += float(queries[i, x]) * float(rows[j, x])
                    assert abs(float(fast[i, j]) - ref) <= 1e-5


def test_criterion_3_identity_pipeline():
    with criterion(3, "drafts=[Q0], k=K reproduces direct top-K bit-identically on 50 corpora"):
        for case in range(50):
            rng = np.random.default_rng(303 + case)
            m = int(rng.integers(2, 301))
            d = int(rng.integers(8, 65))
            final_k = int(rng.integers(1, m + 10))
            rows = random_unit_rows(rng, m, d)
            q0_raw = random_unit_rows(rng, 1, d)[0]
            manifest = make_manifest([("v", i + 1) for i in range(m)])
            engine = SearchEngine(
                EmbeddingIndex(rows), manifest, VectorBackend({"q0": q0_raw}, d)
            )
            result = engine.search(
                SearchRequest(
                    original_query="q0", drafts=("q0",), k_per_draft=final_k, final_k=final_k
                )
            )
            direct = top_k(engine.index.score_against(unit(q0_raw)), final_k)
            assert np.array_equal(result.ids, direct.ids), f"ids differ on case {case}"
            assert np.array_equal(result.scores, direct.scores), f"scores differ on case {case}"


def test_criterion_4_small_instance_end_to_end_oracle():
    with criterion(4, "pipeline equals exhaustive oracle on 100 small random cases"):
        for case in range(100):
            rng = np.random.default_rng(404 + case)
            m = int(rng.integers(1, 21))
            d = 16
            n_drafts = int(rng.integers(1, 4))
            include_original = bool(rng.integers(0, 2))
            texts = ["q0"] + [f"d{i}" for i in range(n_drafts)]
            rows = random_unit_rows(rng, m, d)
            mapping = {t: random_unit_rows(rng, 1, d)[0] for t in texts}
            manifest = make_manifest([("v", i + 1) for i in range(m)])
            engine = SearchEngine(EmbeddingIndex(rows), manifest, VectorBackend(mapping, d))
            k = int(rng.integers(1, 9))
            final_k = int(rng.integers(1, m + 5))
            request = SearchRequest(
                original_query="q0",
                drafts=tuple(texts[1:]),
                k_per_draft=k,
                final_k=final_k,
                include_original_as_draft=include_original,
            )
            result = engine.search(request)

            # exhaustive float64 oracle: score all frames per draft, pool the
            # per-draft top-k, re-sort the pool by Q0 score, truncate
            rows64 = rows.astype(np.float64)
            vec = {t: unit(mapping[t]).astype(np.float64) for t in texts}
            effective = texts[1:] + (["q0"] if include_original else [])
            pool = set()
            for t in effective:
                scores = rows64 @ vec[t]
                pool.update(sorted(range(m), key=lambda i: (-scores[i], i))[:k])
            q0_scores = rows64 @ vec["q0"]
            expected = sorted(pool, key=lambda i: (-q0_scores[i], i))[:final_k]
            assert result.ids.tolist() == expected, f"mismatch on case {case}"


def test_criterion_5_metric_unit_tests():
    with criterion(5, "MRR/P@k/R@k match hand-computed values; R@k monotone on 1000 lists"):
        manifest = make_manifest([("v", i) for i in range(1, 11)])
        from rapid.evaluation import EvalRecord

        rec = EvalRecord(
            query_id="r", query="q", video_id="v", frame_start=3, frame_end=5, frame_type=1
        )

        def ranked(ids):
            ids = np.asarray(ids, dtype=np.int64)
            return RankedResult(ids=ids, scores=np.linspace(1, 0.5, len(ids)).astype(np.float32))

        # relevant keyframe ids are {2, 3, 4} (frame indices 3..5)
        assert abs(reciprocal_rank(ranked([2, 0, 1]), rec, manifest) - 1.0) <= 1e-12
        assert abs(reciprocal_rank(ranked([0, 1, 5, 3]), rec, manifest) - 0.25) <= 1e-12
        assert reciprocal_rank(ranked([0, 1]), rec, manifest) == 0.0
        p5, _ = precision_recall_at(ranked([2, 0, 3, 1, 5]), rec, 5, manifest)
        assert abs(p5 - 0.4) <= 1e-12
        _, r10 = precision_recall_at(ranked([2, 3, 4, 0, 1, 5, 6, 7, 8, 9]), rec, 10, manifest)
        assert abs(r10 - 1.0) <= 1e-12
        p20, _ = precision_recall_at(ranked([2]), rec, 20, manifest)
        assert abs(p20 - 1 / 20) <= 1e-12
        # three records with first-relevant ranks 1, 2, 4
        assert abs((1.0 + 0.5 + 0.25) / 3 - 0.5833333333333334) <= 1e-12

        rng = np.random.default_rng(505)
        for _ in range(1000):
            ids = rng.permutation(10).astype(np.int64)
            start = int(rng.integers(1, 6))
            rec_i = EvalRecord(
                query_id="r",
                query="q",
                video_id="v",
                frame_start=start,
                frame_end=int(rng.integers(start, 11)),
                frame_type=1,
            )
            recalls = [
                precision_recall_at(ranked(ids), rec_i, k, manifest)[1] for k in (1, 5, 10, 20)
            ]
            assert all(a <= b + 1e-12 for a, b in zip(recalls, recalls[1:]))


def test_criterion_6_keyframe_selection_properties():
    with criterion(6, "selection picks endpoints, stays in bounds, has predicted size for e=1..1000"):
        for e in range(1, 1001):
            scene = SceneBoundary("v", 1, 7, 7 + e - 1)
            frames = select_keyframes(scene)
            assert frames[0] == scene.start_frame and frames[-1] == scene.end_frame
            assert all(scene.start_frame <= f <= scene.end_frame for f in frames)
            assert frames == sorted(set(frames))
            assert len(frames) == len({1, max(1, (e - 1) // 2), e})


def test_criterion_7_directional_replication(tmp_path):
    with criterion(7, "synthetic location experiment: augmented MRR beats naive by >= 10%"):
        start = time.perf_counter()
        corpus = generate_corpus(tmp_path / "corpus", subjects=25, locations=5, dim=128)
        assert corpus.event_count >= 100
        manifest = Manifest.load(corpus.manifest_path)
        from rapid.embedding import EmbeddingStore

        store = EmbeddingStore.load(corpus.store_path)
        backend = MockEmbeddingBackend(store.dimension)
        engine = SearchEngine(EmbeddingIndex.from_store(store), manifest, backend)
        records = load_dataset(corpus.dataset_path, manifest)
        gazetteer = corpus.gazetteer_path.read_text().split()

        naive = run_eval(records, engine, "naive", k_per_draft=3, final_k=100)
        augmented = run_eval(
            records,
            engine,
            "augmented",
            drafter=MockDrafter(gazetteer),
            n_drafts=len(gazetteer),
            k_per_draft=3,
            final_k=100,
        )
        elapsed = time.perf_counter() - start
        assert augmented.mrr > naive.mrr * 1.10, (
            f"augmented MRR {augmented.mrr:.4f} not >= 10% above naive {naive.mrr:.4f}"
        )
        assert elapsed < 60.0, f"experiment took {elapsed:.1f}s"
        print(
            f"    naive MRR {naive.mrr:.4f} -> augmented MRR {augmented.mrr:.4f} "
            f"(+{(augmented.mrr / naive.mrr - 1):.0%}) in {elapsed:.1f}s"
        )


def test_criterion_8_parallel_retrieve_performance():
    with criterion(8, "8 drafts vs 100k x 512 index in < 2 s, bit-identical to 1 worker"):
        rng = np.random.default_rng(808)
        rows = rng.standard_normal((100_000, 512), dtype=np.float32)
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        index = EmbeddingIndex(rows)
        drafts = rng.standard_normal((8, 512), dtype=np.float32)
        drafts /= np.linalg.norm(drafts, axis=1, keepdims=True)

        start = time.perf_counter()
        results = parallel_retrieve(drafts, index, k=600, max_workers=8)
        elapsed = time.perf_counter() - start
        assert elapsed < 2.0, f"parallel retrieval took {elapsed:.2f}s"

        single = parallel_retrieve(drafts, index, k=600, max_workers=1)
        for a, b in zip(results, single):
            assert np.array_equal(a.ids, b.ids)
            assert np.array_equal(a.scores, b.scores)
        print(f"    8 workers: {elapsed * 1000:.0f} ms")


def test_criterion_9_determinism(tmp_path):
    with criterion(9, "mock embed CLI is byte-reproducible; /api/search is byte-stable"):
        runner = CliRunner()
        scenes = tmp_path / "scenes.jsonl"
        scenes.write_text(
            "\n".join(
                json.dumps(
                    {"video_id": "v", "scene_index": j, "start_frame": j * 100, "end_frame": j * 100 + 8}
                )
                for j in (1, 2, 3)
            )
            + "\n",
            encoding="utf-8",
        )
        manifest_path = tmp_path / "manifest.jsonl"
        result = runner.invoke(
            cli_main, ["index", "build-manifest", "--scenes", str(scenes), "--out", str(manifest_path)]
        )
        assert result.exit_code == 0, result.output
        captions = tmp_path / "captions.jsonl"
        captions.write_text(
            "\n".join(
                json.dumps({"keyframe_id": i, "caption_tokens": f"caption number {i}"}) for i in range(9)
            )
            + "\n",
            encoding="utf-8",
        )
        blobs = []
        for name in ("s1.bin", "s2.bin"):
            out = tmp_path / name
            result = runner.invoke(
                cli_main,
                [
                    "index", "embed", "--manifest", str(manifest_path), "--out", str(out),
                    "--backend", "mock", "--dim", "64", "--captions", str(captions),
                ],
            )
            assert result.exit_code == 0, result.output
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]

        corpus = generate_corpus(tmp_path / "corpus", subjects=3, locations=3)
        app = create_app(load_config(corpus.config_path))
        with TestClient(app) as client:
            payload = {
                "original_query": "monk writing",
                "drafts": ["monk writing pagoda", "monk writing market"],
                "K": 25,
            }
            first = client.post("/api/search", json=payload).content
            second = client.post("/api/search", json=payload).content
        assert first == second
