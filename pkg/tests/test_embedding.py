import json
import math
from hashlib import blake2b

import httpx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rapid.embedding import (
    CaptionSidecar,
    EmbeddingStore,
    HttpEmbeddingBackend,
    MockEmbeddingBackend,
    embed_keyframes,
    embed_texts,
    mock_embed,
    tokenize,
)
from rapid.errors import ConfigurationError, IngestionError, TransportError, ValidationError
from rapid.keyframes import SceneBoundary, build_manifest


def hand_mock_embed(text: str, dim: int) -> list[float]:
    """Independent re-implementation of the documented hashing scheme."""
    acc = [0.0] * dim
    for token in tokenize(text):
        h = int.from_bytes(blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")
        acc[h % dim] += 1.0 if (h >> 63) & 1 == 0 else -1.0
    if not any(acc):
        acc[0] = 1.0
    norm = math.sqrt(sum(v * v for v in acc))
    return [v / norm for v in acc]


class TestMockEmbed:
    def test_deterministic(self):
        assert np.array_equal(mock_embed("hello", 64), mock_embed("hello", 64))

    def test_unit_norm(self):
        for text in ("hello", "a monk is writing", "x", "1 2 3 4 5 6 7 8 9"):
            assert abs(np.linalg.norm(mock_embed(text, 64)) - 1.0) <= 1e-4

    def test_shared_tokens_raise_similarity(self):
        a = mock_embed("monk pagoda writing", 64)
        b = mock_embed("monk writing", 64)
        c = mock_embed("stock market chart", 64)
        assert float(a @ b) > float(a @ c)

    def test_empty_text_maps_to_first_basis_vector(self):
        vec = mock_embed("", 32)
        expected = np.zeros(32, dtype=np.float32)
        expected[0] = 1.0
        assert np.array_equal(vec, expected)

    def test_bag_of_tokens_is_order_insensitive(self):
        assert np.array_equal(mock_embed("a b", 16), mock_embed("b a", 16))

    def test_matches_hand_computed_accumulation(self):
        got = float(mock_embed("x y z", 32) @ mock_embed("x y z w", 32))
        expected = sum(p * q for p, q in zip(hand_mock_embed("x y z", 32), hand_mock_embed("x y z w", 32)))
        assert got == pytest.approx(expected, abs=1e-6)

    def test_dimension_too_small(self):
        with pytest.raises(ValidationError):
            mock_embed("hello", 4)

    @settings(max_examples=50)
    @given(
        candidates=st.lists(
            st.lists(st.sampled_from("abcdefghij"), min_size=1, max_size=5).map(" ".join),
            min_size=2,
            max_size=6,
            unique=True,
        )
    )
    def test_caption_maximizes_its_own_similarity(self, candidates):
        # the frame's own caption is never beaten by another candidate text
        caption = candidates[0]
        cap_vec = mock_embed(caption, 64)
        best = max(float(mock_embed(t, 64) @ cap_vec) for t in candidates)
        assert float(cap_vec @ cap_vec) >= best - 1e-6


class TestEmbedTexts:
    def test_order_preserving_unit_rows(self):
        backend = MockEmbeddingBackend(32)
        out = embed_texts(["one", "two", "three"], backend)
        assert out.shape == (3, 32)
        assert np.allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-4)
        assert np.array_equal(out[1], embed_texts(["two"], backend)[0])

    def test_rejects_empty_batch_and_blank_text(self):
        backend = MockEmbeddingBackend(32)
        with pytest.raises(ValidationError):
            embed_texts([], backend)
        with pytest.raises(ValidationError):
            embed_texts(["ok", "   "], backend)

    def test_dimension_mismatch_is_configuration_error(self):
        class BadBackend:
            dimension = 16

            def embed_text_batch(self, texts):
                return [np.ones(8, dtype=np.float32) for _ in texts]

        with pytest.raises(ConfigurationError):
            embed_texts(["x"], BadBackend())


class TestHttpBackend:
    def make_backend(self, handler, dim=8):
        transport = httpx.MockTransport(handler)
        client = httpx.Client(transport=transport, base_url="http://embedder")
        return HttpEmbeddingBackend("http://embedder", dim, client=client)

    def test_text_roundtrip(self):
        def handler(request):
            payload = json.loads(request.content)
            vecs = [[float(len(t))] * 8 for t in payload["texts"]]
            return httpx.Response(200, json={"vectors": vecs})

        backend = self.make_backend(handler)
        out = embed_texts(["ab", "abcd"], backend)
        assert out.shape == (2, 8)

    def test_transport_error(self):
        def handler(request):
            return httpx.Response(500, text="boom")

        backend = self.make_backend(handler)
        with pytest.raises(TransportError):
            backend.embed_text_batch(["x"])

    def test_wrong_vector_count(self):
        def handler(request):
            return httpx.Response(200, json={"vectors": [[0.0] * 8]})

        backend = self.make_backend(handler)
        with pytest.raises(TransportError):
            backend.embed_text_batch(["a", "b"])


class TestStore:
    def test_roundtrip_bit_exact(self, tmp_path, rng):
        rows = rng.standard_normal((17, 24)).astype(np.float32)
        store = EmbeddingStore.from_rows(rows)
        path = tmp_path / "store.bin"
        store.save(path)
        loaded = EmbeddingStore.load(path)
        assert loaded.dimension == 24 and loaded.count == 17
        assert np.array_equal(loaded.rows, store.rows)
        assert np.allclose(np.linalg.norm(loaded.rows, axis=1), 1.0, atol=1e-4)

    def test_empty_store_roundtrip(self, tmp_path):
        store = EmbeddingStore(np.empty((0, 12), dtype=np.float32))
        path = tmp_path / "empty.bin"
        store.save(path)
        loaded = EmbeddingStore.load(path)
        assert loaded.count == 0 and loaded.dimension == 12

    def test_mmap_load_matches(self, tmp_path, rng):
        rows = rng.standard_normal((5, 8)).astype(np.float32)
        store = EmbeddingStore.from_rows(rows)
        path = tmp_path / "store.bin"
        store.save(path)
        assert np.array_equal(EmbeddingStore.load(path, mmap=True).rows, store.rows)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOPE" + b"\0" * 16)
        with pytest.raises(IngestionError, match="magic"):
            EmbeddingStore.load(path)

    def test_truncated_file_rejected(self, tmp_path, rng):
        rows = rng.standard_normal((4, 8)).astype(np.float32)
        path = tmp_path / "trunc.bin"
        EmbeddingStore.from_rows(rows).save(path)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(IngestionError, match="size"):
            EmbeddingStore.load(path)

    def test_rows_immutable(self, rng):
        store = EmbeddingStore.from_rows(rng.standard_normal((3, 8)).astype(np.float32))
        with pytest.raises(ValueError):
            store.rows[0, 0] = 5.0


class TestEmbedKeyframes:
    def manifest_records(self):
        scenes = [SceneBoundary("a", 1, 1, 9), SceneBoundary("b", 1, 5, 5)]
        records, _ = build_manifest(scenes)
        return records

    def test_store_aligned_with_ids(self):
        records = self.manifest_records()
        captions = CaptionSidecar({r.keyframe_id: f"caption {r.keyframe_id}" for r in records})
        store = embed_keyframes(records, MockEmbeddingBackend(32), captions)
        assert store.count == len(records)
        assert np.array_equal(store.rows[2], mock_embed("caption 2", 32))

    def test_missing_captions_listed(self):
        records = self.manifest_records()
        captions = CaptionSidecar({0: "only one"})
        with pytest.raises(IngestionError, match=r"\[1, 2, 3\]"):
            embed_keyframes(records, MockEmbeddingBackend(32), captions)

    def test_empty_manifest(self):
        store = embed_keyframes([], MockEmbeddingBackend(32))
        assert store.count == 0 and store.dimension == 32

    def test_rerun_is_byte_identical(self, tmp_path):
        records = self.manifest_records()
        captions = CaptionSidecar({r.keyframe_id: f"tokens {r.video_id}" for r in records})
        paths = []
        for name in ("one.bin", "two.bin"):
            store = embed_keyframes(records, MockEmbeddingBackend(64), captions)
            path = tmp_path / name
            store.save(path)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_http_backend_embeds_image_paths(self):
        records = self.manifest_records()

        def handler(request):
            payload = json.loads(request.content)
            seed = float(len(payload["image_path"]))
            return httpx.Response(200, json={"vector": [seed] + [1.0] * 7})

        client = httpx.Client(transport=httpx.MockTransport(handler))
        backend = HttpEmbeddingBackend("http://embedder", 8, client=client)
        store = embed_keyframes(records, backend)
        assert store.count == len(records)
        assert np.allclose(np.linalg.norm(store.rows, axis=1), 1.0, atol=1e-4)
