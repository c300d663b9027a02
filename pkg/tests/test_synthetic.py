from rapid.evaluation import load_dataset
from rapid.keyframes import Manifest
from rapid.synthetic import generate_corpus


class TestGenerateCorpus:
    def test_default_scale_and_valid_dataset(self, tmp_path):
        corpus = generate_corpus(tmp_path / "c")
        assert corpus.event_count == 125  # 25 subjects x 5 locations
        assert corpus.keyframe_count == 375
        manifest = Manifest.load(corpus.manifest_path)
        records = load_dataset(corpus.dataset_path, manifest)
        assert len(records) == 125
        assert {r.frame_type for r in records} == {1, 2}

    def test_gazetteer_is_location_vocabulary(self, tmp_path):
        corpus = generate_corpus(tmp_path / "c", subjects=2, locations=4)
        words = corpus.gazetteer_path.read_text().split()
        assert len(words) == 4
        captions = corpus.captions_path.read_text()
        assert all(w in captions for w in words)

    def test_naive_queries_omit_location_tokens(self, tmp_path):
        corpus = generate_corpus(tmp_path / "c", subjects=3, locations=3)
        manifest = Manifest.load(corpus.manifest_path)
        words = set(corpus.gazetteer_path.read_text().split())
        for record in load_dataset(corpus.dataset_path, manifest):
            assert not words & set(record.query.split())
