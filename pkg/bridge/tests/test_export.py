import hashlib
import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from model_bridge import BridgeConfig, ModelLoadError, ShapeError, export_embeddings
from model_bridge.models import load_model, parse_model_id

MODEL = "surrogate-transformer:d_model=8,patch_size=8,seed=0"


def tree_digest(root: Path) -> dict:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture(scope="module")
def export_dir(dataset_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("export") / "emb"
    export_embeddings(BridgeConfig(model=MODEL, dataset_dir=dataset_dir, out_dir=out))
    return out


class TestModelZoo:
    def test_parse_model_id(self):
        name, tail, params = parse_model_id("surrogate-transformer:d_model=4,seed=2")
        assert name == "surrogate-transformer"
        assert params == {"d_model": 4, "seed": 2}
        assert parse_model_id("moirai:Salesforce/moirai-1.0-R-small")[1] == "Salesforce/moirai-1.0-R-small"

    def test_unknown_model_rejected(self):
        with pytest.raises(ModelLoadError):
            load_model("gpt-weather")
        with pytest.raises(ModelLoadError):
            load_model("surrogate-transformer:bogus=1")
        with pytest.raises(ModelLoadError, match="divisible"):
            load_model("surrogate-transformer:d_model=7,n_heads=2")
        with pytest.raises(ModelLoadError, match="positive"):
            load_model("surrogate-transformer:patch_size=0")

    def test_moirai_requires_optional_dependency(self):
        try:
            import uni2ts  # noqa: F401
        except ImportError:
            pass
        else:
            pytest.skip("uni2ts installed; loading would attempt a real checkpoint fetch")
        with pytest.raises(ModelLoadError, match="uni2ts"):
            load_model("moirai:Salesforce/moirai-1.0-R-small")

    def test_surrogate_weights_reproducible(self):
        a = load_model(MODEL)
        b = load_model(MODEL)
        series = np.random.default_rng(0).normal(size=(3, 64))
        assert np.array_equal(a.embed_batch(series), b.embed_batch(series))

    def test_zero_tokens_is_shape_error(self):
        model = load_model("surrogate-transformer:patch_size=128")
        with pytest.raises(ShapeError):
            model.embed_batch(np.zeros((1, 64)))


class TestExport:
    def test_one_file_and_sidecar_per_cell(self, export_dir, dataset_dir):
        manifest = json.loads((dataset_dir / "manifest.json").read_text())
        expected = len(manifest["scenarios"]) * 2 * 7
        csvs = sorted(export_dir.glob("*.csv"))
        sidecars = sorted(export_dir.glob("*.meta.json"))
        assert len(csvs) == expected == 3 * 2 * 7
        assert len(sidecars) == expected
        assert {p.stem for p in csvs} == {p.name[: -len(".meta.json")] for p in sidecars}

    def test_sidecar_shape_matches_contents(self, export_dir):
        for csv_path in export_dir.glob("*.csv"):
            sidecar = json.loads(csv_path.with_suffix(".meta.json").read_text())
            rows = [r for r in csv_path.read_text().splitlines() if r.strip()]
            assert len(rows) == sidecar["rows"]
            assert all(len(r.split(",")) == sidecar["cols"] for r in rows)
            assert sidecar["token_to_timestep"]["patch_size"] == 8
            assert sidecar["model_id"].startswith("surrogate-transformer:")
            assert "model_revision" in sidecar

    def test_repeated_export_is_byte_identical(self, dataset_dir, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        export_embeddings(BridgeConfig(model=MODEL, dataset_dir=dataset_dir, out_dir=a))
        export_embeddings(
            BridgeConfig(model=MODEL, dataset_dir=dataset_dir, out_dir=b, batch_size=5)
        )
        assert tree_digest(a) == tree_digest(b)

    def test_dataset_directory_untouched(self, dataset_dir, tmp_path):
        before = tree_digest(dataset_dir)
        export_embeddings(
            BridgeConfig(model=MODEL, dataset_dir=dataset_dir, out_dir=tmp_path / "emb")
        )
        assert tree_digest(dataset_dir) == before

    def test_primary_reader_validates_every_cell(self, export_dir, dataset_dir):
        embedprobe = pytest.importorskip("embedprobe")
        from embedprobe.embedders import read_embedding_set
        from embedprobe.forge import read_dataset

        dataset = read_dataset(dataset_dir)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            embeddings = read_embedding_set(export_dir, dataset.manifest)
            aligned = embeddings.aligned_to(dataset.manifest.canonical_length)
        assert len(aligned.cells) == 3 * 2 * 7
        any_cell = next(iter(aligned.cells.values()))
        assert any_cell.values.shape == (1000, 8)
