import json

from model_bridge.cli import main

MODEL = "surrogate-transformer:d_model=4,patch_size=8,seed=0"


class TestCli:
    def test_successful_export(self, dataset_dir, tmp_path, capsys):
        out = tmp_path / "emb"
        code = main(
            [
                "--dataset",
                str(dataset_dir),
                "--model",
                MODEL,
                "--out",
                str(out),
                "--batch-size",
                "8",
            ]
        )
        assert code == 0
        assert str(out) in capsys.readouterr().out
        assert len(list(out.glob("*.csv"))) == 3 * 2 * 7
        provenance = json.loads((out / "bridge_export.json").read_text())
        assert provenance["cells"] == 42
        assert provenance["model_revision"].startswith("frozen-random-v1")

    def test_unknown_model_exits_2(self, dataset_dir, tmp_path, capsys):
        code = main(
            ["--dataset", str(dataset_dir), "--model", "nope", "--out", str(tmp_path / "x")]
        )
        assert code == 2
        assert "model error" in capsys.readouterr().err

    def test_missing_dataset_exits_3(self, tmp_path, capsys):
        code = main(
            ["--dataset", str(tmp_path / "absent"), "--model", MODEL, "--out", str(tmp_path / "x")]
        )
        assert code == 3
        assert "data error" in capsys.readouterr().err
