"""Fixtures: a small generated dataset directory (built with the assessment
package, which tests may use freely; the bridge itself must not import it)."""

import json
import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    config = {
        "seed": 7,
        "out_dir": str(root / "run"),
        "dataset": {"generate": {"patients_per_scenario": 2}},
        "embedder": {"reference": {"variant": "identity"}},
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config))
    subprocess.run(
        [sys.executable, "-m", "embedprobe.cli", "generate", "--config", str(config_path)],
        check=True,
        capture_output=True,
    )
    return root / "run" / "dataset"
