import json

import pytest


@pytest.fixture()
def benchmark_model_path(tmp_path):
    """Standard five-coordinate benchmark config on disk."""
    payload = {
        "s": 5,
        "w0": 0.0,
        "w": [1.0] * 5,
        "mu": [0.0] * 5,
        "sigma": [1.0] * 5,
        "subset": [1, 2],
    }
    path = tmp_path / "benchmark.json"
    path.write_text(json.dumps(payload))
    return str(path)
