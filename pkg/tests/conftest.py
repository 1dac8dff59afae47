import json

import numpy as np
import pytest

from app.schemas.subgroup import SubgroupSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def q8():
    return SubgroupSpec(kind="discrete", block_size=1, order=8)


@pytest.fixture
def q2():
    return SubgroupSpec(kind="discrete", block_size=1, order=2)


@pytest.fixture
def torus():
    return SubgroupSpec(kind="continuous", block_size=1)


@pytest.fixture
def write_config(tmp_path):
    """Write a run config dict to a JSON file and return its path."""

    def _write(data: dict, name: str = "run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return _write
