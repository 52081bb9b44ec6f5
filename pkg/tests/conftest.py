import numpy as np
import pytest

from spectnt.model.config import ModelConfig
from spectnt.synth.store import write_dataset
from spectnt.synth.tasks import SynthTaskSpec


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def micro_cfg():
    """Frame-wise micro model: T̂=3, F̂=4, K̂=8, D=8, two heads each, two blocks."""
    return ModelConfig(
        task="melody", frames=3, bins=4, channels=1, p_f=1, p_t=1, k=8, d=8,
        h_k=2, h_d=2, classes=5, L=2, dropout=0.0,
    )


@pytest.fixture
def tagging_micro_cfg():
    return ModelConfig(
        task="tagging", frames=8, bins=16, channels=1, p_f=1, p_t=2, k=8, d=8,
        h_k=2, h_d=2, classes=4, L=1, dropout=0.0,
    )


@pytest.fixture
def tagging_spec():
    return SynthTaskSpec("tagging", classes=4, frames=8, bins=16, sigma=0.05,
                         train_size=8, val_size=4, test_size=4, seed=3, tag_rate=0.5)


@pytest.fixture
def chord_spec():
    return SynthTaskSpec("chord", classes=25, frames=12, bins=24, sigma=0.0,
                         train_size=6, val_size=3, test_size=3, seed=5, segment_frames=(2, 5))


@pytest.fixture
def tagging_dataset(tmp_path, tagging_spec):
    root = tmp_path / "tagging-data"
    write_dataset(tagging_spec, root, workers=2)
    return root


@pytest.fixture
def chord_micro_cfg():
    return ModelConfig(
        task="chord", frames=12, bins=24, channels=1, p_f=1, p_t=1, k=8, d=8,
        h_k=2, h_d=2, classes=25, L=1, dropout=0.0,
    )
