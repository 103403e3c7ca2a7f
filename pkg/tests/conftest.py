import numpy as np
import pytest

from weightinfo.core import Stage, WeightEnsemble, WeightVector
from weightinfo.harness import ExperimentConfig

# (criterion number, passed, detail) tuples appended by acceptance tests
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:2d}: {status}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


def make_ensemble(values, stage=Stage.INITIAL, seeds=None):
    members = tuple(WeightVector(v) for v in values)
    if seeds is None:
        seeds = tuple(range(len(members)))
    return WeightEnsemble(members=members, stage=stage, seeds=tuple(seeds))


def random_ensemble(rng, count, dim, stage=Stage.INITIAL, scale=1.0):
    return make_ensemble(
        rng.standard_normal((count, dim)) * scale, stage=stage
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_config():
    """Small but non-degenerate config for fast harness runs."""
    return ExperimentConfig(
        ensemble_size=8,
        base_seed=0,
        class_count=3,
        per_class=10,
        input_dim=4,
        spread=0.3,
        hidden_sizes=(6,),
        epochs=6,
        learning_rate=0.2,
        batch_size=10,
        qmcm_t=0.5,
        qmcm_n=8,
        label_fractions=(1.0 / 3.0, 2.0 / 3.0, 1.0),
        corruption_rates=(0.0, 0.5),
        pairing_threshold=0.5,
        embed_dim=3,
    )
