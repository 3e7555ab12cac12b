"""Shared fixtures: expensive trained models are built once per session."""

import time

import numpy as np
import pytest

from pinnbands.bounds import estimate_envelope
from pinnbands.problems import NONSINGULAR_FIRST_ORDER_IDS
from pinnbands.training import default_train_config, train_deterministic

BENCH_SEED = 0

TRAIN_SECONDS = {}


@pytest.fixture(scope="session")
def models_10000():
    """Fully trained first-order benchmark models (10000 epochs, seed 0)."""
    out = {}
    for pid in NONSINGULAR_FIRST_ORDER_IDS:
        start = time.perf_counter()
        out[pid] = train_deterministic(pid, default_train_config(pid, epochs=10000, seed=BENCH_SEED))
        TRAIN_SECONDS[pid] = time.perf_counter() - start
    return out


@pytest.fixture(scope="session")
def models_10():
    """Deliberately underfit first-order models (10 epochs, seed 0)."""
    return {
        pid: train_deterministic(pid, default_train_config(pid, epochs=10, seed=BENCH_SEED))
        for pid in NONSINGULAR_FIRST_ORDER_IDS
    }


@pytest.fixture(scope="session")
def envelopes_10000(models_10000):
    return {pid: estimate_envelope(tr, oversample=10, safety_factor=1.1)
            for pid, tr in models_10000.items()}


@pytest.fixture(scope="session")
def envelopes_10(models_10):
    return {pid: estimate_envelope(tr, oversample=10, safety_factor=1.1)
            for pid, tr in models_10.items()}


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
