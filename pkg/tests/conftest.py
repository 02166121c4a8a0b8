import numpy as np
import pytest

from acouprop.spectral import Signal, dft
from acouprop.synth import PairDataset, make_gamma, simulate_pair


def random_signal(n=64, sample_rate=64, seed=0, scale=1.0, position=(0.0, 0.0, 0.0)):
    rng = np.random.default_rng(seed)
    return Signal(scale * rng.standard_normal(n), sample_rate, position)


def make_dataset(
    n_pairs=1,
    n=32,
    sample_rate=32,
    profile="air_like",
    distances=None,
    noise_std=0.0,
    seed=0,
    signal_scale=1.0,
):
    """Synthetic dataset with a known coefficient; returns (dataset, gamma)."""
    rng = np.random.default_rng(seed)
    if distances is None:
        distances = 0.5 + rng.uniform(size=n_pairs)
    speakers, receivers = [], []
    gamma = None
    for i in range(n_pairs):
        speaker = Signal(
            signal_scale * rng.standard_normal(n), sample_rate, (0.0, 0.0, 0.0)
        )
        if gamma is None:
            gamma = make_gamma(profile, dft(speaker).angular_frequencies)
        spk, rcv = simulate_pair(
            speaker, gamma, float(distances[i]), noise_std, seed=seed + 1000 + i
        )
        speakers.append(spk)
        receivers.append(rcv)
    dataset = PairDataset(tuple(speakers), tuple(receivers), np.asarray(distances, dtype=float))
    return dataset, gamma


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
