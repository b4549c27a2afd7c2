"""Shared instance factories for the test suite."""

import math

import numpy as np

from irsbf import ChannelSet, RngStream, default_geometry, sample_channels


def unit_instance(rng: np.random.Generator, n: int) -> ChannelSet:
    """Adversarial family: unit magnitudes, uniform phases."""
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n + 1)
    values = np.exp(1j * phases)
    return ChannelSet(complex(values[0]), values[1:])


def random_instance(rng: np.random.Generator, n: int) -> ChannelSet:
    """Generic family: random magnitudes in [0.05, 2], uniform phases."""
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n + 1)
    mags = rng.uniform(0.05, 2.0, size=n + 1)
    values = mags * np.exp(1j * phases)
    return ChannelSet(complex(values[0]), values[1:])


def model_instance(seed: int, stream: int, n: int) -> ChannelSet:
    """Pathloss/Rayleigh family from the default far-transmitter layout."""
    return sample_channels(RngStream(seed, stream), default_geometry(), n)
