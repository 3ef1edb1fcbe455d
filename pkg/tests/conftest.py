import numpy as np
import pytest

from tdlemu.engine import EngineParams


@pytest.fixture
def params():
    return EngineParams()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def full_scale_tone(length=4096, cycles_per_sample=0.01234, amplitude=32767.0):
    n = np.arange(length)
    z = amplitude * np.exp(2j * np.pi * cycles_per_sample * n)
    codes = np.column_stack([np.round(z.real), np.round(z.imag)])
    return np.clip(codes, -32768, 32767).astype(np.int16)
