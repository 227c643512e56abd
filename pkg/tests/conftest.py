import numpy as np
import pytest

from nstate.data import Recording, iter_synth_cohort
from nstate.montage import Montage, fibonacci_montage


@pytest.fixture(scope="session")
def montage32() -> Montage:
    return fibonacci_montage(32)


def smooth_recording(montage: Montage, duration: float = 60.0, seed: int = 0,
                     delta: float = 0.0) -> Recording:
    """A spatially smooth multichannel recording for interpolation tests."""
    rec = next(iter_synth_cohort(2, montage, delta=delta, seed=seed,
                                 duration=duration))
    return rec


def replace_channel(rec: Recording, name: str, values: np.ndarray) -> Recording:
    data = rec.data.copy()
    data[rec.channel_names.index(name)] = values
    return Recording(data, rec.fs, rec.channel_names, rec.subject_id,
                     rec.condition, dict(rec.provenance))
