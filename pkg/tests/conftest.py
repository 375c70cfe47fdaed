import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pathspace import Horizon, StepPath

settings.register_profile(
    "pathspace", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("pathspace")


def random_step_path(rng, max_jumps=6, t_lo=0.0, t_hi=2.5, levels=4, horizon=None):
    """Step path with up to ``max_jumps`` breakpoints and small integer levels (ties on purpose)."""
    horizon = Horizon.halfline() if horizon is None else horizon
    n = int(rng.integers(0, max_jumps + 1))
    times = np.sort(rng.uniform(t_lo, t_hi, size=n))
    times = times[times > horizon.start]
    times = np.unique(times)
    vals = rng.integers(0, levels, size=len(times) + 1).astype(float)
    return StepPath(np.concatenate([[horizon.start], times]), vals, horizon)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
