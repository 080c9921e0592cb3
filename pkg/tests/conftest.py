import time

import pytest
from hypothesis import settings

from mdpci import experiments as ex
from mdpci.core import ModelSpec

settings.register_profile("suite", deadline=None, max_examples=100)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def trichotomy_result():
    """Shared OU disappointment run: theta=0.2, beta=5/11, r=1e-2, 2000 reps,
    exact transitions at h=0.05, horizons 1584 and 6310."""
    config = ex.ExperimentConfig(
        model=ModelSpec(kind="ou", theta=0.2),
        t_grid=(1584.0, 6310.0),
        beta=5.0 / 11.0,
        r=1e-2,
        replications=2000,
        variants=(ex.OPTIMAL, ex.fixed_offset(-0.3), ex.fixed_offset(0.0),
                  ex.fixed_offset(0.3)),
        seed=2026,
        step=0.05,
    )
    start = time.monotonic()
    result = ex.run_disappointment(config)
    result.metadata["elapsed_seconds"] = time.monotonic() - start
    return result


def disappointment_of(result, horizon, variant):
    for row in result.rows:
        if row.stat == "disappointment" and row.T == horizon and row.variant == variant:
            return row.mean
    raise AssertionError(f"no disappointment row for T={horizon} {variant}")
