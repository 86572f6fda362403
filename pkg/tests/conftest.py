import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from orbithull.tensor_core import AnisoTensor, act, random_rotation

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_tensor(rng, scale=1.0):
    return AnisoTensor(scale * rng.standard_normal(5))


def tensor_with_eigenvalues(lam, rng=None):
    frame = None if rng is None else random_rotation(rng)
    return AnisoTensor.from_eigenvalues(lam, frame)


def random_profile(rng):
    """Eigenvalues ``(M, mid, m)`` with ``M > 0 > m``, not scaled."""
    while True:
        e = rng.standard_normal(3)
        e -= e.mean()
        e = np.sort(e)[::-1]
        if e[0] - e[2] > 0.1:
            return e


def random_pair(rng, shared=False):
    """Two tensors; with ``shared`` both have ``e3`` as an eigenvector and nothing else in common."""
    from orbithull.pair_hull import TensorPair
    from orbithull.tensor_core import coaxial_rotation

    c1 = AnisoTensor.from_eigenvalues(random_profile(rng), random_rotation(rng) if not shared else None)
    if shared:
        turn = coaxial_rotation([0.0, 0.0, 1.0], rng.uniform(0.2, 1.3))
        c2 = act(turn, AnisoTensor.from_eigenvalues(random_profile(rng)))
    else:
        c2 = AnisoTensor.from_eigenvalues(random_profile(rng), random_rotation(rng))
    return TensorPair(c1, c2)


coords5 = st.lists(st.floats(-5, 5, allow_nan=False), min_size=5, max_size=5).map(
    lambda c: AnisoTensor(np.array(c))
)
seeds = st.integers(0, 2**32 - 1)
angles = st.floats(0.0, 2 * np.pi, allow_nan=False)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
