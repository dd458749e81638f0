import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from barron.spectral import SpectralFunction

settings.register_profile(
    "default", max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def _canonical(k):
    for v in k:
        if v != 0:
            return v > 0
    return True


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def spectral_functions(draw, d=None, k_max=6, max_orbits=8, nonzero=True):
    d = draw(st.integers(1, 3)) if d is None else d
    keys = draw(
        st.lists(
            st.tuples(*[st.integers(-k_max, k_max)] * d).filter(lambda k: any(k) and _canonical(k)),
            min_size=1 if nonzero else 0,
            max_size=max_orbits,
            unique=True,
        )
    )
    atoms = {k: complex(draw(finite), draw(finite)) for k in keys}
    if draw(st.booleans()):
        atoms[(0,) * d] = draw(finite)
    u = SpectralFunction.from_half(d, atoms)
    if nonzero and u.is_zero():
        u = SpectralFunction.from_half(d, {(0,) * d: 1.0})
    return u


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
