import numpy as np
import pytest

from susyinv import timefunc as tf

CONFIG_DIR_NAME = "configs"


@pytest.fixture(scope="session")
def config_dir():
    from pathlib import Path
    return Path(__file__).resolve().parent.parent / CONFIG_DIR_NAME


def random_gauge_draw(rng, family: str):
    """One (f, theta, phi) triple from the closed time-function family.

    Spin coefficients span [-2, 2]; the oscillator hyperbolic angle is kept
    small because a truncated squeeze spreads a number state by about
    2 * theta * n levels, which must stay inside the edge buffer.
    """
    def coeff(lo=-2.0, hi=2.0):
        return rng.uniform(lo, hi)

    def omega():
        return rng.uniform(0.5, 4.0)

    f = tf.const(coeff()) + coeff() * tf.sine(omega(), rng.uniform(0, 6.28))
    if family == "spin":
        theta = tf.const(coeff()) + coeff() * tf.sine(omega(), rng.uniform(0, 6.28))
    else:
        theta = tf.const(coeff(-0.005, 0.005)) + \
            coeff(-0.005, 0.005) * tf.sine(omega(), rng.uniform(0, 6.28))
    phi = tf.const(coeff()) + tf.linear(coeff()) + \
        coeff() * tf.cosine(omega(), rng.uniform(0, 6.28))
    return f, theta, phi


@pytest.fixture(scope="session")
def spin_draws():
    rng = np.random.default_rng(20240901)
    return [random_gauge_draw(rng, "spin") for _ in range(20)]


@pytest.fixture(scope="session")
def osc_draws():
    rng = np.random.default_rng(20240902)
    return [random_gauge_draw(rng, "oscillator") for _ in range(20)]
