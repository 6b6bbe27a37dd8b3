import numpy as np
import pytest

from kerrcat.composite import CavityParams
from kerrcat.protocols import DecoherenceRates, ReadoutContrasts
from kerrcat.spectrum import OscillatorParams, solve_spectrum

TWO_PI = 2 * np.pi
K = TWO_PI * 1.74e6
G3 = -TWO_PI * 6.5e6
KAPPA_A = 1 / 55.7e-6


def working_point(n_th_a=0.025, **kw) -> OscillatorParams:
    return OscillatorParams(K, 2.4 * K, 8 * K, g3=G3, kappa_a=KAPPA_A, n_th_a=n_th_a).with_(**kw)


def cavity(n_th_b=0.0) -> CavityParams:
    return CavityParams(TWO_PI * 524e3, TWO_PI * 157e3, n_th_b, TWO_PI * 180e3)


def table_rates(kup_fraction=0.0) -> DecoherenceRates:
    k01, k12 = TWO_PI * 3.18e3, TWO_PI * 15.92e3
    return DecoherenceRates(k01, k12, TWO_PI * 10.61e3, TWO_PI * 31.83e3, kup_fraction * k01, kup_fraction * k12)


CONTRASTS = ReadoutContrasts(np.pi, 2.231, 1.521, 1.064)


@pytest.fixture(scope="session")
def wp():
    return working_point()


@pytest.fixture(scope="session")
def wp_spec(wp):
    return solve_spectrum(wp)


@pytest.fixture(scope="session")
def bare_spec():
    return solve_spectrum(working_point(), stark=False)
