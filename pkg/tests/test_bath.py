"""Spectral densities, Bose factors, rate kernel."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lzsim.bath import BathSpec, bose_occupation, rate_kernel, spectral_density

OHMIC = BathSpec.ohmic(kappa=0.001, omega_d=12.5, temperature=0.0175)
STRUCT = BathSpec.structured(kappa=0.001, g=0.0019, omega_r=1.0, temperature=0.0175)


def test_ohmic_values():
    assert spectral_density(OHMIC, 0.0) == 0.0
    assert np.isclose(spectral_density(OHMIC, 12.5), 0.001 * 12.5 * np.exp(-1.0))


def test_structured_peak_value():
    # at w = omega_r the Lorentzian denominator collapses to (kappa w_r^2)^2
    assert np.isclose(spectral_density(STRUCT, 1.0), 16 * 0.0019 ** 2 / 0.001)


def test_spectral_density_rejects_negative():
    with pytest.raises(ValueError):
        spectral_density(OHMIC, -0.1)


def test_structured_ohmic_at_low_frequency():
    w = 1e-6
    slope = spectral_density(STRUCT, w) / w
    assert abs(slope - 16 * 0.001 * 0.0019 ** 2) / (16 * 0.001 * 0.0019 ** 2) < 1e-3


def test_structured_peak_location():
    w = np.linspace(0.5, 1.5, 200001)
    j = spectral_density(STRUCT, w)
    w_peak = w[np.argmax(j)]
    assert abs(w_peak - 1.0) < 0.5 * 0.001 * 1.0  # within 0.5 * kappa * omega_r


def test_bose_ln2_identity():
    T = 0.37
    assert np.isclose(bose_occupation(T * np.log(2.0), T), 1.0, rtol=1e-12)


def test_bose_zero_temperature():
    assert bose_occupation(0.5, 0.0) == 0.0


def test_bose_domain_error_at_zero():
    with pytest.raises(ValueError):
        bose_occupation(0.0, 0.1)


def test_bose_regression_paper_temperature():
    # w = omega_r, T = 0.0175 omega_r; frozen with 40-digit arithmetic
    assert np.isclose(bose_occupation(1.0, 0.0175), 1.5246580905345836e-25, rtol=1e-12)


def test_bose_extreme_argument_no_overflow():
    assert bose_occupation(1.0, 1e-6) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-4, 5.0), st.floats(1e-3, 1.0))
def test_detailed_balance(eps, temperature):
    bath = BathSpec.ohmic(kappa=0.001, omega_d=12.5, temperature=temperature)
    n_plus = rate_kernel(bath, eps)
    n_minus = rate_kernel(bath, -eps)
    if n_minus > 0 and eps / temperature < 500:
        assert np.isclose(n_plus / n_minus, np.exp(-eps / temperature), rtol=1e-9)


def test_rate_kernel_zero_limit_ohmic():
    assert np.isclose(rate_kernel(OHMIC, 0.0), np.pi * 0.001 * 0.0175, rtol=1e-14)


def test_rate_kernel_zero_limit_structured():
    expected = np.pi * STRUCT.low_freq_slope * 0.0175
    assert np.isclose(rate_kernel(STRUCT, 0.0), expected, rtol=1e-14)


def test_rate_kernel_continuous_at_zero():
    for bath in (OHMIC, STRUCT):
        n0 = rate_kernel(bath, 0.0)
        assert abs(rate_kernel(bath, 1e-9) - n0) / n0 < 1e-6
        assert abs(rate_kernel(bath, -1e-9) - n0) / n0 < 1e-6


def test_rate_kernel_emission_regression():
    # N(-omega_r) = pi*kappa*omega_r*exp(-omega_r/omega_D)*(1 + n_B); frozen value
    assert np.isclose(rate_kernel(OHMIC, -1.0), 0.0029000555322169059, rtol=1e-12)


def test_rate_kernel_zero_temperature():
    bath = BathSpec.ohmic(kappa=0.001, omega_d=12.5, temperature=0.0)
    assert rate_kernel(bath, 0.5) == 0.0
    assert rate_kernel(bath, 0.0) == 0.0
    assert np.isclose(rate_kernel(bath, -0.5), np.pi * spectral_density(bath, 0.5))


def test_rate_kernel_vectorized():
    eps = np.array([-1.0, 0.0, 1.0])
    vals = rate_kernel(OHMIC, eps)
    assert vals.shape == (3,)
    assert np.isclose(vals[1], np.pi * 0.001 * 0.0175)


def test_bath_spec_validation():
    with pytest.raises(ValueError):
        BathSpec.ohmic(kappa=0.0, omega_d=1.0, temperature=0.1)
    with pytest.raises(ValueError):
        BathSpec.ohmic(kappa=0.1, omega_d=-1.0, temperature=0.1)
    with pytest.raises(ValueError):
        BathSpec.structured(kappa=0.1, g=-0.1, omega_r=1.0, temperature=0.1)
    with pytest.raises(ValueError):
        BathSpec(kind="flat", kappa=0.1, temperature=0.1)
