import numpy as np
import pytest

from conftest import CONTRASTS, K, TWO_PI, cavity, table_rates, working_point
from kerrcat.composite import DissipationDrive, effective_model
from kerrcat.dynamics import Propagator, build_liouvillian, unvec, vec
from kerrcat.errors import FitError, PhysicsError
from kerrcat.protocols import (PopulationEstimate, ReadoutContrasts, bit_flip_time, cavity_readout_model,
                               check_selectivity, dephasing_equivalent_heating, fidelity_from_conditionals, fit_leakage_population,
                               initialization_ramp, invert_peaks, kerr_gate_fidelity, manifold_coherence_signals,
                               p1_from_ratio, rabi_contrast_protocol, reflection, spectroscopy_forward,
                               spectroscopy_inversion, synthetic_zro_shots, three_level_block,
                               threshold_from_peaks, uhlmann_fidelity, z_after, z_gate_error, zro_fidelity_qnd)
from kerrcat.spectrum import solve_spectrum

AMPS = np.linspace(0, 2.5, 26)


# readout ---------------------------------------------------------------------

def test_reflection_limits():
    kout, ktot = TWO_PI * 524e3, TWO_PI * 681e3
    assert abs(np.angle(reflection(200 * ktot, 0.0, kout, ktot))) < 0.01
    assert abs(abs(np.angle(reflection(0.0, 0.0, kout, ktot))) - np.pi) < 1e-9


def test_model_contrast_step(wp_spec):
    m = cavity_readout_model(cavity(), wp_spec)
    assert -1.0 < m.M1 - m.M0 < -0.2
    assert abs(abs(m.M0) - np.pi) < 1e-9


def test_spectroscopy_null_peaks():
    p = invert_peaks((-0.45, 0.0, 0.0), CONTRASTS)
    assert p[1] == 0 and p[2] == 0 and p[0] == 1


def test_spectroscopy_round_trip():
    pops = np.array([0.91, 0.077, 0.013])
    back = invert_peaks(spectroscopy_forward(pops, CONTRASTS), CONTRASTS)
    assert np.max(np.abs(back - pops)) < 1e-10


def test_spectroscopy_out_of_range():
    with pytest.raises(PhysicsError) as err:
        spectroscopy_inversion((-0.45, 0.05, 0.0), (0, 0, 0), CONTRASTS)
    assert err.value.kind == "inversion-out-of-range"


def test_zro_perfect_separation():
    a, b = synthetic_zro_shots(4000, flip=0.0, separation=1.0, noise=0.05, seed=1)
    r = zro_fidelity_qnd(a, b)
    assert r["F"] == 1 and r["Q"] == 1


def test_zro_conditionals_arithmetic():
    assert abs(fidelity_from_conditionals(0.003, 0.0029) - 0.9941) < 1e-12


def test_zro_symmetric_misclassification():
    n = 40000
    a, b = synthetic_zro_shots(n, flip=0.05, separation=1.0, noise=0.05, seed=2)
    f = zro_fidelity_qnd(a, b)["F"]
    sigma = np.sqrt(2 * 0.05 * 0.95 / (n / 2))
    assert abs(f - 0.90) < 4 * sigma


def test_zro_empty_class():
    with pytest.raises(FitError):
        zro_fidelity_qnd(np.ones(10), np.ones(10))


# coherence signals -------------------------------------------------------------

def test_coherence_signal_limits():
    r = table_rates()
    sig = manifold_coherence_signals(r, CONTRASTS, TWO_PI * 100e3, [0.0, 1.0])
    assert abs(sig["T1_01"][0] - CONTRASTS.M1) < 1e-15
    assert abs(sig["T1_12"][0] - CONTRASTS.M2) < 1e-15
    assert abs(sig["T1_01"][1] - CONTRASTS.M0) < 1e-9
    # sequences closing with the 0-1 swap read the decayed state as manifold 1
    assert abs(sig["T1_12"][1] - CONTRASTS.M1) < 1e-9
    # the closing pi/2 pulse splits the decayed state evenly
    assert abs(sig["Ramsey_01"][1] - 0.5 * (CONTRASTS.M0 + CONTRASTS.M1)) < 1e-9
    assert abs(sig["Ramsey_12"][1] - CONTRASTS.M1) < 1e-9


# rabi contrast ------------------------------------------------------------------

def test_rabi_no_leakage_no_pi_is_flat():
    block = three_level_block()
    data = rabi_contrast_protocol(block, table_rates(), PopulationEstimate(1, 0, 0), AMPS, CONTRASTS)
    assert np.ptp(data.without_pi) < 1e-12


def test_rabi_zero_amplitude_is_static_readout():
    block = three_level_block()
    p = PopulationEstimate.from_p1_p2(0.09, 0.01)
    data = rabi_contrast_protocol(block, table_rates(), p, [0.0, 1.0], CONTRASTS)
    r = table_rates()
    # the 2 us pi01 pulse itself relaxes a little, so compare without the pi pulse only
    static = CONTRASTS.as_array() @ data.transfer_without[0] @ p.as_array()
    assert abs(data.without_pi[0] - static) < 1e-15
    assert np.allclose(data.transfer_without[0], _relax_only(block, r), atol=1e-10)


def _relax_only(block, rates):
    lv = build_liouvillian(block.model(rates))
    out = np.zeros((3, 3))
    prop = Propagator(lv)
    for k in range(3):
        v = prop.apply(vec(block.mixture(np.eye(3)[k])), [2e-6])[0]
        out[:, k] = block.populations(unvec(v, block.dim))
    return out


def test_rabi_ratio_estimator():
    block = three_level_block()
    p = PopulationEstimate.from_p1_p2(0.092, 0.009)
    data = rabi_contrast_protocol(block, table_rates(), p, AMPS, CONTRASTS)
    est = fit_leakage_population(data, 0.009, mode="amplitudeRatio")
    assert abs(est.p1 - 0.092) < 0.005


def test_rabi_full_model_null_case():
    block = three_level_block()
    r = table_rates()
    data = rabi_contrast_protocol(block, r, PopulationEstimate(1, 0, 0), AMPS, CONTRASTS)
    est = fit_leakage_population(data, 0.0, mode="fullModel", block=block, rates=r)
    assert est.p1 < 0.002
    est = fit_leakage_population(data, 0.0, mode="amplitudeRatio")
    assert abs(est.p1) < 0.002


def test_rabi_full_model_exact_without_heating():
    block = three_level_block()
    r = table_rates()
    p = PopulationEstimate.from_p1_p2(0.09, 0.009)
    data = rabi_contrast_protocol(block, r, p, AMPS, CONTRASTS)
    est = fit_leakage_population(data, 0.009, mode="fullModel", block=block, rates=r)
    assert abs(est.p1 - 0.09) < 1e-6


def test_ratio_inversion_formula():
    p1, p2 = 0.09, 0.01
    r = (p1 - p2) / (1 - p1 - 2 * p2)
    assert abs(p1_from_ratio(r, p2) - p1) < 1e-15


def test_rabi_selectivity_guard(wp_spec):
    check_selectivity(wp_spec)
    with pytest.raises(PhysicsError) as err:
        check_selectivity(solve_spectrum(working_point(eps2=0.3 * K, delta=2.5 * K)))
    assert err.value.kind == "selectivity-violation"


# leakage ------------------------------------------------------------------------

def test_dephasing_heating_monotone(wp_spec):
    osc = working_point(n_th_a=0.0)
    spec = solve_spectrum(osc)
    vals = [dephasing_equivalent_heating(osc, spec, TWO_PI * k)[0] for k in (0, 10, 21, 35, 50)]
    assert np.all(np.diff(vals) > 0)
    p_thermal = dephasing_equivalent_heating(working_point(), wp_spec, 0.0)[0]
    assert abs(vals[2] - p_thermal) < 0.005


def test_dissipation_removes_leakage_without_sources(wp_spec):
    # no bath excitation and no loss: cooling from a manifold-1 start is monotone in g
    osc = working_point(n_th_a=0.0, kappa_a=0.0)
    cav = cavity(0.0)
    out = []
    for g in (0.0, 25e3, 50e3, 100e3, 166e3):
        model, basis = effective_model(osc, cav, DissipationDrive(TWO_PI * g), wp_spec)
        rho0 = 0.5 * basis.projector(1)
        v = Propagator(build_liouvillian(model)).apply(vec(rho0), [20e-6])[0]
        out.append(basis.populations(unvec(v, basis.dim))[1])
    assert abs(out[0] - 1) < 1e-9
    assert np.all(np.diff(out) < 0)
    assert out[-1] < 1e-3


# bit flips ------------------------------------------------------------------------

def test_bit_flip_time_band_and_cross_check(wp, wp_spec):
    tz, method, tz_fit = bit_flip_time(wp, None, None, wp_spec, cross_check=True)
    assert method == "spectral"
    assert 0.5e-3 < tz < 5e-3
    assert abs(tz_fit / tz - 1) < 0.05


def test_dissipation_enhances_tz(wp, wp_spec):
    cav = cavity(0.004)
    without, _ = bit_flip_time(wp, cav, None, wp_spec)
    with_, _ = bit_flip_time(wp, cav, DissipationDrive(TWO_PI * 140e3), wp_spec)
    assert with_ > without


def test_dissipation_reduces_tz_below_threshold():
    osc = working_point(eps2=1.4 * K, delta=7 * K)
    spec = solve_spectrum(osc)
    cav = cavity(0.004)
    without, _ = bit_flip_time(osc, cav, None, spec)
    with_, _ = bit_flip_time(osc, cav, DissipationDrive(TWO_PI * 166e3), spec)
    assert with_ < without


def test_z_after_reference_offset_is_normalization(wp, wp_spec):
    cav = cavity(0.004)
    ref = DissipationDrive(TWO_PI * 166e3, -TWO_PI * 3e6)
    z_ref = z_after(wp, cav, ref, wp_spec, model="effective")
    z_none = z_after(wp, cav, DissipationDrive(0.0), wp_spec)
    # far off resonance the dissipation barely acts
    assert abs(z_ref - z_none) / z_none < 0.02


def test_threshold_from_peaks():
    e = np.array([1.0, 1.2, 1.4, 1.6])
    th, regime = threshold_from_peaks(e, [-0.2, -0.1, 0.1, 0.2], np.zeros((4, 3)))
    assert regime == "signChange" and abs(th - 1.3) < 1e-12
    with pytest.raises(PhysicsError) as err:
        threshold_from_peaks(e, [-0.4, -0.3, -0.2, -0.1], np.full((4, 3), 0.01))
    assert err.value.kind == "threshold-not-found"


# ramp and gates ----------------------------------------------------------------------

def test_ramp_without_trap_at_origin():
    target = working_point(delta=0.0)
    for flag in (True, False):
        assert initialization_ramp(target, with_detuning_ramp=flag, dim=30).fidelity >= 0.99


def test_kerr_gate_lossless_and_monotone(wp_spec):
    assert abs(kerr_gate_fidelity(wp_spec, 0.0, 0.0, 140e-9) - 1) < 1e-9
    vals = [kerr_gate_fidelity(wp_spec, TWO_PI * k, 0.0, 140e-9) for k in (0, 2e3, 4e3, 8e3)]
    assert np.all(np.diff(vals) < 0)
    with pytest.raises(PhysicsError) as err:
        kerr_gate_fidelity(wp_spec, 0.0, 0.0, 140e-9, dim=8)
    assert err.value.kind == "truncation-too-small"


def test_uhlmann_pure_states():
    psi = np.array([1.0, 1.0j]) / np.sqrt(2)
    phi = np.array([1.0, 0.0])
    f = uhlmann_fidelity(np.outer(psi, psi.conj()), np.outer(phi, phi))
    assert abs(f - 0.5) < 1e-6


def test_z_gate_error_limits():
    assert z_gate_error(1e6, 0.0) == 0
    assert abs(z_gate_error(1e6, 1.0) - 0.5) < 1e-15


def test_contrast_type_validation():
    with pytest.raises(PhysicsError):
        ReadoutContrasts(np.nan, 1.0, 2.0)
