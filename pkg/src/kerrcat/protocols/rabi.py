"""Rabi-contrast leakage measurement: pulse simulation and p1 estimators.

Two sequences share an amplitude sweep of a Gaussian 1-2 pulse: without and with a
preceding 0-1 pi pulse. Amplitudes are in units of the calibrated 1-2 pi amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from ..dynamics import LindbladModel, RampProfile, build_liouvillian, unvec, vec
from ..errors import FitError, PhysicsError
from ..fitting import canonical_fit, monte_carlo_propagate, nonlinear_least_squares
from ..spectrum import ManifoldSpectrum
from .coherence import DecoherenceRates, LevelBlock, ReadoutContrasts
from .readout import PopulationEstimate

TWO_PI = 2 * np.pi
RABI_PULSE = RampProfile("flatTop", 2e-6, 0.0, 1.0, sigma=332e-9)
SPLITTING_GUARD = TWO_PI * 500e3


def check_selectivity(spec: ManifoldSpectrum, pulse: RampProfile = RABI_PULSE) -> None:
    sep = abs(spec.transition_freq(0, 1) - spec.transition_freq(1, 2))
    if sep < 3 / pulse.sigma:
        raise PhysicsError(f"pulse bandwidth 3/sigma = {3 / pulse.sigma:.3g} rad/s overlaps transitions "
                           f"separated by {sep:.3g} rad/s", kind="selectivity-violation")
    big = [k for k in range(3) if spec.splitting(k) > SPLITTING_GUARD]
    if big:
        raise PhysicsError(f"manifold splitting above 500 kHz in manifolds {big}; degenerate-pair reduction "
                           "does not apply", kind="selectivity-violation")


def pi_amplitude(block: LevelBlock, i: int, pulse: RampProfile = RABI_PULSE) -> float:
    """Peak drive (rad/s) giving a pi rotation: 2 |m| Omega area = pi."""
    sv = np.linalg.svd(block.drive[i], compute_uv=False)
    m = float(np.mean(sv[sv > 1e-9 * sv[0]]))
    return np.pi / (2 * m * pulse.area())


def pulse_superoperator(block: LevelBlock, rates: DecoherenceRates, i: int, amp: float,
                        pulse: RampProfile = RABI_PULSE, n_slices: int = 400) -> np.ndarray:
    """Column-stacked propagator of one pulse on transition i <-> i+1.

    Piecewise-constant midpoint slices; second order in the slice width.
    """
    omega = amp * pi_amplitude(block, i, pulse)
    c = block.drive[i]
    hx = c + c.conj().T
    eye = np.eye(block.dim)
    l_diss = build_liouvillian(LindbladModel(0 * hx, block.jumps(rates), basis="eigen"))
    l_drive = -1j * (np.kron(eye, hx) - np.kron(hx.T, eye))
    dt = pulse.duration / n_slices
    mids = (np.arange(n_slices) + 0.5) * dt
    s = np.eye(block.dim ** 2, dtype=complex)
    for t in mids:
        s = sla.expm(dt * (l_diss + omega * float(pulse.envelope(t)) * l_drive)) @ s
    return s


def apply_pulse(block: LevelBlock, rates: DecoherenceRates, rho: np.ndarray, i: int, amp: float,
                pulse: RampProfile = RABI_PULSE) -> np.ndarray:
    """Drive transition i <-> i+1 with peak amplitude ``amp`` times its pi amplitude, with decoherence on."""
    return unvec(pulse_superoperator(block, rates, i, amp, pulse) @ vec(rho), block.dim)


@dataclass
class RabiContrastData:
    amplitudes: np.ndarray
    without_pi: np.ndarray
    with_pi: np.ndarray
    transfer_without: np.ndarray  # (n_amp, n_read, n_init) manifold populations after each sequence
    transfer_with: np.ndarray


def rabi_transfer(block: LevelBlock, rates: DecoherenceRates, amplitudes,
                  pulse: RampProfile = RABI_PULSE) -> tuple[np.ndarray, np.ndarray]:
    """Final manifold populations for each initial manifold, for both sequences."""
    amps = np.asarray(amplitudes, float)
    n = block.n_levels
    t_wo = np.zeros((len(amps), n, n))
    t_w = np.zeros((len(amps), n, n))
    starts = [vec(block.mixture(np.eye(n)[k])) for k in range(n)]
    s_pi = pulse_superoperator(block, rates, 0, 1.0, pulse)
    after_pi = [s_pi @ v for v in starts]
    for j, x in enumerate(amps):
        s12 = pulse_superoperator(block, rates, 1, x, pulse)
        for k in range(n):
            t_wo[j, :, k] = block.populations(unvec(s12 @ starts[k], block.dim))
            t_w[j, :, k] = block.populations(unvec(s12 @ after_pi[k], block.dim))
    return t_wo, t_w


def rabi_contrast_protocol(block: LevelBlock, rates: DecoherenceRates, true_p: PopulationEstimate,
                           amplitudes, contrasts: ReadoutContrasts, spec: ManifoldSpectrum | None = None,
                           pulse: RampProfile = RABI_PULSE) -> RabiContrastData:
    if spec is not None:
        check_selectivity(spec, pulse)
    t_wo, t_w = rabi_transfer(block, rates, amplitudes, pulse)
    p = true_p.as_array()[: block.n_levels]
    m = contrasts.as_array(block.n_levels)
    return RabiContrastData(np.asarray(amplitudes, float), m @ t_wo @ p, m @ t_w @ p, t_wo, t_w)


def p1_from_ratio(r: float, p2: float) -> float:
    """Amplitude ratio r = (p1 - p2) / (p0 - p2) solved for p1."""
    return (r * (1 - 2 * p2) + p2) / (1 + r)


def _ratio_estimate(data: RabiContrastData) -> tuple[float, float]:
    """Signed amplitude ratio; the without-pi trace reuses the with-pi frequency, decay and phase."""
    fw = canonical_fit("decayingSinusoid", data.amplitudes, data.with_pi)
    a_w, s_w = fw["a"], fw.std_errors["a"]
    if a_w == 0:
        raise FitError("with-pi sequence shows no oscillation")
    shape = {k: fw[k] for k in ("gamma", "omega", "phi")}
    fwo = canonical_fit("decayingSinusoid", data.amplitudes, data.without_pi,
                        init={"a": 0.0, "c": float(np.mean(data.without_pi))}, fixed=shape)
    a_wo, s_wo = fwo["a"], fwo.std_errors["a"]
    r = a_wo / a_w
    return r, float(np.hypot(s_wo / a_w, r * s_w / a_w))


def _full_model_fit(data: RabiContrastData, t_wo: np.ndarray, t_w: np.ndarray, p2: float,
                    m_guess=None):
    """Fit p1 and contrasts M0..M2 with the transfer matrices of the fit model."""
    y = np.concatenate([data.without_pi, data.with_pi])
    if np.ptp(y) == 0:
        raise FitError("signals are flat; p1 is not identifiable")

    def design(p1):
        p = np.array([1 - p1 - p2, p1, p2])
        return np.concatenate([t_wo @ p, t_w @ p])  # (2 n_amp, n_read)

    def lin_m(p1):
        a = design(p1)
        m, *_ = np.linalg.lstsq(a, y, rcond=None)
        return m, float(np.sum((a @ m - y) ** 2))

    # profile over p1 first (contrasts enter linearly), then refine jointly
    res = minimize_scalar(lambda p1: lin_m(p1)[1], bounds=(0.0, 0.5 - p2), method="bounded",
                          options={"xatol": 1e-10})
    p1_0 = float(res.x)
    m0 = lin_m(p1_0)[0] if m_guess is None else np.asarray(m_guess, float)

    def model(p1, M0, M1, M2):
        return design(p1) @ np.array([M0, M1, M2])

    fit = nonlinear_least_squares(model, y, {"p1": p1_0, "M0": m0[0], "M1": m0[1], "M2": m0[2]},
                                  bounds={"p1": (0.0, 1.0 - p2)}, fixed={"p2": p2}, kind="rabiFullModel")
    return fit


def fit_leakage_population(data: RabiContrastData, p2: float, p2_sigma: float = 0.0, mode: str = "fullModel",
                           block: LevelBlock | None = None, rates: DecoherenceRates | None = None,
                           pulse: RampProfile = RABI_PULSE, n_mc: int = 200, seed: int = 0) -> PopulationEstimate:
    """Estimate p1 from the two Rabi-contrast traces.

    fullModel needs ``block`` and the fixed ``rates`` of the fit model; the transfer
    matrices are recomputed with them. The p2 uncertainty enters through Monte-Carlo
    sampling combined by the law of total variance.
    """
    if mode == "amplitudeRatio":
        r, sr = _ratio_estimate(data)

        def solve(p2):
            return p1_from_ratio(r, p2), abs(sr * (1 - 3 * p2) / (1 + r) ** 2)
    elif mode == "fullModel":
        if block is None or rates is None:
            raise PhysicsError("fullModel needs the level block and fixed rates", kind="invalid-params")
        t_wo, t_w = rabi_transfer(block, rates, data.amplitudes, pulse)

        def solve(p2):
            fit = _full_model_fit(data, t_wo, t_w, p2)
            return fit["p1"], fit.std_errors["p1"]
    else:
        raise ValueError(f"unknown mode {mode!r}")

    p1, s1 = solve(p2)
    if p2_sigma > 0:
        mc = monte_carlo_propagate(solve, {"p2": (p2, p2_sigma)}, n_mc, seed)
        s1 = float(np.sqrt(mc.total_variance))
    return PopulationEstimate.from_p1_p2(float(p1), float(p2), float(s1), float(p2_sigma))
