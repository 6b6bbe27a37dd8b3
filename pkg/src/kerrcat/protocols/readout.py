"""Dispersive readout contrasts, spectroscopy population inversion and ZRO statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..composite import CavityParams
from ..errors import FitError, PhysicsError
from ..fitting import monte_carlo_propagate
from ..spectrum import ManifoldSpectrum
from .coherence import ReadoutContrasts


@dataclass(frozen=True)
class PopulationEstimate:
    p0: float
    p1: float
    p2: float
    sigma0: float = 0.0
    sigma1: float = 0.0
    sigma2: float = 0.0

    def __post_init__(self):
        if abs(self.p0 + self.p1 + self.p2 - 1) > 1e-9:
            raise PhysicsError("populations must sum to 1", kind="invalid-populations")

    @classmethod
    def from_p1_p2(cls, p1: float, p2: float, sigma1: float = 0.0, sigma2: float = 0.0) -> "PopulationEstimate":
        return cls(1 - p1 - p2, p1, p2, float(np.hypot(sigma1, sigma2)), sigma1, sigma2)

    def as_array(self) -> np.ndarray:
        return np.array([self.p0, self.p1, self.p2])

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("p0", "p1", "p2", "sigma0", "sigma1", "sigma2")}


def reflection(omega, omega_res, kappa_out: float, kappa_tot: float):
    """One-port S11 = 1 - kappa_out / (i (omega - omega_res) + kappa_tot / 2)."""
    return 1 - kappa_out / (1j * (np.asarray(omega) - omega_res) + kappa_tot / 2)


def cavity_readout_model(cav: CavityParams, spec: ManifoldSpectrum, probe_offset: float = 0.0,
                         n_manifolds: int = 4) -> ReadoutContrasts:
    """Reflected phase at the manifold-0 resonance for each manifold's shifted cavity.

    Phases are unwrapped relative to manifold 0 so that contrast differences stay
    continuous across the +-pi branch cut of the overcoupled resonance.
    """
    nbar = [spec.manifold_mean_photons(k) for k in range(n_manifolds)]
    w_res = [cav.chi_ab * n for n in nbar]
    w_probe = w_res[0] + probe_offset
    s = [reflection(w_probe, w, cav.kappa_out, cav.kappa_b) for w in w_res]
    m0 = float(np.angle(s[0]))
    ms = [m0 + float(np.angle(si / s[0])) for si in s]
    ms += [float("nan")] * (4 - len(ms))
    return ReadoutContrasts(*ms[:4])


def spectroscopy_forward(pops, contrasts: ReadoutContrasts) -> np.ndarray:
    """Peak heights when saturating transitions 0-1, 1-2, 2-3 (equalizing the two populations)."""
    p0, p1, p2 = pops
    M = contrasts.as_array(4)
    return np.array([0.5 * (p0 - p1) * (M[1] - M[0]),
                     0.5 * (p1 - p2) * (M[2] - M[1]),
                     0.5 * p2 * (M[3] - M[2])])


def invert_peaks(peaks, contrasts: ReadoutContrasts) -> np.ndarray:
    """Exact solution of the sum rule plus the two peak-ratio equations."""
    d01, d12, d23 = map(float, peaks)
    if d01 == 0:
        raise PhysicsError("the 0-1 peak must be non-zero", kind="invalid-params")
    M = contrasts.as_array(4)
    eta12 = (M[2] - M[1]) / (M[1] - M[0])
    eta23 = (M[3] - M[2]) / (M[1] - M[0])
    u = (d12 / d01) / eta12
    v = (d23 / d01) / eta23
    dd = 1.0 / (1 + 2 * u + 3 * v)
    p2 = v * dd
    p1 = (u + v) * dd
    return np.array([1 - p1 - p2, p1, p2])


def spectroscopy_inversion(peaks, sigmas, contrasts: ReadoutContrasts, n_samples: int = 20000,
                           seed: int = 0) -> PopulationEstimate:
    p = invert_peaks(peaks, contrasts)
    names = ("d01", "d12", "d23")
    dists = {n: (float(m), float(s)) for n, m, s in zip(names, peaks, sigmas)}
    if any(s > 0 for s in sigmas):
        mc = monte_carlo_propagate(lambda d01, d12, d23: invert_peaks((d01, d12, d23), contrasts),
                                   dists, n_samples, seed)
        sig = mc.std
    else:
        sig = np.zeros(3)
    if np.any(p < -sig - 1e-12) or np.any(p > 1 + sig + 1e-12):
        raise PhysicsError(f"inverted populations {p} are unphysical", kind="inversion-out-of-range")
    return PopulationEstimate(float(p[0]), float(p[1]), float(p[2]), *map(float, sig))


def zro_fidelity_qnd(first, second, threshold: float = 0.0) -> dict[str, float]:
    """Readout fidelity and QND-ness from two consecutive outcomes per shot.

    I > threshold is classified as +Z. Conditionals p(b|a) use the first outcome a.
    """
    first = np.asarray(first, float)
    second = np.asarray(second, float)
    if first.shape != second.shape:
        raise PhysicsError("shot records must be aligned pairwise", kind="invalid-params")
    plus1 = first > threshold
    plus2 = second > threshold
    if plus1.sum() == 0 or (~plus1).sum() == 0:
        raise FitError("one first-outcome class is empty", kind="undefined-conditional")
    p_pp = float(np.mean(plus2[plus1]))
    p_mm = float(np.mean(~plus2[~plus1]))
    p_pm = 1 - p_mm  # +Z second given -Z first
    p_mp = 1 - p_pp
    return {"F": 1 - p_pm - p_mp, "Q": 0.5 * (p_pp + p_mm),
            "p_plus_given_minus": p_pm, "p_minus_given_plus": p_mp, "n_plus": int(plus1.sum()),
            "n_minus": int((~plus1).sum())}


def fidelity_from_conditionals(p_plus_given_minus: float, p_minus_given_plus: float) -> float:
    return 1 - p_plus_given_minus - p_minus_given_plus


def synthetic_zro_shots(n: int, flip: float = 0.0, separation: float = 1.0, noise: float = 0.1,
                        seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian-mixture I values for two consecutive readouts.

    The state is +-Z with equal probability and flips between the readouts with
    probability ``flip``; each readout adds Gaussian noise of width ``noise``.
    """
    rng = np.random.default_rng(seed)
    z1 = rng.choice([-1.0, 1.0], size=n)
    z2 = np.where(rng.random(n) < flip, -z1, z1)
    i1 = z1 * separation / 2 + noise * rng.standard_normal(n)
    i2 = z2 * separation / 2 + noise * rng.standard_normal(n)
    return i1, i2
