"""Bias of heating-free analysis when the device also has upward (excitation) rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dynamics import LindbladModel, steady_state
from ..fitting import nonlinear_least_squares
from .coherence import (DecoherenceRates, LevelBlock, ReadoutContrasts, manifold_coherence_signals,
                        simulate_coherence_signals, three_level_block)
from .rabi import fit_leakage_population, rabi_contrast_protocol
from .readout import PopulationEstimate

RATE_NAMES = ("k1_01", "k1_12", "kphi_01", "kphi_12")


@dataclass
class RobustnessReport:
    true_rates: DecoherenceRates
    fitted_rates: DecoherenceRates
    relative_errors: dict
    true_p: PopulationEstimate
    p1_by_ratio: PopulationEstimate
    p1_by_model: PopulationEstimate

    def to_dict(self) -> dict:
        return {"trueRates": {n: getattr(self.true_rates, n) for n in RATE_NAMES},
                "fittedRatesNoHeating": {n: getattr(self.fitted_rates, n) for n in RATE_NAMES},
                "relativeErrors": self.relative_errors, "trueP": self.true_p.to_dict(),
                "p1ByRatio": self.p1_by_ratio.to_dict(), "p1ByModel": self.p1_by_model.to_dict()}


def steady_populations(block: LevelBlock, rates: DecoherenceRates) -> PopulationEstimate:
    rho = steady_state(LindbladModel(np.zeros((block.dim, block.dim), complex), block.jumps(rates),
                                     basis="eigen"), check_unique=False).matrix
    p = block.populations(rho)
    return PopulationEstimate.from_p1_p2(float(p[1]), float(p[2]))


def _time_grid(rate: float, n: int) -> np.ndarray:
    return np.linspace(0, 4 / rate, n)


def fit_rates_without_heating(signals: dict, times: dict, dw: float, guess: DecoherenceRates) -> DecoherenceRates:
    """Sequential fits of the heating-free closed forms; contrasts are free per trace."""
    def fit(key, free, fixed_rates, m_init):
        t = times[key]

        def model(**p):
            r = {**fixed_rates, **{k: v for k, v in p.items() if k in RATE_NAMES}}
            rates = DecoherenceRates(r.get("k1_01", 0), r.get("k1_12", 0), r.get("kphi_01", 0), r.get("kphi_12", 0))
            c = ReadoutContrasts(p.get("M0", 0.0), p.get("M1", 0.0), p.get("M2", 0.0))
            return manifold_coherence_signals(rates, c, dw, t)[key]

        init = {n: getattr(guess, n) for n in free}
        init.update(m_init)
        bounds = {n: (0.0, np.inf) for n in free}
        typical = {n: getattr(guess, n) for n in free}
        typical.update({m: 1.0 for m in m_init})
        return nonlinear_least_squares(model, signals[key], init, bounds=bounds, typical=typical,
                                       kind=f"coherence:{key}")

    y = signals
    m01 = {"M0": float(y["T1_01"][-1]), "M1": float(y["T1_01"][0])}
    f1 = fit("T1_01", ("k1_01",), {}, m01)
    k01 = f1["k1_01"]
    f2 = fit("Ramsey_01", ("kphi_01",), {"k1_01": k01}, m01)
    m012 = {**m01, "M2": float(y["T1_12"][0])}
    f3 = fit("T1_12", ("k1_12",), {"k1_01": k01}, m012)
    f4 = fit("Ramsey_12", ("kphi_12",), {"k1_01": k01, "kphi_01": f2["kphi_01"], "k1_12": f3["k1_12"]}, m012)
    return DecoherenceRates(k01, f3["k1_12"], f2["kphi_01"], f4["kphi_12"])


def excitation_robustness_study(rates: DecoherenceRates, contrasts: ReadoutContrasts, dw: float,
                                n_times: int = 201, amplitudes=None, p2_sigma: float = 0.0,
                                seed: int = 0) -> RobustnessReport:
    """Generate heating-on data in a three-level model and analyse it without heating.

    All experiments start from the heating steady state. The Rabi-contrast full-model
    fit uses the heating-free fitted rates; p2 is taken as known.
    """
    block = three_level_block()
    true_p = steady_populations(block, rates)
    rho_ss = block.mixture(true_p.as_array())
    times = {"T1_01": _time_grid(rates.k1_01, n_times), "Ramsey_01": _time_grid(rates.gamma_01, n_times),
             "T1_12": _time_grid(min(rates.k1_01, rates.k1_12), n_times),
             "Ramsey_12": _time_grid(rates.gamma_01 + rates.gamma_12, n_times)}
    signals = {k: simulate_coherence_signals(block, rates, contrasts, dw, t, initial=rho_ss)[k]
               for k, t in times.items()}
    fitted = fit_rates_without_heating(signals, times, dw, rates.without_heating())
    rel = {n: (getattr(fitted, n) - getattr(rates, n)) / getattr(rates, n) for n in RATE_NAMES
           if getattr(rates, n)}
    amps = np.linspace(0, 2.5, 26) if amplitudes is None else np.asarray(amplitudes, float)
    data = rabi_contrast_protocol(block, rates, true_p, amps, contrasts)
    by_ratio = fit_leakage_population(data, true_p.p2, p2_sigma, "amplitudeRatio", seed=seed)
    by_model = fit_leakage_population(data, true_p.p2, p2_sigma, "fullModel", block=block, rates=fitted,
                                      seed=seed)
    return RobustnessReport(rates, fitted, rel, true_p, by_ratio, by_model)
