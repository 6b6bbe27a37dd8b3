"""Experiment emulations built on the spectrum, dynamics and composite layers."""

from .bitflip import (ThresholdScanResult, bit_flip_scan, bit_flip_time, dissipation_selectivity,
                      equator_decay_rates, threshold_from_peaks, z_after)
from .coherence import (DecoherenceRates, LevelBlock, ReadoutContrasts, manifold_block, manifold_coherence_signals,
                        simulate_coherence_signals, three_level_block)
from .gates import kerr_gate_fidelity, uhlmann_fidelity, z_gate_error
from .leakage import LeakagePoint, dephasing_equivalent_heating, steady_leakage_vs_dissipation
from .rabi import RabiContrastData, check_selectivity, fit_leakage_population, p1_from_ratio, rabi_contrast_protocol
from .ramp import RampResult, initialization_ramp
from .readout import (PopulationEstimate, cavity_readout_model, fidelity_from_conditionals, invert_peaks, reflection,
                      spectroscopy_forward, spectroscopy_inversion, synthetic_zro_shots, zro_fidelity_qnd)
from .robustness import RobustnessReport, excitation_robustness_study

__all__ = [
    "ThresholdScanResult", "bit_flip_scan", "bit_flip_time", "threshold_from_peaks", "z_after",
    "dissipation_selectivity", "equator_decay_rates", "p1_from_ratio", "fidelity_from_conditionals", "reflection",
    "DecoherenceRates", "LevelBlock", "ReadoutContrasts", "manifold_block", "manifold_coherence_signals",
    "simulate_coherence_signals", "three_level_block", "kerr_gate_fidelity", "uhlmann_fidelity", "z_gate_error",
    "LeakagePoint", "dephasing_equivalent_heating", "steady_leakage_vs_dissipation", "RabiContrastData",
    "check_selectivity", "fit_leakage_population", "rabi_contrast_protocol", "RampResult", "initialization_ramp",
    "PopulationEstimate", "cavity_readout_model", "invert_peaks", "spectroscopy_forward", "spectroscopy_inversion",
    "synthetic_zro_shots", "zro_fidelity_qnd", "RobustnessReport", "excitation_robustness_study",
]
