"""Flat ``key = value`` run configuration with Hz-valued physical keys.

Frequencies are given as f = omega / 2 pi in Hz and converted to rad/s on load.
Rates written ``kappa_*_Hz`` are likewise kappa / 2 pi.
"""

from __future__ import annotations

import configparser
import difflib
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Key:
    kind: str          # float | hz | int | str | bool | floats | hzs
    doc: str
    default: object = None
    positive: bool = False
    nonneg: bool = False

    @property
    def required(self) -> bool:
        return self.default is None


KEYS: dict[str, Key] = {
    "experiment": Key("str", "experiment name (must match the command)", ""),
    "seed": Key("int", "seed for Monte-Carlo and synthetic shots", 0, nonneg=True),
    "fock_dim": Key("int", "Fock truncation of the oscillator", 45, positive=True),
    "n_keep": Key("int", "eigenstates kept in composite models (0 = automatic)", 0, nonneg=True),
    # oscillator
    "K_over_2pi_Hz": Key("hz", "Kerr nonlinearity K / 2 pi", positive=True),
    "eps2_over_K": Key("float", "squeezing drive amplitude in units of K", nonneg=True),
    "delta_over_K": Key("float", "detuning in units of K"),
    "g3_over_2pi_Hz": Key("hz", "third-order nonlinearity for the Stark shift (0 = no shift)", 0.0),
    "stark": Key("bool", "include the pump Stark shift", True),
    "T1_a_us": Key("float", "oscillator energy-relaxation time 1 / kappa_a in microseconds", positive=True),
    "n_th_a": Key("float", "oscillator thermal occupation", nonneg=True),
    # cavity
    "kappa_b_out_Hz": Key("hz", "cavity output coupling kappa_out / 2 pi", positive=True),
    "kappa_b_loss_Hz": Key("hz", "cavity internal loss kappa_loss / 2 pi", nonneg=True),
    "chi_ab_Hz": Key("hz", "dispersive shift chi_ab / 2 pi", nonneg=True),
    "n_th_b": Key("float", "cavity thermal occupation", nonneg=True),
    # dissipation drive
    "g_diss_Hz": Key("hz", "dissipation coupling g / 2 pi", nonneg=True),
    "diss_detuning_Hz": Key("hz", "dissipation detuning from the 0-1 transition", 0.0),
    "g_diss_grid_Hz": Key("hzs", "list of g / 2 pi values"),
    # manifold rates
    "k1_01_Hz": Key("hz", "relaxation rate 1 -> 0 over 2 pi", nonneg=True),
    "k1_12_Hz": Key("hz", "relaxation rate 2 -> 1 over 2 pi", nonneg=True),
    "kphi_01_Hz": Key("hz", "pure dephasing rate of manifold 1 over 2 pi", nonneg=True),
    "kphi_12_Hz": Key("hz", "pure dephasing rate of manifold 2 over 2 pi", nonneg=True),
    "kup_fraction": Key("float", "excitation rates as a fraction of the relaxation rates", 0.1, nonneg=True),
    # experiment-specific
    "tau_delay_us": Key("float", "free evolution before readout", 4.2, nonneg=True),
    "kphi_extra_Hz": Key("hz", "extra number dephasing on the oscillator", 0.0, nonneg=True),
    "n_manifolds": Key("int", "manifolds reported", 4, positive=True),
    "grid_extent": Key("float", "half-width of the phase-space grid", 4.0, positive=True),
    "grid_points": Key("int", "grid points per axis", 81, positive=True),
    "state": Key("str", "plusZ, minusZ, plusX, minusX, plusY or minusY", "plusZ"),
    "amplitudes": Key("floats", "pulse amplitudes in units of the pi amplitude", "0:2.5:26"),
    "p1_true": Key("float", "manifold-1 population of the synthetic initial state", 0.09, nonneg=True),
    "p2_true": Key("float", "manifold-2 population of the synthetic initial state", 0.01, nonneg=True),
    "p2_sigma": Key("float", "uncertainty of p2 used in the fit", 0.0, nonneg=True),
    "fit_mode": Key("str", "fullModel or amplitudeRatio", "fullModel"),
    "ramsey_detuning_Hz": Key("hz", "Ramsey detuning over 2 pi", 100e3),
    "t_max_us": Key("float", "last sample time", 200.0, positive=True),
    "n_times": Key("int", "number of samples", 201, positive=True),
    "peaks_mrad": Key("floats", "peak heights for 0-1, 1-2, 2-3 in mrad"),
    "peak_sigmas_mrad": Key("floats", "standard deviations of the peak heights in mrad"),
    "n_samples": Key("int", "Monte-Carlo samples", 20000, positive=True),
    "eps2_grid_over_K": Key("floats", "eps2 values in units of K (list or start:stop:n)"),
    "offsets_Hz": Key("hzs", "dissipation detunings over 2 pi; the first is the reference"),
    "duration_us": Key("float", "evolution time", 50.0, positive=True),
    "model": Key("str", "full or effective", "full"),
    "compare_effective": Key("bool", "also run the effective model", False),
    "isoline_Hz": Key("hz", "manifold-1 splitting of the reference isoline", 60e3, positive=True),
    "with_detuning_ramp": Key("str", "both, true or false", "both"),
    "k1_eff_Hz": Key("hz", "effective relaxation during the gate", nonneg=True),
    "kphi_eff_Hz": Key("hz", "effective dephasing during the gate", nonneg=True),
    "gate_times_ns": Key("floats", "gate durations", "140,144"),
    "gamma_rabi_per_us": Key("float", "Z-drive Rabi decay rate", nonneg=True),
    "z_gate_ns": Key("float", "Z-gate duration", 100.0, nonneg=True),
    "n_shots": Key("int", "synthetic shots", 20000, positive=True),
    "flip_probability": Key("float", "state flip between the two readouts", 0.003, nonneg=True),
    "separation": Key("float", "distance of the two Gaussian blobs", 1.0, positive=True),
    "noise": Key("float", "Gaussian width of each blob", 0.1, positive=True),
    "threshold": Key("float", "classification threshold", 0.0),
}

OSC = ("K_over_2pi_Hz", "eps2_over_K", "delta_over_K", "g3_over_2pi_Hz", "stark", "T1_a_us", "n_th_a")
CAV = ("kappa_b_out_Hz", "kappa_b_loss_Hz", "chi_ab_Hz", "n_th_b")
RATES = ("k1_01_Hz", "k1_12_Hz", "kphi_01_Hz", "kphi_12_Hz")
BASE = ("experiment", "seed", "fock_dim", "n_keep")

EXPERIMENT_KEYS: dict[str, tuple[str, ...]] = {
    "spectrum": OSC + ("n_manifolds",),
    "wigner": OSC + ("grid_extent", "grid_points", "state"),
    "steady-leakage": OSC + CAV + ("g_diss_grid_Hz", "tau_delay_us", "kphi_extra_Hz"),
    "kappa-diss": OSC + CAV + ("g_diss_grid_Hz",),
    "rabi-contrast": OSC + CAV + RATES + ("kup_fraction", "amplitudes", "p1_true", "p2_true", "p2_sigma",
                                          "fit_mode"),
    "coherence-signals": OSC + CAV + RATES + ("ramsey_detuning_Hz", "t_max_us", "n_times"),
    "spectroscopy-invert": OSC + CAV + ("peaks_mrad", "peak_sigmas_mrad", "n_samples"),
    "tz-scan": OSC + CAV + ("g_diss_grid_Hz", "diss_detuning_Hz"),
    "eps2-threshold": OSC + CAV + ("g_diss_Hz", "eps2_grid_over_K", "offsets_Hz", "duration_us", "model",
                                   "compare_effective", "isoline_Hz"),
    "init-ramp": ("K_over_2pi_Hz", "eps2_over_K", "delta_over_K", "with_detuning_ramp"),
    "gate-fidelity": ("K_over_2pi_Hz", "eps2_over_K", "delta_over_K", "k1_eff_Hz", "kphi_eff_Hz",
                      "gate_times_ns", "gamma_rabi_per_us", "z_gate_ns"),
    "zro-fidelity": ("n_shots", "flip_probability", "separation", "noise", "threshold"),
    "robustness": OSC + CAV + RATES + ("kup_fraction", "ramsey_detuning_Hz", "n_times", "amplitudes"),
}


@dataclass
class Diagnostic:
    level: str   # error | warning
    key: str
    message: str

    def __str__(self) -> str:
        return f"{self.level}: {self.key}: {self.message}"


@dataclass
class RunConfig:
    experiment: str
    values: dict = field(default_factory=dict)   # converted values (rad/s for Hz keys)
    raw: dict = field(default_factory=dict)      # text as written, echoed into results

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)


def read_pairs(path) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}", kind="file-not-found")
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str  # keep key case
    try:
        parser.read_string("[run]\n" + p.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    return dict(parser["run"])


def parse_floats(text: str) -> list[float]:
    """Comma list, or start:stop:n for an inclusive linear grid."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("grid needs start:stop:n")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ValueError("grid needs n >= 1")
        return [a + (b - a) * k / (n - 1) if n > 1 else a for k in range(n)]
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _convert(key: str, spec: Key, text: str):
    if spec.kind == "str":
        return text.strip()
    if spec.kind == "bool":
        t = text.strip().lower()
        if t in ("1", "true", "yes", "on"):
            return True
        if t in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected true or false, got {text!r}")
    if spec.kind == "int":
        return int(text)
    if spec.kind in ("floats", "hzs"):
        vals = parse_floats(text)
        if not vals:
            raise ValueError("empty list")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("non-finite entry")
        return [TWO_PI * v for v in vals] if spec.kind == "hzs" else vals
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("non-finite value")
    return TWO_PI * v if spec.kind == "hz" else v


def _check_sign(spec: Key, value) -> str | None:
    vals = value if isinstance(value, list) else [value]
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
        return None
    if spec.positive and any(v <= 0 for v in vals):
        return "must be > 0"
    if spec.nonneg and any(v < 0 for v in vals):
        return "must be >= 0"
    return None


def check_config(pairs: dict[str, str], experiment: str | None = None) -> tuple[RunConfig | None, list[Diagnostic]]:
    diags: list[Diagnostic] = []
    exp = experiment or pairs.get("experiment", "").strip()
    if not exp:
        return None, [Diagnostic("error", "experiment", "no experiment given in the config or on the command line")]
    if exp not in EXPERIMENT_KEYS:
        hint = difflib.get_close_matches(exp, EXPERIMENT_KEYS, n=1)
        msg = f"unknown experiment {exp!r}" + (f" (did you mean {hint[0]!r}?)" if hint else "")
        return None, [Diagnostic("error", "experiment", msg)]
    if experiment and pairs.get("experiment", exp).strip() != exp:
        diags.append(Diagnostic("error", "experiment",
                                f"config is for {pairs['experiment']!r} but {exp!r} was requested"))
    allowed = BASE + EXPERIMENT_KEYS[exp]
    values = {}
    for key, text in pairs.items():
        if key not in allowed:
            hint = difflib.get_close_matches(key, allowed, n=1, cutoff=0.6)
            if key in KEYS:
                msg = f"key is not used by {exp!r}"
            else:
                msg = "unknown key" + (f" (did you mean {hint[0]!r}?)" if hint else "")
            diags.append(Diagnostic("warning", key, msg))
            continue
        spec = KEYS[key]
        try:
            values[key] = _convert(key, spec, text)
        except ValueError as exc:
            diags.append(Diagnostic("error", key, f"invalid value {text!r}: {exc}"))
            continue
        bad = _check_sign(spec, values[key])
        if bad:
            diags.append(Diagnostic("error", key, f"{bad} (got {text.strip()})"))
    for key in allowed:
        spec = KEYS[key]
        if key in values or key in pairs:
            continue
        if spec.required:
            diags.append(Diagnostic("error", key, "missing required key"))
        else:
            values[key] = _convert(key, spec, repr(spec.default) if isinstance(spec.default, float)
                                   else str(spec.default))
    values["experiment"] = exp
    if any(d.level == "error" for d in diags):
        return None, diags
    return RunConfig(exp, values, dict(pairs)), diags


def load_config(path, experiment: str | None = None, strict: bool = True) -> RunConfig:
    """Parse and validate; errors (and, with ``strict``, unknown keys) raise ConfigError."""
    cfg, diags = check_config(read_pairs(path), experiment)
    problems = [d for d in diags if d.level == "error" or (strict and d.level == "warning")]
    if problems:
        raise ConfigError("; ".join(str(d) for d in problems), kind="invalid-config")
    return cfg


def validate_config(path) -> list[Diagnostic]:
    return check_config(read_pairs(path))[1]


def shipped_config(experiment: str) -> Path:
    return Path(__file__).with_name("configs") / f"{experiment}.ini"
