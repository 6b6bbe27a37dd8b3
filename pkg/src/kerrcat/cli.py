"""Command-line runner: one config-driven command per experiment, writing JSON and CSV artifacts."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .composite import CavityParams, DissipationDrive, extract_kappa_diss
from .config import EXPERIMENT_KEYS, RunConfig, load_config, shipped_config, validate_config
from .errors import ConfigError, KerrCatError
from .hilbert import wigner_function
from .protocols import (DecoherenceRates, PopulationEstimate, bit_flip_scan, bit_flip_time, cavity_readout_model,
                        dephasing_equivalent_heating, excitation_robustness_study, fit_leakage_population,
                        initialization_ramp, kerr_gate_fidelity, manifold_coherence_signals,
                        rabi_contrast_protocol, spectroscopy_inversion, steady_leakage_vs_dissipation,
                        synthetic_zro_shots, three_level_block, z_gate_error, zro_fidelity_qnd)
from .spectrum import OscillatorParams, isoline_lowest_crossing, kcq_basis_states, solve_spectrum

SCHEMA = f"kerrcat.run/{__version__}"
TWO_PI = 2 * math.pi
log = logging.getLogger("kerrcat")

Table = tuple[list[str], list[list]]


@dataclass
class RunContext:
    cfg: RunConfig
    seed: int
    jobs: int
    fock_dim: int


# parameter builders ---------------------------------------------------------

def oscillator(cfg: RunConfig) -> OscillatorParams:
    K = cfg["K_over_2pi_Hz"]
    t1 = cfg.get("T1_a_us")
    g3 = cfg.get("g3_over_2pi_Hz") or None
    return OscillatorParams(K, cfg["eps2_over_K"] * K, cfg["delta_over_K"] * K, g3=g3,
                            kappa_a=1.0 / (t1 * 1e-6) if t1 else 0.0, n_th_a=cfg.get("n_th_a", 0.0) or 0.0)


def cavity(cfg: RunConfig) -> CavityParams:
    return CavityParams(cfg["kappa_b_out_Hz"], cfg["kappa_b_loss_Hz"], cfg["n_th_b"], cfg["chi_ab_Hz"])


def spectrum(ctx: RunContext, osc: OscillatorParams | None = None):
    cfg = ctx.cfg
    return solve_spectrum(osc or oscillator(cfg), ctx.fock_dim, stark=bool(cfg.get("stark", False)))


def rates(cfg: RunConfig, kup_fraction: float = 0.0) -> DecoherenceRates:
    k01, k12 = cfg["k1_01_Hz"], cfg["k1_12_Hz"]
    return DecoherenceRates(k01, k12, cfg["kphi_01_Hz"], cfg["kphi_12_Hz"], kup_fraction * k01, kup_fraction * k12)


def n_keep(cfg: RunConfig) -> int | None:
    return cfg.get("n_keep") or None


# experiments ----------------------------------------------------------------

def run_spectrum(ctx: RunContext):
    spec = spectrum(ctx)
    rows = []
    for k in range(min(ctx.cfg["n_manifolds"], spec.n_manifolds)):
        rows.append([k, spec.energies[spec.index(k, 1)] / TWO_PI, spec.energies[spec.index(k, -1)] / TWO_PI,
                     spec.splitting(k) / TWO_PI, spec.manifold_mean_photons(k)])
    res = {"confinedCount": spec.confined_count, "stark": spec.stark,
           "splittings_Hz": [r[3] for r in rows],
           "transition01_Hz": spec.transition_freq(0, 1) / TWO_PI,
           "transition12_Hz": spec.transition_freq(1, 2) / TWO_PI}
    return res, {"spectrum": (["manifold", "E_plus_Hz", "E_minus_Hz", "splitting_Hz", "mean_photons"], rows)}


def run_wigner(ctx: RunContext):
    cfg = ctx.cfg
    spec = spectrum(ctx)
    states = kcq_basis_states(spec)
    if cfg["state"] not in states:
        raise ConfigError(f"state must be one of {sorted(states)}", kind="invalid-config")
    x = np.linspace(-cfg["grid_extent"], cfg["grid_extent"], cfg["grid_points"])
    xx, yy = np.meshgrid(x, x)
    w = wigner_function(states[cfg["state"]], (xx + 1j * yy).ravel())
    rows = [[a, b, c] for a, b, c in zip(xx.ravel(), yy.ravel(), w)]
    dx = x[1] - x[0] if len(x) > 1 else 1.0
    return ({"state": cfg["state"], "integral": float(w.sum() * dx * dx), "min": float(w.min()),
             "max": float(w.max())}, {"wigner": (["re_beta", "im_beta", "W"], rows)})


def run_steady_leakage(ctx: RunContext):
    cfg = ctx.cfg
    osc = oscillator(cfg)
    spec = spectrum(ctx, osc)
    pts = steady_leakage_vs_dissipation(osc, cavity(cfg), cfg["g_diss_grid_Hz"], spec,
                                        cfg["tau_delay_us"] * 1e-6, n_keep=n_keep(cfg))
    rows = [[p.g_diss / TWO_PI, p.p1, p.p2] for p in pts]
    res = {"points": [{"g_diss_Hz": r[0], "p1": r[1], "p2": r[2]} for r in rows]}
    if cfg["kphi_extra_Hz"]:
        p1, p2 = dephasing_equivalent_heating(osc, spec, cfg["kphi_extra_Hz"], n_keep(cfg))
        res["dephasingEquivalent"] = {"kphi_Hz": cfg["kphi_extra_Hz"] / TWO_PI, "p1": p1, "p2": p2}
    return res, {"steady_leakage": (["g_diss_Hz", "p1", "p2"], rows)}


def run_kappa_diss(ctx: RunContext):
    cfg = ctx.cfg
    osc, cav = oscillator(cfg), cavity(cfg)
    spec = spectrum(ctx, osc)
    rows = []
    for g in cfg["g_diss_grid_Hz"]:
        k = extract_kappa_diss(osc, cav, DissipationDrive(g), spec)
        est = 4 * g ** 2 / cav.kappa_b
        rows.append([g / TWO_PI, k / TWO_PI, est / TWO_PI, k / est])
    return ({"points": [dict(zip(("g_diss_Hz", "kappa_diss_Hz", "four_g2_over_kappa_b_Hz", "ratio"), r))
                        for r in rows]},
            {"kappa_diss": (["g_diss_Hz", "kappa_diss_Hz", "four_g2_over_kappa_b_Hz", "ratio"], rows)})


def _contrasts(ctx: RunContext, spec):
    return cavity_readout_model(cavity(ctx.cfg), spec)


def run_rabi_contrast(ctx: RunContext):
    cfg = ctx.cfg
    spec = spectrum(ctx)
    contrasts = _contrasts(ctx, spec)
    block = three_level_block()
    true_r = rates(cfg, cfg["kup_fraction"])
    true_p = PopulationEstimate.from_p1_p2(cfg["p1_true"], cfg["p2_true"])
    amps = np.asarray(cfg["amplitudes"])
    data = rabi_contrast_protocol(block, true_r, true_p, amps, contrasts, spec)
    mode = cfg["fit_mode"]
    if mode not in ("fullModel", "amplitudeRatio"):
        raise ConfigError("fit_mode must be fullModel or amplitudeRatio", kind="invalid-config")
    est = fit_leakage_population(data, cfg["p2_true"], cfg["p2_sigma"], mode, block=block,
                                 rates=true_r.without_heating(), seed=ctx.seed)
    rows = [[a, u, v] for a, u, v in zip(amps, data.without_pi, data.with_pi)]
    return ({"mode": mode, "trueP": true_p.to_dict(), "estimate": est.to_dict()},
            {"rabi_contrast": (["amplitude", "without_pi", "with_pi"], rows)})


def run_coherence_signals(ctx: RunContext):
    cfg = ctx.cfg
    spec = spectrum(ctx)
    contrasts = _contrasts(ctx, spec)
    t = np.linspace(0, cfg["t_max_us"] * 1e-6, cfg["n_times"])
    sig = manifold_coherence_signals(rates(cfg), contrasts, cfg["ramsey_detuning_Hz"], t)
    keys = ["T1_01", "Ramsey_01", "T1_12", "Ramsey_12"]
    rows = [[ti] + [sig[k][i] for k in keys] for i, ti in enumerate(t)]
    return ({"contrasts": [contrasts.M0, contrasts.M1, contrasts.M2]},
            {"coherence_signals": (["t_s"] + keys, rows)})


def run_spectroscopy_invert(ctx: RunContext):
    cfg = ctx.cfg
    spec = spectrum(ctx)
    contrasts = cavity_readout_model(cavity(cfg), spec, n_manifolds=4)
    peaks = [p * 1e-3 for p in cfg["peaks_mrad"]]
    sig = [s * 1e-3 for s in cfg["peak_sigmas_mrad"]]
    if len(peaks) != 3 or len(sig) != 3:
        raise ConfigError("peaks_mrad and peak_sigmas_mrad need three entries", kind="invalid-config")
    est = spectroscopy_inversion(peaks, sig, contrasts, cfg["n_samples"], ctx.seed)
    d = est.to_dict()
    rows = [[k, d[f"p{k}"], d[f"sigma{k}"]] for k in range(3)]
    return ({"estimate": d, "contrasts": [contrasts.M0, contrasts.M1, contrasts.M2, contrasts.M3]},
            {"populations": (["manifold", "p", "sigma"], rows)})


def run_tz_scan(ctx: RunContext):
    cfg = ctx.cfg
    osc, cav = oscillator(cfg), cavity(cfg)
    spec = spectrum(ctx, osc)
    rows = []
    for g in cfg["g_diss_grid_Hz"]:
        drive = DissipationDrive(g, cfg["diss_detuning_Hz"]) if g else None
        tz, method = bit_flip_time(osc, cav, drive, spec, n_keep(cfg))
        rows.append([g / TWO_PI, tz])
    return ({"method": "spectral", "points": [{"g_diss_Hz": a, "T_Z_s": b} for a, b in rows]},
            {"tz_scan": (["g_diss_Hz", "T_Z_s"], rows)})


def run_eps2_threshold(ctx: RunContext):
    cfg = ctx.cfg
    osc, cav = oscillator(cfg), cavity(cfg)
    eps = np.asarray(cfg["eps2_grid_over_K"]) * osc.K
    stark = bool(cfg["stark"])
    kw = dict(duration=cfg["duration_us"] * 1e-6, dim=ctx.fock_dim, jobs=ctx.jobs, stark=stark)
    scan = bit_flip_scan(osc, cav, cfg["g_diss_Hz"], eps, cfg["offsets_Hz"], model=cfg["model"], **kw)
    iso = isoline_lowest_crossing(cfg["isoline_Hz"], osc.delta, osc, np.linspace(0.2, 8, 40) * osc.K,
                                  manifold=1, dim=ctx.fock_dim, stark=stark)
    res = {"scan": scan.to_dict(), "eps2Th_over_K": scan.eps2_th / osc.K,
           "isoline_eps2_over_K": None if iso is None else iso / osc.K}
    if iso:
        res["relativeToIsoline"] = (scan.eps2_th - iso) / iso
    if cfg["compare_effective"] and cfg["model"] != "effective":
        eff = bit_flip_scan(osc, cav, cfg["g_diss_Hz"], eps, cfg["offsets_Hz"], model="effective", **kw)
        res["effective_eps2Th_over_K"] = eff.eps2_th / osc.K
        res["effectiveRelative"] = (eff.eps2_th - scan.eps2_th) / scan.eps2_th
    header = ["eps2_over_K"] + [f"dZ_at_{o / TWO_PI:.6g}_Hz" for o in scan.offsets] + ["peak"]
    rows = [[e / osc.K] + list(r) + [p] for e, r, p in zip(eps, scan.delta_z, scan.peak)]
    return res, {"eps2_threshold": (header, rows)}


def run_init_ramp(ctx: RunContext):
    cfg = ctx.cfg
    K = cfg["K_over_2pi_Hz"]
    target = OscillatorParams(K, cfg["eps2_over_K"] * K, cfg["delta_over_K"] * K)
    which = cfg["with_detuning_ramp"].lower()
    variants = {"both": [True, False], "true": [True], "false": [False]}.get(which)
    if variants is None:
        raise ConfigError("with_detuning_ramp must be both, true or false", kind="invalid-config")
    out = [initialization_ramp(target, v) for v in variants]
    rows = [[int(r.with_detuning_ramp), r.fidelity, r.n_steps] for r in out]
    return ({"runs": [r.to_dict() for r in out]},
            {"init_ramp": (["with_detuning_ramp", "fidelity", "n_steps"], rows)})


def run_gate_fidelity(ctx: RunContext):
    cfg = ctx.cfg
    K = cfg["K_over_2pi_Hz"]
    spec = solve_spectrum(OscillatorParams(K, cfg["eps2_over_K"] * K, cfg["delta_over_K"] * K), ctx.fock_dim,
                          stark=False)
    rows = [[tau, kerr_gate_fidelity(spec, cfg["k1_eff_Hz"], cfg["kphi_eff_Hz"], tau * 1e-9)]
            for tau in cfg["gate_times_ns"]]
    z_err = z_gate_error(cfg["gamma_rabi_per_us"] * 1e6, cfg["z_gate_ns"] * 1e-9)
    return ({"fidelities": [{"tau_ns": a, "F": b} for a, b in rows], "zGateError": z_err},
            {"gate_fidelity": (["tau_ns", "fidelity"], rows)})


def run_zro_fidelity(ctx: RunContext):
    cfg = ctx.cfg
    i1, i2 = synthetic_zro_shots(cfg["n_shots"], cfg["flip_probability"], cfg["separation"], cfg["noise"], ctx.seed)
    res = zro_fidelity_qnd(i1, i2, cfg["threshold"])
    return res, {"zro": (["metric", "value"], [[k, v] for k, v in res.items()])}


def run_robustness(ctx: RunContext):
    cfg = ctx.cfg
    spec = spectrum(ctx)
    rep = excitation_robustness_study(rates(cfg, cfg["kup_fraction"]), _contrasts(ctx, spec),
                                      cfg["ramsey_detuning_Hz"], cfg["n_times"], cfg["amplitudes"], seed=ctx.seed)
    d = rep.to_dict()
    rows = [[k, d["trueRates"][k] / TWO_PI, d["fittedRatesNoHeating"][k] / TWO_PI, d["relativeErrors"].get(k)]
            for k in d["trueRates"]]
    return d, {"robustness_rates": (["rate", "true_Hz", "fitted_Hz", "relative_error"], rows)}


@dataclass(frozen=True)
class Experiment:
    name: str
    figure: str
    description: str
    runner: Callable[[RunContext], tuple[dict, dict[str, Table]]]


REGISTRY: dict[str, Experiment] = {e.name: e for e in [
    Experiment("spectrum", "Fig. 1c, S6", "manifold energies, splittings and photon numbers", run_spectrum),
    Experiment("wigner", "Fig. 1d", "Wigner function of a qubit basis state", run_wigner),
    Experiment("steady-leakage", "Fig. 3b, S11", "leakage populations vs dissipation strength", run_steady_leakage),
    Experiment("kappa-diss", "Fig. S8", "dissipation rate vs coupling and the 4g^2/kappa_b estimate", run_kappa_diss),
    Experiment("rabi-contrast", "Fig. 2c", "Rabi-contrast traces and the fitted leakage population",
               run_rabi_contrast),
    Experiment("coherence-signals", "Fig. 2e-h", "manifold T1 and Ramsey readout signals", run_coherence_signals),
    Experiment("spectroscopy-invert", "Fig. S7", "populations from spectroscopy peak heights",
               run_spectroscopy_invert),
    Experiment("tz-scan", "Fig. 5c", "bit-flip time vs dissipation strength", run_tz_scan),
    Experiment("eps2-threshold", "Fig. 4e", "dissipation threshold in eps2 from the <Z> scan", run_eps2_threshold),
    Experiment("init-ramp", "Fig. S3", "adiabatic preparation fidelity with and without the detuning ramp",
               run_init_ramp),
    Experiment("gate-fidelity", "Fig. S5", "Kerr-evolution gate fidelity and Z-gate error", run_gate_fidelity),
    Experiment("zro-fidelity", "Fig. S4", "readout fidelity and QND-ness from paired shots", run_zro_fidelity),
    Experiment("robustness", "Tables S1-S2", "bias of heating-free analysis under excitation", run_robustness),
]}
assert list(REGISTRY) == list(EXPERIMENT_KEYS)


# artifacts --------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else None
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def run_experiment(cfg: RunConfig, out_dir: Path, seed: int | None = None, jobs: int = 1,
                   fock_dim: int | None = None) -> dict:
    exp = REGISTRY[cfg.experiment]
    ctx = RunContext(cfg, cfg["seed"] if seed is None else seed, jobs, fock_dim or cfg["fock_dim"])
    t0 = time.perf_counter()
    log.info("running %s", exp.name)
    results, tables = exp.runner(ctx)
    wall = time.perf_counter() - t0
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in tables.items():
        write_csv(out_dir / f"{name}.csv", header, rows)
    record = {"schema": SCHEMA, "experiment": exp.name, "figure": exp.figure, "config": cfg.raw,
              "seed": ctx.seed, "fockDim": ctx.fock_dim, "results": _jsonable(results),
              "diagnostics": {"csv": sorted(f"{n}.csv" for n in tables)}, "wallTime_s": wall}
    (out_dir / "results.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    log.info("wrote %s in %.2f s", out_dir, wall)
    return record


# entry point ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def list_experiments() -> str:
    width = max(len(n) for n in REGISTRY)
    return "\n".join(f"{e.name:<{width}}  -> {e.figure:<13} {e.description}" for e in REGISTRY.values())


def _setup_logging() -> None:
    level = os.environ.get("KERRCAT_LOG", "error").lower()
    logging.basicConfig(level={"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
                        .get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and argv[0] == "list-experiments":
        print(list_experiments())
        return 0
    if argv and argv[0] == "validate-config":
        if len(argv) != 2:
            print("usage: kerrcat validate-config <path>", file=sys.stderr)
            return ConfigError.exit_code
        try:
            diags = validate_config(argv[1])
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return exc.exit_code
        for d in diags:
            print(d)
        return ConfigError.exit_code if any(d.level == "error" for d in diags) else 0
    p = _Parser(prog="kerrcat", description="Kerr-cat oscillator experiment runner. "
                "Extra commands: list-experiments, validate-config <path>.")
    p.add_argument("experiment")
    p.add_argument("--config", type=Path, help="config file (default: the shipped example)")
    p.add_argument("--out", type=Path, default=None, help="output directory (default: ./runs/<experiment>)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--fock-dim", type=int, default=None)
    args = p.parse_args(argv)
    if args.experiment not in REGISTRY:
        print(f"kerrcat: unknown experiment {args.experiment!r}; see 'kerrcat list-experiments'", file=sys.stderr)
        return ConfigError.exit_code
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("kerrcat: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return ConfigError.exit_code
    if args.jobs < 1 or (args.fock_dim is not None and args.fock_dim < 2):
        print("kerrcat: --jobs must be >= 1 and --fock-dim >= 2", file=sys.stderr)
        return ConfigError.exit_code
    try:
        cfg = load_config(args.config or shipped_config(args.experiment), args.experiment)
        out = args.out or Path("runs") / args.experiment
        record = run_experiment(cfg, out, args.seed, args.jobs, args.fock_dim)
    except KerrCatError as exc:
        print(f"kerrcat: {exc.kind}: {exc}", file=sys.stderr)
        return exc.exit_code
    print(json.dumps({"experiment": record["experiment"], "out": str(out)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
