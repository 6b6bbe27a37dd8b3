"""Bit-flip times and the dissipation-threshold scan over the squeezing amplitude."""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..composite import (CavityParams, DissipationDrive, build_coupled_model, effective_model,
                         oscillator_basis, single_mode_model)
from ..dynamics import Propagator, build_liouvillian, slowest_decay_rate, vec
from ..errors import FitError, KerrCatError, PhysicsError
from ..fitting import canonical_fit
from ..spectrum import OscillatorParams, solve_spectrum

TWO_PI = 2 * np.pi
SCAN_DURATION = 50e-6
REFERENCE_OFFSET = -TWO_PI * 3e6


def _z_model(osc: OscillatorParams, cav: CavityParams | None, drive: DissipationDrive | None, spec,
             n_keep: int | None, model: str):
    """(LindbladModel, Z observable, initial |+Z> state with cavity in vacuum)."""
    basis = oscillator_basis(spec, n_keep)
    n_keep = basis.dim
    psi = basis.plus_z()
    rho_a = np.outer(psi, psi.conj())
    if drive is None or drive.g_diss == 0:
        return single_mode_model(osc, basis), basis.z_operator(), rho_a
    if model == "effective":
        m, basis = effective_model(osc, cav, drive, spec, n_keep)
        return m, basis.z_operator(), rho_a
    cm = build_coupled_model(osc, cav, drive, spec, n_keep)
    return cm.model, cm.embed(basis.z_operator()), cm.product_state(rho_a)


def bit_flip_time(osc: OscillatorParams, cav: CavityParams | None, drive: DissipationDrive | None, spec,
                  n_keep: int | None = None, model: str = "full", cross_check: bool = False,
                  n_times: int = 60) -> tuple[float, str] | tuple[float, str, float]:
    """T_Z from the slowest Liouvillian mode seen by Z.

    Without dissipation the cavity decouples, so the oscillator is modelled alone with the
    same eigenbasis truncation. ``cross_check`` also fits an exponential to <Z>(t) and
    returns its T_Z as a third element, warning when the two differ by more than 5%.
    """
    lm, z, rho0 = _z_model(osc, cav, drive, spec, n_keep, model)
    rate = slowest_decay_rate(lm, z)
    tz = 1.0 / rate
    if not cross_check:
        return tz, "spectral"
    times = np.linspace(0, 3 * tz, n_times)
    vs = Propagator(build_liouvillian(lm)).apply(vec(rho0), times)
    zt = np.real(vs @ vec(z.T))
    fit = canonical_fit("exp", times, zt, init={"a": zt[0] - zt[-1], "tau": tz, "c": 0.0})
    tz_fit = float(fit["tau"])
    if abs(tz_fit / tz - 1) > 0.05:
        warnings.warn(f"exponential-fit T_Z {tz_fit:.4g} s differs from spectral {tz:.4g} s by more than 5%",
                      RuntimeWarning, stacklevel=2)
    return tz, "spectral", tz_fit


def z_after(osc: OscillatorParams, cav: CavityParams, drive: DissipationDrive, spec, duration: float = SCAN_DURATION,
            n_keep: int | None = None, model: str = "full") -> float:
    lm, z, rho0 = _z_model(osc, cav, drive, spec, n_keep, model)
    v = Propagator(build_liouvillian(lm)).apply(vec(rho0), [duration])[0]
    return float(np.real(v @ vec(z.T)))


@dataclass
class ThresholdScanResult:
    delta: float
    eps2_grid: np.ndarray
    offsets: np.ndarray
    z: np.ndarray                  # raw <Z> after the evolution, (n_eps2, n_offsets)
    delta_z: np.ndarray            # relative change against the reference offset
    peak: np.ndarray               # Lorentzian peak amplitude per eps2 row (nan on fit failure)
    eps2_th: float
    regime: str
    row_errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"delta": self.delta, "eps2Grid": self.eps2_grid.tolist(), "offsets": self.offsets.tolist(),
                "deltaZ": self.delta_z.tolist(), "peak": self.peak.tolist(), "eps2Th": self.eps2_th,
                "regime": self.regime, "rowErrors": {str(k): v for k, v in self.row_errors.items()}}


def _scan_point(args) -> float:
    osc, cav, g, offset, duration, dim, model, stark = args
    spec = solve_spectrum(osc, dim, stark)
    return z_after(osc, cav, DissipationDrive(g, offset), spec, duration, model=model)


def _row_peak(offsets: np.ndarray, row: np.ndarray) -> float:
    """Signed Lorentzian amplitude of a delta-Z row (the reference column is excluded)."""
    x, y = offsets[1:], row[1:]
    k = int(np.argmax(np.abs(y)))
    w0 = max(np.ptp(x) / 6, 1e-12)
    fit = canonical_fit("lorentzian", x, y, init={"a": y[k], "x0": x[k], "w": w0, "c": 0.0},
                        fixed={"c": 0.0})
    if not fit.converged:
        raise FitError("Lorentzian fit did not converge")
    return float(fit["a"])


def threshold_from_peaks(eps2_grid, peaks, rows) -> tuple[float, str]:
    """Sign change of the peak amplitude (linear interpolation), else the saturation criterion."""
    e = np.asarray(eps2_grid, float)
    a = np.asarray(peaks, float)
    ok = np.isfinite(a)
    e_ok, a_ok = e[ok], a[ok]
    for k in range(len(a_ok) - 1):
        if a_ok[k] < 0 <= a_ok[k + 1]:
            return float(e_ok[k] - a_ok[k] * (e_ok[k + 1] - e_ok[k]) / (a_ok[k + 1] - a_ok[k])), "signChange"
    for k in range(len(a)):
        if ok[k] and a[k] >= -np.std(rows[k]):
            return float(e[k]), "saturation"
    raise PhysicsError("no threshold inside the eps2 grid", kind="threshold-not-found")


def bit_flip_scan(osc: OscillatorParams, cav: CavityParams, g_diss: float, eps2_grid, offsets,
                  duration: float = SCAN_DURATION, dim: int = 45, model: str = "full",
                  jobs: int = 1, stark: bool | None = None) -> ThresholdScanResult:
    """<Z> after ``duration`` from |+Z> over (eps2, dissipation detuning).

    ``offsets`` must start with the reference detuning (-3 MHz over 2 pi by convention).
    """
    eps2_grid = np.asarray(eps2_grid, float)
    offsets = np.asarray(offsets, float)
    if offsets[0] != REFERENCE_OFFSET:
        warnings.warn("first offset is not the -3 MHz reference", RuntimeWarning, stacklevel=2)
    tasks = [(osc.with_(eps2=float(e)), cav, g_diss, float(o), duration, dim, model, stark)
             for e in eps2_grid for o in offsets]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            vals = list(ex.map(_scan_point, tasks))
    else:
        vals = [_scan_point(t) for t in tasks]
    z = np.array(vals).reshape(len(eps2_grid), len(offsets))
    dz = (z - z[:, :1]) / z[:, :1]
    peaks = np.full(len(eps2_grid), np.nan)
    errors = {}
    for k, row in enumerate(dz):
        try:
            peaks[k] = _row_peak(offsets, row)
        except KerrCatError as exc:
            errors[float(eps2_grid[k])] = str(exc)
    th, regime = threshold_from_peaks(eps2_grid, peaks, dz)
    return ThresholdScanResult(osc.delta, eps2_grid, offsets, z, dz, peaks, th, regime, errors)


def dissipation_selectivity(cav: CavityParams, drive: DissipationDrive, spec) -> float:
    """Effective rate inside manifold 0 relative to the resonant cooling rate of the target transition."""
    from ..composite import lorentzian_rate

    i, j = drive.target
    delta_b = spec.transition_freq(i, j) + drive.detuning
    inside = lorentzian_rate(drive.g_diss, cav.kappa_b, delta_b - spec.transition_freq(0, 0))
    resonant = lorentzian_rate(drive.g_diss, cav.kappa_b, 0.0)
    return inside / resonant


def equator_decay_rates(osc: OscillatorParams, cav: CavityParams, drive: DissipationDrive | None, spec,
                        n_keep: int | None = None) -> dict[str, float]:
    """Slowest Liouvillian rates seen by X and Y of the qubit manifold (full composite model)."""
    basis = oscillator_basis(spec, n_keep)
    if drive is None or drive.g_diss == 0:
        lm, embed = single_mode_model(osc, basis), (lambda o: o)
    else:
        cm = build_coupled_model(osc, cav, drive, spec, basis.dim)
        lm, embed = cm.model, cm.embed
    return {"X": slowest_decay_rate(lm, embed(basis.x_operator())),
            "Y": slowest_decay_rate(lm, embed(basis.y_operator()))}
