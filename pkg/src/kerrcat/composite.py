"""Oscillator (x) readout-cavity models: engineered dissipation, adiabatic elimination, calibration."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import LindbladModel, Propagator, build_liouvillian, vec
from .errors import FitError, PhysicsError
from .fitting import FitResult, nonlinear_least_squares
from .hilbert import annihilation
from .spectrum import ManifoldSpectrum, OscillatorParams

MIN_OSC_STATES = 8


@dataclass(frozen=True)
class CavityParams:
    kappa_out: float
    kappa_loss: float = 0.0
    n_th_b: float = 0.0
    chi_ab: float = 0.0
    cavity_dim: int | None = None

    def __post_init__(self):
        if min(self.kappa_out, self.kappa_loss, self.n_th_b) < 0:
            raise PhysicsError("cavity rates and n_th_b must be non-negative", kind="invalid-params")
        if self.cavity_dim is not None and self.cavity_dim not in (2, 3):
            raise PhysicsError("cavity_dim must be 2 or 3", kind="invalid-params")

    @property
    def kappa_b(self) -> float:
        return self.kappa_out + self.kappa_loss

    @property
    def dim(self) -> int:
        if self.cavity_dim is not None:
            return self.cavity_dim
        return 3 if self.n_th_b > 0 else 2


@dataclass(frozen=True)
class DissipationDrive:
    g_diss: float
    detuning: float = 0.0
    target: tuple[int, int] = (0, 1)

    def __post_init__(self):
        if self.g_diss < 0:
            raise PhysicsError("g_diss must be non-negative", kind="invalid-params")


@dataclass
class EigenBasis:
    """Oscillator operators projected onto the lowest-lying manifolds of the spectrum."""

    energies: np.ndarray
    a: np.ndarray
    number: np.ndarray
    manifold: np.ndarray
    parity: np.ndarray
    spectrum: ManifoldSpectrum

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def n_manifolds(self) -> int:
        return int(self.manifold.max()) + 1

    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    def projector(self, k: int) -> np.ndarray:
        return np.diag((self.manifold == k).astype(complex))

    def index(self, k: int, sign: int) -> int:
        return int(np.flatnonzero((self.manifold == k) & (self.parity == (1 if sign > 0 else -1)))[0])

    def ket(self, k: int, sign: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(k, sign)] = 1.0
        return v

    def plus_z(self) -> np.ndarray:
        return (self.ket(0, 1) + self.ket(0, -1)) / np.sqrt(2)

    def z_operator(self) -> np.ndarray:
        """|+Z><+Z| - |-Z><-Z| = |psi0+><psi0-| + h.c."""
        p, m = self.ket(0, 1), self.ket(0, -1)
        return np.outer(p, m.conj()) + np.outer(m, p.conj())

    def x_operator(self) -> np.ndarray:
        p, m = self.ket(0, 1), self.ket(0, -1)
        return np.outer(p, p.conj()) - np.outer(m, m.conj())

    def y_operator(self) -> np.ndarray:
        p, m = self.ket(0, 1), self.ket(0, -1)
        return 1j * np.outer(m, p.conj()) - 1j * np.outer(p, m.conj())

    def populations(self, rho: np.ndarray) -> np.ndarray:
        d = np.real(np.diag(rho))
        return np.array([d[self.manifold == k].sum() for k in range(self.n_manifolds)])


def default_keep(spec: ManifoldSpectrum) -> int:
    n = max(spec.confined_count + 2, MIN_OSC_STATES)
    return n + n % 2


def oscillator_basis(spec: ManifoldSpectrum, n_keep: int | None = None) -> EigenBasis:
    """Keep whole manifolds from the top: ``n_keep`` states, at least 8 (confined + 2 by default)."""
    if n_keep is None:
        n_keep = default_keep(spec)
    if n_keep < MIN_OSC_STATES:
        raise PhysicsError(f"oscillator truncation {n_keep} is below {MIN_OSC_STATES} states",
                           kind="truncation-too-small")
    n_man = (n_keep + 1) // 2
    if n_man > spec.n_manifolds:
        raise PhysicsError("spectrum has fewer manifolds than the requested truncation", kind="truncation-too-small")
    idx = np.flatnonzero(spec.manifold < n_man)
    v = spec.vectors[:, idx]
    a = annihilation(spec.fock_dim)
    n = np.arange(spec.fock_dim)
    return EigenBasis(spec.energies[idx].copy(), v.conj().T @ a @ v, (v.conj().T * n) @ v,
                      spec.manifold[idx].copy(), spec.parity[idx].copy(), spec)


def thermal_jumps(rate: float, n_th: float, op: np.ndarray) -> list:
    out = []
    if rate * (1 + n_th):
        out.append((rate * (1 + n_th), op))
    if rate * n_th:
        out.append((rate * n_th, op.conj().T))
    return out


def single_mode_model(osc: OscillatorParams, basis: EigenBasis, kphi: float = 0.0,
                      extra_jumps=()) -> LindbladModel:
    jumps = thermal_jumps(osc.kappa_a, osc.n_th_a, basis.a)
    if kphi:
        jumps.append((kphi, basis.number))
    jumps.extend(extra_jumps)
    return LindbladModel(basis.hamiltonian(), jumps, basis="eigen")


@dataclass
class CoupledModel:
    model: LindbladModel
    basis: EigenBasis
    cavity_dim: int
    cavity_detuning: float

    @property
    def dims(self) -> tuple[int, int]:
        return (self.basis.dim, self.cavity_dim)

    def embed(self, op_a: np.ndarray) -> np.ndarray:
        return np.kron(op_a, np.eye(self.cavity_dim))

    def product_state(self, rho_a: np.ndarray, n_cav: int = 0) -> np.ndarray:
        rb = np.zeros((self.cavity_dim, self.cavity_dim), dtype=complex)
        rb[n_cav, n_cav] = 1.0
        return np.kron(rho_a, rb)

    def oscillator_part(self, rho: np.ndarray) -> np.ndarray:
        da, db = self.dims
        return np.einsum("ikjk->ij", rho.reshape(da, db, da, db))


def build_coupled_model(osc: OscillatorParams, cav: CavityParams, drive: DissipationDrive,
                        spec: ManifoldSpectrum, n_keep: int | None = None) -> CoupledModel:
    basis = oscillator_basis(spec, n_keep)
    nb = cav.dim
    b = annihilation(nb)
    ia, ib = np.eye(basis.dim), np.eye(nb)
    i, j = drive.target
    delta_b = spec.transition_freq(i, j) + drive.detuning
    a_full = np.kron(basis.a, ib)
    b_full = np.kron(ia, b)
    h = np.kron(basis.hamiltonian(), ib) + delta_b * np.kron(ia, b.conj().T @ b)
    h += drive.g_diss * (np.kron(basis.a, b.conj().T) + np.kron(basis.a.conj().T, b))
    jumps = thermal_jumps(osc.kappa_a, osc.n_th_a, a_full) + thermal_jumps(cav.kappa_b, cav.n_th_b, b_full)
    return CoupledModel(LindbladModel(h, jumps, basis="composite"), basis, nb, delta_b)


def lorentzian_rate(g: float, kappa_b: float, offset: float) -> float:
    return kappa_b * g ** 2 / (kappa_b ** 2 / 4 + offset ** 2)


def effective_dissipators(osc: OscillatorParams, cav: CavityParams, drive: DissipationDrive,
                          spec: ManifoldSpectrum, basis: EigenBasis | None = None) -> list:
    """Cavity-eliminated jumps acting on the oscillator alone.

    For every ordered manifold pair (i, j) the process j -> i emits a cavity photon
    and is resonant when E_j - E_i matches the cavity detuning. Cooling uses
    Pi_i a Pi_j with rate L (1 + n_th_b); heating uses its adjoint with rate L n_th_b.
    """
    if basis is None:
        basis = oscillator_basis(spec)
    kb = cav.kappa_b
    if drive.g_diss > kb:
        raise PhysicsError("adiabatic elimination needs g_diss <= kappa_b", kind="invalid-params")
    if drive.g_diss > kb / 2:
        warnings.warn("g_diss above kappa_b/2: adiabatic elimination is approximate", RuntimeWarning, stacklevel=2)
    ti, tj = drive.target
    delta_b = spec.transition_freq(ti, tj) + drive.detuning
    out = []
    m = basis.n_manifolds
    for i in range(m):
        pi = basis.projector(i)
        for j in range(m):
            rate = lorentzian_rate(drive.g_diss, kb, delta_b - spec.transition_freq(i, j))
            op = pi @ basis.a @ basis.projector(j)
            if not np.any(op):
                continue
            out.append((rate * (1 + cav.n_th_b), op))
            if cav.n_th_b:
                out.append((rate * cav.n_th_b, op.conj().T))
    return out


def effective_model(osc: OscillatorParams, cav: CavityParams, drive: DissipationDrive,
                    spec: ManifoldSpectrum, n_keep: int | None = None) -> tuple[LindbladModel, EigenBasis]:
    basis = oscillator_basis(spec, n_keep)
    jumps = effective_dissipators(osc, cav, drive, spec, basis) if drive.g_diss else []
    return single_mode_model(osc, basis, extra_jumps=jumps), basis


def kappa_diss_grid(kappa_est: float, n: int = 200) -> np.ndarray:
    """t = 0 plus n-1 log-spaced samples up to 10/kappa_est."""
    return np.concatenate([[0.0], np.logspace(np.log10(1e-3 / kappa_est), np.log10(10 / kappa_est), n - 1)])


def extract_kappa_diss(osc: OscillatorParams, cav: CavityParams, drive: DissipationDrive,
                       spec: ManifoldSpectrum, n_samples: int = 200, return_trace: bool = False):
    """Inverse of the first 1/e crossing time of the manifold-1 population."""
    if drive.detuning != 0:
        raise PhysicsError("kappa_diss extraction is defined at zero detuning", kind="invalid-params")
    if drive.g_diss <= 0:
        raise PhysicsError("kappa_diss extraction needs g_diss > 0", kind="invalid-params")
    osc0 = osc.with_(kappa_a=0.0, n_th_a=0.0)
    cav0 = CavityParams(cav.kappa_out, cav.kappa_loss, 0.0, cav.chi_ab, cav.cavity_dim)
    cm = build_coupled_model(osc0, cav0, drive, spec)
    rho_a = 0.5 * cm.basis.projector(1)
    rho0 = cm.product_state(rho_a)
    times = kappa_diss_grid(4 * drive.g_diss ** 2 / cav.kappa_b, n_samples)
    vs = Propagator(build_liouvillian(cm.model)).apply(vec(rho0), times)
    proj = vec(cm.embed(cm.basis.projector(1)).T)
    p1 = np.real(vs @ proj)
    target = np.exp(-1)
    below = np.flatnonzero(p1 < target)
    if below.size == 0:
        raise PhysicsError("manifold-1 population never crosses 1/e", kind="no-crossing")
    k = int(below[0])
    t0, t1, y0, y1 = times[k - 1], times[k], p1[k - 1], p1[k]
    t_cross = t0 + (target - y0) * (t1 - t0) / (y1 - y0)
    rate = 1.0 / t_cross
    if return_trace:
        return rate, times, p1
    return rate


@dataclass(frozen=True)
class TwoModeDecayParams:
    g: float
    kappa_a: float
    kappa_b: float

    @property
    def kappa_tot(self) -> float:
        return (self.kappa_a + self.kappa_b) / 4

    @property
    def lam(self) -> complex:
        return np.sqrt(complex((self.kappa_b - self.kappa_a) ** 2 - 16 * self.g ** 2))


def analytic_two_mode_decay(p: TwoModeDecayParams, t) -> tuple[np.ndarray, np.ndarray]:
    """(|a(t)/a0|^2, b(t)/a0) for a(0) = a0, b(0) = 0 under linear exchange and loss."""
    t = np.asarray(t, dtype=float)
    lam = p.lam
    x = lam * t / 4
    if abs(lam) < 1e-12 * max(p.kappa_a + p.kappa_b, 1e-300):
        sinh_over = t / 4
    else:
        sinh_over = np.sinh(x) / lam
    env = np.exp(-p.kappa_tot * t)
    a = env * (np.cosh(x) + (p.kappa_b - p.kappa_a) * sinh_over)
    b = -1j * 4 * p.g * env * sinh_over
    return np.abs(a) ** 2, b


def fit_g_diss_from_decay(traces, kappa_a: float, kappa_b: float, g0: float | None = None) -> list[FitResult]:
    """Fit scale * nbarA(t; g) + offset to each (t, signal) trace."""
    out = []
    for t, y in traces:
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(t) < 8:
            raise FitError("need at least 8 points per trace")
        span = np.ptp(y)
        if span == 0 or not np.all(np.isfinite(y)):
            raise FitError("trace is flat or non-finite; g is not identifiable", kind="fit-failure")
        guess = g0
        if guess is None:
            # initial decay of the normalized trace is ~ g^2 t^2 at early times
            yn = (y - y[-1]) / (y[0] - y[-1]) if y[0] != y[-1] else y / y[0]
            k = max(int(np.argmax(yn < np.exp(-1))), 1)
            guess = min(max(1.0 / t[k], 1e-3 * kappa_b), 10 * kappa_b)

        def model(g, scale, offset, t=t):
            return scale * analytic_two_mode_decay(TwoModeDecayParams(g, kappa_a, kappa_b), t)[0] + offset

        fit = nonlinear_least_squares(model, y, {"g": guess, "scale": y[0] - y[-1], "offset": y[-1]},
                                      bounds={"g": (0.0, np.inf)},
                                      fixed={"kappa_a": kappa_a, "kappa_b": kappa_b})
        out.append(fit)
    return out
