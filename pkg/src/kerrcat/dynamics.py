"""Lindblad superoperators, propagation, steady states and spectral decay rates.

Vectorization is column-stacking: vec(A rho B) = (B^T kron A) vec(rho).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.integrate import trapezoid

from .errors import PhysicsError

Jump = tuple[float, np.ndarray]


@dataclass
class LindbladModel:
    hamiltonian: np.ndarray
    jumps: list[Jump] = field(default_factory=list)
    basis: str = "fock"

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise PhysicsError(f"Hamiltonian must be square, got {h.shape}", kind="invalid-model")
        self.hamiltonian = h
        clean = []
        for rate, op in self.jumps:
            op = np.asarray(op, dtype=complex)
            if op.shape != h.shape:
                raise PhysicsError(f"jump operator shape {op.shape} does not match {h.shape}",
                                   kind="invalid-model")
            if not np.isfinite(rate) or rate < 0:
                raise PhysicsError(f"jump rate must be finite and >= 0, got {rate}", kind="invalid-model")
            clean.append((float(rate), op))
        self.jumps = clean

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass
class DensityState:
    matrix: np.ndarray
    basis: str = "fock"
    dims: tuple[int, ...] = ()
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise PhysicsError(f"density matrix must be square, got {m.shape}", kind="invalid-state")
        self.matrix = m
        if not self.dims:
            self.dims = (m.shape[0],)
        if int(np.prod(self.dims)) != m.shape[0]:
            raise PhysicsError(f"factor dims {self.dims} do not match size {m.shape[0]}", kind="invalid-state")
        if self.validate:
            check_density(m)

    @classmethod
    def from_ket(cls, psi, basis: str = "fock", dims: tuple[int, ...] = ()) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), basis, dims)

    def partial_trace(self, keep: int) -> np.ndarray:
        """Reduced matrix of factor ``keep`` (two-factor states only)."""
        if len(self.dims) != 2:
            raise PhysicsError("partial trace needs a two-factor state", kind="invalid-state")
        da, db = self.dims
        r = self.matrix.reshape(da, db, da, db)
        return np.einsum("ikjk->ij", r) if keep == 0 else np.einsum("kikj->ij", r)


def check_density(m: np.ndarray, herm_tol=1e-10, trace_tol=1e-9, eig_tol=1e-9) -> None:
    herm = np.max(np.abs(m - m.conj().T))
    if herm > herm_tol:
        raise PhysicsError(f"state not Hermitian (deviation {herm:.2e})", kind="invalid-state")
    tr = np.trace(m).real
    if abs(tr - 1) > trace_tol:
        raise PhysicsError(f"state trace {tr:.12f} differs from 1", kind="invalid-state")
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if ev[0] < -eig_tol:
        raise PhysicsError(f"state has negative eigenvalue {ev[0]:.2e}", kind="invalid-state")


def vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def dissipator(op: np.ndarray) -> np.ndarray:
    """Superoperator of D[L] rho = L rho L^dag - {L^dag L, rho}/2."""
    n = op.shape[0]
    eye = np.eye(n)
    ldl = op.conj().T @ op
    return np.kron(op.conj(), op) - 0.5 * np.kron(eye, ldl) - 0.5 * np.kron(ldl.T, eye)


def build_liouvillian(model: LindbladModel) -> np.ndarray:
    h = model.hamiltonian
    n = h.shape[0]
    eye = np.eye(n)
    lv = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for rate, op in model.jumps:
        if rate:
            lv += rate * dissipator(op)
    return lv


def lindblad_rhs(h: np.ndarray, jumps: Sequence[Jump], rho: np.ndarray) -> np.ndarray:
    out = -1j * (h @ rho - rho @ h)
    for rate, op in jumps:
        if rate:
            ldl = op.conj().T @ op
            out += rate * (op @ rho @ op.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
    return out


def _as_matrix(state) -> tuple[np.ndarray, str, tuple]:
    if isinstance(state, DensityState):
        return state.matrix, state.basis, state.dims
    m = np.asarray(state, dtype=complex)
    if m.ndim == 1:
        m = np.outer(m, m.conj())
    return m, "fock", (m.shape[0],)


def _wrap(m: np.ndarray, basis: str, dims: tuple) -> DensityState:
    m = 0.5 * (m + m.conj().T)
    return DensityState(m, basis, dims, validate=False)


class Propagator:
    """Spectral propagator exp(L t) built once from the eigendecomposition of L.

    Falls back to matrix exponentials when the eigenbasis is too ill-conditioned
    to reproduce the initial vector.
    """

    def __init__(self, lv: np.ndarray, allow_fallback: bool = True):
        self.lv = lv
        self.allow_fallback = allow_fallback
        self.w, self.r = sla.eig(lv)
        self._lu = sla.lu_factor(self.r, check_finite=False)
        anorm = np.max(np.sum(np.abs(self.r), axis=0))
        rcond, _ = sla.lapack.zgecon(self._lu[0], anorm, norm="1")
        # near-defective L: eigenvectors almost parallel, spectral sum loses accuracy
        self.defective = rcond < 1e-8

    def coefficients(self, v0: np.ndarray) -> np.ndarray:
        return sla.lu_solve(self._lu, v0, check_finite=False)

    def apply(self, v0: np.ndarray, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        c = self.coefficients(v0)
        err = np.linalg.norm(self.r @ c - v0) / max(np.linalg.norm(v0), 1e-300)
        if err > 1e-10 or self.defective:
            if not self.allow_fallback:
                raise PhysicsError(f"Liouvillian eigenbasis is ill-conditioned (reconstruction {err:.1e})",
                                   kind="propagation-failure")
            return expm_apply(self.lv, v0, times)
        return (self.r @ (c[:, None] * np.exp(np.outer(self.w, times)))).T


def expm_apply(lv: np.ndarray, v0: np.ndarray, times) -> np.ndarray:
    """Propagate by exact matrix exponentials between consecutive sample times."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty((len(times), len(v0)), dtype=complex)
    v, t_prev = v0.astype(complex), 0.0
    order = np.argsort(times)
    for k in order:
        dt = times[k] - t_prev
        if dt:
            v = sla.expm(lv * dt) @ v
        out[k] = v
        t_prev = times[k]
    return out


def evolve(model: LindbladModel, rho0, times, method: str = "spectral",
           allow_fallback: bool = True) -> list[DensityState]:
    """Propagate rho0 to each time. ``method`` is 'spectral' or 'expm'."""
    m0, basis, dims = _as_matrix(rho0)
    n = model.dim
    if m0.shape != (n, n):
        raise PhysicsError(f"state shape {m0.shape} does not match model dimension {n}", kind="invalid-shape")
    lv = build_liouvillian(model)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if method == "spectral":
        vs = Propagator(lv, allow_fallback).apply(vec(m0), times)
    elif method == "expm":
        vs = expm_apply(lv, vec(m0), times)
    else:
        raise ValueError(f"unknown method {method!r}")
    tr0 = np.trace(m0).real
    states = []
    for v in vs:
        m = unvec(v, n)
        if abs(np.trace(m).real - tr0) > 1e-8:
            if method == "spectral" and allow_fallback:
                return evolve(model, rho0, times, method="expm")
            raise PhysicsError("trace drift above 1e-8 during propagation", kind="propagation-failure")
        states.append(_wrap(m, basis, dims))
    return states


def evolve_time_dependent(h_of_t: Callable[[float], np.ndarray], jumps: Sequence[Jump], rho0,
                          t_end: float, dt_max: float, t_start: float = 0.0):
    """Fixed-step fourth-order Runge-Kutta integration of the master equation.

    With no jumps and a pure initial state the ket is integrated instead; the
    result is returned as a density matrix either way.
    """
    m0, basis, dims = _as_matrix(rho0)
    jumps = [(float(r), np.asarray(o, dtype=complex)) for r, o in jumps if r]
    n_steps = max(1, math.ceil((t_end - t_start) / dt_max - 1e-9))
    dt = (t_end - t_start) / n_steps
    w, v = np.linalg.eigh(0.5 * (m0 + m0.conj().T))
    pure = not jumps and w[-1] > 1 - 1e-12
    if pure:
        y = v[:, -1] * np.sqrt(w[-1])
        f = lambda t, y: -1j * (h_of_t(t) @ y)  # noqa: E731
    else:
        y = m0.astype(complex)
        f = lambda t, y: lindblad_rhs(h_of_t(t), jumps, y)  # noqa: E731
    t = t_start
    for _ in range(n_steps):
        k1 = f(t, y)
        k2 = f(t + dt / 2, y + dt / 2 * k1)
        k3 = f(t + dt / 2, y + dt / 2 * k2)
        k4 = f(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    if pure:
        drift = abs(np.vdot(y, y).real - w[-1])
        m = np.outer(y, y.conj())
    else:
        # RK4 keeps the trace exactly, so an unstable step shows up as growth of
        # the trace norm (negative eigenvalues) instead
        tnorm = lambda r: np.sum(np.abs(np.linalg.eigvalsh(0.5 * (r + r.conj().T))))  # noqa: E731
        drift = abs(np.trace(y).real - np.trace(m0).real) + max(0.0, tnorm(y) - tnorm(m0))
        m = y
    if drift > 1e-7:
        raise PhysicsError(f"norm/trace drift {drift:.2e} exceeds 1e-7; reduce dt_max",
                           kind="step-size-too-large")
    return _wrap(m, basis, dims)


def steady_state(model: LindbladModel, check_unique: bool = True, basis: str | None = None,
                 dims: tuple[int, ...] = ()) -> DensityState:
    n = model.dim
    lv = build_liouvillian(model)
    if check_unique:
        ev = np.sort(np.abs(np.linalg.eigvals(lv).real))
        if ev[1] <= 1e3 * ev[0]:
            raise PhysicsError(f"Liouvillian kernel is degenerate (|Re| eigenvalues {ev[0]:.2e}, {ev[1]:.2e})",
                               kind="non-unique-steady-state")
    a = lv.copy()
    a[0, :] = vec(np.eye(n))
    b = np.zeros(n * n, dtype=complex)
    b[0] = 1.0
    x = sla.solve(a, b)
    res = np.max(np.abs(lv @ x))
    if res > 1e-10 * np.max(np.abs(lv)):
        raise PhysicsError(f"steady-state residual {res:.2e} too large", kind="non-unique-steady-state")
    rho = unvec(x, n)
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    if w[0] < -1e-8:
        raise PhysicsError(f"steady state has negative eigenvalue {w[0]:.2e}", kind="positivity-violation")
    w = np.clip(w, 0, None)
    rho = (v * w) @ v.conj().T
    rho /= np.trace(rho).real
    return DensityState(rho, basis or model.basis, dims or (n,), validate=False)


def _mode_groups(w: np.ndarray, tol: float) -> list[list[int]]:
    """Group eigenvalues with their complex conjugates (one real decay channel)."""
    used = np.zeros(len(w), bool)
    groups = []
    for i in range(len(w)):
        if used[i]:
            continue
        used[i] = True
        g = [i]
        if abs(w[i].imag) > tol:
            d = np.abs(w - np.conj(w[i]))
            d[used] = np.inf
            j = int(np.argmin(d))
            if d[j] < tol:
                used[j] = True
                g.append(j)
        groups.append(g)
    return groups


def slowest_decay_rate(model: LindbladModel, observable: np.ndarray, return_details: bool = False):
    """-Re(lambda) of the Liouvillian mode with largest Hilbert-Schmidt overlap with ``observable``.

    Conjugate eigenvalue pairs are merged, since a Hermitian observable always sees
    them together. The steady-state mode is excluded.
    """
    lv = build_liouvillian(model)
    w, r = sla.eig(lv)
    o = vec(np.asarray(observable, dtype=complex))
    ov = np.abs(o.conj() @ r) / (np.linalg.norm(r, axis=0) * np.linalg.norm(o))
    scale = np.max(np.abs(w))
    ss = int(np.argmin(np.abs(w)))
    groups = [g for g in _mode_groups(w, 1e-9 * scale) if ss not in g]
    score = np.array([np.sqrt(np.sum(ov[g] ** 2)) for g in groups])
    order = np.argsort(-score)
    best, second = score[order[0]], score[order[1]] if len(order) > 1 else 0.0
    if second > 0.9 * best:
        raise PhysicsError(f"ambiguous decay mode: overlaps {best:.3g} and {second:.3g}", kind="ambiguous-mode")
    lam = w[groups[order[0]][0]]
    rate = float(-lam.real)
    if return_details:
        return rate, {"eigenvalue": complex(lam), "overlap": float(best), "runner_up": float(second)}
    return rate


def expectation(state, op: np.ndarray, return_imag: bool = False):
    m, _, _ = _as_matrix(state)
    op = np.asarray(op)
    if op.shape != m.shape:
        raise PhysicsError(f"operator shape {op.shape} does not match state {m.shape}", kind="invalid-shape")
    val = np.trace(op @ m)
    if return_imag:
        return float(val.real), float(val.imag)
    return float(val.real)


@dataclass(frozen=True)
class RampProfile:
    """Time profile of a drive parameter (values in rad/s)."""

    kind: str
    duration: float
    start: float
    end: float
    sigma: float = 0.0
    rise: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gaussianRise", "flatTop", "constant"):
            raise PhysicsError(f"unknown ramp kind {self.kind!r}", kind="invalid-params")
        if self.duration <= 0:
            raise PhysicsError("ramp duration must be positive", kind="invalid-params")
        if self.kind != "constant" and self.sigma <= 0:
            raise PhysicsError("Gaussian ramps need sigma > 0", kind="invalid-params")

    def envelope(self, t):
        """Normalized shape in [0, 1]."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.ones_like(t)
        if self.kind == "gaussianRise":
            # rising half of a Gaussian peaking at t = duration, offset so it starts at 0
            g0 = np.exp(-0.5 * (self.duration / self.sigma) ** 2)
            g = np.exp(-0.5 * ((np.minimum(t, self.duration) - self.duration) / self.sigma) ** 2)
            return np.clip((g - g0) / (1 - g0), 0.0, 1.0)
        # flatTop: Gaussian edges of length ``rise`` around a constant segment
        rise = self.rise or self.duration / 2
        g0 = np.exp(-0.5 * (rise / self.sigma) ** 2)
        edge = np.minimum(np.minimum(t, self.duration - t), rise)
        g = np.exp(-0.5 * ((edge - rise) / self.sigma) ** 2)
        inside = (t >= 0) & (t <= self.duration)
        return np.where(inside, np.clip((g - g0) / (1 - g0), 0.0, 1.0), 0.0)

    def __call__(self, t):
        return self.start + (self.end - self.start) * self.envelope(t)

    def area(self, n: int = 4001) -> float:
        """Integral of the normalized envelope over the window."""
        t = np.linspace(0, self.duration, n)
        return float(trapezoid(self.envelope(t), t))
