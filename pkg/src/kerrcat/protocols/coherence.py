"""Reduced manifold models: decoherence rates, readout contrasts, T1/Ramsey signals.

A ``LevelBlock`` is either the 6-state block {psi_i^+, psi_i^-}, i = 0..2, in the
rotating frame with degenerate pairs, or a plain three-level system. Pulses are
instantaneous rotations; relaxation and dephasing follow the manifold dissipators
kappa1 D(sum |psi_i^+-><psi_{i+1}^-+|) and 2 kappa_phi D(Pi_{i+1}).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ..dynamics import LindbladModel, Propagator, build_liouvillian, unvec, vec
from ..errors import PhysicsError
from ..fitting import cascade_term
from ..spectrum import ManifoldSpectrum


@dataclass(frozen=True)
class DecoherenceRates:
    """Manifold rates in 1/s."""

    k1_01: float
    k1_12: float
    kphi_01: float = 0.0
    kphi_12: float = 0.0
    kup_01: float = 0.0
    kup_12: float = 0.0

    def __post_init__(self):
        vals = (self.k1_01, self.k1_12, self.kphi_01, self.kphi_12, self.kup_01, self.kup_12)
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise PhysicsError("decoherence rates must be finite and >= 0", kind="invalid-params")

    def without_heating(self) -> "DecoherenceRates":
        return DecoherenceRates(self.k1_01, self.k1_12, self.kphi_01, self.kphi_12)

    @property
    def gamma_01(self) -> float:
        return self.k1_01 / 2 + self.kphi_01

    @property
    def gamma_12(self) -> float:
        return self.k1_12 / 2 + self.kphi_12


@dataclass(frozen=True)
class ReadoutContrasts:
    M0: float
    M1: float
    M2: float
    M3: float = float("nan")

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.M0, self.M1, self.M2)):
            raise PhysicsError("readout contrasts must be finite", kind="invalid-params")

    def as_array(self, n: int = 3) -> np.ndarray:
        return np.array([self.M0, self.M1, self.M2, self.M3][:n], float)


def manifold_coherence_signals(rates: DecoherenceRates, contrasts: ReadoutContrasts, dw: float,
                               times) -> dict[str, np.ndarray]:
    """Closed-form readout signals for the four heating-free manifold experiments.

    T1_01: start in manifold 1. Ramsey_01: pi/2 on 0-1, wait, pi/2. T1_12: start in
    manifold 2, pi swap of 0-1 before readout. Ramsey_12: pi/2 on 1-2, wait, pi/2,
    pi swap of 0-1. ``dw`` is the Ramsey detuning in rad/s.
    """
    t = np.asarray(times, dtype=float)
    M0, M1, M2 = contrasts.M0, contrasts.M1, contrasts.M2
    k01, k12 = rates.k1_01, rates.k1_12
    e01 = np.exp(-k01 * t)
    e12 = np.exp(-k12 * t)
    casc = k12 * cascade_term(t, k01, k12)  # population fed 2 -> 1 and not yet decayed
    t1_01 = M1 * e01 + M0 * (1 - e01)
    ram_01 = 0.5 * (M1 + M0) + 0.5 * (M1 - M0) * np.cos(dw * t) * np.exp(-rates.gamma_01 * t)
    t1_12 = M2 * e12 + M0 * casc + M1 * (1 - e12 - casc)
    # Ramsey 1-2 populations per parity subspace (each subspace carries weight 1/2)
    r22 = 0.25 * e12
    r11 = 0.25 * e01 + 0.25 * casc
    r00 = 0.5 - r11 - r22
    ram_12 = (2 * M1 * r00 + (M2 + M0) * (r11 + r22)
              + 0.5 * (M2 - M0) * np.cos(dw * t) * np.exp(-(rates.gamma_01 + rates.gamma_12) * t))
    return {"T1_01": t1_01, "Ramsey_01": ram_01, "T1_12": t1_12, "Ramsey_12": ram_12}


@dataclass
class LevelBlock:
    """Reduced model with per-manifold projectors and nearest-neighbour couplings."""

    projectors: list[np.ndarray]
    relax: dict[int, np.ndarray]          # i -> unit operator mapping manifold i+1 to i
    drive: dict[int, np.ndarray]          # i -> physical coupling Pi_i a Pi_{i+1}
    labels: list[str] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def n_levels(self) -> int:
        return len(self.projectors)

    def ground(self) -> np.ndarray:
        p = self.projectors[0]
        return p / np.trace(p).real

    def mixture(self, pops) -> np.ndarray:
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        for p, proj in zip(pops, self.projectors):
            rho += p * proj / np.trace(proj).real
        return rho

    def populations(self, rho: np.ndarray) -> np.ndarray:
        return np.array([np.trace(p @ rho).real for p in self.projectors])

    def observable(self, contrasts) -> np.ndarray:
        m = contrasts.as_array(self.n_levels) if isinstance(contrasts, ReadoutContrasts) else np.asarray(contrasts)
        return sum(mi * p for mi, p in zip(m, self.projectors))

    def rotation(self, i: int, theta: float) -> np.ndarray:
        """Real rotation by ``theta`` between manifolds i and i+1 (cos, -sin; sin, cos)."""
        c = self.relax[i]
        return sla.expm(0.5 * theta * (c.conj().T - c))

    def jumps(self, rates: DecoherenceRates) -> list:
        out = []
        spec = [(0, rates.k1_01, rates.kup_01, rates.kphi_01), (1, rates.k1_12, rates.kup_12, rates.kphi_12)]
        for i, k1, kup, kphi in spec:
            if i + 1 >= self.n_levels:
                continue
            if k1:
                out.append((k1, self.relax[i]))
            if kup:
                out.append((kup, self.relax[i].conj().T))
            if kphi:
                out.append((2 * kphi, self.projectors[i + 1]))
        return out

    def model(self, rates: DecoherenceRates, hamiltonian: np.ndarray | None = None) -> LindbladModel:
        h = np.zeros((self.dim, self.dim), complex) if hamiltonian is None else hamiltonian
        return LindbladModel(h, self.jumps(rates), basis="eigen")


def three_level_block() -> LevelBlock:
    e = np.eye(3, dtype=complex)
    proj = [np.outer(e[k], e[k]) for k in range(3)]
    ops = {i: np.outer(e[i], e[i + 1]) for i in range(2)}
    return LevelBlock(proj, ops, dict(ops), ["0", "1", "2"])


def manifold_block(spec: ManifoldSpectrum, n_manifolds: int = 3) -> LevelBlock:
    """6-state block ordered (0+, 0-, 1+, 1-, 2+, 2-), with drive elements from <psi|a|psi>."""
    from ..hilbert import annihilation

    idx = [spec.index(k, s) for k in range(n_manifolds) for s in (1, -1)]
    v = spec.vectors[:, idx]
    a = v.conj().T @ annihilation(spec.fock_dim) @ v
    n = 2 * n_manifolds
    proj = []
    for k in range(n_manifolds):
        p = np.zeros((n, n), complex)
        p[2 * k, 2 * k] = p[2 * k + 1, 2 * k + 1] = 1
        proj.append(p)
    relax, drive = {}, {}
    for i in range(n_manifolds - 1):
        r = np.zeros((n, n), complex)
        r[2 * i, 2 * i + 3] = 1      # |i+><i+1,-|
        r[2 * i + 1, 2 * i + 2] = 1  # |i-><i+1,+|
        relax[i] = r
        drive[i] = proj[i] @ a @ proj[i + 1]
    labels = [f"{k}{'+' if s > 0 else '-'}" for k in range(n_manifolds) for s in (1, -1)]
    return LevelBlock(proj, relax, drive, labels)


def _evolve_then_read(block: LevelBlock, model: LindbladModel, rho0: np.ndarray, times, post: np.ndarray,
                      obs: np.ndarray) -> np.ndarray:
    prop = Propagator(build_liouvillian(model))
    vs = prop.apply(vec(rho0), times)
    n = block.dim
    out = np.empty(len(vs))
    for k, v in enumerate(vs):
        rho = unvec(v, n)
        rho = post @ rho @ post.conj().T
        out[k] = np.trace(obs @ rho).real
    return out


def simulate_coherence_signals(block: LevelBlock, rates: DecoherenceRates, contrasts: ReadoutContrasts,
                               dw: float, times, initial: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """Numerical counterpart of ``manifold_coherence_signals`` on any block.

    ``initial`` defaults to the ground manifold; preparation and analysis pulses
    are ideal rotations.
    """
    rho_g = block.ground() if initial is None else initial
    obs = block.observable(contrasts)
    pi01, half01 = block.rotation(0, np.pi), block.rotation(0, np.pi / 2)
    pi12, half12 = block.rotation(1, np.pi), block.rotation(1, np.pi / 2)
    eye = np.eye(block.dim)

    def prep(*rots):
        r = eye
        for u in rots:
            r = u @ r
        return r @ rho_g @ r.conj().T

    static = block.model(rates)
    ram01 = block.model(rates, dw * block.projectors[1])
    ram12 = block.model(rates, dw * block.projectors[2])
    return {
        "T1_01": _evolve_then_read(block, static, prep(pi01), times, eye, obs),
        "Ramsey_01": _evolve_then_read(block, ram01, prep(half01), times, half01, obs),
        "T1_12": _evolve_then_read(block, static, prep(pi01, pi12), times, pi01, obs),
        "Ramsey_12": _evolve_then_read(block, ram12, prep(pi01, half12), times, pi01 @ half12, obs),
    }
