"""Static-effective Kerr-cat Hamiltonian, parity-paired manifolds and metapotential geometry."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import PhysicsError
from .hilbert import FockSpace, build_fock_operators

TWO_PI = 2 * np.pi
DEFAULT_FOCK_DIM = 45
PARITY_THRESHOLD = 0.999


@dataclass(frozen=True)
class OscillatorParams:
    """Driven-oscillator parameters. All frequencies and rates in rad/s (1/s)."""

    K: float
    eps2: float
    delta: float
    g3: float | None = None
    xi_zro: float = 0.0
    kappa_a: float = 0.0
    n_th_a: float = 0.0

    def __post_init__(self):
        vals = [self.K, self.eps2, self.delta, self.xi_zro, self.kappa_a, self.n_th_a]
        if self.g3 is not None:
            vals.append(self.g3)
        if not np.all(np.isfinite(vals)):
            raise PhysicsError("oscillator parameters must be finite", kind="invalid-params")
        if self.K <= 0:
            raise PhysicsError(f"K must be positive, got {self.K}", kind="invalid-params")
        if self.eps2 < 0 or self.kappa_a < 0 or self.n_th_a < 0:
            raise PhysicsError("eps2, kappa_a and n_th_a must be non-negative", kind="invalid-params")

    def with_(self, **kw) -> "OscillatorParams":
        return replace(self, **kw)

    def stark_shift(self) -> float:
        """4K(|eps2/3g3|^2 + |xi_zro|^2), zero if g3 is unset."""
        xi_sq = 0.0 if not self.g3 else abs(self.eps2 / (3 * self.g3)) ** 2
        return 4 * self.K * (xi_sq + abs(self.xi_zro) ** 2)


def effective_detuning(p: OscillatorParams, stark: bool = True) -> float:
    return p.delta - p.stark_shift() if stark else p.delta


def build_kcq_hamiltonian(p: OscillatorParams, space=DEFAULT_FOCK_DIM, stark: bool = True) -> np.ndarray:
    """H = (Delta - S) a^dag a - K a^dag^2 a^2 + eps2 (a^2 + a^dag^2).

    With ``stark=True`` the shift S needs g3; pass ``stark=False`` to acknowledge
    that the shift is omitted.
    """
    if stark and not p.g3:
        raise PhysicsError("g3 is zero or unset; pass stark=False to omit the Stark shift",
                           kind="missing-stark-input")
    ops = build_fock_operators(space)
    a = ops.annihilation
    n = ops.number.real.diagonal()
    det = effective_detuning(p, stark)
    h = np.diag(det * n - p.K * n * (n - 1)).astype(complex)
    a2 = a @ a
    h += p.eps2 * (a2 + a2.conj().T)
    return h


@dataclass(frozen=True)
class Metapotential:
    well_amplitude: float
    well_energy: float
    saddle_energy: float
    saddle_location: complex


def metapotential_geometry(p: OscillatorParams, stark: bool = False) -> Metapotential:
    """Stationary points of E(b) = D|b|^2 - K|b|^4 + eps2 (b^2 + b*^2).

    ``stark=True`` uses the Stark-corrected detuning, matching the Hamiltonian.
    """
    d = effective_detuning(p, stark=bool(stark and p.g3))
    K, e2 = p.K, p.eps2
    alpha2 = max((d + 2 * e2) / (2 * K), 0.0)
    well = (d + 2 * e2) ** 2 / (4 * K) if d + 2 * e2 > 0 else 0.0
    if d > 2 * e2:
        saddle = (d - 2 * e2) ** 2 / (4 * K)
        loc = 1j * np.sqrt((d - 2 * e2) / (2 * K))
    else:
        saddle = 0.0
        loc = 0j
    return Metapotential(float(np.sqrt(alpha2)), float(well), float(saddle), complex(loc))


@dataclass
class ManifoldSpectrum:
    """Eigenpairs sorted by descending energy with (manifold, parity) labels."""

    energies: np.ndarray
    vectors: np.ndarray
    manifold: np.ndarray
    parity: np.ndarray
    parity_expectation: np.ndarray
    mean_photons: np.ndarray
    confined_count: int
    saddle_energy: float
    params: OscillatorParams | None = None
    stark: bool = True
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for i, (k, s) in enumerate(zip(self.manifold, self.parity)):
            self._index[(int(k), int(s))] = i

    @property
    def fock_dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_manifolds(self) -> int:
        return int(self.manifold.max()) + 1

    def index(self, k: int, sign: int) -> int:
        try:
            return self._index[(k, 1 if sign > 0 else -1)]
        except KeyError:
            raise PhysicsError(f"manifold {k} not present (have {self.n_manifolds})",
                               kind="missing-manifold") from None

    def pair(self, k: int) -> tuple[int, int]:
        return self.index(k, +1), self.index(k, -1)

    def state(self, k: int, sign: int) -> np.ndarray:
        return self.vectors[:, self.index(k, sign)]

    def manifold_energy(self, k: int) -> float:
        ip, im = self.pair(k)
        return 0.5 * (self.energies[ip] + self.energies[im])

    def splitting(self, k: int) -> float:
        ip, im = self.pair(k)
        return abs(self.energies[ip] - self.energies[im])

    @property
    def splittings(self) -> np.ndarray:
        return np.array([self.splitting(k) for k in range(self.n_manifolds)])

    def transition_freq(self, i: int, j: int) -> float:
        """omega_ij = mean energy of pair j minus mean energy of pair i."""
        return self.manifold_energy(j) - self.manifold_energy(i)

    @property
    def transition_freqs(self) -> np.ndarray:
        e = np.array([self.manifold_energy(k) for k in range(self.n_manifolds)])
        return e[None, :] - e[:, None]

    def manifold_mean_photons(self, k: int) -> float:
        ip, im = self.pair(k)
        return 0.5 * (self.mean_photons[ip] + self.mean_photons[im])


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    ph = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(ph) / ph)[None, :]


def diagonalize_and_classify(h: np.ndarray, space=None, meta: Metapotential | None = None,
                             params: OscillatorParams | None = None, stark: bool = True) -> ManifoldSpectrum:
    h = np.asarray(h, dtype=complex)
    dim = h.shape[0] if space is None else FockSpace(getattr(space, "dim", space)).dim
    par = 1.0 - 2.0 * (np.arange(dim) % 2)
    scale = np.max(np.abs(h)) or 1.0
    commutes = np.max(np.abs(h * par[None, :] - par[:, None] * h)) < 1e-10 * scale
    if commutes:
        # Diagonalize each parity block separately so degenerate pairs cannot mix.
        w_all, v_all = [], []
        for sel in (par > 0, par < 0):
            idx = np.flatnonzero(sel)
            w, v = np.linalg.eigh(h[np.ix_(idx, idx)])
            full = np.zeros((dim, len(w)), dtype=complex)
            full[idx, :] = v
            w_all.append(w)
            v_all.append(full)
        w = np.concatenate(w_all)
        v = np.concatenate(v_all, axis=1)
    else:
        w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    order = np.argsort(-w, kind="stable")
    w, v = w[order], _fix_phase(v[:, order])
    pexp = np.einsum("ij,i,ij->j", v.conj(), par, v).real
    bad = np.flatnonzero(np.abs(pexp) < PARITY_THRESHOLD)
    if bad.size:
        raise PhysicsError(f"parity mixing: state index {int(bad[0])} has <P> = {pexp[bad[0]]:.6f}",
                           kind="parity-mixing")
    sign = np.where(pexp > 0, 1, -1)
    n_pairs = min(np.sum(sign > 0), np.sum(sign < 0))
    manifold = np.full(len(w), -1)
    counters = {1: 0, -1: 0}
    for i, s in enumerate(sign):
        manifold[i] = counters[s]
        counters[s] += 1
    keep = manifold < n_pairs
    w, v, sign, pexp, manifold = w[keep], v[:, keep], sign[keep], pexp[keep], manifold[keep]
    nbar = np.einsum("ij,i,ij->j", v.conj(), np.arange(dim), v).real
    saddle = meta.saddle_energy if meta is not None else -np.inf
    confined = int(np.sum(w > saddle)) if meta is not None else 0
    return ManifoldSpectrum(w, v, manifold, sign, pexp, nbar, confined,
                            float(saddle) if meta is not None else float("nan"), params, stark)


def solve_spectrum(p: OscillatorParams, dim: int = DEFAULT_FOCK_DIM, stark: bool | None = None) -> ManifoldSpectrum:
    """Build, diagonalize and classify. Stark shift is included whenever g3 is set."""
    if stark is None:
        stark = bool(p.g3)
    h = build_kcq_hamiltonian(p, dim, stark=stark)
    meta = metapotential_geometry(p, stark=stark)
    return diagonalize_and_classify(h, dim, meta, params=p, stark=stark)


def kcq_basis_states(spec: ManifoldSpectrum) -> dict[str, np.ndarray]:
    plus = spec.state(0, +1)
    minus = spec.state(0, -1)
    s = 1 / np.sqrt(2)
    return {
        "plusZ": s * (plus + minus),
        "minusZ": s * (plus - minus),
        "plusX": plus.copy(),
        "minusX": minus.copy(),
        "plusY": s * (plus - 1j * minus),
        "minusY": s * (plus + 1j * minus),
    }


def splitting_at(p: OscillatorParams, eps2: float, delta: float, manifold: int = 1,
                 dim: int = DEFAULT_FOCK_DIM, stark: bool | None = None) -> float:
    sp = solve_spectrum(p.with_(eps2=eps2, delta=delta), dim, stark)
    return sp.splitting(manifold)


def splitting_isoline(target: float, delta: float, p: OscillatorParams, bracket: tuple[float, float],
                      manifold: int = 1, dim: int = DEFAULT_FOCK_DIM, stark: bool | None = None,
                      n_check: int = 9, max_iter: int = 80) -> float:
    """eps2 in ``bracket`` where the manifold splitting equals ``target`` (rad/s).

    The splitting must be monotone over the bracket, checked on ``n_check``
    samples. Either direction is accepted.
    """
    if target <= 0:
        raise PhysicsError("isoline target must be positive", kind="invalid-params")
    lo, hi = map(float, bracket)
    f = lambda e: splitting_at(p, e, delta, manifold, dim, stark) - target  # noqa: E731
    xs = np.linspace(lo, hi, n_check)
    ys = np.array([f(x) for x in xs])
    if ys[0] * ys[-1] > 0:
        raise PhysicsError(f"no isoline crossing in eps2 bracket [{lo:.4g}, {hi:.4g}]",
                           kind="bracket-failure")
    dif = np.diff(ys)
    if not (np.all(dif >= 0) or np.all(dif <= 0)):
        raise PhysicsError("splitting is not monotone over the bracket", kind="ambiguous-isoline")
    # narrow to the sampled interval that holds the crossing
    idx = np.flatnonzero(ys[:-1] * ys[1:] <= 0)
    i = int(idx[0])
    a, b, fa = xs[i], xs[i + 1], ys[i]
    if fa == 0:
        return a
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = f(m)
        if abs(fm) < 1e-3 * target:
            return m
        if fa * fm < 0:
            b = m
        else:
            a, fa = m, fm
    raise PhysicsError("isoline bisection did not converge", kind="bracket-failure")


def isoline_lowest_crossing(target: float, delta: float, p: OscillatorParams, eps2_grid,
                            manifold: int = 1, dim: int = DEFAULT_FOCK_DIM,
                            stark: bool | None = None) -> float | None:
    """Lowest eps2 on a coarse grid where the splitting crosses ``target``, refined by bisection.

    Returns None when the grid holds no crossing.
    """
    grid = np.asarray(eps2_grid, dtype=float)
    vals = np.array([splitting_at(p, e, delta, manifold, dim, stark) - target for e in grid])
    idx = np.flatnonzero(vals[:-1] * vals[1:] <= 0)
    if idx.size == 0:
        return None
    i = int(idx[0])
    return splitting_isoline(target, delta, p, (grid[i], grid[i + 1]), manifold, dim, stark, n_check=3)
