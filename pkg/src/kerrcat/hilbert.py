"""Truncated Fock-space operators, displacement, tensor embedding and Wigner function."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import PhysicsError


@dataclass(frozen=True)
class FockSpace:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise PhysicsError(f"Fock dimension must be an integer >= 2, got {self.dim}",
                               kind="invalid-dimension")


@dataclass(frozen=True)
class FockOperators:
    annihilation: np.ndarray
    number: np.ndarray
    parity: np.ndarray

    @property
    def creation(self) -> np.ndarray:
        return self.annihilation.conj().T


def _space(space) -> FockSpace:
    return space if isinstance(space, FockSpace) else FockSpace(int(space))


def build_fock_operators(space) -> FockOperators:
    dim = _space(space).dim
    n = np.arange(dim)
    a = np.diag(np.sqrt(n[1:]).astype(complex), 1)
    num = np.diag(n.astype(complex))
    par = np.diag((1.0 - 2.0 * (n % 2)).astype(complex))
    return FockOperators(a, num, par)


def annihilation(dim: int) -> np.ndarray:
    return build_fock_operators(dim).annihilation


def displacement_operator(space, beta: complex) -> np.ndarray:
    """D(beta) = exp(beta a^dag - beta* a), exactly unitary in the truncated space.

    The anti-Hermitian generator A is exponentiated through the eigendecomposition of
    the Hermitian matrix iA, so D = V exp(-i w) V^dag.
    """
    dim = _space(space).dim
    beta = complex(beta)
    if abs(beta) ** 2 > dim / 4:
        warnings.warn(f"|beta|^2 = {abs(beta) ** 2:.3g} exceeds dim/4 = {dim / 4:.3g}; "
                      "displacement is truncation-limited", RuntimeWarning, stacklevel=2)
    if beta == 0:
        return np.eye(dim, dtype=complex)
    a = annihilation(dim)
    gen = 1j * (beta * a.conj().T - np.conj(beta) * a)
    gen = 0.5 * (gen + gen.conj().T)
    w, v = np.linalg.eigh(gen)
    return (v * np.exp(-1j * w)) @ v.conj().T


def tensor_embed(op_a: np.ndarray, op_b: np.ndarray) -> np.ndarray:
    """Kronecker product, factor A major: index = iA * dimB + iB."""
    op_a = np.asarray(op_a)
    op_b = np.asarray(op_b)
    for name, op in (("A", op_a), ("B", op_b)):
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise PhysicsError(f"operator {name} is not square: shape {op.shape}", kind="invalid-shape")
    return np.kron(op_a, op_b)


def _as_density(state) -> np.ndarray:
    rho = getattr(state, "matrix", state)
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise PhysicsError(f"state is not a square matrix: shape {rho.shape}", kind="invalid-state")
    tr = np.trace(rho)
    if abs(tr - 1) > 1e-6:
        raise PhysicsError(f"state trace is {tr:.6g}, expected 1", kind="invalid-state")
    return rho


def wigner_function(state, grid) -> np.ndarray:
    """W(beta) = (2/pi) Tr[D(beta)^dag rho D(beta) P] on a list of complex points.

    Uses the Laguerre recursion for the Fock matrix elements W_mn(beta) of the
    displaced parity, vectorized over the grid. Exact for the truncated state.
    """
    rho = _as_density(state)
    dim = rho.shape[0]
    b = np.atleast_1d(np.asarray(grid, dtype=complex)).ravel()
    wl = [np.zeros_like(b) for _ in range(dim)]
    wl[0] = (2.0 / np.pi) * np.exp(-2.0 * np.abs(b) ** 2)
    out = rho[0, 0] * wl[0]
    for n in range(1, dim):
        wl[n] = 2.0 * b * wl[n - 1] / np.sqrt(n)
        out = out + rho[0, n] * wl[n] + rho[n, 0] * np.conj(wl[n])
    for m in range(1, dim):
        tmp = wl[m].copy()
        wl[m] = (2.0 * np.conj(b) * tmp - np.sqrt(m) * wl[m - 1]) / np.sqrt(m)
        out = out + rho[m, m] * wl[m]
        for n in range(m + 1, dim):
            nxt = (2.0 * b * wl[n - 1] - np.sqrt(m) * tmp) / np.sqrt(n)
            tmp = wl[n].copy()
            wl[n] = nxt
            out = out + rho[m, n] * wl[n] + rho[n, m] * np.conj(wl[n])
    if np.allclose(rho, rho.conj().T, atol=1e-10) and np.max(np.abs(out.imag), initial=0.0) > 1e-10:
        raise PhysicsError("Wigner function acquired an imaginary part above 1e-10", kind="invalid-state")
    return out.real
