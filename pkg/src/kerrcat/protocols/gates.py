"""Gate-fidelity estimators: Kerr-evolution X gate and the driven Z-gate error."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from ..dynamics import LindbladModel, evolve
from ..errors import PhysicsError
from ..hilbert import build_fock_operators
from ..spectrum import ManifoldSpectrum, kcq_basis_states

GATE_FOCK_DIM = 30


def uhlmann_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    s = sla.sqrtm(rho)
    inner = sla.sqrtm(s @ sigma @ s)
    return float(np.real(np.trace(inner)) ** 2)


def kerr_gate_fidelity(spec: ManifoldSpectrum, k1: float, kphi: float, tau: float,
                       dim: int = GATE_FOCK_DIM) -> float:
    """Fidelity between lossy and unitary evolution under -K a^dag^2 a^2 from |+Z>.

    ``k1`` and ``kphi`` weight D[a] and D[a^dag a]. The |+Z> state of ``spec`` is
    truncated to ``dim`` Fock levels and renormalized.
    """
    if k1 < 0 or kphi < 0 or tau < 0:
        raise PhysicsError("rates and gate time must be non-negative", kind="invalid-params")
    psi = kcq_basis_states(spec)["plusZ"][:dim]
    lost = 1 - np.vdot(psi, psi).real
    if lost > 1e-8:
        raise PhysicsError(f"gate truncation {dim} drops {lost:.1e} of the state norm", kind="truncation-too-small")
    psi = psi / np.linalg.norm(psi)
    ops = build_fock_operators(dim)
    n = ops.number.real.diagonal()
    h = np.diag(-spec.params.K * n * (n - 1)).astype(complex)
    rho0 = np.outer(psi, psi.conj())
    ideal = np.exp(-1j * np.diag(h).real * tau) * psi
    jumps = [(k1, ops.annihilation), (kphi, ops.number)]
    lossy = evolve(LindbladModel(h, jumps, basis="fock"), rho0, [tau], method="expm")[0].matrix
    # pure target: the Uhlmann expression reduces to <psi|rho|psi>
    return float(np.real(ideal.conj() @ lossy @ ideal))


def z_gate_error(gamma_rabi: float, tau: float) -> float:
    """Error (1 - exp(-gamma tau)) / 2 of a driven Z rotation of length tau."""
    if gamma_rabi < 0 or tau < 0:
        raise PhysicsError("gamma and tau must be non-negative", kind="invalid-params")
    return 0.5 * (1 - np.exp(-gamma_rabi * tau))
