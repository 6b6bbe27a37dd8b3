"""Steady-state leakage populations with and without engineered dissipation."""

from __future__ import annotations

from dataclasses import dataclass


from ..composite import (CavityParams, DissipationDrive, build_coupled_model, oscillator_basis,
                         single_mode_model)
from ..dynamics import Propagator, build_liouvillian, steady_state, unvec, vec
from ..spectrum import ManifoldSpectrum, OscillatorParams

DEFAULT_DELAY = 4.2e-6


@dataclass(frozen=True)
class LeakagePoint:
    g_diss: float
    p1: float
    p2: float

    def to_dict(self) -> dict:
        return {"g_diss": self.g_diss, "p1": self.p1, "p2": self.p2}


def steady_leakage_vs_dissipation(osc: OscillatorParams, cav: CavityParams, g_grid, spec: ManifoldSpectrum,
                                  tau_delay: float = DEFAULT_DELAY, detuning: float = 0.0,
                                  target=(0, 1), n_keep: int | None = None) -> list[LeakagePoint]:
    """Composite steady state per g_diss, then free single-mode evolution for ``tau_delay``."""
    out = []
    free = None
    for g in g_grid:
        drive = DissipationDrive(float(g), detuning, tuple(target))
        if g:
            cm = build_coupled_model(osc, cav, drive, spec, n_keep)
            rho_a = cm.oscillator_part(steady_state(cm.model).matrix)
            basis = cm.basis
        else:
            basis = oscillator_basis(spec, n_keep)
            rho_a = steady_state(single_mode_model(osc, basis)).matrix
        if tau_delay > 0:
            if free is None:
                free = Propagator(build_liouvillian(single_mode_model(osc, basis)))
            rho_a = unvec(free.apply(vec(rho_a), [tau_delay])[0], basis.dim)
        p = basis.populations(rho_a)
        out.append(LeakagePoint(float(g), float(p[1]), float(p[2])))
    return out


def dephasing_equivalent_heating(osc: OscillatorParams, spec: ManifoldSpectrum, kphi: float,
                                 n_keep: int | None = None) -> tuple[float, float]:
    """Steady manifold-1 and manifold-2 populations with extra number dephasing at rate ``kphi``."""
    basis = oscillator_basis(spec, n_keep)
    rho = steady_state(single_mode_model(osc, basis, kphi=kphi)).matrix
    p = basis.populations(rho)
    return float(p[1]), float(p[2])
