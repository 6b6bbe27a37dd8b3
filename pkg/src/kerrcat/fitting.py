"""Weighted nonlinear least squares, canonical curve models and Monte-Carlo propagation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError, KerrCatError

JAC_REL_STEP = 1e-6


@dataclass
class FitResult:
    params: dict[str, float]
    std_errors: dict[str, float]
    residual_norm: float
    converged: bool
    fixed: dict[str, float] = field(default_factory=dict)
    at_bound: tuple[str, ...] = ()
    covariance: np.ndarray | None = None
    n_points: int = 0
    kind: str = ""

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "std_errors": dict(self.std_errors),
            "fixed": dict(self.fixed),
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "at_bound": list(self.at_bound),
            "n_points": self.n_points,
        }


def numerical_jacobian(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                       rel_step: float = JAC_REL_STEP, typical=None) -> np.ndarray:
    """Central differences with step rel_step * max(|x_k|, typical_k).

    ``typical`` guards parameters that sit at zero (centres, phases, offsets); it
    defaults to 1e-8.
    """
    x = np.asarray(x, dtype=float)
    typ = np.full(len(x), 1e-8) if typical is None else np.asarray(typical, float)
    cols = []
    for k in range(len(x)):
        h = rel_step * max(abs(x[k]), typ[k])
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        cols.append((np.asarray(f(xp)) - np.asarray(f(xm))) / (2 * h))
    return np.stack(cols, axis=-1)


def nonlinear_least_squares(model: Callable[..., np.ndarray], data, init: Mapping[str, float],
                            sigma=None, bounds: Mapping[str, tuple[float, float]] | None = None,
                            fixed: Mapping[str, float] | None = None, max_nfev: int = 2000,
                            kind: str = "custom", typical: Mapping[str, float] | None = None) -> FitResult:
    """Minimize sum(((model(**p) - data) / sigma)^2) over the parameters in ``init``.

    Trust-region damped Gauss-Newton with a central-difference Jacobian. With
    ``sigma`` given the covariance is absolute; otherwise it is scaled by the
    reduced chi-square. ``typical`` gives per-parameter scales for the
    finite-difference step of parameters that may pass through zero.
    """
    names = list(init)
    data = np.asarray(data, dtype=float)
    if not np.all(np.isfinite(data)):
        raise FitError("data contain non-finite values")
    w = np.ones_like(data) if sigma is None else 1.0 / np.broadcast_to(np.asarray(sigma, float), data.shape)
    bounds = dict(bounds or {})
    lo = np.array([bounds.get(n, (-np.inf, np.inf))[0] for n in names], float)
    hi = np.array([bounds.get(n, (-np.inf, np.inf))[1] for n in names], float)
    x0 = np.array([init[n] for n in names], float)
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise FitError("initial parameters outside bounds")

    def resid(x):
        pred = np.asarray(model(**dict(zip(names, x))), dtype=float)
        return (pred - data) * w

    typ = np.array([max(abs((typical or {}).get(n, 0.0)), abs(init[n]) * 1e-3, 1e-8) for n in names])

    def jac(x):
        return numerical_jacobian(resid, x, typical=typ)

    try:
        sol = least_squares(resid, x0, jac=jac, bounds=(lo, hi), method="trf", x_scale="jac",
                            max_nfev=max_nfev, xtol=1e-14, ftol=1e-14, gtol=1e-14)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitError(f"least squares failed: {exc}") from exc
    if sol.status == 0:
        raise FitError(f"max iterations reached (residual norm {np.linalg.norm(sol.fun):.3g})",
                       kind="max-iterations")
    x = sol.x
    r = resid(x)
    if not np.all(np.isfinite(r)):
        raise FitError("model produced non-finite values at the optimum")
    j = jac(x)
    free = sol.active_mask == 0
    at_bound = tuple(n for n, a in zip(names, sol.active_mask) if a != 0)
    cov = np.full((len(names), len(names)), np.nan)
    jf = j[:, free]
    if jf.size:
        # identifiability is judged on unit-scaled columns so parameter units do not matter
        norms = np.linalg.norm(jf, axis=0)
        if np.any(norms == 0):
            raise FitError("singular Jacobian: parameters are not identifiable", kind="singular-jacobian")
        sv = np.linalg.svd(jf / norms, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            raise FitError("singular Jacobian: parameters are not identifiable", kind="singular-jacobian")
        cf = np.linalg.inv(jf.T @ jf)
        if sigma is None:
            dof = max(len(data) - int(free.sum()), 1)
            cf = cf * float(r @ r) / dof
        cov[np.ix_(free, free)] = cf
    errs = np.sqrt(np.clip(np.diag(cov), 0, None))
    errs = np.where(np.isnan(errs), 0.0, errs)
    return FitResult(dict(zip(names, map(float, x))), dict(zip(names, map(float, errs))),
                     float(np.linalg.norm(r)), True, dict(fixed or {}), at_bound, cov, len(data), kind)


# canonical models -----------------------------------------------------------

def exp_model(t, a, tau, c):
    return a * np.exp(-np.asarray(t) / tau) + c


def cascade_term(t, k1, k2):
    """(exp(-k2 t) - exp(-k1 t)) / (k1 - k2), continuous through k1 = k2 (-> t exp(-k t)).

    Symmetric in k1, k2; written with the smaller rate factored out so that
    long times cannot overflow.
    """
    t = np.asarray(t, dtype=float)
    kmin, d = min(k1, k2), abs(k1 - k2)
    small = d * t < 1e-8
    safe = d if d else 1.0
    val = np.exp(-kmin * t) * (-np.expm1(-d * t)) / safe
    return np.where(small, t * np.exp(-kmin * t), val)


def double_exp_model(t, a, b, k1, k2, c):
    """a e^{-k2 t} + b k2 (e^{-k2 t} - e^{-k1 t}) / (k1 - k2) + c: cascade 2 -> 1 -> 0 readout."""
    return a * np.exp(-k2 * np.asarray(t)) + b * k2 * cascade_term(t, k1, k2) + c


def lorentzian_model(x, a, x0, w, c):
    return a * w ** 2 / ((np.asarray(x) - x0) ** 2 + w ** 2) + c


def decaying_sinusoid_model(t, a, gamma, omega, phi, c):
    t = np.asarray(t)
    return a * np.exp(-gamma * t) * np.cos(omega * t + phi) + c


MODELS = {
    "exp": (exp_model, ("a", "tau", "c")),
    "doubleExp": (double_exp_model, ("a", "b", "k1", "k2", "c")),
    "lorentzian": (lorentzian_model, ("a", "x0", "w", "c")),
    "decayingSinusoid": (decaying_sinusoid_model, ("a", "gamma", "omega", "phi", "c")),
}


def initial_guess(kind: str, x, y) -> dict[str, float]:
    """Heuristic starting points.

    exp: c from the last tenth of the data, tau from the 1/e crossing.
    doubleExp: k2 from the 1/e crossing, k1 = 3 k2, b from the plateau overshoot.
    lorentzian: peak or valley, whichever deviates more from the median, width from
        the half-maximum crossings.
    decayingSinusoid: omega from the FFT peak, gamma from the envelope ratio.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    span = x[-1] - x[0]
    if kind in ("exp", "doubleExp"):
        c = float(np.mean(y[-max(len(y) // 10, 1):]))
        a = float(y[0] - c)
        yn = (y - c) / a if a else np.zeros_like(y)
        idx = np.flatnonzero(yn < np.exp(-1))
        tau = float(x[idx[0]] - x[0]) if idx.size and idx[0] > 0 else span / 3
        tau = tau or span / 3
        if kind == "exp":
            return {"a": a, "tau": tau, "c": c}
        k2 = 1 / tau
        return {"a": a, "b": 0.1 * a, "k1": 3 * k2, "k2": k2, "c": c}
    if kind == "lorentzian":
        med = float(np.median(y))
        i = int(np.argmax(np.abs(y - med)))
        a = float(y[i] - med)
        half = np.abs(y - med) > abs(a) / 2
        width = float(np.ptp(x[half])) / 2 if half.sum() > 1 else span / 10
        return {"a": a, "x0": float(x[i]), "w": width or span / 10, "c": med}
    if kind == "decayingSinusoid":
        c = float(np.mean(y))
        yc = y - c
        n = len(x)
        dt = span / (n - 1)
        spec = np.abs(np.fft.rfft(yc * np.hanning(n), n=8 * n))
        f = np.fft.rfftfreq(8 * n, dt)
        k = int(np.argmax(spec[1:]) + 1)
        omega = 2 * np.pi * f[k]
        half = n // 2
        e1 = np.max(np.abs(yc[:half])) or 1.0
        e2 = np.max(np.abs(yc[half:])) or e1
        gamma = max(np.log(e1 / e2) / (span / 2), 0.0) if e2 < e1 else 0.0
        # phase from projection onto the fitted frequency
        z = np.sum(yc * np.exp(-1j * omega * (x - x[0])) * np.exp(gamma * (x - x[0])))
        phi = float(np.angle(z))
        a = float(2 * abs(z) / n)
        phi = phi - omega * x[0]
        return {"a": a, "gamma": gamma, "omega": omega, "phi": phi, "c": c}
    raise ValueError(f"unknown fit kind {kind!r}")


def canonical_fit(kind: str, x, y, sigma=None, init: Mapping[str, float] | None = None,
                  fixed: Mapping[str, float] | None = None,
                  bounds: Mapping[str, tuple[float, float]] | None = None) -> FitResult:
    if kind not in MODELS:
        raise ValueError(f"unknown fit kind {kind!r}")
    func, names = MODELS[kind]
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    fixed = dict(fixed or {})
    n_free = len(names) - len(fixed)
    if len(x) < 2 * n_free:
        raise FitError(f"{kind} fit needs at least {2 * n_free} points, got {len(x)}")
    guess = initial_guess(kind, x, y)
    guess.update(init or {})
    free_init = {n: guess[n] for n in names if n not in fixed}
    default_bounds = {
        "exp": {"tau": (0.0, np.inf)},
        "doubleExp": {"k1": (0.0, np.inf), "k2": (0.0, np.inf)},
        "lorentzian": {"w": (0.0, np.inf)},
        "decayingSinusoid": {"gamma": (0.0, np.inf), "omega": (0.0, np.inf)},
    }[kind]
    default_bounds.update(bounds or {})
    for n, (lo, hi) in default_bounds.items():
        if n in free_init:
            free_init[n] = float(np.clip(free_init[n], lo + 1e-300 if lo == 0 else lo, hi))

    def model(**p):
        return func(x, **p, **fixed)

    xs = float(np.ptp(x)) or 1.0
    ys = float(np.ptp(y)) or 1.0
    typical = {"a": ys, "b": ys, "c": ys, "x0": xs, "w": xs, "tau": xs, "k1": 1 / xs, "k2": 1 / xs,
               "gamma": 1 / xs, "omega": 1 / xs, "phi": 1.0}
    return nonlinear_least_squares(model, y, free_init, sigma=sigma,
                                   bounds={k: v for k, v in default_bounds.items() if k in free_init},
                                   fixed=fixed, kind=kind, typical={k: typical[k] for k in free_init})


# Monte-Carlo propagation ----------------------------------------------------

@dataclass
class MonteCarloSummary:
    mean: np.ndarray
    total_variance: np.ndarray
    expected_conditional_variance: np.ndarray
    variance_of_conditional_mean: np.ndarray
    n_ok: int
    n_failed: int

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.total_variance)


def monte_carlo_propagate(solver: Callable[..., object], input_dists: Mapping[str, tuple[float, float]],
                          n: int, seed: int) -> MonteCarloSummary:
    """Sample Gaussian inputs, run ``solver(**sample)``, and apply the law of total variance.

    The solver returns a value or a ``(value, sigma)`` pair, where ``sigma`` is the
    solver's own conditional uncertainty. Summary = E[sigma^2 | x] + Var(value | x).
    """
    if n < 100:
        raise FitError("Monte-Carlo propagation needs n >= 100")
    rng = np.random.default_rng(seed)
    names = list(input_dists)
    mu = np.array([input_dists[k][0] for k in names], float)
    sd = np.array([input_dists[k][1] for k in names], float)
    draws = mu + sd * rng.standard_normal((n, len(names)))
    vals, cond = [], []
    failed = 0
    for row in draws:
        try:
            out = solver(**dict(zip(names, row)))
        except (KerrCatError, ArithmeticError, ValueError, np.linalg.LinAlgError):
            failed += 1
            continue
        if isinstance(out, tuple) and len(out) == 2:
            v, s = out
        else:
            v, s = out, 0.0
        vals.append(np.asarray(v, float))
        cond.append(np.broadcast_to(np.asarray(s, float) ** 2, np.shape(v)))
    if failed > 0.05 * n:
        raise FitError(f"solver failed on {failed}/{n} samples", kind="propagation-unreliable")
    vals = np.array(vals)
    cond = np.array(cond)
    e_var = cond.mean(axis=0)
    v_mean = vals.var(axis=0, ddof=1)
    return MonteCarloSummary(vals.mean(axis=0), e_var + v_mean, e_var, v_mean, len(vals), failed)

