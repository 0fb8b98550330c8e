"""Closed-form gain bounds and empirical gain estimation.

The closed forms all come from the same completion argument: an
input-feedforward/output-strict supply (-a, 1/2, b) implies the finite-gain
supply (-1/delta, 0, gamma^2) for any delta > 1/(2a), with
gamma^2 = Gamma(delta) = (b + delta/2) / (a - 1/(2 delta)).  Gamma is
strictly convex on its domain and minimized at
delta* = (sqrt(4ab+1) + 1) / (2a).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numerics
from .errors import DomainError, NonFiniteError, RankDeficientError
from .sim import simulate_ct, simulate_dt

__all__ = [
    "GainBound", "FeasibleRegion", "gamma_completion", "ifp_osp_gain",
    "dt_gradient_gain", "ahu_gain", "gradient_ff_region", "empirical_gain",
    "gaussian_disturbances", "sinusoid_disturbances", "power_iterate_disturbance",
]


@dataclass
class GainBound:
    """A certified L2 (or ell2) gain with its provenance parameters."""

    gamma: float
    formula_id: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise DomainError(f"gain must be finite and nonnegative, got {self.gamma}")


def gamma_completion(a: float, b: float):
    """Minimum of Gamma(delta) = (b + delta/2)/(a - 1/(2 delta)) over
    delta > 1/(2a), returned as (gamma^2, delta*)."""
    if a <= 0 or b < 0:
        raise DomainError(f"need a > 0 and b >= 0, got a={a}, b={b}")
    root = np.sqrt(4.0 * a * b + 1.0)
    delta_star = (root + 1.0) / (2.0 * a)
    gamma_sq = (1.0 / a**2) * (a * b + (1.0 + root) / 4.0) / (1.0 - 1.0 / (1.0 + root))
    return float(gamma_sq), float(delta_star)


def ifp_osp_gain(a: float, b: float) -> GainBound:
    """Finite gain implied by the supply -a yᵀy + yᵀu + b uᵀu (a > 0, b >= 0)."""
    gamma_sq, delta_star = gamma_completion(a, b)
    return GainBound(gamma=float(np.sqrt(gamma_sq)), formula_id="ifp_osp",
                     parameters={"a": float(a), "b": float(b),
                                 "gamma_sq": gamma_sq, "delta_star": delta_star})


def dt_gradient_gain(mu: float, alpha: float) -> GainBound:
    """ell2 gain bound of the disturbed gradient step x+ = x - alpha(grad phi - v).

    The method is output-strict with modulus mu and input-feedforward with
    excess alpha/2, so this is the completion bound at (a, b) = (mu, alpha/2).
    Tends to 1/mu as alpha -> 0 and increases monotonically in alpha.
    """
    if mu <= 0 or alpha <= 0:
        raise DomainError(f"need mu > 0 and alpha > 0, got mu={mu}, alpha={alpha}")
    gamma_sq, delta_star = gamma_completion(mu, 0.5 * alpha)
    return GainBound(gamma=float(np.sqrt(gamma_sq)), formula_id="dt_gradient",
                     parameters={"mu": float(mu), "alpha": float(alpha),
                                 "gamma_sq": gamma_sq, "delta_star": delta_star})


def ahu_gain(M, A, K) -> GainBound:
    """Equilibrium-independent disturbance gain of the augmented saddle flow.

    gamma* = 1 / lambda_min(M + AᵀKA) for diagonal positive M, full-row-rank
    A and PSD K; also returns the certifying output-strictness coefficient
    alpha = 2 gamma^2 lambda_min.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    K = numerics.symmetrize(np.atleast_2d(np.asarray(K, dtype=float)))
    if np.any(M - np.diag(np.diagonal(M)) != 0.0) or np.any(np.diagonal(M) <= 0):
        raise DomainError("M must be diagonal with positive entries")
    if np.linalg.matrix_rank(A) < A.shape[0]:
        raise RankDeficientError("A must have full row rank")
    if numerics.sym_eigen(K).min < -1e-10:
        raise DomainError("K must be PSD")
    lam_min = numerics.sym_eigen(M + A.T @ K @ A).min
    if lam_min <= 0:
        raise DomainError("M + AᵀKA must be positive definite")
    gamma = 1.0 / lam_min
    return GainBound(gamma=float(gamma), formula_id="ahu",
                     parameters={"lambda_min": float(lam_min),
                                 "alpha": float(2.0 * gamma**2 * lam_min)})


@dataclass
class FeasibleRegion:
    """Achievable input-feedforward/output-strict parameter pairs (nu, rho)
    for the gradient flow with output y = g x + j u.

    Membership is the conjunction of the feedthrough condition
    j - rho j^2 > nu and the curvature budget mu >= rho g^2 + beta^2 with
    beta = -g rho j / sqrt(j - rho j^2 - nu).
    """

    mu: float
    g: float
    j: float

    def __post_init__(self):
        if min(self.mu, self.g, self.j) <= 0:
            raise DomainError("mu, g, j must all be positive")

    # boundary curves --------------------------------------------------------

    def rho_max_feedthrough(self, nu: float) -> float:
        """Largest rho allowed by j - rho j^2 > nu (zero when infeasible)."""
        return max((self.j - nu) / self.j**2, 0.0)

    def rho_max_curvature(self, nu: float) -> float:
        """Largest rho allowed by the curvature budget; closed form
        mu (j - nu) / (mu j^2 + g^2 (j - nu))."""
        jn = self.j - nu
        if jn <= 0:
            return 0.0
        return self.mu * jn / (self.mu * self.j**2 + self.g**2 * jn)

    @property
    def nu_intercept(self) -> float:
        return self.j

    @property
    def rho_intercept_feedthrough(self) -> float:
        return 1.0 / self.j

    @property
    def rho_intercept_curvature(self) -> float:
        return self.mu / (self.mu * self.j + self.g**2)

    def membership(self, nu: float, rho: float) -> bool:
        if rho < 0:
            return False
        slack = self.j - rho * self.j**2 - nu
        if slack <= 0:
            return False
        beta = -self.g * rho * self.j / np.sqrt(slack)
        return bool(self.mu >= rho * self.g**2 + beta**2 - 1e-12)


def gradient_ff_region(mu: float, g: float, j: float) -> FeasibleRegion:
    return FeasibleRegion(mu=mu, g=g, j=j)


# ---------------------------------------------------------------------------
# empirical gains


def gaussian_disturbances(count: int, m: int, steps: int, seed: int = 0,
                          scale: float = 1.0, support: float = 0.6):
    """Truncated random Gaussian signals: active on an initial fraction of
    the horizon so the trajectory has time to settle back."""
    rng = np.random.default_rng(seed)
    active = max(1, int(support * steps))
    out = []
    for _ in range(count):
        sig = np.zeros((steps, m))
        sig[:active] = scale * rng.normal(size=(active, m))
        out.append(sig)
    return out


def sinusoid_disturbances(count: int, m: int, steps: int, dt: float = 1.0,
                          seed: int = 0, scale: float = 1.0,
                          support: float = 0.6):
    rng = np.random.default_rng(seed)
    active = max(1, int(support * steps))
    t = np.arange(active) * dt
    out = []
    for _ in range(count):
        freq = rng.uniform(0.05, 2.0, size=m)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=m)
        sig = np.zeros((steps, m))
        sig[:active] = scale * np.sin(np.outer(t, freq) + phase)
        out.append(sig)
    return out


def _signal_norms(traj, ybar, dt: Optional[float]):
    dy = traj.outputs - ybar[None, :]
    du = traj.inputs
    if dt is None:
        num = float(np.sqrt(np.sum(dy**2)))
        den = float(np.sqrt(np.sum(du**2)))
    else:
        num = float(np.sqrt(np.trapezoid(np.sum(dy**2, axis=1), dx=dt)))
        den = float(np.sqrt(np.trapezoid(np.sum(du**2, axis=1), dx=dt)))
    return num, den


def empirical_gain(sys, xbar, disturbances, horizon: Optional[float] = None,
                   dt: float = 1e-3, steps: Optional[int] = None,
                   storage=None) -> dict:
    """Empirical L2 (ell2) gain from an equilibrium: max over the disturbance
    set of ||y - ybar|| / ||v||, starting at x(0) = xbar so the storage
    starts from zero.

    A lower bound on the true gain by construction.  The report flags
    truncation when the final state has not settled back to the equilibrium.
    """
    disturbances = list(disturbances)
    if not disturbances:
        raise ValueError("disturbance set is empty")
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    ybar = sys.h(xbar)
    best = 0.0
    truncated = False
    for v in disturbances:
        v = np.atleast_2d(np.asarray(v, dtype=float))
        if sys.discrete:
            traj = simulate_dt(sys, xbar, v, steps=v.shape[0])
            num, den = _signal_norms(traj, ybar, None)
        else:
            T = horizon if horizon is not None else v.shape[0] * dt
            u_of_t = lambda t, sig=v: sig[min(int(t / dt), sig.shape[0] - 1)]
            traj = simulate_ct(sys, xbar, u_of_t, T=T, dt=dt)
            num, den = _signal_norms(traj, ybar, dt)
        if den <= 1e-14:
            continue
        settle = np.linalg.norm(traj.states[-1] - xbar)
        truncated |= bool(settle > 1e-4 * max(1.0, np.linalg.norm(v)))
        best = max(best, num / den)
    if not np.isfinite(best):
        raise NonFiniteError("trajectory norms became non-finite")
    return {"gain": best, "truncated": truncated, "n_signals": len(disturbances)}


def power_iterate_disturbance(sys, xbar, v0, rounds: int = 5, dt: float = 1e-3):
    """Refine a disturbance toward the worst case by output alignment.

    Re-scales the (time-reversed) output deviation into the next input; an
    adjoint-free heuristic that tightens the empirical lower bound.
    """
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    ybar = sys.h(xbar)
    v = np.atleast_2d(np.asarray(v0, dtype=float)).copy()
    energy = float(np.sum(v**2))
    if energy <= 0:
        raise ValueError("seed disturbance must have positive energy")
    for _ in range(rounds):
        if sys.discrete:
            traj = simulate_dt(sys, xbar, v, steps=v.shape[0])
            dy = traj.outputs - ybar[None, :]
        else:
            T = v.shape[0] * dt
            u_of_t = lambda t, sig=v: sig[min(int(t / dt), sig.shape[0] - 1)]
            traj = simulate_ct(sys, xbar, u_of_t, T=T, dt=dt)
            dy = traj.outputs[: v.shape[0]] - ybar[None, :]
        if dy.shape[1] != v.shape[1]:
            break  # non-square channel; keep the current iterate
        cand = dy[::-1]
        norm = np.linalg.norm(cand)
        if norm <= 1e-14:
            break
        v = cand * np.sqrt(energy) / norm
    return v
