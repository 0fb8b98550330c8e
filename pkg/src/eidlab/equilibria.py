"""Forced equilibria, equilibrium I/O relation sampling, and monotonicity
checks on the sampled relation.

For ``xdot = f(x) + G u`` the assignable equilibria are the states with
``G_perp f(x) = 0`` (``G_perp (x - f(x)) = 0`` in discrete time); each one
carries a unique equilibrium input/output pair
``u = -(GᵀG)⁻¹Gᵀ f(x)``, ``y = h(x) + J u``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numerics
from .errors import NotAssignableError
from .systems import SupplyRate

DEFAULT_RESIDUAL_TOL = 1e-8


def annihilator(G) -> np.ndarray:
    """Full-rank left annihilator of G with orthonormal rows.

    Rows span the orthogonal complement of range(G).  For a fully actuated
    system (m = n) the annihilator is empty and a (0, n) array is returned.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    n, m = G.shape
    if m == n:
        return np.zeros((0, n))
    # columns of Q beyond rank(G) span the orthogonal complement
    Q, _ = np.linalg.qr(G, mode="complete")
    return Q[:, m:].T


@dataclass
class IoSample:
    """An equilibrium configuration (x, u, y) with its residual."""

    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    residual: float = 0.0


@dataclass
class EquilibriumMap:
    """Equilibrium machinery bound to one system."""

    system: object
    tol: float = DEFAULT_RESIDUAL_TOL
    G_perp: np.ndarray = field(init=False)

    def __post_init__(self):
        self.G_perp = annihilator(self.system.G)
        self._gram_inv = np.linalg.inv(self.system.G.T @ self.system.G)

    @property
    def fully_actuated(self) -> bool:
        return self.G_perp.shape[0] == 0

    # residuals --------------------------------------------------------------

    def _constraint(self, x) -> np.ndarray:
        sys = self.system
        if sys.discrete:
            return self.G_perp @ (np.atleast_1d(x) - sys.f(x))
        return self.G_perp @ sys.f(x)

    def assignability_residual(self, x) -> float:
        if self.fully_actuated:
            return 0.0
        return float(np.linalg.norm(self._constraint(x)))

    def equilibrium_residual(self, x, u) -> float:
        """Residual of the full equilibrium equation at (x, u)."""
        sys = self.system
        r = sys.f(x) + sys.G @ np.atleast_1d(u)
        if sys.discrete:
            r = r - np.atleast_1d(x)
        return float(np.linalg.norm(r))

    # equilibrium maps -------------------------------------------------------

    def ku_ky(self, xbar) -> IoSample:
        """Equilibrium input/output for an assignable state.

        Raises NotAssignableError when the annihilator residual exceeds the
        tolerance.
        """
        res = self.assignability_residual(xbar)
        if res > self.tol:
            raise NotAssignableError(
                f"state is not an assignable equilibrium (residual {res:.3e})"
            )
        sys = self.system
        xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
        if sys.discrete:
            u = self._gram_inv @ (sys.G.T @ (xbar - sys.f(xbar)))
        else:
            u = -self._gram_inv @ (sys.G.T @ sys.f(xbar))
        y = sys.h(xbar) + sys.J @ u
        return IoSample(x=xbar, u=u, y=y, residual=self.equilibrium_residual(xbar, u))

    def solve_equilibrium(self, ubar, x0, tol: float = 1e-11,
                          max_iter: int = 80) -> np.ndarray:
        """Newton solve of the forced equilibrium equation for given input."""
        sys = self.system
        ubar = np.atleast_1d(np.asarray(ubar, dtype=float))
        if sys.discrete:
            F = lambda x: sys.f(x) + sys.G @ ubar - x
        else:
            F = lambda x: sys.f(x) + sys.G @ ubar
        return numerics.newton_root(F, x0, tol=tol, max_iter=max_iter)

    def project(self, x0, tol: float = 1e-11, max_iter: int = 60) -> np.ndarray:
        """Minimum-norm Gauss-Newton projection of a state candidate onto the
        assignable-equilibrium set {G_perp f = 0}."""
        x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
        if self.fully_actuated:
            return x
        for _ in range(max_iter):
            r = self._constraint(x)
            if np.linalg.norm(r) <= tol:
                return x
            Jc = numerics.fd_jacobian(self._constraint, x)
            step, *_ = np.linalg.lstsq(Jc, r, rcond=None)
            x = x - step
        raise numerics.NoConvergenceError("projection onto equilibrium set failed")

    # sampling ---------------------------------------------------------------

    def sample_io_relation(self, region, count: int, seed: int = 0) -> "RelationSamples":
        """Sample the equilibrium I/O relation over a state box.

        Candidates are drawn uniformly in ``region = (lo, hi)`` and, for
        underactuated systems, Newton-projected onto the equilibrium set.
        Deterministic for a fixed seed; candidates whose projection fails
        are counted, not raised.
        """
        lo, hi = (np.asarray(b, dtype=float) for b in region)
        rng = np.random.default_rng(seed)
        samples = []
        failures = 0
        for _ in range(count):
            x0 = rng.uniform(lo, hi, size=self.system.n)
            try:
                xbar = self.project(x0)
                samples.append(self.ku_ky(xbar))
            except (numerics.NoConvergenceError, NotAssignableError):
                failures += 1
        return RelationSamples(samples=samples, projection_failures=failures,
                               seed=seed)


@dataclass
class RelationSamples:
    samples: list
    projection_failures: int = 0
    seed: int = 0

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def to_csv(self, path):
        """Columns x_1..x_n, u_1..u_m, y_1..y_p."""
        if not self.samples:
            raise ValueError("no samples to export")
        s0 = self.samples[0]
        header = (
            [f"x_{i+1}" for i in range(s0.x.size)]
            + [f"u_{i+1}" for i in range(s0.u.size)]
            + [f"y_{i+1}" for i in range(s0.y.size)]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for s in self.samples:
                writer.writerow(list(s.x) + list(s.u) + list(s.y))


def check_relation_dissipativity(samples, w: SupplyRate, tol: float = 1e-9) -> dict:
    """Evaluate the supply-rate quadratic form on all pairs of I/O samples.

    The monotone (incrementally passive) check is the special case
    (Q, S, R) = (0, I/2, 0).  Reports the minimum pair value and the
    violating pairs; a sampled check, not a proof.
    """
    items = list(samples)
    if len(items) < 2:
        raise ValueError("need at least two samples")
    min_value = np.inf
    argmin = None
    violations = []
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            du = items[i].u - items[j].u
            dy = items[i].y - items[j].y
            val = w.evaluate(du, dy)
            if val < min_value:
                min_value = val
                argmin = (i, j)
            if val < -tol:
                violations.append((i, j, val))
    return {
        "min_pair_value": float(min_value),
        "argmin_pair": argmin,
        "n_pairs": len(items) * (len(items) - 1) // 2,
        "violations": violations,
        "monotone": len(violations) == 0,
    }


def cocoercivity_check(samples, rho: float, tol: float = 1e-9) -> dict:
    """Sampled test of (y-y')ᵀ(u-u') >= rho ||y-y'||² over all pairs."""
    items = list(samples)
    worst = np.inf
    violations = 0
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            du = items[i].u - items[j].u
            dy = items[i].y - items[j].y
            margin = float(dy @ du - rho * dy @ dy)
            worst = min(worst, margin)
            if margin < -tol:
                violations += 1
    return {"min_margin": float(worst), "violations": violations,
            "holds": violations == 0}


def maximality_conditions(sys, samples: Optional[RelationSamples] = None,
                          rho: float = 1.0, seed: int = 0,
                          probes: int = 20, box: float = 2.0) -> dict:
    """Numerically checkable sufficient conditions for maximal monotonicity
    of the equilibrium I/O relation of a square system.

    - ``cocoercive_sampled``: the cocoercivity form evaluated on sample pairs
      (requires ``samples``);
    - ``f_homeomorphism_hint``: drift Jacobian (f, or f - id in discrete
      time) nonsingular at random probes — a hint only, not a proof;
    - ``f_zero_or_identity``: exact test on catalog metadata.
    """
    if not sys.square:
        raise ValueError("maximal-monotonicity conditions apply to square systems")
    report = {}
    if samples is not None and len(samples) >= 2:
        report["cocoercive_sampled"] = cocoercivity_check(samples, rho)["holds"]
    rng = np.random.default_rng(seed)
    hint = True
    for _ in range(probes):
        x = rng.uniform(-box, box, size=sys.n)
        Jf = (np.atleast_2d(sys.f_jac(x)) if sys.f_jac is not None
              else numerics.fd_jacobian(sys.f, x))
        if sys.discrete:
            Jf = Jf - np.eye(sys.n)
        s = np.linalg.svd(Jf, compute_uv=False)
        hint &= bool(s[-1] > 1e-8)
    report["f_homeomorphism_hint"] = hint
    if sys.discrete:
        report["f_zero_or_identity"] = bool(sys.meta.get("f_is_identity", False))
    else:
        report["f_zero_or_identity"] = bool(sys.meta.get("f_is_zero", False))
    return report
