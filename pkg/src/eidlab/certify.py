"""Hill-Moylan-type certificate verification.

Continuous time: for a convex generator V the Bregman family
``V_xb(x) = V(x) - V(xb) - ∇V(xb)ᵀ(x - xb)`` certifies equilibrium-
independent dissipativity with the quadratic supply (Q, S, R) iff there are
W and ell(x, xb) with

  (a)  [∇V(x)-∇V(xb)]ᵀ[f(x)-f(xb)] = ΔhᵀQΔh - ||ell||²
  (b)  ½[∇V(x)-∇V(xb)]ᵀG = Δhᵀ(QJ+S) - ellᵀW
  (c)  WᵀW = R + JᵀS + SᵀJ + JᵀQJ  (=: Rhat)

Discrete time uses the quadratic family ``V_xb(x) = ||x - xb||_P²`` with the
analogous three conditions, where (c) becomes WᵀW = Rhat - GᵀPG.

Verification here is pointwise over sampled (x, xb) pairs with explicit
tolerances: quantified sampled evidence, not a proof.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numerics
from .equilibria import EquilibriumMap, IoSample
from .errors import DimensionMismatchError, RhatNotPsdError
from .systems import SectorBounds, StaticNonlinearity, StorageGenerator, SupplyRate

DEFAULT_TOL_A = 1e-7
DEFAULT_TOL_B = 1e-7
DEFAULT_TOL_C = 1e-10
DEFAULT_PAIR_COUNT = 2000


def bregman(generator: StorageGenerator, xbar, x) -> float:
    """Bregman divergence V(x) - V(xb) - ∇V(xb)ᵀ(x - xb)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    return float(
        generator.V(x) - generator.V(xbar)
        - np.asarray(generator.grad_V(xbar), dtype=float) @ (x - xbar)
    )


@dataclass
class BregmanStorage:
    """Storage function anchored at one equilibrium state."""

    generator: StorageGenerator
    xbar: np.ndarray

    def __post_init__(self):
        self.xbar = np.atleast_1d(np.asarray(self.xbar, dtype=float))
        self._gbar = np.asarray(self.generator.grad_V(self.xbar), dtype=float)

    def __call__(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(self.generator.V(x) - self.generator.V(self.xbar)
                     - self._gbar @ (x - self.xbar))

    def grad(self, x) -> np.ndarray:
        return np.asarray(self.generator.grad_V(x), dtype=float) - self._gbar


def sample_pairs(sys, region, count: int = DEFAULT_PAIR_COUNT, seed: int = 0,
                 emap: Optional[EquilibriumMap] = None):
    """Sample (x, equilibrium) pairs for certificate checks.

    States x are uniform in the box; equilibria are projected into the
    assignable set.  The degenerate pair x == xb is always included first —
    it forces a = 0 and b-difference = 0 and catches sign errors cheaply.
    """
    emap = emap or EquilibriumMap(sys)
    lo, hi = (np.asarray(b, dtype=float) for b in region)
    rng = np.random.default_rng(seed)
    eqs = emap.sample_io_relation(region, max(2, count // 8), seed=seed + 1)
    if len(eqs) == 0:
        raise ValueError("no equilibria found in the sampling region")
    eq_list = list(eqs)
    pairs = [(eq_list[0].x.copy(), eq_list[0])]
    while len(pairs) < count:
        x = rng.uniform(lo, hi, size=sys.n)
        pairs.append((x, eq_list[rng.integers(len(eq_list))]))
    return pairs


def canonical_w(rhat, tol: float = DEFAULT_TOL_C) -> np.ndarray:
    """Symmetric PSD square root of Rhat, the canonical constant factor.

    Any other valid W differs from this one by a left orthogonal factor, so
    nothing is lost by the choice.  Raises RhatNotPsdError when Rhat has an
    eigenvalue below -tol (no constant W exists).
    """
    eig = numerics.sym_eigen(rhat)
    if eig.min < -max(tol, 1e-12):
        raise RhatNotPsdError(
            f"effective input block has eigenvalue {eig.min:.3e} < 0"
        )
    vals = np.clip(eig.eigenvalues, 0.0, None)
    V = eig.eigenvectors
    return V @ np.diag(np.sqrt(vals)) @ V.T


@dataclass
class ResidualStats:
    max_a_violation: float = 0.0
    max_b_residual: float = 0.0
    c_residual: float = 0.0
    worst_pair_index: int = -1

    def as_dict(self) -> dict:
        return {
            "max_a_violation": self.max_a_violation,
            "max_b_residual": self.max_b_residual,
            "c_residual": self.c_residual,
            "worst_pair_index": self.worst_pair_index,
        }


@dataclass
class EidCertificate:
    """Outcome of a sampled continuous-time EID verification."""

    system_name: str
    supply: SupplyRate
    W: np.ndarray
    mode: str
    tolerances: dict
    stats: ResidualStats
    n_pairs: int
    passed: bool
    seed: Optional[int] = None

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "system": self.system_name,
            "supply": {"Q": self.supply.Q.tolist(), "S": self.supply.S.tolist(),
                       "R": self.supply.R.tolist()},
            "W": self.W.tolist(),
            "mode": self.mode,
            "tolerances": self.tolerances,
            "residuals": self.stats.as_dict(),
            "n_pairs": self.n_pairs,
            "seed": self.seed,
            "verdict": self.verdict,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


# same shape in discrete time, kept as an alias for type clarity
DtEidCertificate = EidCertificate


def _ell_values(W, c_vec, ell, x, xbar):
    """Per-pair ell: user-supplied, or the minimum-norm solution of
    Wᵀ ell = c.  Any kernel component of Wᵀ only makes condition (a)
    harder, so minimum norm is the favourable canonical choice."""
    if ell is not None:
        return np.atleast_1d(np.asarray(ell(x, xbar), dtype=float))
    sol, *_ = np.linalg.lstsq(W.T, c_vec, rcond=None)
    return sol


def _b_residual(W, lvec, c_vec) -> float:
    """Residual of Wᵀ ell = c, padding W with zero rows when the supplied
    ell has more components (zero rows leave WᵀW unchanged)."""
    r = W.shape[0]
    if lvec.size < r:
        raise DimensionMismatchError(
            f"ell has {lvec.size} components but W has {r} rows"
        )
    return float(np.linalg.norm(W.T @ lvec[:r] - c_vec))


def verify_eid_ct(
    sys,
    w: SupplyRate,
    gen: StorageGenerator,
    pairs,
    W: Optional[np.ndarray] = None,
    ell: Optional[Callable] = None,
    mode: str = "inequality",
    tol_a: float = DEFAULT_TOL_A,
    tol_b: float = DEFAULT_TOL_B,
    tol_c: float = DEFAULT_TOL_C,
    seed: Optional[int] = None,
) -> EidCertificate:
    """Check the continuous-time EID conditions on sampled (x, xb) pairs.

    ``pairs`` is a sequence of (x, IoSample) tuples with the sample drawn
    from the equilibrium set.  ``mode="inequality"`` accepts condition (a)
    as LHS <= RHS + tol, which is how all the worked examples establish
    EID; ``mode="equality"`` is for exact certificates.
    """
    if sys.discrete:
        raise DimensionMismatchError("verify_eid_ct expects a continuous-time system")
    if mode not in ("equality", "inequality"):
        raise ValueError(f"unknown mode {mode!r}")
    rhat = w.rhat(sys.J)
    if W is None:
        W = canonical_w(rhat, tol_c)
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape[1] != sys.m:
        raise DimensionMismatchError(f"W must have {sys.m} columns")
    c_res = float(np.linalg.norm(W.T @ W - rhat))
    QJS = w.Q @ sys.J + w.S

    stats = ResidualStats(c_residual=c_res)
    for idx, (x, eq) in enumerate(pairs):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xbar = eq.x if isinstance(eq, IoSample) else np.atleast_1d(np.asarray(eq, dtype=float))
        dgrad = (np.asarray(gen.grad_V(x), dtype=float)
                 - np.asarray(gen.grad_V(xbar), dtype=float))
        df = sys.f(x) - sys.f(xbar)
        dh = sys.h(x) - sys.h(xbar)
        c_vec = QJS.T @ dh - 0.5 * sys.G.T @ dgrad
        lvec = _ell_values(W, c_vec, ell, x, xbar)
        b_res = _b_residual(W, lvec, c_vec)
        lhs = float(dgrad @ df)
        rhs = float(dh @ w.Q @ dh) - float(lvec @ lvec)
        a_viol = abs(lhs - rhs) if mode == "equality" else max(lhs - rhs, 0.0)
        if a_viol > stats.max_a_violation or b_res > stats.max_b_residual:
            stats.worst_pair_index = idx
        stats.max_a_violation = max(stats.max_a_violation, a_viol)
        stats.max_b_residual = max(stats.max_b_residual, b_res)

    passed = (stats.max_a_violation <= tol_a and stats.max_b_residual <= tol_b
              and c_res <= tol_c)
    return EidCertificate(
        system_name=sys.name, supply=w, W=W, mode=mode,
        tolerances={"tol_a": tol_a, "tol_b": tol_b, "tol_c": tol_c},
        stats=stats, n_pairs=len(pairs), passed=passed, seed=seed,
    )


def verify_eid_dt(
    sys,
    w: SupplyRate,
    P,
    pairs,
    W: Optional[np.ndarray] = None,
    ell: Optional[Callable] = None,
    mode: str = "inequality",
    tol_a: float = DEFAULT_TOL_A,
    tol_b: float = DEFAULT_TOL_B,
    tol_c: float = DEFAULT_TOL_C,
    seed: Optional[int] = None,
) -> DtEidCertificate:
    """Discrete-time analogue of :func:`verify_eid_ct` with storage
    ``V_xb(x) = ||x - xb||_P²`` for a PSD matrix P."""
    if not sys.discrete:
        raise DimensionMismatchError("verify_eid_dt expects a discrete-time system")
    if mode not in ("equality", "inequality"):
        raise ValueError(f"unknown mode {mode!r}")
    P = numerics.symmetrize(np.atleast_2d(np.asarray(P, dtype=float)))
    if numerics.sym_eigen(P).min < -1e-10:
        raise RhatNotPsdError("P must be positive semidefinite")
    rhat_eff = w.rhat(sys.J) - sys.G.T @ P @ sys.G
    if W is None:
        W = canonical_w(rhat_eff, tol_c)
    W = np.atleast_2d(np.asarray(W, dtype=float))
    c_res = float(np.linalg.norm(W.T @ W - rhat_eff))
    QJS = w.Q @ sys.J + w.S

    stats = ResidualStats(c_residual=c_res)
    for idx, (x, eq) in enumerate(pairs):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xbar = eq.x if isinstance(eq, IoSample) else np.atleast_1d(np.asarray(eq, dtype=float))
        dx = x - xbar
        df = sys.f(x) - sys.f(xbar)
        dh = sys.h(x) - sys.h(xbar)
        c_vec = QJS.T @ dh - sys.G.T @ (P @ df)
        lvec = _ell_values(W, c_vec, ell, x, xbar)
        b_res = _b_residual(W, lvec, c_vec)
        lhs = float(df @ P @ df) - float(dx @ P @ dx)
        rhs = float(dh @ w.Q @ dh) - float(lvec @ lvec)
        a_viol = abs(lhs - rhs) if mode == "equality" else max(lhs - rhs, 0.0)
        if a_viol > stats.max_a_violation or b_res > stats.max_b_residual:
            stats.worst_pair_index = idx
        stats.max_a_violation = max(stats.max_a_violation, a_viol)
        stats.max_b_residual = max(stats.max_b_residual, b_res)

    passed = (stats.max_a_violation <= tol_a and stats.max_b_residual <= tol_b
              and c_res <= tol_c)
    return DtEidCertificate(
        system_name=sys.name, supply=w, W=W, mode=mode,
        tolerances={"tol_a": tol_a, "tol_b": tol_b, "tol_c": tol_c},
        stats=stats, n_pairs=len(pairs), passed=passed, seed=seed,
    )


@dataclass
class FactorizationResult:
    """Dissipation matrix data at one (x, xb) pair.

    A negative PSD margin at any pair certifies non-EID for the given
    (supply, storage) combination.
    """

    a: float
    b_difference: np.ndarray
    rhat_eff: np.ndarray
    D: np.ndarray
    psd_margin: float
    rank: int


def factor_dissipation(sys, w: SupplyRate, storage, pair,
                       rank_tol: float = 1e-9) -> FactorizationResult:
    """Assemble the (m+1) x (m+1) dissipation matrix

        D = [[a, (b(x)-b(xb))ᵀ], [b(x)-b(xb), Rhat_eff]]

    at one pair and report its PSD margin.  ``storage`` is a
    StorageGenerator in continuous time or a PSD matrix P in discrete time.
    """
    x, eq = pair
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xbar = eq.x if isinstance(eq, IoSample) else np.atleast_1d(np.asarray(eq, dtype=float))
    dh = sys.h(x) - sys.h(xbar)
    df = sys.f(x) - sys.f(xbar)
    QJS = w.Q @ sys.J + w.S
    if sys.discrete:
        P = numerics.symmetrize(np.atleast_2d(np.asarray(storage, dtype=float)))
        dx = x - xbar
        a = float(dx @ P @ dx) - float(df @ P @ df) + float(dh @ w.Q @ dh)
        bdiff = QJS.T @ dh - sys.G.T @ (P @ df)
        rhat_eff = w.rhat(sys.J) - sys.G.T @ P @ sys.G
    else:
        dgrad = (np.asarray(storage.grad_V(x), dtype=float)
                 - np.asarray(storage.grad_V(xbar), dtype=float))
        a = -float(dgrad @ df) + float(dh @ w.Q @ dh)
        bdiff = QJS.T @ dh - 0.5 * sys.G.T @ dgrad
        rhat_eff = w.rhat(sys.J)
    D = np.block([[np.array([[a]]), bdiff[None, :]], [bdiff[:, None], rhat_eff]])
    eig = numerics.sym_eigen(D)
    rank = int(np.sum(eig.eigenvalues > rank_tol * max(abs(eig.max), 1.0)))
    return FactorizationResult(a=a, b_difference=bdiff, rhat_eff=rhat_eff,
                               D=D, psd_margin=eig.min, rank=rank)


def check_sector(psi: StaticNonlinearity, bounds: SectorBounds, probes,
                 tol: float = 1e-9) -> dict:
    """Validate a declared incremental sector by sampling pairs.

    Evaluates the incremental dissipation form with parameters
    (Q, S, R) = (-I, (K1+K2)/2, -K1 K2) on each probe pair and reports the
    minimum margin.
    """
    supply = SupplyRate(-np.eye(bounds.m), 0.5 * (bounds.K1 + bounds.K2),
                        -bounds.K1 @ bounds.K2, warn_definite=False)
    worst = np.inf
    violations = 0
    for z1, z2 in probes:
        dz = np.atleast_1d(z2) - np.atleast_1d(z1)
        dpsi = psi(z2) - psi(z1)
        margin = supply.evaluate(dz, dpsi)
        worst = min(worst, margin)
        if margin < -tol:
            violations += 1
    return {"min_margin": float(worst), "violations": violations,
            "holds": violations == 0}


def sector_supply(bounds: SectorBounds) -> SupplyRate:
    """Supply rate satisfied by any nonlinearity in the incremental sector."""
    return SupplyRate(-np.eye(bounds.m), 0.5 * (bounds.K1 + bounds.K2),
                      -bounds.K1 @ bounds.K2, warn_definite=False)


def verify_kyp_lti(F, G, H, J, w: SupplyRate, P, tol: float = 1e-9) -> dict:
    """LTI dissipativity check for a GIVEN quadratic storage ½ xᵀPx.

    Assembles M(P) = [[FᵀP+PF, PG], [GᵀP, 0]] - [H J; 0 I]ᵀ [Q S; Sᵀ R]
    [H J; 0 I] and passes iff λ_max(M) <= tol — equivalent to the existence
    of an (L, W) factor completing the linear matrix equality.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    G = np.atleast_2d(np.asarray(G, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    J = np.atleast_2d(np.asarray(J, dtype=float))
    P = numerics.symmetrize(np.atleast_2d(np.asarray(P, dtype=float)))
    n, m = G.shape
    p = H.shape[0]
    if F.shape != (n, n) or H.shape[1] != n or J.shape != (p, m) or P.shape != (n, n):
        raise DimensionMismatchError("inconsistent LTI matrix dimensions")
    top = np.block([[F.T @ P + P @ F, P @ G], [G.T @ P, np.zeros((m, m))]])
    io = np.block([[H, J], [np.zeros((m, n)), np.eye(m)]])
    M = top - io.T @ w.block() @ io
    lam_max = numerics.sym_eigen(M).max
    return {"M": M, "lambda_max": float(lam_max), "passed": bool(lam_max <= tol)}
