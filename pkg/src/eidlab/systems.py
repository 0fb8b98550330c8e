"""Control-affine system representations and the example-system catalog.

Continuous-time systems are ``xdot = f(x) + G u, y = h(x) + J u`` and
discrete-time systems are ``x+ = f(x) + G u, y = h(x) + J u``, with constant
input and feedthrough matrices.  The catalog builds the benchmark families
used throughout the package from plain parameter dictionaries, so they can
also be loaded from JSON files.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numerics
from .errors import (
    DimensionMismatchError,
    MissingParamError,
    NonSymmetricError,
    UnknownSystemError,
    ConfigError,
)

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# supply rates


class SupplyRate:
    """Quadratic supply rate w(u, y) = [y; u]ᵀ [[Q, S], [Sᵀ, R]] [y; u]."""

    def __init__(self, Q, S, R, warn_definite: bool = True):
        self.Q = numerics.symmetrize(np.atleast_2d(np.asarray(Q, dtype=float)))
        self.S = np.atleast_2d(np.asarray(S, dtype=float))
        self.R = numerics.symmetrize(np.atleast_2d(np.asarray(R, dtype=float)))
        p, m = self.S.shape
        if self.Q.shape != (p, p) or self.R.shape != (m, m):
            raise DimensionMismatchError(
                f"incompatible supply blocks Q{self.Q.shape} S{self.S.shape} R{self.R.shape}"
            )
        self.p = p
        self.m = m
        if warn_definite:
            eig = numerics.sym_eigen(self.block())
            if eig.min > -1e-12 or eig.max < 1e-12:
                # sign-definite supplies make the dissipation inequality
                # trivial or infeasible; callers may do this on purpose
                warnings.warn("supply-rate block matrix is sign-definite", stacklevel=2)

    def block(self) -> np.ndarray:
        return np.block([[self.Q, self.S], [self.S.T, self.R]])

    def evaluate(self, u, y) -> float:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return float(y @ self.Q @ y + 2.0 * y @ self.S @ u + u @ self.R @ u)

    def rhat(self, J) -> np.ndarray:
        """Feedthrough-matched input block R + JᵀS + SᵀJ + JᵀQJ."""
        J = np.atleast_2d(np.asarray(J, dtype=float))
        return self.R + J.T @ self.S + self.S.T @ J + J.T @ self.Q @ J

    def __repr__(self):
        return f"SupplyRate(p={self.p}, m={self.m})"

    # common named supplies -------------------------------------------------

    @classmethod
    def passivity(cls, m: int) -> "SupplyRate":
        z = np.zeros((m, m))
        return cls(z, 0.5 * np.eye(m), z, warn_definite=False)

    @classmethod
    def l2_gain(cls, gamma: float, p: int, m: int) -> "SupplyRate":
        return cls(-np.eye(p), np.zeros((p, m)), gamma**2 * np.eye(m),
                   warn_definite=False)

    @classmethod
    def output_strict(cls, a: float, m: int) -> "SupplyRate":
        """OSP supply -a yᵀy + yᵀu."""
        return cls(-a * np.eye(m), 0.5 * np.eye(m), np.zeros((m, m)),
                   warn_definite=False)

    @classmethod
    def input_feedforward(cls, nu: float, m: int) -> "SupplyRate":
        """IFP supply yᵀu - nu uᵀu."""
        return cls(np.zeros((m, m)), 0.5 * np.eye(m), -nu * np.eye(m),
                   warn_definite=False)


# ---------------------------------------------------------------------------
# storage generators


@dataclass
class StorageGenerator:
    """Convex scalar function with gradient, from which Bregman storage
    families are derived.

    ``convexity_class`` is one of {"convex", "strictly_convex",
    "strongly_convex"}; ``mu`` is the declared strong-convexity modulus (only
    meaningful for the last class).
    """

    V: Callable[[np.ndarray], float]
    grad_V: Callable[[np.ndarray], np.ndarray]
    convexity_class: str = "convex"
    mu: float = 0.0
    name: str = "storage"

    def validate(self, region, probes: int = 1000, seed: int = 0,
                 grad_rtol: float = 1e-5) -> dict:
        """Sampled consistency checks inside a box region (lo, hi).

        Checks the analytic gradient against finite differences and, for a
        declared strongly convex generator, the secant inequality
        [∇V(x)-∇V(z)]ᵀ(x-z) >= mu ||x-z||² on random pairs.
        """
        lo, hi = (np.asarray(b, dtype=float) for b in region)
        rng = np.random.default_rng(seed)
        n = lo.size
        worst_grad = 0.0
        worst_secant = np.inf
        for _ in range(probes):
            x = rng.uniform(lo, hi, size=n)
            g = np.asarray(self.grad_V(x), dtype=float)
            g_fd = numerics.fd_gradient(self.V, x)
            scale = max(np.linalg.norm(g), 1.0)
            worst_grad = max(worst_grad, np.linalg.norm(g - g_fd) / scale)
            z = rng.uniform(lo, hi, size=n)
            d = np.linalg.norm(x - z) ** 2
            if d > 1e-16:
                gz = np.asarray(self.grad_V(z), dtype=float)
                worst_secant = min(worst_secant, float((g - gz) @ (x - z)) / d)
        mu_req = self.mu if self.convexity_class == "strongly_convex" else 0.0
        return {
            "grad_consistent": worst_grad <= grad_rtol,
            "max_grad_mismatch": worst_grad,
            "min_secant_ratio": worst_secant,
            "secant_ok": worst_secant >= mu_req - 1e-9,
        }

    @classmethod
    def quadratic(cls, P, name: str = "quadratic") -> "StorageGenerator":
        P = numerics.symmetrize(np.atleast_2d(np.asarray(P, dtype=float)))
        eig = numerics.sym_eigen(P)
        mu = max(eig.min, 0.0)
        cls_name = "strongly_convex" if eig.min > 1e-12 else "convex"
        return cls(
            V=lambda x: 0.5 * float(np.atleast_1d(x) @ P @ np.atleast_1d(x)),
            grad_V=lambda x: P @ np.atleast_1d(np.asarray(x, dtype=float)),
            convexity_class=cls_name,
            mu=mu,
            name=name,
        )


def _logcosh(z):
    # overflow-safe log(cosh(z))
    az = np.abs(z)
    return az + np.log1p(np.exp(-2.0 * az)) - np.log(2.0)


class SeparableConvex:
    """Separable phi(z) = sum_i (mu_i/2) z_i² + c_i log cosh(z_i).

    Smooth, strongly convex with modulus min(mu_i), gradient Lipschitz with
    constant max(mu_i + c_i); both constants are known in closed form, which
    is why this family backs the catalog systems used in gain tests.
    """

    def __init__(self, mu, c=None, n: Optional[int] = None):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if n is not None and mu.size == 1:
            mu = np.full(n, mu[0])
        if c is None:
            c = np.zeros_like(mu)
        c = np.atleast_1d(np.asarray(c, dtype=float))
        if c.size == 1 and mu.size > 1:
            c = np.full(mu.size, c[0])
        if c.shape != mu.shape:
            raise DimensionMismatchError("mu and c must have matching length")
        if np.any(mu <= 0) or np.any(c < 0):
            raise ValueError("need mu_i > 0 and c_i >= 0")
        self.mu_vec = mu
        self.c_vec = c
        self.n = mu.size

    @property
    def mu(self) -> float:
        return float(self.mu_vec.min())

    @property
    def lipschitz(self) -> float:
        return float((self.mu_vec + self.c_vec).max())

    def __call__(self, z) -> float:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return float(np.sum(0.5 * self.mu_vec * z**2 + self.c_vec * _logcosh(z)))

    def grad(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return self.mu_vec * z + self.c_vec * np.tanh(z)


# ---------------------------------------------------------------------------
# systems


class _ControlAffine:
    """Shared implementation for CT and DT control-affine systems."""

    discrete: bool = False

    def __init__(self, f, h, G, J=None, f_jac=None, name: str = "system",
                 storage: Optional[StorageGenerator] = None, meta: Optional[dict] = None):
        self.G = np.atleast_2d(np.asarray(G, dtype=float))
        self.n, self.m = self.G.shape
        if J is None:
            J = np.zeros((self._infer_p(h), self.m))
        self.J = np.atleast_2d(np.asarray(J, dtype=float))
        self.p = self.J.shape[0]
        if self.J.shape != (self.p, self.m):
            raise DimensionMismatchError("J must be p x m")
        if self.m > self.n or self.p > self.n:
            raise DimensionMismatchError(
                f"require m, p <= n, got n={self.n}, m={self.m}, p={self.p}"
            )
        sv = np.linalg.svd(self.G, compute_uv=False)
        if sv.size < self.m or sv[self.m - 1] <= 1e-10:
            raise DimensionMismatchError("G must have full column rank")
        self._f = f
        self._h = h
        self.f_jac = f_jac
        self.name = name
        self.storage = storage
        self.meta = dict(meta or {})

    def _infer_p(self, h):
        probe = np.atleast_1d(np.asarray(h(np.zeros(self.n)), dtype=float))
        return probe.size

    def f(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(self._f(np.asarray(x, dtype=float)), dtype=float))

    def h(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(self._h(np.asarray(x, dtype=float)), dtype=float))

    def output(self, x, u) -> np.ndarray:
        return self.h(x) + self.J @ np.atleast_1d(u)

    @property
    def square(self) -> bool:
        return self.m == self.p

    def __repr__(self):
        kind = "DtSystem" if self.discrete else "CtSystem"
        return f"{kind}({self.name!r}, n={self.n}, m={self.m}, p={self.p})"


class CtSystem(_ControlAffine):
    """Continuous-time control-affine system xdot = f(x) + G u."""

    discrete = False

    def rhs(self, x, u) -> np.ndarray:
        return self.f(x) + self.G @ np.atleast_1d(u)


class DtSystem(_ControlAffine):
    """Discrete-time control-affine system x+ = f(x) + G u."""

    discrete = True

    def step(self, x, u) -> np.ndarray:
        return self.f(x) + self.G @ np.atleast_1d(u)


# ---------------------------------------------------------------------------
# static nonlinearities and sector bounds


@dataclass(frozen=True)
class SectorBounds:
    """Diagonal incremental sector [K1, K2] with K = K2 - K1 ≻ 0."""

    K1: np.ndarray
    K2: np.ndarray

    def __post_init__(self):
        K1 = np.atleast_2d(np.asarray(self.K1, dtype=float))
        K2 = np.atleast_2d(np.asarray(self.K2, dtype=float))
        object.__setattr__(self, "K1", K1)
        object.__setattr__(self, "K2", K2)
        if K1.shape != K2.shape or K1.shape[0] != K1.shape[1]:
            raise DimensionMismatchError("K1, K2 must be square and same size")
        for M in (K1, K2):
            if np.any(M - np.diag(np.diagonal(M)) != 0.0):
                raise NonSymmetricError("sector bounds must be diagonal")
        if np.any(np.diagonal(K2 - K1) <= 0):
            raise ValueError("require K2 - K1 positive definite")

    @property
    def K(self) -> np.ndarray:
        return self.K2 - self.K1

    @property
    def m(self) -> int:
        return self.K1.shape[0]

    @classmethod
    def scalar(cls, alpha: float, beta: float, m: int = 1) -> "SectorBounds":
        return cls(alpha * np.eye(m), beta * np.eye(m))


@dataclass
class StaticNonlinearity:
    """Memoryless map psi: R^m -> R^m with an optional declared sector."""

    psi: Callable[[np.ndarray], np.ndarray]
    m: int = 1
    bounds: Optional[SectorBounds] = None
    name: str = "psi"

    def __call__(self, z) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.psi(np.atleast_1d(z)), dtype=float))


# ---------------------------------------------------------------------------
# catalog


def _require(params: dict, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise MissingParamError(f"missing parameter(s): {', '.join(missing)}")


def _phi_from_params(params: dict, n_key: str = "n") -> SeparableConvex:
    _require(params, "mu")
    return SeparableConvex(params["mu"], params.get("c"), n=params.get(n_key))


def _build_second_order(params: dict):
    # xdot1 = x2, xdot2 = -U'(x1) - x2 + u, y = x2, with U strictly convex
    U = _phi_from_params({**params, "n": 1})
    f = lambda x: np.array([x[1], -U.grad(x[:1])[0] - x[1]])
    h = lambda x: np.array([x[1]])
    G = np.array([[0.0], [1.0]])
    gen = StorageGenerator(
        V=lambda x: U(x[:1]) + 0.5 * x[1] ** 2,
        grad_V=lambda x: np.array([U.grad(x[:1])[0], x[1]]),
        convexity_class="strongly_convex",
        mu=min(U.mu, 1.0),
        name="mechanical energy",
    )
    sys = CtSystem(f, h, G, name="second_order", storage=gen,
                   meta={"family": "second_order", "U": U})
    return sys


def _build_port_hamiltonian(params: dict):
    _require(params, "J", "R", "G")
    Jm = np.atleast_2d(np.asarray(params["J"], dtype=float))
    Rm = numerics.symmetrize(np.atleast_2d(np.asarray(params["R"], dtype=float)))
    G = np.atleast_2d(np.asarray(params["G"], dtype=float))
    n = G.shape[0]
    if np.linalg.norm(Jm + Jm.T) > 1e-10:
        raise NonSymmetricError("interconnection matrix must be skew-symmetric")
    if numerics.sym_eigen(Rm).min < -1e-10:
        raise ValueError("dissipation matrix must be PSD")
    d = np.asarray(params.get("d", np.zeros(n)), dtype=float)
    ham = params.get("hamiltonian", {})
    P = np.atleast_2d(np.asarray(ham.get("P", np.eye(n)), dtype=float))
    c = np.atleast_1d(np.asarray(ham.get("c", np.zeros(n)), dtype=float))

    def H(x):
        x = np.atleast_1d(x)
        return 0.5 * float(x @ P @ x) + float(np.sum(c * _logcosh(x)))

    def grad_H(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return P @ x + c * np.tanh(x)

    mu = max(numerics.sym_eigen(P).min, 0.0)
    gen = StorageGenerator(V=H, grad_V=grad_H,
                           convexity_class="strongly_convex" if mu > 1e-12 else "convex",
                           mu=mu, name="hamiltonian")
    A = Jm - Rm
    f = lambda x: A @ grad_H(x) + d
    h = lambda x: G.T @ grad_H(x)
    sqR = numerics.psd_sqrt(Rm)
    meta = {"family": "port_hamiltonian", "R": Rm, "Jmat": Jm, "sqrt_R": sqR,
            "grad_H": grad_H}
    return CtSystem(f, h, G, name="port_hamiltonian", storage=gen, meta=meta)


def _build_gradient_ff(params: dict):
    # tau xdot = -grad(phi) + g u, y = g x + j u; square system m = p = n
    _require(params, "g", "j")
    phi = _phi_from_params(params)
    n = phi.n
    g = float(params["g"])
    j = float(params["j"])
    tau = np.atleast_1d(np.asarray(params.get("tau", np.ones(n)), dtype=float))
    if tau.size == 1:
        tau = np.full(n, tau[0])
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    tinv = 1.0 / tau
    f = lambda x: -tinv * phi.grad(x)
    h = lambda x: g * np.atleast_1d(x)
    G = np.diag(tinv) * g
    J = j * np.eye(n)
    gen = StorageGenerator.quadratic(np.diag(tau), name="tau-weighted quadratic")
    meta = {"family": "gradient_ff", "phi": phi, "g": g, "j": j, "tau": tau}
    return CtSystem(f, h, G, J=J, name="gradient_ff", storage=gen, meta=meta)


def _build_ahu_saddle(params: dict):
    # primal-dual flow for min phi(z) + 0.5(Az-b)'K(Az-b) s.t. Az = b,
    # with disturbance input on the primal dynamics and output y = z
    _require(params, "A", "b")
    phi = _phi_from_params(params, n_key="n1")
    A = np.atleast_2d(np.asarray(params["A"], dtype=float))
    b = np.atleast_1d(np.asarray(params["b"], dtype=float))
    n2, n1 = A.shape
    if n1 != phi.n or b.size != n2:
        raise DimensionMismatchError("A, b, phi dimensions inconsistent")
    if np.linalg.matrix_rank(A) < n2:
        raise ValueError("A must have full row rank")
    K = numerics.symmetrize(np.atleast_2d(np.asarray(params.get("K", np.zeros((n2, n2))), dtype=float)))
    if numerics.sym_eigen(K).min < -1e-10:
        raise ValueError("K must be PSD")

    M_plus = np.diag(phi.mu_vec) + A.T @ K @ A
    lam_min = numerics.sym_eigen(M_plus).min
    alpha = float(params.get("alpha", 2.0 / lam_min if lam_min > 0 else 1.0))

    def f(x):
        z, lam = x[:n1], x[n1:]
        res = A @ z - b
        return np.concatenate([-phi.grad(z) - A.T @ (K @ res) - A.T @ lam, res])

    h = lambda x: x[:n1]
    G = np.vstack([np.eye(n1), np.zeros((n2, n1))])
    gen = StorageGenerator.quadratic(
        np.diag(np.concatenate([np.full(n1, alpha), np.ones(n2)])),
        name="weighted saddle quadratic",
    )
    meta = {"family": "ahu_saddle", "phi": phi, "A": A, "b": b, "K": K,
            "alpha": alpha, "n1": n1, "n2": n2}
    return CtSystem(f, h, G, name="ahu_saddle", storage=gen, meta=meta)


def _build_smib(params: dict):
    # swing dynamics: thetadot = omega, M omegadot = P_m - b V² sin(theta) - D omega + u
    _require(params, "M", "D", "b", "V")
    M = float(params["M"])
    D = float(params["D"])
    bcoef = float(params["b"])
    Vbus = float(params["V"])
    Pm = float(params.get("P_m", 0.0))
    if min(M, D, bcoef, Vbus) <= 0:
        raise ValueError("M, D, b, V must be positive")
    bv2 = bcoef * Vbus**2
    f = lambda x: np.array([x[1], (Pm - bv2 * np.sin(x[0]) - D * x[1]) / M])
    h = lambda x: np.array([x[1]])
    G = np.array([[0.0], [1.0 / M]])
    # energy function; convex only on |theta| <= pi/2, which is the region
    # the absolute-stability analysis restricts itself to
    gen = StorageGenerator(
        V=lambda x: 0.5 * M * x[1] ** 2 + bv2 * (1.0 - np.cos(x[0])),
        grad_V=lambda x: np.array([bv2 * np.sin(x[0]), M * x[1]]),
        convexity_class="convex",
        name="smib energy",
    )
    meta = {"family": "smib", "M": M, "D": D, "b": bcoef, "V": Vbus, "P_m": Pm}
    return CtSystem(f, h, G, name="smib", storage=gen, meta=meta)


def _build_dt_gradient(params: dict):
    # x+ = x - alpha (grad phi(x) - v), y = x
    _require(params, "alpha")
    phi = _phi_from_params(params)
    alpha = float(params["alpha"])
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n = phi.n
    f = lambda x: np.atleast_1d(x) - alpha * phi.grad(x)
    h = lambda x: np.atleast_1d(x)
    G = alpha * np.eye(n)
    gen = StorageGenerator.quadratic(np.eye(n) / alpha, name="scaled quadratic")
    meta = {"family": "dt_gradient", "phi": phi, "alpha": alpha,
            "P": np.eye(n) / (2.0 * alpha)}
    return DtSystem(f, h, G, name="dt_gradient", storage=gen, meta=meta)


def _build_dt_integrator(params: dict):
    _require(params, "alpha")
    alpha = float(params["alpha"])
    n = int(params.get("n", 1))
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    f = lambda x: np.atleast_1d(np.asarray(x, dtype=float))
    h = lambda x: np.atleast_1d(np.asarray(x, dtype=float))
    G = alpha * np.eye(n)
    gen = StorageGenerator.quadratic(np.eye(n) / alpha, name="scaled quadratic")
    meta = {"family": "dt_integrator", "alpha": alpha, "f_is_identity": True,
            "P": np.eye(n) / (2.0 * alpha)}
    return DtSystem(f, h, G, name="dt_integrator", storage=gen, meta=meta)


def _build_lti(params: dict):
    _require(params, "F", "G")
    F = np.atleast_2d(np.asarray(params["F"], dtype=float))
    G = np.atleast_2d(np.asarray(params["G"], dtype=float))
    n = F.shape[0]
    H = np.atleast_2d(np.asarray(params.get("H", np.eye(n)), dtype=float))
    J = np.atleast_2d(np.asarray(params["J"], dtype=float)) if "J" in params else None
    discrete = bool(params.get("discrete", False))
    f = lambda x: F @ np.atleast_1d(x)
    h = lambda x: H @ np.atleast_1d(x)
    meta = {"family": "lti", "F": F, "H": H, "f_is_zero": bool(np.all(F == 0))}
    cls = DtSystem if discrete else CtSystem
    return cls(f, h, G, J=J, f_jac=lambda x: F, name="lti", meta=meta)


_FAMILIES = {
    "second_order": _build_second_order,
    "port_hamiltonian": _build_port_hamiltonian,
    "gradient_ff": _build_gradient_ff,
    "ahu_saddle": _build_ahu_saddle,
    "smib": _build_smib,
    "dt_gradient": _build_dt_gradient,
    "dt_integrator": _build_dt_integrator,
    "lti": _build_lti,
}


def catalog_build(name: str, params: Optional[dict] = None):
    """Build a catalog system by family name.

    Known families: second_order, port_hamiltonian, gradient_ff, ahu_saddle,
    smib, dt_gradient, dt_integrator, lti.
    """
    if name not in _FAMILIES:
        raise UnknownSystemError(
            f"unknown family {name!r}; known: {sorted(_FAMILIES)}"
        )
    return _FAMILIES[name](dict(params or {}))


def load_system(source):
    """Load a system from a JSON file path, JSON string, or parsed dict.

    Schema: {"schema": 1, "family": "<name>", "params": {...}} with matrices
    as row-major nested arrays.  Unknown top-level keys are rejected.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = source
        try:
            if "{" not in str(source):
                with open(source) as fh:
                    text = fh.read()
            doc = json.loads(text)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load system description: {exc}") from exc
    unknown = set(doc) - {"schema", "family", "params"}
    if unknown:
        raise ConfigError(f"unknown keys in system file: {sorted(unknown)}")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema {doc.get('schema')!r}, expected {SCHEMA_VERSION}")
    if "family" not in doc:
        raise ConfigError("system file missing 'family'")
    return catalog_build(doc["family"], doc.get("params", {}))


# ---------------------------------------------------------------------------
# validation


def validate_system(sys, probes: int = 20, seed: int = 0, box: float = 2.0) -> dict:
    """Sampled sanity report for a system: rank(G), finiteness of f and h at
    random probes, and consistency of an analytic Jacobian when present.

    Failures are recorded in the report, never raised.
    """
    rng = np.random.default_rng(seed)
    checks = {}
    sv = np.linalg.svd(sys.G, compute_uv=False)
    checks["G_full_column_rank"] = bool(sv.size >= sys.m and sv[sys.m - 1] > 1e-10)
    finite = True
    jac_ok = True
    worst_jac = 0.0
    for _ in range(probes):
        x = rng.uniform(-box, box, size=sys.n)
        try:
            fx = sys.f(x)
            hx = sys.h(x)
            finite &= bool(np.all(np.isfinite(fx)) and np.all(np.isfinite(hx)))
        except Exception:
            finite = False
            continue
        if sys.f_jac is not None:
            Ja = np.atleast_2d(sys.f_jac(x))
            Jn = numerics.fd_jacobian(sys.f, x)
            scale = max(np.linalg.norm(Jn), 1.0)
            worst_jac = max(worst_jac, np.linalg.norm(Ja - Jn) / scale)
            jac_ok &= worst_jac <= 1e-4
    checks["f_h_finite"] = finite
    if sys.f_jac is not None:
        checks["jacobian_consistent"] = bool(jac_ok)
        checks["max_jacobian_mismatch"] = worst_jac
    checks["ok"] = all(v for k, v in checks.items() if isinstance(v, bool))
    return checks
