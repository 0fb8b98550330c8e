import numpy as np
import pytest

from eidlab import numerics
from eidlab.errors import (
    NoConvergenceError,
    NonFiniteError,
    NonSymmetricError,
    SingularJacobianError,
)


def test_require_finite_passes_and_raises():
    a = numerics.require_finite([1.0, 2.0])
    assert a.dtype == float
    with pytest.raises(NonFiniteError):
        numerics.require_finite([1.0, np.nan])
    with pytest.raises(NonFiniteError):
        numerics.require_finite([np.inf])


def test_symmetrize_accepts_roundoff_asymmetry():
    A = np.array([[2.0, 1.0], [1.0 + 1e-15, 3.0]])
    S = numerics.symmetrize(A)
    assert np.allclose(S, S.T)


def test_symmetrize_rejects_genuine_asymmetry():
    with pytest.raises(NonSymmetricError):
        numerics.symmetrize(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    with pytest.raises(NonSymmetricError):
        numerics.symmetrize(np.ones((2, 3)))


def test_sym_eigen_matches_characteristic_polynomial():
    # 2x2 eigenvalues by the quadratic formula as an independent oracle
    A = np.array([[3.0, 1.0], [1.0, -2.0]])
    tr, det = np.trace(A), np.linalg.det(A)
    disc = np.sqrt(tr**2 - 4.0 * det)
    lo, hi = (tr - disc) / 2.0, (tr + disc) / 2.0
    eig = numerics.sym_eigen(A)
    assert eig.min == pytest.approx(lo, abs=1e-12)
    assert eig.max == pytest.approx(hi, abs=1e-12)
    # eigenvector residual
    for i in range(2):
        v = eig.eigenvectors[:, i]
        assert np.linalg.norm(A @ v - eig.eigenvalues[i] * v) < 1e-12


def _form_oracle(A, tol=1e-8, trials=2000, seed=0):
    """Sign classification of x'Ax by dense sampling plus eigen-direction
    probes; independent of psd_check's implementation."""
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(trials, A.shape[0]))
    vecs = np.vstack([vecs, np.linalg.eigh(0.5 * (A + A.T))[1].T])
    vals = np.einsum("ij,jk,ik->i", vecs, A, vecs) / np.einsum("ij,ij->i", vecs, vecs)
    has_pos = np.any(vals > tol)
    has_neg = np.any(vals < -tol)
    if has_pos and has_neg:
        return "Indefinite"
    if has_pos:
        return "PD" if np.all(vals > tol) else "PSD"
    if has_neg:
        return "ND" if np.all(vals < -tol) else "NSD"
    return "PSD"  # matches psd_check's convention for the near-zero matrix


def test_psd_check_constructed_cases():
    assert numerics.psd_check(np.eye(3)) == "PD"
    assert numerics.psd_check(-np.eye(3)) == "ND"
    assert numerics.psd_check(np.diag([1.0, 0.0])) == "PSD"
    assert numerics.psd_check(np.diag([-1.0, 0.0])) == "NSD"
    assert numerics.psd_check(np.diag([1.0, -1.0])) == "Indefinite"
    assert numerics.psd_check(np.zeros((2, 2))) == "PSD"
    assert numerics.is_psd(np.zeros((2, 2))) and numerics.is_nsd(np.zeros((2, 2)))


def test_psd_check_against_quadratic_form_oracle():
    rng = np.random.default_rng(42)
    for k in range(200):
        B = rng.normal(size=(3, 3))
        kind = k % 4
        if kind == 0:
            A = B @ B.T + 0.1 * np.eye(3)
        elif kind == 1:
            A = -(B @ B.T) - 0.1 * np.eye(3)
        elif kind == 2:
            A = 0.5 * (B + B.T)
        else:
            v = rng.normal(size=3)
            A = np.outer(v, v)  # rank-1 PSD
        verdict = numerics.psd_check(A).value
        oracle = _form_oracle(A, seed=k)
        assert verdict == oracle, f"case {k}: {verdict} vs oracle {oracle}"


def test_psd_sqrt_roundtrip():
    rng = np.random.default_rng(1)
    B = rng.normal(size=(4, 4))
    A = B @ B.T
    S = numerics.psd_sqrt(A)
    assert np.allclose(S @ S, A, atol=1e-10)
    assert np.allclose(S, S.T)


def test_fd_jacobian_against_analytic():
    F = lambda x: np.array([x[0] ** 2 + x[1], np.sin(x[0]) * x[1]])
    x = np.array([0.7, -1.2])
    J_true = np.array([[2 * x[0], 1.0], [np.cos(x[0]) * x[1], np.sin(x[0])]])
    assert np.allclose(numerics.fd_jacobian(F, x), J_true, atol=1e-7)
    g = numerics.fd_gradient(lambda z: z[0] ** 3 + z[1] ** 2, x)
    assert np.allclose(g, [3 * x[0] ** 2, 2 * x[1]], atol=1e-6)


def _bisection(f, lo, hi, tol=1e-12):
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) < tol or hi - lo < tol:
            return mid
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def test_newton_against_bisection_oracle():
    f = lambda x: np.cos(x[0]) - x[0]
    root = numerics.newton_root(f, np.array([0.5]))
    oracle = _bisection(lambda t: np.cos(t) - t, 0.0, 1.0)
    assert abs(root[0] - oracle) < 1e-9


def test_newton_multidim_and_supplied_jacobian():
    F = lambda x: np.array([x[0] ** 2 - 2.0, x[0] * x[1] - 1.0])
    J = lambda x: np.array([[2 * x[0], 0.0], [x[1], x[0]]])
    root = numerics.newton_root(F, [1.0, 1.0], jac=J)
    assert np.allclose(root, [np.sqrt(2.0), 1.0 / np.sqrt(2.0)], atol=1e-9)


def test_newton_singular_jacobian_raises():
    with pytest.raises(SingularJacobianError):
        numerics.newton_root(lambda x: np.array([x[0] ** 2]), [10.0], jac=lambda x: np.array([[0.0]]))


def test_newton_no_convergence_raises():
    with pytest.raises(NoConvergenceError):
        # Newton on the cube root diverges (x <- -2x), never reaching tol
        numerics.newton_root(lambda x: np.cbrt(x), [1.0], max_iter=5)


def test_rk4_exact_linear_decay():
    x = np.array([1.0])
    for _ in range(1000):
        x = numerics.rk4_step(lambda z, u: -z, x, None, 1e-3)
    assert abs(x[0] - np.exp(-1.0)) < 1e-10


def test_rk4_observed_order_at_least_3_8():
    # nonlinear scalar problem with known solution: x' = x^2, x(0)=1
    sol = lambda t: 1.0 / (1.0 - t)
    errs = []
    for dt in (0.02, 0.01, 0.005):
        x = np.array([1.0])
        t = 0.0
        while t < 0.5 - 1e-12:
            x = numerics.rk4_step(lambda z, u: z**2, x, None, dt)
            t += dt
        errs.append(abs(x[0] - sol(0.5)))
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 3.8


def test_rk4_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        numerics.rk4_step(lambda z, u: z, np.array([1.0]), None, 0.0)
