'''
Time series behind the criteria: J, VI and J2 with their summands kept apart, the lower
bound integrals of p * lambda_1(B) and p * nu_0(B), and the factorization
sqrt(B1) X M = M, M = A1 sqrt(B1) - sqrt(B1)', that J2 is built on.

Every series is sampled on a grid and its running integrals use composite Simpson from the
first grid point. The scalar shift is s = p'/p - mu throughout.
'''

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import sympy

from src.coeffs.system import finiteDifferenceStep, pWithDerivative, riccatiShift
from src.criteria._divergence import runningIntegral
from src.data.errors import NoSolution, SingularB
from src.matlin.hermitian import (
    SINGULAR_TOL,
    eigHermitian,
    hermitianInverse,
    hermitianPart,
    isPositiveDefinite,
    nu0,
    skewPart,
    sqrtPsd,
)
from src.riccati import transformedCoeffs


FACTOR_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class CriterionSeries:
    name: str
    times: np.ndarray
    value: np.ndarray
    terms: dict = field(default_factory=dict)


def _requirePositiveDefinite(t, B):
    spectrum = eigHermitian(B)
    if spectrum.smallest <= SINGULAR_TOL * max(1.0, abs(spectrum.largest)):
        raise SingularB(t, spectrum.smallest)
    return spectrum


def _series(name, grid, terms):
    terms = {k: np.asarray(v, dtype=float) for k, v in terms.items()}
    return CriterionSeries(name, np.asarray(grid), sum(terms.values()), terms)


def evalJ(spec, grid):
    n = spec.n
    eye = np.eye(n)
    boundary, quadratic, potential, skew = [], [], [], []
    for t in grid:
        t = float(t)
        A, B, C, _ = spec.coefficientsAt(t)
        spectrum = _requirePositiveDefinite(t, B)
        p, _, s = riccatiShift(spec, t)
        Binv = hermitianInverse(B)
        AH = A.conj().T

        boundary.append(np.trace((hermitianPart(A) + s * eye) @ Binv).real / p)
        quadratic.append(np.trace(A @ Binv @ AH + s / 2 * (Binv @ AH + A @ Binv) + s * s / 4 * Binv).real / p)
        potential.append(np.trace(C).real / p)
        skew.append(p * spectrum.smallest / n * np.trace(skewPart(A)).real**2)

    return _series('J', grid, {
        'boundary': boundary,
        'quadratic': -runningIntegral(grid, quadratic),
        'potential': -runningIntegral(grid, potential),
        'skew': runningIntegral(grid, skew),
    })


def evalVI(spec, grid):
    # -4 { tr(H1 B1^-1) + int [tr(H1 B1^-1 H1) + tr C1] },  H1 = hermitianPart(A1)
    boundary, integrand = [], []
    for t in grid:
        t = float(t)
        coeffs = transformedCoeffs(spec, t)
        _requirePositiveDefinite(t, coeffs.B1)
        H1 = hermitianPart(coeffs.A1)
        B1inv = hermitianInverse(coeffs.B1)
        boundary.append(np.trace(H1 @ B1inv).real)
        integrand.append(np.trace(H1 @ B1inv @ H1).real + np.trace(coeffs.C1).real)

    return _series('VI', grid, {
        'boundary': -4 * np.asarray(boundary),
        'integral': -4 * runningIntegral(grid, integrand),
    })


def lowerBoundIntegrals(spec, grid):
    lam, nu = [], []
    for t in grid:
        t = float(t)
        B = spec.B.evaluate(t)
        spectrum = _requirePositiveDefinite(t, B)
        p, _ = pWithDerivative(spec, t)
        lam.append(p * spectrum.smallest)
        nu.append(p * nu0(B))
    return {
        'lambda1': _series('int p lambda1(B)', grid, {'integral': runningIntegral(grid, lam)}),
        'nu0': _series('int p nu0(B)', grid, {'integral': runningIntegral(grid, nu)}),
    }


@lru_cache(maxsize=64)
def _b1IsConstant(spec):
    p = spec.p.toSympy()
    for _, _, re_expr, im_expr in spec.B.entries():
        for expr in (re_expr, im_expr):
            if sympy.simplify(p * expr.toSympy()).free_symbols:
                return False
    return True


def _rootB1(spec, t):
    p, _ = pWithDerivative(spec, t)
    return sqrtPsd(p * spec.B.evaluate(t))


def _rank(M, tol):
    sigma = scipy.linalg.svdvals(M)
    if len(sigma) == 0 or sigma[0] == 0.0:
        return 0
    return int(np.sum(sigma > tol * max(1.0, sigma[0])))


@dataclass(frozen=True)
class Factorization:
    t: float
    F: np.ndarray
    M: np.ndarray
    root: np.ndarray  # sqrt(B1)
    residual: float

    @property
    def AF(self):
        return self.F @ self.M


def factorAt(spec, t, rank_tol=1e-8):
    root = _rootB1(spec, t)
    if _b1IsConstant(spec):
        droot = np.zeros_like(root)
    else:
        h = finiteDifferenceStep(t)
        droot = (_rootB1(spec, t + h) - _rootB1(spec, t - h)) / (2 * h)
    A1 = transformedCoeffs(spec, t).A1
    M = A1 @ root - droot

    if isPositiveDefinite(root @ root):
        F = np.linalg.inv(root)
    else:
        rank_root = _rank(root, rank_tol)
        rank_pair = _rank(np.hstack([root, M]), rank_tol)
        if rank_root != rank_pair:
            raise NoSolution(t, f'rank sqrt(B1) = {rank_root} but rank [sqrt(B1) | M] = {rank_pair}')
        # Minimum-norm solution sqrt(B1)^+ M M^+
        scale = max(1.0, float(np.linalg.norm(M, 2)), float(np.linalg.norm(root, 2)))
        F = scipy.linalg.pinv(root, atol=rank_tol * scale) @ M @ scipy.linalg.pinv(M, atol=rank_tol * scale)

    residual = float(np.linalg.norm(root @ F @ M - M))
    if residual > FACTOR_RESIDUAL_TOL * max(1.0, float(np.linalg.norm(M))):
        raise NoSolution(t, f'residual {residual:.3e}')
    return Factorization(t, F, M, root, residual)


def solveF(spec, t, rank_tol=1e-8):
    return factorAt(spec, t, rank_tol).F


def evalJ2(spec, grid, rank_tol=1e-8):
    n = spec.n
    boundary, quadratic, skew = [], [], []
    worst = 0.0
    for t in grid:
        t = float(t)
        factor = factorAt(spec, t, rank_tol)
        AF = factor.AF
        B = spec.B.evaluate(t)
        C = spec.C.evaluate(t)
        worst = max(worst, factor.residual)

        boundary.append(-0.5 * np.trace(AF + AF.conj().T).real)
        quadratic.append(np.trace(AF @ AF.conj().T + B @ C).real)
        skew.append(np.trace(skewPart(AF)).real**2 / n)

    series = _series('J2', grid, {
        'boundary': boundary,
        'quadratic': -runningIntegral(grid, quadratic),
        'skew': runningIntegral(grid, skew),
    })
    return series, worst
