# Standard libraries
import logging
from dataclasses import dataclass

# Pypi libraries
import numpy as np

# Internal libraries
from src.coeffs.system import scalarFromSystem
from src.criteria._divergence import divergenceGrid, gridEstimate, runningIntegral
from src.criteria._series import evalJ, evalJ2, evalVI, lowerBoundIntegrals
from src.data.basicTypes import DIVERGES, INCONCLUSIVE, NOT_APPLICABLE, OSCILLATORY, ConditionCheck, CriterionReport
from src.data.errors import ConfigError, DomainError, HamoscError, IndefiniteB, NoSolution, SingularB
from src.data.logs import cLog
from src.matlin.hermitian import FunctionalSpec, functional, hermitianPart


FUNCTIONAL = 'functional'
SCALAR = 'scalar'
EIGEN = 'eigen'
RECIPROCAL = 'reciprocal'
FACTORED = 'factored'


def notApplicable(key, reason, checks=()):
    cLog(f'{key}: not applicable ({reason})', 'yellow', logging.WARNING)
    return CriterionReport(key, False, reason, NOT_APPLICABLE, (), tuple(checks))


def _report(key, reason, evidence, checks=()):
    oscillatory = all(e.verdict == DIVERGES for e in evidence)
    verdict = OSCILLATORY if oscillatory else INCONCLUSIVE
    cLog(f'{key}: {verdict}', 'green' if oscillatory else 'white', logging.INFO)
    return CriterionReport(key, True, reason, verdict, tuple(evidence), tuple(checks))


def eigenCriterion(spec, opts):
    '''Both int p lambda_1(B) and J(t) diverge, with B(t) > 0.'''
    div = opts.divergence
    grid = divergenceGrid(spec.t0, div)
    try:
        bounds = lowerBoundIntegrals(spec, grid)
        J = evalJ(spec, grid)
    except SingularB as e:
        return notApplicable(EIGEN, f'B(t) > 0 fails: {e}')
    except HamoscError as e:
        return notApplicable(EIGEN, f'coefficients fail on the sample grid: {e}')

    if not np.all(np.isfinite(J.terms['quadratic'])):
        return notApplicable(EIGEN, 'tr[A B^-1 A*] is not locally integrable on the sample grid')

    other = 'nu0' if opts.eigen_lower_bound == 'lambda1' else 'lambda1'
    lower = gridEstimate(bounds[opts.eigen_lower_bound].name, grid, bounds[opts.eigen_lower_bound].value, div)
    unused = gridEstimate(bounds[other].name, grid, bounds[other].value, div)
    checks = [
        ConditionCheck('B(t) > 0', True, f'{len(grid)} sample points on [{spec.t0!r}, {div.t_max!r}]'),
        ConditionCheck('tr[A B^-1 A*] locally integrable', True),
        ConditionCheck(f'{unused.name} (alternative lower bound)', unused.verdict == DIVERGES, unused.verdict),
    ]
    evidence = [lower, gridEstimate('J', grid, J.value, div)]
    return _report(EIGEN, f'B(t) > 0 on the sample grid; lower bound {opts.eigen_lower_bound}', evidence, checks)


def reciprocalCriterion(spec, opts):
    '''int p / tr(B^-1) diverges and so does -4 { tr(H1 B1^-1) + int [tr(H1 B1^-1 H1) + tr C1] }.'''
    div = opts.divergence
    grid = divergenceGrid(spec.t0, div)
    try:
        bounds = lowerBoundIntegrals(spec, grid)
        VI = evalVI(spec, grid)
    except SingularB as e:
        return notApplicable(RECIPROCAL, f'B(t) > 0 fails: {e}')
    except HamoscError as e:
        return notApplicable(RECIPROCAL, f'coefficients fail on the sample grid: {e}')

    if not np.all(np.isfinite(VI.value)):
        return notApplicable(RECIPROCAL, 'the VI integrand is not locally integrable on the sample grid')

    checks = [ConditionCheck('B(t) > 0', True, f'{len(grid)} sample points on [{spec.t0!r}, {div.t_max!r}]')]
    evidence = [
        gridEstimate(bounds['nu0'].name, grid, bounds['nu0'].value, div),
        gridEstimate('VI', grid, VI.value, div),
    ]
    return _report(RECIPROCAL, 'B(t) > 0 on the sample grid', evidence, checks)


def factoredCriterion(spec, opts):
    '''J2 diverges, with sqrt(B1) X M = M solvable at every sample point.'''
    div = opts.divergence
    grid = divergenceGrid(spec.t0, div)
    try:
        J2, residual = evalJ2(spec, grid, opts.rank_tol)
    except NoSolution as e:
        return notApplicable(FACTORED, str(e))
    except HamoscError as e:
        return notApplicable(FACTORED, f'coefficients fail on the sample grid: {e}')

    checks = [ConditionCheck('sqrt(B1) X M = M solvable', True, f'max residual {residual:.3e} on {len(grid)} sample points')]
    return _report(FACTORED, 'factorization solvable on the sample grid', [gridEstimate('J2', grid, J2.value, div)], checks)


@dataclass(frozen=True)
class ShiftedCoeffs:
    '''
    A1 = A - BK, B1 = alpha e^{int mu} B, C1 = alpha e^{-int mu} (KA - KBK + C - mu K + A^T K).

    Belongs to the functional criterion only; not interchangeable with TransformedCoeffs.
    '''
    t: float
    A1: np.ndarray
    B1: np.ndarray
    C1: np.ndarray


def shiftedCoeffs(spec, t, K, alpha, mu_integral):
    A, B, C, mu = spec.coefficientsAt(t)
    A, B, C = A.real, B.real, C.real
    grow = np.exp(mu_integral)
    return ShiftedCoeffs(
        t=t,
        A1=A - B @ K,
        B1=alpha * grow * B,
        C1=alpha / grow * (K @ A - K @ B @ K + C - mu * K + A.T @ K),
    )


def definiteSign(B, t):
    values = np.linalg.eigvalsh(hermitianPart(B))
    tol = 1e-12 * max(1.0, float(np.abs(values).max()))
    if values[0] > tol:
        return 1
    if values[-1] < -tol:
        return -1
    raise IndefiniteB(t)


def baselineShift(n, opts):
    if opts.baseline_k is None:
        return opts.baseline_k_scale * np.eye(n)
    K = np.asarray(opts.baseline_k, dtype=float)
    if K.shape != (n, n) or not np.allclose(K, K.T) or not np.any(K):
        raise ConfigError('criteria.K', f'K must be a nonzero symmetric {n}x{n} matrix')
    return K


def functionalCriterion(spec, opts):
    '''
    int alpha e^{int mu} / g[B^-1] and g[-int (C1 + A1^T B1^-1 A1) - B1^-1 A1] both diverge,
    for real coefficients with B definite of sign alpha.
    '''
    if not spec.isReal:
        return notApplicable(FUNCTIONAL, 'needs real-valued coefficients')
    alpha = definiteSign(spec.B.evaluate(spec.t0), spec.t0)

    div = opts.divergence
    n = spec.n
    K = baselineShift(n, opts)
    g = FunctionalSpec.fromWeight(opts.g_weight) if opts.g_weight is not None else FunctionalSpec.normalizedTrace(n)
    grid = divergenceGrid(spec.t0, div)

    try:
        mu_integral = runningIntegral(grid, [spec.mu.evaluate(float(t)) for t in grid])
        first, boundary, integrand = [], [], []
        for t, mu_int in zip(grid, mu_integral):
            t = float(t)
            B = spec.B.evaluate(t).real
            if definiteSign(B, t) != alpha:
                return notApplicable(FUNCTIONAL, f'B(t) changes sign at t={t!r}')
            shifted = shiftedCoeffs(spec, t, K, alpha, mu_int)
            B1inv = np.linalg.inv(shifted.B1)
            first.append(alpha * np.exp(mu_int) / functional(g, np.linalg.inv(B), requireHermitian=False))
            boundary.append(functional(g, B1inv @ shifted.A1, requireHermitian=False))
            integrand.append(functional(g, shifted.C1 + shifted.A1.T @ B1inv @ shifted.A1, requireHermitian=False))
    except IndefiniteB as e:
        return notApplicable(FUNCTIONAL, str(e))
    except HamoscError as e:
        return notApplicable(FUNCTIONAL, f'coefficients fail on the sample grid: {e}')

    second = -runningIntegral(grid, integrand) - np.asarray(boundary)
    evidence = [
        gridEstimate('int alpha e^{int mu} / g[B^-1]', grid, runningIntegral(grid, first), div),
        gridEstimate('g[-int (C1 + A1^T B1^-1 A1) - B1^-1 A1]', grid, second, div),
    ]
    checks = [ConditionCheck('B(t) definite', True, f'alpha = {alpha:+d}; K = {np.array2string(K, precision=6)}')]
    return _report(FUNCTIONAL, f'real coefficients, B definite with alpha = {alpha:+d}', evidence, checks)


def scalarCriterion(s, opts):
    '''For the scalar system: int a12 e^{-int E} and -int a21 e^{int E} diverge, with a12 >= 0.'''
    div = opts.divergence
    grid = divergenceGrid(s.t0, div)
    try:
        a12 = np.array([s.a12.evaluate(float(t)) for t in grid])
        a21 = np.array([s.a21.evaluate(float(t)) for t in grid])
        E = np.array([s.E.evaluate(float(t)) for t in grid])
    except DomainError as e:
        return notApplicable(SCALAR, f'coefficients fail on the sample grid: {e}')

    negative = a12 < 0
    if np.any(negative):
        return notApplicable(SCALAR, f'a12(t) >= 0 fails at t={float(grid[np.argmax(negative)])!r}')

    E_integral = runningIntegral(grid, E)
    with np.errstate(over='ignore', invalid='ignore'):
        first = runningIntegral(grid, a12 * np.exp(-E_integral))
        second = -runningIntegral(grid, a21 * np.exp(E_integral))
    evidence = [
        gridEstimate('int a12 e^{-int E}', grid, first, div),
        gridEstimate('-int a21 e^{int E}', grid, second, div),
    ]
    checks = [ConditionCheck('a12(t) >= 0', True, f'{len(grid)} sample points')]
    return _report(SCALAR, 'a12(t) >= 0 on the sample grid', evidence, checks)


def scalarCriterionForSystem(spec, opts):
    if spec.n != 1 or not spec.isReal:
        return notApplicable(SCALAR, 'needs a real one-dimensional system')
    return scalarCriterion(scalarFromSystem(spec), opts)
