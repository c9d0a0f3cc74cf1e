import math

import numpy as np
import pytest

from src.coeffs.system import ScalarSystemSpec, scalarFromSystem
from src.data.basicTypes import EscapeReport, IntegratorOpts, RiccatiSeries
from src.data.errors import GridMismatch, InterpolationGap, NotHermitian, PreconditionViolated
from src.integrate import integrateMatrixRiccati, integrateScalarRiccati, integrateSystem, riccatiRhs
from src.riccati import (
    IntegralRiccatiInstance,
    comparisonCheck,
    integralRiccatiResidual,
    reconstructSolution,
    solveIntegralRiccati,
    systemResidual,
    transformedCoeffs,
    transformedRiccatiRhs,
)
from tests.helpers import constantSpec, entrySpec, loadProject, randomHermitian, randomPositiveDefinite


TIGHT = IntegratorOpts(rtol=1e-10, atol=1e-12)
VERY_TIGHT = IntegratorOpts(rtol=1e-12, atol=1e-14)
TRIALS = 20


def test_scalarRiccatiEscapes():
    # y' = -y^2 - 1, y(0) = 0 gives y = -tan t
    s = ScalarSystemSpec('0', '1', '-1', '0')
    series, escape = integrateScalarRiccati(s, 0.0, 3.0, IntegratorOpts())
    assert escape.escaped
    assert escape.t_escape == pytest.approx(math.pi / 2, abs=1e-6)
    assert series.times[-1] < math.pi / 2
    assert series.valueAt(1.0) == pytest.approx(-math.tan(1.0), rel=1e-7)


def test_scalarRiccatiDecays():
    s = ScalarSystemSpec('0', '1', '0', '0')
    series, escape = integrateScalarRiccati(s, 1.0, 5.0, TIGHT)
    assert not escape.escaped
    assert escape.t_escape is None
    assert series.values[-1] == pytest.approx(1 / 6, rel=1e-8)
    assert series.valueAt(2.5) == pytest.approx(1 / 3.5, rel=1e-7)


def test_matrixRiccatiTangent():
    spec = constantSpec(np.zeros((2, 2)), np.eye(2), -np.eye(2))
    series, escape = integrateMatrixRiccati(spec, np.zeros((2, 2)), 1.0, TIGHT)
    assert not escape.escaped
    assert np.allclose(series.values[-1], -math.tan(1.0) * np.eye(2), atol=1e-8)
    assert series.hermitian_drift.max() < 1e-12


def test_matrixRiccatiEscape():
    spec = constantSpec(np.zeros((2, 2)), np.eye(2), -np.eye(2))
    _, escape = integrateMatrixRiccati(spec, np.zeros((2, 2)), 3.0, IntegratorOpts())
    assert escape.escaped
    assert escape.t_escape == pytest.approx(math.pi / 2, abs=1e-5)


def test_skewRotationEscape():
    # A*Y + YA vanishes on multiples of I, leaving Y = -tan(t) I
    config = loadProject('skew_rotation')
    series, escape = integrateMatrixRiccati(config.spec, np.zeros((2, 2)), 3.0, IntegratorOpts())
    assert escape.escaped
    assert escape.t_escape == pytest.approx(math.pi / 2, abs=1e-5)
    assert np.allclose(series.valueAt(1.0), -math.tan(1.0) * np.eye(2), rtol=1e-6)


def test_oneDimensionalMatrixMatchesScalar():
    spec = entrySpec([['0.1*t']], [['1 + 0.5*sin(t)']], [['-1']], mu='0.2')
    matrix, _ = integrateMatrixRiccati(spec, [[0.3]], 0.8, VERY_TIGHT)
    scalar, _ = integrateScalarRiccati(scalarFromSystem(spec), 0.3, 0.8, VERY_TIGHT)
    for t in [0.2, 0.5, 0.8]:
        value = matrix.valueAt(t)[0, 0]
        assert abs(value.imag) <= 1e-12
        assert value.real == pytest.approx(scalar.valueAt(t), rel=1e-7)


def test_hermitianStartStaysHermitian():
    rng = np.random.default_rng(17)
    for trial in range(TRIALS):
        n = trial % 2 + 2
        A = 0.5 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        spec = constantSpec(A, 0.1 * randomPositiveDefinite(rng, n), randomHermitian(rng, n, 0.5), mu='0.1')
        series, _ = integrateMatrixRiccati(spec, randomHermitian(rng, n, 0.2), 0.5, TIGHT)
        assert series.hermitian_drift is not None
        assert series.hermitian_drift.max() <= 1e-9


def test_nonHermitianStartHasNoDrift():
    spec = constantSpec(np.zeros((2, 2)), np.eye(2), -np.eye(2))
    series, _ = integrateMatrixRiccati(spec, np.array([[0, 0.1], [0, 0]]), 0.5, TIGHT)
    assert series.hermitian_drift is None


@pytest.mark.parametrize('n', [1, 2, 3])
def test_riccatiFormsAgree(n):
    rng = np.random.default_rng(70 + n)
    for _ in range(TRIALS):
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        spec = constantSpec(A, randomPositiveDefinite(rng, n), randomHermitian(rng, n), mu='0.3', p='1 + t^2')
        Y = randomHermitian(rng, n)
        t = float(rng.uniform(0, 3))
        assert np.allclose(riccatiRhs(spec, t, Y), transformedRiccatiRhs(transformedCoeffs(spec, t), Y), atol=1e-12)


def test_transformedCoeffsNeedHermitianB():
    spec = constantSpec(np.zeros((2, 2)), [[1, 1], [0, 1]], -np.eye(2))
    with pytest.raises(NotHermitian):
        transformedCoeffs(spec, 0.0)


def test_transformedCoeffsValues():
    spec = entrySpec([['t']], [['2']], [['-4']], mu='0.5', p='exp(t)')
    coeffs = transformedCoeffs(spec, 1.0)
    # s = p'/p - mu = 0.5
    assert coeffs.A1[0, 0] == pytest.approx(1.25, rel=1e-8)
    assert coeffs.B1[0, 0] == pytest.approx(2 * math.e)
    assert coeffs.C1[0, 0] == pytest.approx(-4 / math.e)


@pytest.mark.parametrize('p', ['1', '1 + t'])
def test_reconstructionSolvesTheSystem(p):
    rng = np.random.default_rng(11)
    n = 2
    for _ in range(TRIALS // 2):
        A = 0.5 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        spec = constantSpec(A, 0.3 * randomPositiveDefinite(rng, n), randomHermitian(rng, n, 0.5), mu='0.2', p=p)
        series, escape = integrateMatrixRiccati(spec, np.zeros((n, n)), 0.5, VERY_TIGHT)
        assert not escape.escaped
        traj = reconstructSolution(spec, series, np.eye(n), VERY_TIGHT)
        assert systemResidual(spec, traj) <= 1e-6


def test_reconstructionMatchesDirectIntegration():
    spec = constantSpec([[0.2]], [[1]], [[-1]])
    series, _ = integrateMatrixRiccati(spec, np.zeros((1, 1)), 1.0, TIGHT)
    rebuilt = reconstructSolution(spec, series, np.eye(1), TIGHT)
    direct = integrateSystem(spec, np.eye(1), np.zeros((1, 1)), 1.0, TIGHT)
    for t in [0.25, 0.5, 0.8, 1.0]:
        Phi, Psi = rebuilt.stateAt(t, trueScale=True)
        Phi_d, Psi_d = direct.stateAt(t, trueScale=True)
        assert np.allclose(Phi, Phi_d, atol=1e-6)
        assert np.allclose(Psi, Psi_d, atol=1e-6)


def test_reconstructionFromSamples():
    times = np.linspace(0, 1, 5)
    series = RiccatiSeries(times=times, values=np.zeros((5, 1, 1)), escape=EscapeReport(False))
    spec = constantSpec([[0]], [[1]], [[0]])
    with pytest.raises(InterpolationGap):
        reconstructSolution(spec, series, np.eye(1), TIGHT, max_gap=0.1)
    with pytest.raises(InterpolationGap):
        reconstructSolution(spec, series, np.eye(1), TIGHT, t_end=2.0)
    traj = reconstructSolution(spec, series, np.eye(1), TIGHT)
    # Y = 0 leaves Phi constant
    assert np.allclose(traj.phis, 1.0)
    assert np.allclose(traj.psis, 0.0)


def instancePair(rng, times):
    a = float(rng.uniform(0, 0.3))
    c0, c1 = rng.uniform(0.1, 0.5), rng.uniform(0, 0.3)
    r = rng.uniform(0.3, 0.9)
    e = c0 + c1 * times**2
    return IntegralRiccatiInstance(repr(a), times, e), IntegralRiccatiInstance(repr(a), times, r * e)


def test_comparisonHolds():
    rng = np.random.default_rng(5)
    times = np.linspace(0, 1, 201)
    for _ in range(TRIALS):
        instA, instB = instancePair(rng, times)
        y0 = solveIntegralRiccati(instA)
        assert np.abs(integralRiccatiResidual(instA, y0)).max() <= 1e-6
        report = comparisonCheck(instA, instB, y0)
        assert report.holds
        assert report.min_gap > 0
        assert times[0] <= report.where_min <= times[-1]


def test_integralRiccatiFromExpressions():
    times = np.linspace(0, 2, 101)
    inst = IntegralRiccatiInstance.fromExprs('0', '-t', times)
    # a = 0 leaves y = -e
    assert np.allclose(solveIntegralRiccati(inst), times, atol=1e-9)
    assert np.allclose(integralRiccatiResidual(inst, times), 0.0, atol=1e-12)


def test_integralRiccatiTangent():
    # a = 1, e = t is solved by y = -tan t
    times = np.linspace(0, 1, 201)
    inst = IntegralRiccatiInstance.fromExprs('1', 't', times)
    exact = -np.tan(times)
    assert np.abs(integralRiccatiResidual(inst, exact)).max() <= 1e-7
    assert np.abs(integralRiccatiResidual(inst, exact + 1e-3)).max() >= 1e-3
    assert np.allclose(solveIntegralRiccati(inst), exact, atol=1e-7)


def test_comparisonPreconditions():
    times = np.linspace(0, 1, 11)
    e = np.full(11, 0.5)
    instA = IntegralRiccatiInstance('0.1', times, e)
    y0 = solveIntegralRiccati(instA)

    with pytest.raises(PreconditionViolated, match='e\\(t\\) > e1\\(t\\)'):
        comparisonCheck(instA, IntegralRiccatiInstance('0.1', times, e), y0)
    with pytest.raises(PreconditionViolated, match='e1\\(t\\) > 0'):
        comparisonCheck(instA, IntegralRiccatiInstance('0.1', times, e - 0.6), y0)
    with pytest.raises(PreconditionViolated, match='share a\\(t\\)'):
        comparisonCheck(instA, IntegralRiccatiInstance('0.2', times, e / 2), y0)
    with pytest.raises(PreconditionViolated, match='y0 solves'):
        comparisonCheck(instA, IntegralRiccatiInstance('0.1', times, e / 2), np.zeros(11))

    negative = IntegralRiccatiInstance('-0.1', times, e)
    with pytest.raises(PreconditionViolated, match='a\\(t\\) >= 0') as exc:
        comparisonCheck(negative, IntegralRiccatiInstance('-0.1', times, e / 2), y0)
    assert exc.value.where == 0.0


def test_gridMismatch():
    times = np.linspace(0, 1, 11)
    instA = IntegralRiccatiInstance('0', times, np.ones(11))
    with pytest.raises(GridMismatch):
        IntegralRiccatiInstance('0', times, np.ones(10))
    with pytest.raises(GridMismatch):
        comparisonCheck(instA, IntegralRiccatiInstance('0', np.linspace(0, 1, 12), np.ones(12) / 2), -np.ones(11))
    with pytest.raises(GridMismatch):
        integralRiccatiResidual(instA, np.zeros(5))
    with pytest.raises(ValueError):
        IntegralRiccatiInstance('0', [0.0, 1.0], [1.0, 1.0])
