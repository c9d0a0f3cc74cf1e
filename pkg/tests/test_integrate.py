import math

import numpy as np
import pytest

from src.coeffs.system import ScalarSystemSpec
from src.data.basicTypes import DIP, SIGN_CHANGE, IntegratorOpts
from src.data.errors import InterpolationGap, StepLimitExceeded, StepSizeUnderflow
from src.integrate import (
    detectDetZeros,
    findNearMisses,
    integrateAdaptive,
    integrateScalarSystem,
    integrateSystem,
    scalarZeros,
    zeroRatio,
)
from tests.helpers import constantSpec, entrySpec, loadProject, randomHermitian, randomSmoothSpec


TIGHT = IntegratorOpts(rtol=1e-10, atol=1e-12)
CONJOINED = IntegratorOpts(rtol=1e-11, atol=1e-13)
TRIALS = 20


def test_exponentialAndDenseOutput():
    run = integrateAdaptive(lambda t, y: y, 0.0, np.array([1.0]), 2.0, TIGHT)
    assert run.times[-1] == 2.0
    assert run.states[-1][0] == pytest.approx(math.exp(2), rel=1e-8)
    for t in [0.05, 0.7, 1.3, 1.999]:
        assert run.dense.evaluate(t)[0] == pytest.approx(math.exp(t), rel=1e-7)


def test_endTimeMustExceedStart():
    with pytest.raises(ValueError):
        integrateAdaptive(lambda t, y: y, 1.0, np.array([1.0]), 1.0, TIGHT)


def test_blowUpUnderflows():
    with pytest.raises(StepSizeUnderflow) as exc:
        integrateAdaptive(lambda t, y: y**2, 0.0, np.array([1.0]), 2.0, IntegratorOpts())
    assert exc.value.t == pytest.approx(1.0, abs=1e-6)


def test_stepLimit():
    config = loadProject('harmonic')
    with pytest.raises(StepLimitExceeded):
        integrateSystem(config.spec, config.phi0, config.psi0, 100.0, IntegratorOpts(max_steps=10))


def test_harmonicZeros():
    config = loadProject('harmonic')
    traj = integrateSystem(config.spec, config.phi0, config.psi0, 10.0, config.opts.integrator)
    zeros = detectDetZeros(traj)
    assert [z.kind for z in zeros] == [SIGN_CHANGE] * 3
    for z, expected in zip(zeros, [math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2]):
        assert z.t_zero == pytest.approx(expected, abs=1e-6)
        assert z.sigma_ratio_min < 1e-6
    assert traj.t0 == 0.0 and traj.tEnd == 10.0
    assert findNearMisses(traj) == []


def test_scalarSystemZeroSpacing():
    s = ScalarSystemSpec('0', '1', '-1', '0')
    traj = integrateScalarSystem(s, 1.0, 0.0, 10 * math.pi, TIGHT)
    assert len(traj.zeros) == 10
    assert traj.zeros[0] == pytest.approx(math.pi / 2, abs=1e-6)
    assert np.allclose(np.diff(traj.zeros), math.pi, atol=1e-5)


@pytest.mark.parametrize('n', [1, 2, 3])
def test_conjoinedBasisStaysConjoinedShort(n):
    rng = np.random.default_rng(40 + n)
    for _ in range(TRIALS):
        A = 0.5 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        spec = constantSpec(A, randomHermitian(rng, n, 0.5), randomHermitian(rng, n, 0.5), mu='0.1')
        traj = integrateSystem(spec, np.eye(n), np.zeros((n, n)), 3.0, TIGHT)
        assert traj.relative_defect.max() <= 1e-7


@pytest.mark.acceptance
def test_conjoinedBasisStaysConjoined():
    rng = np.random.default_rng(41)
    for trial in range(50):
        n = trial % 4 + 1
        spec = randomSmoothSpec(rng, n)
        traj = integrateSystem(spec, np.eye(n), np.zeros((n, n)), 20.0, CONJOINED)
        assert traj.tEnd == 20.0
        assert traj.relative_defect.max() <= 1e-8


@pytest.mark.parametrize('n', [1, 2])
@pytest.mark.parametrize('mu,integral', [
    ('0.1', lambda t: 0.1 * t),
    ('0.1*cos(t)', lambda t: 0.1 * np.sin(t)),
])
def test_defectFollowsMu(n, mu, integral):
    # Phi* Psi - Psi* Phi obeys W' = mu W
    A = 0.3 * np.triu(np.ones((n, n)))
    spec = constantSpec(A, np.eye(n), -np.eye(n), mu=mu)
    traj = integrateSystem(spec, np.eye(n), 1j * np.eye(n), 10.0, TIGHT)
    expected = 2 * math.sqrt(n) * np.exp(integral(traj.times))
    assert np.allclose(traj.conjoined_defect, expected, rtol=1e-6)


def test_rescalingIsTransparent():
    spec = constantSpec([[0.1, 1.0], [0.0, 0.2]], np.eye(2), np.eye(2))
    early = integrateSystem(spec, np.eye(2), np.zeros((2, 2)), 25.0, IntegratorOpts(rtol=1e-10, atol=1e-12, rescale_threshold=1e6))
    late = integrateSystem(spec, np.eye(2), np.zeros((2, 2)), 25.0, TIGHT)
    assert len(early.rescale_log) > len(late.rescale_log) > 0
    for t in [2.5, 9.0, 14.2, 25.0]:
        for a, b in zip(early.stateAt(t, trueScale=True), late.stateAt(t, trueScale=True)):
            assert np.linalg.norm(a - b) <= 1e-8 * np.linalg.norm(b)


def test_solutionsSuperpose():
    spec = entrySpec(
        [['0.3*sin(t)', '1'], ['0', '-0.2*cos(t)']],
        [['1', '0'], ['0', '1 + 0.5*sin(2*t)']],
        [['-1 - 0.5*cos(t)', '0.2'], ['0.2', '-2']],
        mu='0.1*sin(t)',
    )
    rng = np.random.default_rng(3)
    P1, Q1, P2, Q2 = (rng.normal(size=(2, 2)) for _ in range(4))
    a, b = 0.7, -1.3
    one = integrateSystem(spec, P1, Q1, 5.0, TIGHT)
    two = integrateSystem(spec, P2, Q2, 5.0, TIGHT)
    both = integrateSystem(spec, a * P1 + b * P2, a * Q1 + b * Q2, 5.0, TIGHT)
    for t in [0.5, 1.7, 3.3, 5.0]:
        for x, y, z in zip(one.stateAt(t, trueScale=True), two.stateAt(t, trueScale=True), both.stateAt(t, trueScale=True)):
            assert np.linalg.norm(a * x + b * y - z) <= 1e-8 * np.linalg.norm(z)


def test_zeroTimesConvergeWithStep():
    config = loadProject('harmonic')
    expected = np.array([math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2])
    errors = []
    for hmax in [0.4, 0.2, 0.1, 0.05]:
        opts = IntegratorOpts(rtol=1e-3, atol=1e-6, hmax=hmax)
        traj = integrateSystem(config.spec, config.phi0, config.psi0, 10.0, opts)
        zeros = [z.t_zero for z in detectDetZeros(traj) if z.kind == SIGN_CHANGE]
        assert len(zeros) == 3
        errors.append(float(np.abs(np.array(zeros) - expected).max()))
    assert errors[-1] <= 1e-6
    assert errors[-1] < errors[0] / 10


def test_constantPhiHasNoZeros():
    spec = constantSpec(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)))
    traj = integrateSystem(spec, np.eye(2), np.zeros((2, 2)), 5.0, TIGHT)
    assert np.allclose(traj.phis, np.eye(2))
    assert np.allclose(traj.sigma_ratio, 1.0)
    assert detectDetZeros(traj) == []


def test_complexZerosAreDips():
    # Phi = e^{it} cos t never changes sign in its real part at the zeros
    spec = constantSpec([[1j]], [[1]], [[-1]])
    traj = integrateSystem(spec, np.eye(1), np.zeros((1, 1)), 10.0, TIGHT)
    assert not traj.is_real
    zeros = detectDetZeros(traj)
    assert [z.kind for z in zeros] == [DIP] * 3
    for z, expected in zip(zeros, [math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2]):
        assert z.t_zero == pytest.approx(expected, abs=1e-5)


def test_nearMisses():
    # phi = e^{it} (cos t + i delta sin t) comes within delta of a zero
    delta = 1e-4
    spec = constantSpec([[1j]], [[1]], [[-1]])
    traj = integrateSystem(spec, np.eye(1), 1j * delta * np.eye(1), 10.0, TIGHT)
    assert detectDetZeros(traj) == []
    misses = findNearMisses(traj)
    assert len(misses) == 3
    for (t, value), expected in zip(misses, [math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2]):
        assert t == pytest.approx(expected, abs=1e-4)
        assert value == pytest.approx(delta, rel=1e-3)


def test_rescaledGrowth():
    spec = constantSpec([[0]], [[1]], [[1]])
    traj = integrateSystem(spec, np.eye(1), np.zeros((1, 1)), 30.0, TIGHT)
    assert traj.rescale_log
    assert all(0 < factor < 1 for _, factor in traj.rescale_log)
    assert np.abs(traj.phis).max() < 1e9
    for t in [5.0, 17.5, 25.0, 30.0]:
        Phi, Psi = traj.stateAt(t, trueScale=True)
        assert Phi[0, 0].real == pytest.approx(math.cosh(t), rel=1e-7)
        assert Psi[0, 0].real == pytest.approx(math.sinh(t), rel=1e-7)
    assert detectDetZeros(traj) == []


def test_denseOutsideSpan():
    config = loadProject('harmonic')
    traj = integrateSystem(config.spec, config.phi0, config.psi0, 10.0, config.opts.integrator)
    with pytest.raises(InterpolationGap):
        traj.stateAt(11.0)
    with pytest.raises(InterpolationGap):
        traj.stateAt(-1.0)


def test_initialDataShape():
    config = loadProject('harmonic')
    with pytest.raises(ValueError):
        integrateSystem(config.spec, np.eye(2), np.zeros((2, 2)), 1.0, TIGHT)


@pytest.mark.parametrize('zeta', [0.0, 1.0, -1e-6])
def test_zeroThresholdRange(zeta):
    config = loadProject('harmonic')
    traj = integrateSystem(config.spec, config.phi0, config.psi0, 1.0, config.opts.integrator)
    with pytest.raises(ValueError):
        detectDetZeros(traj, zeta)


def test_zeroRatio():
    assert zeroRatio(np.diag([1.0, 0.0]), np.eye(2)) == pytest.approx(0.0, abs=1e-15)
    assert zeroRatio(np.eye(2), np.zeros((2, 2))) == pytest.approx(1.0)
    assert zeroRatio(np.zeros((2, 2)), np.zeros((2, 2))) == 0.0
    rng = np.random.default_rng(7)
    Phi, Psi = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    assert zeroRatio(1e6 * Phi, 1e6 * Psi) == pytest.approx(zeroRatio(Phi, Psi), rel=1e-12)
    assert 0 <= zeroRatio(Phi, Psi) <= 1


def test_scalarZerosBisect():
    times = np.linspace(0.1, 7.0, 50)
    zeros = scalarZeros(times, np.sin(times), math.sin)
    assert zeros == pytest.approx([math.pi, 2 * math.pi], abs=1e-7)


@pytest.mark.parametrize('values,expected', [
    ([1.0, 0.5, 0.0], [2.0]),
    ([1.0, -1.0, 0.0], [0.5, 2.0]),
    ([0.0, 1.0, 0.0], [0.0, 2.0]),
    ([1.0, 1.0, 1.0], []),
])
def test_scalarZerosKeepsEndpoints(values, expected):
    # Linear in between, through the samples at 0, 1 and 2
    fn = lambda t: float(np.interp(t, [0.0, 1.0, 2.0], values))
    zeros = scalarZeros(np.array([0.0, 1.0, 2.0]), values, fn)
    assert zeros == pytest.approx(expected, abs=1e-7)


def test_zeroAtTheEndTime():
    config = loadProject('harmonic')
    traj = integrateSystem(config.spec, config.phi0, config.psi0, math.pi / 2, TIGHT)
    zeros = detectDetZeros(traj)
    assert len(zeros) == 1
    assert zeros[0].t_zero == pytest.approx(math.pi / 2, abs=1e-6)
    assert zeros[0].sigma_ratio_min < 1e-6
