'''
Integral Riccati equations y(t) + int_{t0}^t a y^2 + e(t) = 0 on a sampled grid.

A continuous solution is differentiable exactly when e is, and then solves
y' + a y^2 + e'(t) = 0 with y(t0) = -e(t0); solveIntegralRiccati works through that form
with e' taken from a cubic spline of the samples.
'''

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.interpolate

from src.coeffs.system import asExpr
from src.data.basicTypes import ComparisonReport, IntegratorOpts, frozenArray
from src.data.errors import GridMismatch, NoSolution, PreconditionViolated
from src.data.logs import cLog
from src.integrate import EscapeWatch, integrateAdaptive


RESIDUAL_TOL = 1e-6
SOLVER_OPTS = IntegratorOpts(rtol=1e-10, atol=1e-12)


@dataclass(frozen=True)
class IntegralRiccatiInstance:
    a: object  # ScalarExpr
    times: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'a', asExpr(self.a))
        object.__setattr__(self, 'times', frozenArray(self.times, dtype=float))
        object.__setattr__(self, 'e', frozenArray(self.e, dtype=float))
        if self.times.ndim != 1 or len(self.times) < 3:
            raise ValueError('An integral Riccati instance needs a 1d grid of at least 3 points')
        if np.any(np.diff(self.times) <= 0):
            raise ValueError('Grid must be strictly increasing')
        if self.e.shape != self.times.shape:
            raise GridMismatch(f'e has {len(self.e)} samples on a grid of {len(self.times)} points')

    @classmethod
    def fromExprs(cls, a, e, times):
        e = asExpr(e)
        times = np.asarray(times, dtype=float)
        return cls(a, times, [e.evaluate(t) for t in times])

    @property
    def t0(self):
        return float(self.times[0])

    def aValues(self):
        return np.array([self.a.evaluate(t) for t in self.times])


def _samples(inst, yseries):
    if hasattr(yseries, 'times'):
        if len(yseries.times) != len(inst.times) or not np.allclose(yseries.times, inst.times, rtol=0, atol=1e-12):
            raise GridMismatch('Series and instance are sampled on different grids')
        yseries = yseries.values
    y = np.asarray(yseries, dtype=float)
    if y.shape != inst.times.shape:
        raise GridMismatch(f'Series has shape {y.shape}, the grid has {len(inst.times)} points')
    return y


def integralRiccatiResidual(inst, yseries):
    y = _samples(inst, yseries)
    quadratic = scipy.integrate.cumulative_simpson(inst.aValues() * y**2, x=inst.times, initial=0)
    return y + quadratic + inst.e


def solveIntegralRiccati(inst, opts=SOLVER_OPTS):
    de = scipy.interpolate.CubicSpline(inst.times, inst.e).derivative()
    a = inst.a

    def rhs(t, y):
        return np.array([-a.evaluate(t) * y[0]**2 - float(de(t))])

    watch = EscapeWatch(lambda y: float(abs(y[0])), opts)
    run = integrateAdaptive(rhs, inst.t0, np.array([-inst.e[0]]), float(inst.times[-1]), opts, stopWhen=watch, allowUnderflow=True)
    escape = watch.report(run)
    if escape.escaped:
        raise NoSolution(escape.t_escape, 'the solution escapes before the end of the grid', subject='Integral Riccati equation')
    return np.array([run.dense.evaluate(float(t))[0] for t in inst.times])


def _firstFailure(inst, mask):
    return float(inst.times[int(np.argmax(mask))])


def comparisonCheck(instA, instB, y0series, tol=RESIDUAL_TOL, opts=SOLVER_OPTS):
    '''
    Checks that the equation with the smaller free term e1 has a solution lying above the
    given solution y0 of the equation with free term e.
    '''
    if len(instA.times) != len(instB.times) or not np.array_equal(instA.times, instB.times):
        raise GridMismatch('Both instances must share one grid')

    e, e1 = instA.e, instB.e
    a = instA.aValues()
    checks = [
        ('e(t) > e1(t)', ~(e > e1)),
        ('e1(t) > 0', ~(e1 > 0)),
        ('both equations share a(t)', ~np.isclose(a, instB.aValues(), rtol=1e-12, atol=1e-12)),
        ('a(t) >= 0', a < 0),
    ]
    for condition, failed in checks:
        if np.any(failed):
            raise PreconditionViolated(condition, _firstFailure(instA, failed))

    y0 = _samples(instA, y0series)
    residual = np.abs(integralRiccatiResidual(instA, y0))
    if residual.max() > tol:
        raise PreconditionViolated(f'y0 solves the first equation (residual {residual.max():.3e} > {tol:.1e})', float(instA.times[int(np.argmax(residual))]))

    y1 = solveIntegralRiccati(instB, opts)
    gap = y1 - y0
    k = int(np.argmin(gap))
    report = ComparisonReport(
        holds=bool(np.all(y1 > y0 - tol)),
        min_gap=float(gap[k]),
        where_min=float(instA.times[k]),
    )
    cLog(f'Comparison: holds={report.holds}, min gap {report.min_gap:.3e} at t={report.where_min:.6g}', 'green' if report.holds else 'red')
    return report
