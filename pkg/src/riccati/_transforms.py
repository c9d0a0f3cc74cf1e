from dataclasses import dataclass

import numpy as np
import scipy.interpolate

from src.coeffs.system import finiteDifferenceStep, riccatiShift
from src.data.errors import InterpolationGap
from src.data.logs import cLog
from src.integrate import buildTrajectory, integrateAdaptive
from src.matlin.hermitian import asCMatrix, checkHermitian


@dataclass(frozen=True)
class TransformedCoeffs:
    '''Coefficients of Y' + Y B1 Y + A1* Y + Y A1 - C1 = 0 at time t.'''
    t: float
    A1: np.ndarray
    B1: np.ndarray
    C1: np.ndarray

    def __post_init__(self):
        checkHermitian(self.B1)
        checkHermitian(self.C1)


def transformedCoeffs(spec, t):
    A, B, C, _ = spec.coefficientsAt(t)
    p, _, s = riccatiShift(spec, t)
    return TransformedCoeffs(
        t=t,
        A1=A + 0.5 * s * np.eye(spec.n),
        B1=p * B,
        C1=C / p,
    )


def transformedRiccatiRhs(coeffs, Y):
    A1 = coeffs.A1
    return -Y @ coeffs.B1 @ Y - A1.conj().T @ Y - Y @ A1 + coeffs.C1


class _SampledSeries:
    # Cubic interpolation of a RiccatiSeries that has no dense output


    def __init__(self, series, max_gap):
        times = np.asarray(series.times)
        gaps = np.diff(times)
        if max_gap is not None and len(gaps) and gaps.max() > max_gap:
            k = int(np.argmax(gaps))
            raise InterpolationGap(float(times[k]), f'grid spacing {gaps[k]:.3e} exceeds {max_gap:.3e}')
        self.shape = series.values.shape[1:]
        self.spline = scipy.interpolate.CubicSpline(times, series.values, axis=0)
        self.t_start = float(times[0])
        self.t_end = float(times[-1])


    def evaluate(self, t):
        slack = 1e-12 * max(1.0, abs(t))
        if t < self.t_start - slack or t > self.t_end + slack:
            raise InterpolationGap(t, f'outside the series span [{self.t_start!r}, {self.t_end!r}]')
        return self.spline(min(max(t, self.t_start), self.t_end))


def _interpolant(series, max_gap):
    if series.dense is not None:
        shape = series.values.shape[1:]
        return lambda t: series.dense.evaluate(t).reshape(shape)
    sampled = _SampledSeries(series, max_gap)
    return sampled.evaluate


class ReconstructedDense:
    '''Dense output of (Phi, Psi) with Psi = pY Phi rebuilt on demand.'''


    def __init__(self, spec, phi_dense, Yfn):
        self.spec = spec
        self.phi_dense = phi_dense
        self.Yfn = Yfn


    def evaluate(self, t, withScale=False):
        phi, log_scale = self.phi_dense.evaluate(t, withScale=True)
        n = self.spec.n
        Phi = phi.reshape(n, n)
        Psi = self.spec.p.evaluate(t) * (self.Yfn(t).reshape(n, n) @ Phi)
        y = np.concatenate([Phi.ravel(), Psi.ravel()])
        if withScale:
            return y, log_scale
        return y


def reconstructSolution(spec, Yseries, Phi_t1, opts, t_end=None, max_gap=None):
    '''
    Integrates Phi' = (A + pBY)Phi along a Riccati solution Y and sets Psi = pY Phi; the pair
    solves the Hamiltonian system on the span of Y.
    '''
    n = spec.n
    Phi_t1 = asCMatrix(Phi_t1)
    Yfn = _interpolant(Yseries, max_gap)
    t1 = float(Yseries.times[0])
    t2 = float(Yseries.times[-1]) if t_end is None else float(t_end)
    if t2 > float(Yseries.times[-1]):
        raise InterpolationGap(t2, 'reconstruction ends after the Riccati series')

    def rhs(t, y):
        A, B, _, _ = spec.coefficientsAt(t)
        Y = Yfn(t).reshape(n, n)
        return ((A + spec.p.evaluate(t) * B @ Y) @ y.reshape(n, n)).ravel()

    cLog(f'Reconstructing (Phi, Psi) from the Riccati series on [{t1!r}, {t2!r}]', 'blue')
    run = integrateAdaptive(rhs, t1, Phi_t1.ravel(), t2, opts, rescaleNorm=lambda y: float(np.linalg.norm(y)))

    phis = np.array(run.states).reshape(-1, n, n)
    psis = np.array([spec.p.evaluate(t) * (Yfn(t).reshape(n, n) @ Phi) for t, Phi in zip(run.times, phis)])
    return buildTrajectory(
        run.times,
        phis,
        psis,
        run.log_scales,
        run.rescale_log,
        ReconstructedDense(spec, run.dense, Yfn),
        spec.isReal,
    )


def systemResidual(spec, traj, times=None):
    '''
    Largest relative residual of Phi' = A Phi + B Psi, Psi' = C Phi + (mu I - A*) Psi along
    the trajectory's dense output, with derivatives by central differences.
    '''
    n = spec.n
    if times is None:
        # Step midpoints keep both difference points inside one dense segment
        times = (traj.times[:-1] + traj.times[1:]) / 2
    worst = 0.0
    for t in times:
        t = float(t)
        h = 10 * finiteDifferenceStep(t)
        if t - h < traj.t0 or t + h > traj.tEnd:
            continue
        Phi, Psi = traj.stateAt(t, trueScale=True)
        Phi_p, Psi_p = traj.stateAt(t + h, trueScale=True)
        Phi_m, Psi_m = traj.stateAt(t - h, trueScale=True)
        dPhi = (Phi_p - Phi_m) / (2 * h)
        dPsi = (Psi_p - Psi_m) / (2 * h)

        A, B, C, mu = spec.coefficientsAt(t)
        r_phi = dPhi - A @ Phi - B @ Psi
        r_psi = dPsi - C @ Phi - (mu * np.eye(n) - A.conj().T) @ Psi
        size = np.linalg.norm(Phi) + np.linalg.norm(Psi)
        if size == 0:
            continue
        worst = max(worst, float((np.linalg.norm(r_phi) + np.linalg.norm(r_psi)) / size))
    return worst
