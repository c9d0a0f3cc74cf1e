import numpy as np

from src.coeffs.system import riccatiShift
from src.data.basicTypes import EscapeReport, RiccatiSeries
from src.data.logs import cLog
from src.integrate._dopri import integrateAdaptive
from src.matlin.hermitian import HERMITIAN_TOL, asCMatrix, hermitianDefect


def riccatiRhs(spec, t, Y):
    '''Y' for Y' + pYBY + A*Y + Y[A + sI] - C/p = 0 with s = p'/p - mu.'''
    A, B, C, _ = spec.coefficientsAt(t)
    p, _, s = riccatiShift(spec, t)
    return -p * (Y @ B @ Y) - A.conj().T @ Y - Y @ A - s * Y + C / p


class EscapeWatch:
    '''
    Stops a Riccati run once the norm passes the escape threshold while the step size has
    collapsed. A large norm with healthy steps only sets `large`.
    '''


    def __init__(self, norm, opts):
        self.norm = norm
        self.opts = opts
        self.max_step = 0.0
        self.large = False


    def __call__(self, solver):
        self.max_step = max(self.max_step, solver.h_taken)
        if self.norm(solver.y) <= self.opts.escape_threshold:
            return False
        if solver.h_taken < self.opts.escape_step_ratio * self.max_step:
            return True
        if not self.large:
            cLog(f'Riccati solution is large ({self.norm(solver.y):.3e}) at t={solver.t:.6g} but steps have not collapsed', 'yellow')
        self.large = True
        return False


    def report(self, run):
        value = self.norm(run.states[-1])
        if run.underflow is not None:
            # A step-size collapse on a huge solution is a blow-up
            if value > self.opts.escape_threshold**0.5:
                return EscapeReport(True, run.underflow.t, value, self.large)
            raise run.underflow
        if run.stopped:
            cLog(f'Riccati solution escapes at t={run.times[-1]:.9g} (norm {value:.3e})', 'yellow')
            return EscapeReport(True, run.times[-1], value, self.large)
        return EscapeReport(False, None, value, self.large)


def integrateScalarRiccati(s, y0, T, opts):
    a12, a21, E = s.a12, s.a21, s.E

    def rhs(t, y):
        return np.array([-a12.evaluate(t) * y[0]**2 - E.evaluate(t) * y[0] + a21.evaluate(t)])

    norm = lambda y: float(abs(y[0]))
    watch = EscapeWatch(norm, opts)
    run = integrateAdaptive(rhs, s.t0, np.array([float(y0)]), T, opts, stopWhen=watch, allowUnderflow=True)
    escape = watch.report(run)

    series = RiccatiSeries(
        times=np.array(run.times),
        values=np.array(run.states)[:, 0],
        escape=escape,
        dense=run.dense,
    )
    return series, escape


def integrateMatrixRiccati(spec, Y0, T, opts):
    n = spec.n
    Y0 = asCMatrix(Y0)
    if Y0.shape != (n, n):
        raise ValueError(f'Initial value must be {n}x{n}, got {Y0.shape}')
    hermitian = hermitianDefect(Y0) <= HERMITIAN_TOL * max(1.0, float(np.linalg.norm(Y0)))

    def rhs(t, y):
        return riccatiRhs(spec, t, y.reshape(n, n)).ravel()

    norm = lambda y: float(np.linalg.norm(y))
    watch = EscapeWatch(norm, opts)
    cLog(f'Integrating the matrix Riccati equation from t={spec.t0!r} to T={T!r}', 'blue')
    run = integrateAdaptive(rhs, spec.t0, Y0.ravel(), T, opts, stopWhen=watch, allowUnderflow=True)
    escape = watch.report(run)

    values = np.array(run.states).reshape(-1, n, n)
    drift = np.array([hermitianDefect(Y) for Y in values]) if hermitian else None
    series = RiccatiSeries(
        times=np.array(run.times),
        values=values,
        escape=escape,
        dense=run.dense,
        hermitian_drift=drift,
    )
    return series, escape
