'''
Dormand-Prince 5(4) embedded Runge-Kutta pair with PI step-size control, FSAL reuse of the
last stage and the pair's fourth-order continuous extension for dense output.

DenseSolution stores one polynomial segment per accepted step together with the log of the
common scale factor that was in effect while the step was taken, so callers that rescale
the state between steps can still recover true-scale values.
'''

# Standard libraries
import math
from bisect import bisect_right
from dataclasses import dataclass

# Pypi libraries
import numpy as np

# Internal libraries
from src.data.errors import InterpolationGap, StepLimitExceeded, StepSizeUnderflow
from src.data.logs import cLog


C = np.array([0, 1/5, 3/10, 4/5, 8/9, 1])
A = np.array([
    [0, 0, 0, 0, 0],
    [1/5, 0, 0, 0, 0],
    [3/40, 9/40, 0, 0, 0],
    [44/45, -56/15, 32/9, 0, 0],
    [19372/6561, -25360/2187, 64448/6561, -212/729, 0],
    [9017/3168, -355/33, 46732/5247, 49/176, -5103/18656],
])
B = np.array([35/384, 0, 500/1113, 125/192, -2187/6784, 11/84])
E = np.array([-71/57600, 0, 71/16695, -71/1920, 17253/339200, -22/525, 1/40])
# Continuous extension, coefficients of sigma, sigma^2, sigma^3, sigma^4 per stage
P = np.array([
    [1, -8048581381/2820520608, 8663915743/2820520608, -12715105075/11282082432],
    [0, 0, 0, 0],
    [0, 131558114200/32700410799, -68118460800/10900136933, 87487479700/32700410799],
    [0, -1754552775/470086768, 14199869525/1410260304, -10690763975/1880347072],
    [0, 127303824393/49829197408, -318862633887/49829197408, 701980252875/199316789632],
    [0, -282668133/205662961, 2019193451/616988883, -1453857185/822651844],
    [0, 40617522/29380423, -110615467/29380423, 69997945/29380423],
])

ORDER = 5
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
PI_ALPHA = 0.7 / ORDER
PI_BETA = 0.4 / ORDER


def rmsNorm(x):
    return float(np.sqrt(np.mean(np.abs(x)**2)))


def minStep(t):
    return 16 * np.spacing(max(abs(t), 1.0))


@dataclass(frozen=True)
class DenseSegment:
    t_old: float
    h: float
    y_old: np.ndarray
    Q: np.ndarray  # (dim, 4)

    def evaluate(self, t):
        sigma = (t - self.t_old) / self.h
        powers = np.cumprod(np.full(4, sigma))
        return self.y_old + self.h * (self.Q @ powers)


class DenseSolution:


    def __init__(self):
        self.starts = []
        self.segments = []
        self.log_scales = []


    def append(self, segment, log_scale):
        self.starts.append(segment.t_old)
        self.segments.append(segment)
        self.log_scales.append(log_scale)


    @property
    def tStart(self):
        return self.starts[0]


    @property
    def tEnd(self):
        last = self.segments[-1]
        return last.t_old + last.h


    def __len__(self):
        return len(self.segments)


    def evaluate(self, t, withScale=False):
        if not self.segments:
            raise InterpolationGap(t, 'no accepted steps')
        slack = 1e-12 * max(1.0, abs(t))
        if t < self.tStart - slack or t > self.tEnd + slack:
            raise InterpolationGap(t, f'outside the integrated span [{self.tStart!r}, {self.tEnd!r}]')
        idx = min(max(bisect_right(self.starts, t) - 1, 0), len(self.segments) - 1)
        y = self.segments[idx].evaluate(t)
        if withScale:
            return y, self.log_scales[idx]
        return y


class DormandPrince:
    '''Single-step driver; `step` advances by one accepted step towards t_bound.'''


    def __init__(self, fun, t0, y0, t_bound, rtol, atol, hmax=math.inf, first_step=None):
        self.fun = fun
        self.t = float(t0)
        self.y = np.array(y0, dtype=complex if np.iscomplexobj(y0) else float)
        self.t_bound = float(t_bound)
        self.rtol = rtol
        self.atol = atol
        self.hmax = hmax

        self.f = np.asarray(fun(self.t, self.y))
        self.K = np.zeros((7, self.y.size), dtype=np.result_type(self.y, self.f))
        self.h = first_step if first_step is not None else self._initialStep()
        self.h = min(self.h, self.hmax)
        self.err_prev = None
        self.last_rejected = False

        # Filled by step()
        self.t_old = None
        self.y_old = None
        self.h_taken = None
        self.steps = 0
        self.rejected = 0


    def _scale(self, y, y_new=None):
        size = np.abs(y) if y_new is None else np.maximum(np.abs(y), np.abs(y_new))
        return self.atol + self.rtol * size


    def _initialStep(self):
        scale = self._scale(self.y)
        d0 = rmsNorm(self.y / scale)
        d1 = rmsNorm(self.f / scale)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, self.t_bound - self.t)

        y1 = self.y + h0 * self.f
        f1 = np.asarray(self.fun(self.t + h0, y1))
        d2 = rmsNorm((f1 - self.f) / scale) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / ORDER)
        return min(100 * h0, h1)


    def _attempt(self, h):
        K = self.K
        K[0] = self.f
        for s in range(1, 6):
            dy = h * (K[:s].T @ A[s, :s])
            K[s] = self.fun(self.t + C[s] * h, self.y + dy)
        y_new = self.y + h * (K[:6].T @ B)
        f_new = np.asarray(self.fun(self.t + h, y_new))
        K[6] = f_new
        err = h * (K.T @ E)
        err_norm = rmsNorm(err / self._scale(self.y, y_new))
        return y_new, f_new, err_norm


    def step(self):
        h = min(self.h, self.hmax, self.t_bound - self.t)
        while True:
            if h < minStep(self.t):
                raise StepSizeUnderflow(self.t, h)

            y_new, f_new, err_norm = self._attempt(h)

            if err_norm <= 1.0:
                if err_norm == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = SAFETY * err_norm**-PI_ALPHA
                    if self.err_prev is not None:
                        factor *= self.err_prev**PI_BETA
                    factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
                if self.last_rejected:
                    factor = min(1.0, factor)
                self.err_prev = max(err_norm, 1e-4)
                self.last_rejected = False
                break

            factor = max(MIN_FACTOR, SAFETY * err_norm**-PI_ALPHA)
            h *= factor
            self.last_rejected = True
            self.rejected += 1

        self.t_old, self.y_old, self.h_taken = self.t, self.y, h
        # Land exactly on the bound
        self.t = self.t_bound if self.t_bound - (self.t + h) < minStep(self.t_bound) else self.t + h
        self.y = y_new
        self.f = f_new
        self.h = h * factor
        self.steps += 1


    def denseSegment(self):
        Q = self.K.T @ P
        return DenseSegment(self.t_old, self.h_taken, self.y_old, Q)


    def rescale(self, factor):
        # The system is linear, so a common positive factor maps solutions to solutions
        self.y = self.y * factor
        self.f = self.f * factor


    @property
    def finished(self):
        return self.t >= self.t_bound


@dataclass
class AdaptiveRun:
    times: list
    states: list
    log_scales: list
    rescale_log: list
    dense: DenseSolution
    steps: int = 0
    rejected: int = 0
    max_step: float = 0.0
    stopped: bool = False
    underflow: StepSizeUnderflow = None


def integrateAdaptive(fun, t0, y0, T, opts, rescaleNorm=None, stopWhen=None, allowUnderflow=False):
    '''
    Integrates y' = fun(t, y) from t0 to T, recording every accepted step.

    rescaleNorm, when given, is a norm of the state; once it exceeds opts.rescale_threshold
    the state is divided by it and the event is logged. stopWhen(solver) ending the run early
    sets `stopped`, as does a step-size underflow when allowUnderflow is set.
    '''
    if not T > t0:
        raise ValueError(f'End time T={T!r} must exceed the start time {t0!r}')

    solver = DormandPrince(fun, t0, y0, T, opts.rtol, opts.atol, hmax=opts.hmax)
    run = AdaptiveRun(
        times=[solver.t],
        states=[solver.y.copy()],
        log_scales=[0.0],
        rescale_log=[],
        dense=DenseSolution(),
    )
    log_scale = 0.0

    while not solver.finished:
        if solver.steps >= opts.max_steps:
            raise StepLimitExceeded(solver.t, solver.steps)
        try:
            solver.step()
        except StepSizeUnderflow as e:
            if not allowUnderflow:
                raise
            run.underflow = e
            run.stopped = True
            break
        finally:
            run.steps = solver.steps
            run.rejected = solver.rejected
        run.dense.append(solver.denseSegment(), log_scale)
        run.max_step = max(run.max_step, solver.h_taken)

        if rescaleNorm is not None:
            norm = rescaleNorm(solver.y)
            if norm > opts.rescale_threshold:
                factor = 1.0 / norm
                solver.rescale(factor)
                log_scale += math.log(factor)
                run.rescale_log.append((solver.t, factor))
                cLog(f'Rescaled state by {factor:.3e} at t={solver.t:.6g}', 'yellow')

        run.times.append(solver.t)
        run.states.append(solver.y.copy())
        run.log_scales.append(log_scale)

        if stopWhen is not None and stopWhen(solver):
            run.stopped = True
            break

    cLog(f'{run.steps} accepted steps, {run.rejected} rejected, t in [{t0!r}, {run.times[-1]!r}]', 'yellow')
    return run
