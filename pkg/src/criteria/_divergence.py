'''
Finite-horizon evidence for "lim_{t -> inf} f(t) = inf".

f is read at the checkpoints T_k = t0 + (T_max - t0) * 2^(k - m), k = 1..m. The verdict is
diverges-evidence when the last three increments are all positive and f(T_m) exceeds the
threshold, bounded-evidence when the last three increments are all below the flat threshold
in magnitude, and inconclusive otherwise.

Integrals are taken on one uniform grid whose nodes include every checkpoint.
'''

import math

import numpy as np
import scipy.integrate

from src.data.basicTypes import BOUNDED, DIVERGES, INCONCLUSIVE, DivergenceEstimate
from src.data.logs import cLog


TAIL = 3


def checkpointTimes(t0, opts):
    m = opts.checkpoints
    if not opts.t_max > t0:
        raise ValueError(f'T_max={opts.t_max!r} must exceed t0={t0!r}')
    return np.array([t0 + (opts.t_max - t0) * 2.0**(k - m) for k in range(1, m + 1)])


def divergenceGrid(t0, opts):
    '''Uniform grid on [t0, T_max]; checkpoint T_k sits at index q * 2^(k-1).'''
    intervals = opts.grid_points_per_checkpoint * 2**(opts.checkpoints - 1)
    return np.linspace(t0, opts.t_max, intervals + 1)


def checkpointIndices(opts):
    q = opts.grid_points_per_checkpoint
    return np.array([q * 2**(k - 1) for k in range(1, opts.checkpoints + 1)])


def runningIntegral(grid, values):
    return scipy.integrate.cumulative_simpson(np.asarray(values, dtype=float), x=grid, initial=0)


def _monotoneTail(values):
    count = 0
    for a, b in zip(values[-2::-1], values[:0:-1]):
        if not b > a:
            break
        count += 1
    return count


def estimateFromValues(name, times, values, opts):
    values = [float(v) for v in values]
    increments = np.diff(values)
    tail = _monotoneTail(values)
    final = values[-1]

    if not all(math.isfinite(v) for v in values[-TAIL - 1:]):
        verdict = INCONCLUSIVE
    elif tail >= TAIL and final > opts.threshold:
        verdict = DIVERGES
    elif np.all(np.abs(increments[-TAIL:]) < opts.flat_threshold):
        verdict = BOUNDED
    else:
        verdict = INCONCLUSIVE

    estimate = DivergenceEstimate(
        name=name,
        checkpoints=tuple((float(T), v) for T, v in zip(times, values)),
        monotone_tail=tail,
        final_value=final,
        verdict=verdict,
    )
    cLog(f'{name}: {verdict} (final {final:.6g}, monotone tail {tail})', 'yellow')
    return estimate


def divergenceEstimate(provider, t0, opts, name=''):
    '''provider maps an array of checkpoint times to the values of f there.'''
    times = checkpointTimes(t0, opts)
    values = np.asarray(provider(times), dtype=float)
    return estimateFromValues(name, times, values, opts)


def gridEstimate(name, grid, series, opts):
    # series is sampled on divergenceGrid(t0, opts)
    idx = checkpointIndices(opts)
    return estimateFromValues(name, grid[idx], np.asarray(series)[idx], opts)
