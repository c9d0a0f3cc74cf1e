import logging

import numpy as np
import scipy.linalg
import scipy.optimize

from src.data.basicTypes import DIP, SIGN_CHANGE, ZeroRecord
from src.data.logs import cLog


LOCATION_TOL = 1e-8
DEDUP_DISTANCE = 1e-4
NEAR_MISS_FACTOR = 1e3


def zeroRatio(Phi, Psi):
    # sigma_min(Phi) / sigma_max([Phi; Psi]); invariant under a common rescaling of the pair
    top = scipy.linalg.svdvals(np.vstack([Phi, Psi]))[0]
    if top == 0.0:
        return 0.0
    return float(scipy.linalg.svdvals(Phi)[-1] / top)


def scalarZeros(times, values, fn, xtol=LOCATION_TOL):
    '''Bisects every sign change of a sampled real function, using fn between samples.'''
    zeros = []
    for k in range(len(times) - 1):
        a, b = float(times[k]), float(times[k + 1])
        fa, fb = float(values[k]), float(values[k + 1])
        if fa == 0.0:
            if not zeros or zeros[-1] != a:
                zeros.append(a)
            continue
        if fa * fb >= 0:
            continue
        # Endpoint values through fn can differ from the samples in the last digits
        if fn(a) * fn(b) >= 0:
            zeros.append(a if abs(fa) < abs(fb) else b)
            continue
        zeros.append(float(scipy.optimize.bisect(fn, a, b, xtol=xtol)))
    if len(times) and float(values[-1]) == 0.0 and (not zeros or zeros[-1] != float(times[-1])):
        zeros.append(float(times[-1]))
    return zeros


def _ratioFn(traj):
    def ratio(t):
        Phi, Psi = traj.stateAt(t)
        return zeroRatio(Phi, Psi)
    return ratio


def _refinedMinima(traj):
    values = traj.sigma_ratio
    times = traj.times
    ratio = _ratioFn(traj)
    minima = []
    last = len(values) - 1
    if last < 1:
        return minima
    for k in range(last + 1):
        # Endpoints only need to beat their one neighbour, strictly
        if k == 0:
            is_min = values[0] < values[1]
        elif k == last:
            is_min = values[k] < values[k - 1]
        else:
            is_min = values[k] < values[k - 1] and values[k] <= values[k + 1]
        if not is_min:
            continue
        res = scipy.optimize.minimize_scalar(
            ratio,
            bounds=(float(times[max(k - 1, 0)]), float(times[min(k + 1, last)])),
            method='bounded',
            options={'xatol': LOCATION_TOL},
        )
        if res.fun < values[k]:
            minima.append((float(res.x), float(res.fun)))
        else:
            minima.append((float(times[k]), float(values[k])))
    return minima


def _detSignChanges(traj):
    n = traj.n

    def reDet(t):
        y = traj.dense.evaluate(t)
        return float(np.linalg.det(y[:n * n].reshape(n, n)).real)

    sampled = [float(np.linalg.det(Phi).real) for Phi in traj.phis]
    return scalarZeros(traj.times, sampled, reDet)


def detectDetZeros(traj, zeta=1e-6):
    if len(traj) == 0:
        raise ValueError('Cannot detect zeros on an empty trajectory')
    if not 0 < zeta < 1:
        raise ValueError(f'Zero threshold must lie in (0, 1), got {zeta}')

    ratio = _ratioFn(traj)
    records = []
    if traj.is_real:
        for t in _detSignChanges(traj):
            records.append(ZeroRecord(t, ratio(t), SIGN_CHANGE))

    for t, value in _refinedMinima(traj):
        if value > zeta:
            continue
        if any(abs(t - r.t_zero) < DEDUP_DISTANCE for r in records):
            continue
        records.append(ZeroRecord(t, value, DIP))

    records.sort(key=lambda r: r.t_zero)
    cLog(f'Found {len(records)} zero(s) of det Phi on [{traj.t0!r}, {traj.tEnd!r}]', 'yellow')
    return records


def findNearMisses(traj, zeta=1e-6):
    '''Local minima of the zero ratio in (zeta, 1e3 * zeta]: possible zeros the sampling missed.'''
    misses = [(t, v) for t, v in _refinedMinima(traj) if zeta < v <= NEAR_MISS_FACTOR * zeta]
    level = logging.DEBUG if traj.is_real else logging.WARNING
    for t, v in misses:
        cLog(f'Near miss: zero ratio {v:.3e} at t={t:.9g} (threshold {zeta:.1e})', 'yellow', level)
    return misses
