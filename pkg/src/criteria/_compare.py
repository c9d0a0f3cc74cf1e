# Standard libraries
import logging
from concurrent.futures import ThreadPoolExecutor

# Pypi libraries
import numpy as np

# Internal libraries
from src.criteria._verdicts import (
    EIGEN,
    FACTORED,
    FUNCTIONAL,
    RECIPROCAL,
    SCALAR,
    eigenCriterion,
    factoredCriterion,
    functionalCriterion,
    notApplicable,
    reciprocalCriterion,
    scalarCriterionForSystem,
)
from src.data.basicTypes import OSCILLATORY, CompareReport
from src.data.errors import ConfigError, HamoscError
from src.data.logs import cLog
from src.integrate import detectDetZeros, findNearMisses, integrateSystem


CRITERIA = {
    FUNCTIONAL: functionalCriterion,
    SCALAR: scalarCriterionForSystem,
    EIGEN: eigenCriterion,
    RECIPROCAL: reciprocalCriterion,
    FACTORED: factoredCriterion,
}
CRITERION_KEYS = tuple(CRITERIA)

# Fewer zeros than this over the horizon contradict an oscillation verdict
MIN_ZEROS = 2


def runCriterion(key, spec, opts):
    if key not in CRITERIA:
        raise ValueError(f'Unknown criterion {key!r}; expected one of {", ".join(CRITERION_KEYS)}')
    try:
        return CRITERIA[key](spec, opts)
    except ConfigError:
        raise
    except HamoscError as e:
        return notApplicable(key, str(e))


def runCriteria(spec, opts, keys=None):
    keys = tuple(keys) if keys else CRITERION_KEYS
    with ThreadPoolExecutor(max_workers=max(1, opts.threads)) as pool:
        return list(pool.map(lambda key: runCriterion(key, spec, opts), keys))


def compareAll(spec, run_opts, Phi0=None, Psi0=None, keys=None):
    '''
    Runs the criteria, then integrates the system over [t0, T_max] and counts zeros of
    det Phi. An oscillation verdict with fewer than two zeros is flagged as a disagreement;
    the horizon may simply be too short.
    '''
    n = spec.n
    Phi0 = np.eye(n, dtype=complex) if Phi0 is None else Phi0
    Psi0 = np.zeros((n, n), dtype=complex) if Psi0 is None else Psi0
    zeta = run_opts.zero_threshold

    reports = runCriteria(spec, run_opts.criteria, keys)
    horizon = run_opts.criteria.divergence.t_max
    traj = integrateSystem(spec, Phi0, Psi0, horizon, run_opts.integrator)
    zeros = detectDetZeros(traj, zeta)
    misses = findNearMisses(traj, zeta)

    notes = []
    for t, value in misses:
        notes.append(f'near miss: zero ratio {value:.3e} at t={t:.9g}')
    if traj.rescale_log:
        notes.append(f'{len(traj.rescale_log)} rescale event(s)')

    positive = [r.criterion for r in reports if r.verdict == OSCILLATORY]
    disagreement = bool(positive) and len(zeros) < MIN_ZEROS
    if disagreement:
        msg = f'DISAGREEMENT: {", ".join(positive)} report oscillation but only {len(zeros)} zero(s) on [{spec.t0!r}, {horizon!r}]'
        notes.append(msg)
        cLog(msg, 'red', logging.WARNING)

    return CompareReport(
        reports=tuple(reports),
        zeros=tuple(zeros),
        horizon=horizon,
        max_conjoined_defect=float(np.max(traj.conjoined_defect)),
        rescale_events=tuple(traj.rescale_log),
        disagreement=disagreement,
        notes=tuple(notes),
    )
