from dataclasses import dataclass, field
from math import inf

import numpy as np


# Verdict vocabulary shared by divergence estimates and criterion reports
DIVERGES = 'diverges-evidence'
BOUNDED = 'bounded-evidence'
INCONCLUSIVE = 'inconclusive'
OSCILLATORY = 'oscillatory-evidence'
NOT_APPLICABLE = 'not-applicable'

SIGN_CHANGE = 'sign-change'
DIP = 'dip'


def frozenArray(values, dtype=None):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray

    def __post_init__(self):
        vals = frozenArray(self.values, dtype=float)
        if vals.ndim != 1 or len(vals) == 0:
            raise ValueError(f'Spectrum needs a nonempty 1d list of eigenvalues, got shape {vals.shape}')
        if np.any(np.diff(vals) < 0):
            raise ValueError(f'Spectrum must be ascending, got {vals}')
        object.__setattr__(self, 'values', vals)

    @property
    def smallest(self):
        return float(self.values[0])

    @property
    def largest(self):
        return float(self.values[-1])

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values.tolist())

    def __getitem__(self, idx):
        return float(self.values[idx])


@dataclass(frozen=True)
class IntegratorOpts:
    rtol: float = 1e-9
    atol: float = 1e-12
    hmax: float = inf
    max_steps: int = 1_000_000
    rescale_threshold: float = 1e8
    escape_threshold: float = 1e10
    # An escape needs the step to have collapsed below this fraction of the largest step taken
    escape_step_ratio: float = 1e-4

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError(f'Integrator tolerances must be positive, got rtol={self.rtol} atol={self.atol}')
        if self.rescale_threshold <= 1:
            raise ValueError(f'Rescale threshold must exceed 1, got {self.rescale_threshold}')


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    phis: np.ndarray  # (N, n, n), stored scale
    psis: np.ndarray
    sigma_ratio: np.ndarray
    conjoined_defect: np.ndarray  # true scale
    relative_defect: np.ndarray  # defect / (|Phi|_F^2 + |Psi|_F^2), scale free
    log_scale: np.ndarray  # stored = true * exp(log_scale)
    rescale_log: tuple = ()
    dense: object = None
    is_real: bool = False

    def __post_init__(self):
        for name in ['times', 'phis', 'psis', 'sigma_ratio', 'conjoined_defect', 'relative_defect', 'log_scale']:
            object.__setattr__(self, name, frozenArray(getattr(self, name)))
        if np.any(np.diff(self.times) <= 0):
            raise ValueError('Trajectory times must be strictly increasing')
        if any(factor <= 0 for _, factor in self.rescale_log):
            raise ValueError('Rescale factors must be positive')

    @property
    def n(self):
        return self.phis.shape[1]

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def tEnd(self):
        return float(self.times[-1])

    def __len__(self):
        return len(self.times)

    def stateAt(self, t, trueScale=False):
        # Dense output, (Phi, Psi) at t in stored scale unless trueScale
        n = self.n
        y, log_scale = self.dense.evaluate(t, withScale=True)
        if trueScale:
            y = y * np.exp(-log_scale)
        return y[:n * n].reshape(n, n), y[n * n:].reshape(n, n)


@dataclass(frozen=True)
class ZeroRecord:
    t_zero: float
    sigma_ratio_min: float
    kind: str

    def __post_init__(self):
        if self.kind not in {SIGN_CHANGE, DIP}:
            raise ValueError(f'Unknown zero kind {self.kind}')


@dataclass(frozen=True)
class EscapeReport:
    escaped: bool
    t_escape: float = None
    norm_at_escape: float = 0.0
    # Norm crossed the threshold without the step collapsing
    large: bool = False


@dataclass(frozen=True)
class ScalarTrajectory:
    times: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    zeros: tuple  # times where phi changes sign
    dense: object = None
    log_scale: np.ndarray = None

    def __post_init__(self):
        for name in ['times', 'phi', 'psi']:
            object.__setattr__(self, name, frozenArray(getattr(self, name)))


@dataclass(frozen=True)
class RiccatiSeries:
    times: np.ndarray
    values: np.ndarray  # (N,) scalar or (N, n, n) matrix
    escape: EscapeReport
    dense: object = None
    hermitian_drift: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, 'times', frozenArray(self.times))
        object.__setattr__(self, 'values', frozenArray(self.values))
        if self.hermitian_drift is not None:
            object.__setattr__(self, 'hermitian_drift', frozenArray(self.hermitian_drift))

    def valueAt(self, t):
        shape = self.values.shape[1:]
        return self.dense.evaluate(t).reshape(shape)


@dataclass(frozen=True)
class ValidationReport:
    samples: int
    hermitian_b: bool
    hermitian_c: bool
    positive_p: bool
    positive_definite_b: bool
    failures: tuple = ()

    @property
    def ok(self):
        return self.hermitian_b and self.hermitian_c and self.positive_p and not self.failures

    def asDict(self):
        return {
            'ok': self.ok,
            'samples': self.samples,
            'hermitian_B': self.hermitian_b,
            'hermitian_C': self.hermitian_c,
            'positive_p': self.positive_p,
            'positive_definite_B': self.positive_definite_b,
            'failures': list(self.failures),
        }


@dataclass(frozen=True)
class ComparisonReport:
    holds: bool
    min_gap: float
    where_min: float


@dataclass(frozen=True)
class DivergenceOpts:
    t_max: float = 200.0
    checkpoints: int = 8
    threshold: float = 50.0
    flat_threshold: float = 1e-3
    grid_points_per_checkpoint: int = 16

    def __post_init__(self):
        if self.checkpoints < 4:
            raise ValueError(f'Need at least 4 checkpoints, got {self.checkpoints}')
        if self.grid_points_per_checkpoint < 2 or self.grid_points_per_checkpoint % 2:
            raise ValueError('grid_points_per_checkpoint must be an even number >= 2')


@dataclass(frozen=True)
class DivergenceEstimate:
    name: str
    checkpoints: tuple  # ((T_k, value), ...)
    monotone_tail: int
    final_value: float
    verdict: str

    def __post_init__(self):
        times = [T for T, _ in self.checkpoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError('Checkpoints must be strictly increasing in T')
        if self.verdict not in {DIVERGES, BOUNDED, INCONCLUSIVE}:
            raise ValueError(f'Unknown divergence verdict {self.verdict}')

    def asDict(self):
        return {
            'name': self.name,
            'checkpoints': [[T, v] for T, v in self.checkpoints],
            'monotone_tail': self.monotone_tail,
            'final_value': self.final_value,
            'verdict': self.verdict,
        }


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    detail: str = ''

    def asDict(self):
        return {'name': self.name, 'passed': self.passed, 'detail': self.detail}


@dataclass(frozen=True)
class CriterionReport:
    criterion: str
    applicable: bool
    reason: str
    verdict: str
    evidence: tuple = ()
    checks: tuple = ()

    def __post_init__(self):
        if self.verdict == OSCILLATORY:
            if not self.applicable:
                raise ValueError('An inapplicable criterion cannot report oscillation')
            if any(est.verdict != DIVERGES for est in self.evidence):
                raise ValueError('Oscillation needs every required estimate to diverge')
        if not self.applicable and self.verdict != NOT_APPLICABLE:
            raise ValueError('Inapplicable criteria must carry the not-applicable verdict')

    def asDict(self):
        return {
            'criterion': self.criterion,
            'applicable': self.applicable,
            'reason': self.reason,
            'verdict': self.verdict,
            'evidence': [x.asDict() for x in self.evidence],
            'checks': [x.asDict() for x in self.checks],
        }


@dataclass(frozen=True)
class CriteriaOpts:
    divergence: DivergenceOpts = field(default_factory=DivergenceOpts)
    # Shift matrix and functional weight of the functional criterion; None means the defaults
    baseline_k: np.ndarray = None
    baseline_k_scale: float = 1e-3
    g_weight: np.ndarray = None
    eigen_lower_bound: str = 'lambda1'
    rank_tol: float = 1e-8
    threads: int = 1

    def __post_init__(self):
        if self.eigen_lower_bound not in {'lambda1', 'nu0'}:
            raise ValueError(f'eigen_lower_bound must be "lambda1" or "nu0", got {self.eigen_lower_bound}')


@dataclass(frozen=True)
class CompareReport:
    reports: tuple
    zeros: tuple
    horizon: float
    max_conjoined_defect: float
    rescale_events: tuple
    disagreement: bool
    notes: tuple = ()


@dataclass(frozen=True)
class RunOpts:
    integrator: IntegratorOpts = field(default_factory=IntegratorOpts)
    criteria: CriteriaOpts = field(default_factory=CriteriaOpts)
    # Absolute end time of `integrate`; None means t0 + horizon_span
    horizon: float = None
    horizon_span: float = 50.0
    zero_threshold: float = 1e-6
    hermitian_tol: float = 1e-10
    validation_samples: int = 257
    validation_span: float = 100.0

    def __post_init__(self):
        if not 0 < self.zero_threshold < 1:
            raise ValueError(f'Zero threshold must lie in (0, 1), got {self.zero_threshold}')
        if self.horizon_span <= 0:
            raise ValueError(f'Horizon span must be positive, got {self.horizon_span}')
        if self.validation_samples < 2:
            raise ValueError(f'Validation needs at least 2 samples, got {self.validation_samples}')

    def horizonFor(self, t0):
        return self.horizon if self.horizon is not None else t0 + self.horizon_span
