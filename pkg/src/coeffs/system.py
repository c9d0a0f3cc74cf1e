import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from src.coeffs.expressions import ONE, ZERO, Num, ScalarExpr, parseExpr, sub
from src.data.basicTypes import ValidationReport
from src.data.errors import ConfigError, DomainError, NonPositiveP
from src.data.logs import cLog
from src.matlin.hermitian import HERMITIAN_TOL, SINGULAR_TOL, hermitianPart


VALIDATION_SAMPLES = 257
VALIDATION_SPAN = 100.0


def asExpr(value):
    if isinstance(value, ScalarExpr):
        return value
    return parseExpr(value)


@dataclass(frozen=True)
class TimeMatrix:
    name: str
    re: tuple  # n x n tuple of ScalarExpr
    im: tuple

    def __post_init__(self):
        n = len(self.re)
        if n < 1:
            raise ValueError(f'{self.name} must be at least 1x1')
        for part in (self.re, self.im):
            if len(part) != n or any(len(row) != n for row in part):
                raise ValueError(f'{self.name} must be square {n}x{n}')

    @classmethod
    def fromEntries(cls, name, entries):
        # entries: rows of expression text, ScalarExpr, or (re, im) pairs
        re_rows, im_rows = [], []
        for row in entries:
            re_row, im_row = [], []
            for entry in row:
                if isinstance(entry, tuple):
                    re_part, im_part = entry
                else:
                    re_part, im_part = entry, ZERO
                re_row.append(asExpr(re_part))
                im_row.append(asExpr(im_part))
            re_rows.append(tuple(re_row))
            im_rows.append(tuple(im_row))
        return cls(name, tuple(re_rows), tuple(im_rows))

    @classmethod
    def constant(cls, name, M):
        M = np.asarray(M, dtype=complex)
        re_rows = tuple(tuple(Num(float(x.real)) for x in row) for row in M)
        im_rows = tuple(tuple(Num(float(x.imag)) for x in row) for row in M)
        return cls(name, re_rows, im_rows)

    @property
    def n(self):
        return len(self.re)

    def entries(self):
        for i in range(self.n):
            for j in range(self.n):
                yield i, j, self.re[i][j], self.im[i][j]

    @cached_property
    def isConstant(self):
        return all(r.isConstant and m.isConstant for _, _, r, m in self.entries())

    @cached_property
    def isReal(self):
        return all(m.isZero for _, _, _, m in self.entries())

    def _evaluate(self, t):
        out = np.zeros((self.n, self.n), dtype=complex)
        for i, j, re_expr, im_expr in self.entries():
            try:
                value = re_expr.evaluate(t)
                if not im_expr.isZero:
                    value = complex(value, im_expr.evaluate(t))
            except DomainError as e:
                raise DomainError(e.reason, where=f'{self.name}[{i},{j}]', t=t)
            out[i, j] = value
        return out

    def evaluate(self, t):
        if not self.isConstant:
            return self._evaluate(t)
        # Constant entries may still be undefined somewhere, e.g. 0*log(t) at t = 0,
        # so the cached value comes from the first time actually asked for
        value = self.__dict__.get('_constantValue')
        if value is None:
            value = self._evaluate(t)
            object.__setattr__(self, '_constantValue', value)
        return value.copy()


@dataclass(frozen=True)
class SystemSpec:
    n: int
    t0: float
    A: TimeMatrix
    B: TimeMatrix
    C: TimeMatrix
    mu: ScalarExpr = ZERO
    p: ScalarExpr = ONE
    name: str = ''

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f'Dimension must be positive, got {self.n}')
        if not math.isfinite(self.t0):
            raise ValueError(f't0 must be finite, got {self.t0}')
        for M in (self.A, self.B, self.C):
            if M.n != self.n:
                raise ValueError(f'{M.name} is {M.n}x{M.n}, expected {self.n}x{self.n}')
        # Every coefficient has to be evaluable at the start time
        for M in (self.A, self.B, self.C):
            M.evaluate(self.t0)
        self.mu.evaluate(self.t0)
        self.p.evaluate(self.t0)

    @cached_property
    def isReal(self):
        return self.A.isReal and self.B.isReal and self.C.isReal

    def coefficientsAt(self, t):
        return self.A.evaluate(t), self.B.evaluate(t), self.C.evaluate(t), self.mu.evaluate(t)


@dataclass(frozen=True)
class ScalarSystemSpec:
    a11: ScalarExpr
    a12: ScalarExpr
    a21: ScalarExpr
    a22: ScalarExpr
    t0: float = 0.0

    def __post_init__(self):
        for name in ['a11', 'a12', 'a21', 'a22']:
            object.__setattr__(self, name, asExpr(getattr(self, name)))
            getattr(self, name).evaluate(self.t0)

    @cached_property
    def E(self):
        return sub(self.a11, self.a22)


def evalMatrix(M, t):
    if not math.isfinite(t):
        raise ValueError(f'Evaluation time must be finite, got {t}')
    return M.evaluate(t)


def finiteDifferenceStep(t):
    return 1e-6 * max(1.0, abs(t))


def pWithDerivative(spec, t):
    # p' by central difference; the grammar has no derivative node
    p = spec.p.evaluate(t)
    if p <= 0:
        raise NonPositiveP(t, p)
    if spec.p.isConstant:
        return p, 0.0
    h = finiteDifferenceStep(t)
    return p, (spec.p.evaluate(t + h) - spec.p.evaluate(t - h)) / (2 * h)


def riccatiShift(spec, t):
    '''Returns (p, p', s) with s = p'/p - mu, the scalar shift of the Riccati form.'''
    p, dp = pWithDerivative(spec, t)
    return p, dp, dp / p - spec.mu.evaluate(t)


def chebyshevSamples(t0, span, count):
    k = np.arange(count)
    return t0 + span / 2 * (1 - np.cos(np.pi * k / (count - 1)))


def _worstHermitianEntry(M):
    gap = np.abs(M - M.conj().T)
    i, j = np.unravel_index(np.argmax(gap), gap.shape)
    return int(i), int(j), float(gap[i, j])


def validateSystem(spec, sample_count=VALIDATION_SAMPLES, span=VALIDATION_SPAN, tol=HERMITIAN_TOL):
    if sample_count < 2:
        raise ConfigError('VALIDATION_SAMPLES', f'validation needs at least 2 samples, got {sample_count}')

    failures = []
    flags = {'B': True, 'C': True, 'p': True, 'B>0': True}

    def fail(key, msg):
        # Only the first failure per check is reported
        if flags[key]:
            failures.append(msg)
            cLog(msg, 'red')
        flags[key] = False

    for t in chebyshevSamples(spec.t0, span, sample_count):
        t = float(t)
        for M in (spec.B, spec.C):
            try:
                value = M.evaluate(t)
            except DomainError as e:
                fail(M.name, str(e))
                if M.name == 'B':
                    flags['B>0'] = False
                continue
            scale = np.linalg.norm(value)
            if np.linalg.norm(value - value.conj().T) > tol * scale:
                i, j, gap = _worstHermitianEntry(value)
                fail(M.name, f'{M.name} is not Hermitian: {M.name}[{i},{j}] != conj({M.name}[{j},{i}]) at t={t!r} (gap {gap:.3e})')
                if M.name == 'B':
                    flags['B>0'] = False
            elif M.name == 'B' and flags['B>0']:
                values = np.linalg.eigvalsh(hermitianPart(value))
                if values[0] <= SINGULAR_TOL * max(1.0, abs(values[-1])):
                    flags['B>0'] = False
        try:
            p = spec.p.evaluate(t)
            if p <= 0:
                fail('p', f'p(t) must be positive, got p({t!r}) = {p!r}')
        except DomainError as e:
            fail('p', str(e))

    cLog(f'Validated {spec.name or "system"} on {sample_count} samples: {len(failures)} failure(s)', 'blue')
    return ValidationReport(
        samples=sample_count,
        hermitian_b=flags['B'],
        hermitian_c=flags['C'],
        positive_p=flags['p'],
        positive_definite_b=flags['B>0'],
        failures=tuple(failures),
    )


def scalarFromSystem(spec):
    # A real n = 1 system is the scalar system with a11 = A, a12 = B, a21 = C, a22 = mu - A
    if spec.n != 1 or not spec.isReal:
        raise ValueError('Only real one-dimensional systems reduce to a scalar system')
    a = spec.A.re[0][0]
    return ScalarSystemSpec(
        a11=a,
        a12=spec.B.re[0][0],
        a21=spec.C.re[0][0],
        a22=sub(spec.mu, a),
        t0=spec.t0,
    )
