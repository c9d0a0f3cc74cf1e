'''
Dense complex matrix utilities: Hermitian/skew parts, ordered spectra, PSD square roots,
positive linear functionals and the reciprocal surrogates nu_g, nu_0 for the smallest
eigenvalue.

Matrices are plain numpy arrays; every entry point converts with asCMatrix, which rejects
non-square or non-finite input.
'''

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from src.data.basicTypes import Spectrum
from src.data.errors import NotHermitian, NotPSD


HERMITIAN_TOL = 1e-10  # relative
SINGULAR_TOL = 1e-12
PSD_TOL = 1e-10
INEQUALITY_TOL = 1e-10


def asCMatrix(M):
    arr = np.asarray(M, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError(f'Expected a nonempty square matrix, got shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise ValueError('Matrix entries must be finite')
    return arr


def hermitianPart(M):
    M = asCMatrix(M)
    return (M + M.conj().T) / 2


def skewPart(M):
    # Hermitian as well: M = hermitianPart(M) + 1j * skewPart(M)
    M = asCMatrix(M)
    return (M - M.conj().T) / 2j


def hermitianDefect(M):
    M = asCMatrix(M)
    return float(np.linalg.norm(M - M.conj().T))


def checkHermitian(M, tol=HERMITIAN_TOL):
    M = asCMatrix(M)
    defect = hermitianDefect(M)
    scale = float(np.linalg.norm(M))
    if defect > tol * scale:
        raise NotHermitian(defect, scale)
    return M


def eigHermitian(H, tol=HERMITIAN_TOL):
    H = checkHermitian(H, tol)
    return Spectrum(scipy.linalg.eigh(hermitianPart(H), eigvals_only=True))


def _checkPsd(values, tol):
    if values[0] < -tol * max(1.0, values[-1]):
        raise NotPSD(float(values[0]), float(values[-1]))


def sqrtPsd(H, tol=PSD_TOL):
    H = checkHermitian(H)
    values, vectors = scipy.linalg.eigh(hermitianPart(H))
    _checkPsd(values, tol)
    roots = np.sqrt(np.clip(values, 0.0, None))
    R = (vectors * roots) @ vectors.conj().T
    return hermitianPart(R)


def isPositiveDefinite(H, tol=SINGULAR_TOL):
    spectrum = eigHermitian(H)
    return spectrum.smallest > tol * max(1.0, abs(spectrum.largest))


def isSingular(M, tol=SINGULAR_TOL):
    sigma = scipy.linalg.svdvals(asCMatrix(M))
    return bool(sigma[-1] <= tol * sigma[0]) or sigma[0] == 0.0


def hermitianInverse(H):
    return hermitianPart(np.linalg.inv(asCMatrix(H)))


@dataclass(frozen=True)
class FunctionalSpec:
    '''
    Positive linear functional M -> tr(W M) with W Hermitian, W >= 0 and tr W = 1.

    Every positive linear functional on Hermitian matrices has this form; the unit trace
    is what makes lambda_1(D) <= g(D) <= lambda_n(D) hold for D >= 0.
    '''
    weight: np.ndarray

    def __post_init__(self):
        W = checkHermitian(self.weight)
        values = scipy.linalg.eigvalsh(hermitianPart(W))
        _checkPsd(values, PSD_TOL)
        trace = np.trace(W).real
        if abs(trace - 1.0) > 1e-10:
            raise ValueError(f'Functional weight must have unit trace, got tr W = {trace!r}')
        W = hermitianPart(W)
        W.setflags(write=False)
        object.__setattr__(self, 'weight', W)

    @property
    def n(self):
        return self.weight.shape[0]

    @classmethod
    def normalizedTrace(cls, n):
        return cls(np.eye(n, dtype=complex) / n)

    @classmethod
    def fromWeight(cls, W):
        # Rescales any nonzero PSD weight to unit trace
        W = asCMatrix(W)
        trace = np.trace(W).real
        if trace <= 0:
            raise NotPSD(float(trace), float(trace))
        return cls(W / trace)


def functional(g, M, requireHermitian=True):
    if requireHermitian:
        M = checkHermitian(M)
    else:
        M = asCMatrix(M)
    if M.shape != g.weight.shape:
        raise ValueError(f'Functional of dimension {g.n} applied to a {M.shape} matrix')
    return float(np.trace(g.weight @ M).real)


def nuG(g, M):
    M = checkHermitian(M)
    values = scipy.linalg.eigvalsh(hermitianPart(M))
    _checkPsd(values, PSD_TOL)
    if isSingular(M):
        return 0.0
    return 1.0 / functional(g, hermitianInverse(M))


def nu0(B):
    B = checkHermitian(B)
    values = scipy.linalg.eigvalsh(hermitianPart(B))
    _checkPsd(values, PSD_TOL)
    if isSingular(B):
        return 0.0
    return 1.0 / float(np.trace(hermitianInverse(B)).real)


def traceQuadraticLowerBound(S, H):
    '''
    Lower bound for tr(S H S*) when H >= 0:

        (lambda_1(H) / n) * ([tr herm(S)]^2 + [tr skew(S)]^2)

    Callers compare against tr(S H S*) with slack INEQUALITY_TOL.
    '''
    S = asCMatrix(S)
    H = checkHermitian(H)
    spectrum = eigHermitian(H)
    _checkPsd(spectrum.values, PSD_TOL)
    n = S.shape[0]
    re_trace = np.trace(hermitianPart(S)).real
    im_trace = np.trace(skewPart(S)).real
    return spectrum.smallest / n * (re_trace**2 + im_trace**2)
