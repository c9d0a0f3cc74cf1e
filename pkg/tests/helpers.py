from pathlib import Path

import numpy as np

from src.coeffs.expressions import parseExpr
from src.coeffs.system import SystemSpec, TimeMatrix
from src.data.loadSystem import systemFromConfig


REPO_ROOT = Path(__file__).absolute().parent.parent
PROJECTS = REPO_ROOT / 'projects'


def constantSpec(A, B, C, mu='0', p='1', t0=0.0, name=''):
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    return SystemSpec(
        n=A.shape[0],
        t0=t0,
        A=TimeMatrix.constant('A', A),
        B=TimeMatrix.constant('B', np.atleast_2d(B)),
        C=TimeMatrix.constant('C', np.atleast_2d(C)),
        mu=parseExpr(mu),
        p=parseExpr(p),
        name=name,
    )


def entrySpec(A, B, C, mu='0', p='1', t0=0.0):
    # Rows of expression strings or (re, im) pairs
    return SystemSpec(
        n=len(A),
        t0=t0,
        A=TimeMatrix.fromEntries('A', A),
        B=TimeMatrix.fromEntries('B', B),
        C=TimeMatrix.fromEntries('C', C),
        mu=parseExpr(mu),
        p=parseExpr(p),
    )


def loadProject(name):
    return systemFromConfig(f'{name}.json', project_folder=PROJECTS, settings={})


def randomHermitian(rng, n, scale=1.0):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (X + X.conj().T) / 2


def randomPositiveDefinite(rng, n, shift=0.1):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return X @ X.conj().T + shift * np.eye(n)


def _scaled(M, factor):
    # Entries of M times an expression in t, as (re, im) text pairs
    return [[(f'({float(x.real)!r})*({factor})', f'({float(x.imag)!r})*({factor})') for x in row] for row in M]


def randomSmoothSpec(rng, n, scale=0.3, mu='0.1*cos(t)'):
    '''Bounded smooth coefficients with B and C Hermitian at every t.'''
    w = [float(x) for x in rng.uniform(0.2, 2.0, size=3)]
    phase = float(rng.uniform(0, np.pi))
    A0 = scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    A1 = scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    A = [
        [(f'({a0.real!r}) + ({a1.real!r})*sin({w[0]!r}*t)', f'({a0.imag!r}) + ({a1.imag!r})*sin({w[0]!r}*t)')
         for a0, a1 in zip(map(complex, r0), map(complex, r1))]
        for r0, r1 in zip(A0, A1)
    ]
    B = _scaled(randomHermitian(rng, n, scale), f'1 + 0.5*sin({w[1]!r}*t + {phase!r})')
    C0 = randomHermitian(rng, n, scale)
    C1 = randomHermitian(rng, n, scale)
    C = [
        [(f'({c0.real!r})*cos({w[2]!r}*t) + ({c1.real!r})', f'({c0.imag!r})*cos({w[2]!r}*t) + ({c1.imag!r})')
         for c0, c1 in zip(map(complex, r0), map(complex, r1))]
        for r0, r1 in zip(C0, C1)
    ]
    return entrySpec(A, B, C, mu=mu)
