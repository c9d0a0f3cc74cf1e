# Pypi libraries
import numpy as np

# Internal libraries
from src.data.basicTypes import ScalarTrajectory, Trajectory
from src.data.logs import cLog
from src.integrate._dopri import integrateAdaptive
from src.integrate._zeros import scalarZeros, zeroRatio
from src.matlin.hermitian import asCMatrix


def systemRhs(spec):
    n = spec.n
    eye = np.eye(n)

    def rhs(t, y):
        Phi = y[:n * n].reshape(n, n)
        Psi = y[n * n:].reshape(n, n)
        A, B, C, mu = spec.coefficientsAt(t)
        dPhi = A @ Phi + B @ Psi
        dPsi = C @ Phi + (mu * eye - A.conj().T) @ Psi
        return np.concatenate([dPhi.ravel(), dPsi.ravel()])
    return rhs


def pairNorm(n):
    def norm(y):
        return float(np.linalg.norm(y[:n * n]) + np.linalg.norm(y[n * n:]))
    return norm


def conjoinedDefect(Phi, Psi):
    return float(np.linalg.norm(Phi.conj().T @ Psi - Psi.conj().T @ Phi))


def buildTrajectory(times, phis, psis, log_scales, rescale_log, dense, is_real):
    ratios, defects, relative = [], [], []
    for Phi, Psi, log_scale in zip(phis, psis, log_scales):
        defect = conjoinedDefect(Phi, Psi)
        size = np.linalg.norm(Phi)**2 + np.linalg.norm(Psi)**2
        ratios.append(zeroRatio(Phi, Psi))
        # Stored values carry exp(log_scale) and the defect is quadratic in the state
        defects.append(defect * np.exp(-2 * log_scale))
        relative.append(defect / size if size > 0 else 0.0)
    return Trajectory(
        times=np.array(times),
        phis=np.array(phis),
        psis=np.array(psis),
        sigma_ratio=np.array(ratios),
        conjoined_defect=np.array(defects),
        relative_defect=np.array(relative),
        log_scale=np.array(log_scales),
        rescale_log=tuple(rescale_log),
        dense=dense,
        is_real=is_real,
    )


def integrateSystem(spec, Phi0, Psi0, T, opts):
    n = spec.n
    Phi0 = asCMatrix(Phi0)
    Psi0 = asCMatrix(Psi0)
    if Phi0.shape != (n, n) or Psi0.shape != (n, n):
        raise ValueError(f'Initial data must be {n}x{n}, got {Phi0.shape} and {Psi0.shape}')

    cLog(f'Integrating {spec.name or "system"} (n={n}) from t={spec.t0!r} to T={T!r}', 'blue')
    y0 = np.concatenate([Phi0.ravel(), Psi0.ravel()])
    run = integrateAdaptive(systemRhs(spec), spec.t0, y0, T, opts, rescaleNorm=pairNorm(n))

    states = np.array(run.states)
    return buildTrajectory(
        run.times,
        states[:, :n * n].reshape(-1, n, n),
        states[:, n * n:].reshape(-1, n, n),
        run.log_scales,
        run.rescale_log,
        run.dense,
        spec.isReal,
    )


def integrateScalarSystem(s, phi0, psi0, T, opts):
    fns = [s.a11, s.a12, s.a21, s.a22]

    def rhs(t, y):
        a11, a12, a21, a22 = [f.evaluate(t) for f in fns]
        return np.array([a11 * y[0] + a12 * y[1], a21 * y[0] + a22 * y[1]])

    y0 = np.array([float(phi0), float(psi0)])
    run = integrateAdaptive(rhs, s.t0, y0, T, opts, rescaleNorm=lambda y: float(np.abs(y).sum()))

    states = np.array(run.states)
    times = np.array(run.times)
    zeros = scalarZeros(times, states[:, 0], lambda t: run.dense.evaluate(t)[0])
    cLog(f'Scalar system: {len(zeros)} zero(s) of phi on [{s.t0!r}, {T!r}]', 'yellow')
    return ScalarTrajectory(
        times=times,
        phi=states[:, 0],
        psi=states[:, 1],
        zeros=tuple(zeros),
        dense=run.dense,
        log_scale=np.array(run.log_scales),
    )
