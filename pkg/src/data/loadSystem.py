import hashlib
import math
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from src.coeffs.expressions import ZERO, parseExpr
from src.coeffs.system import SystemSpec, TimeMatrix
from src.data.basicTypes import CriteriaOpts, DivergenceOpts, IntegratorOpts, RunOpts
from src.data.errors import ConfigError, HamoscError, ParseError
from src.data.logs import cLog
from src.matlin.hermitian import FunctionalSpec


DEFAULT_SETTINGS_PATH = Path(__file__).absolute().parent.parent.parent / 'config_hamosc.yaml'

TOP_KEYS = {'n', 't0', 'A', 'B', 'C', 'mu', 'p', 'phi0', 'psi0', 'integrator', 'criteria'}
REQUIRED_KEYS = {'n', 'A', 'B', 'C'}
INTEGRATOR_KEYS = {'rtol', 'atol', 'T'}
CRITERIA_KEYS = {'T_max', 'checkpoints', 'threshold', 'K', 'g_weight'}
ENTRY_KEYS = {'re', 'im'}


@dataclass(frozen=True)
class SystemConfig:
    spec: SystemSpec
    phi0: np.ndarray
    psi0: np.ndarray
    opts: RunOpts
    config_hash: str
    path: str = ''


def loadSettings(settings_path=None):
    settings_path = Path(settings_path) if settings_path is not None else DEFAULT_SETTINGS_PATH
    try:
        with open(settings_path, 'r') as f:
            settings = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(str(settings_path), f'cannot read settings ({e.strerror})')
    except yaml.YAMLError as e:
        raise ConfigError(str(settings_path), f'invalid YAML ({e})')

    # Environment overrides the settings file
    threads = os.environ.get('HAMOSC_THREADS')
    if threads:
        try:
            settings['THREADS'] = max(1, int(threads))
        except ValueError:
            raise ConfigError('HAMOSC_THREADS', f'expected an integer, got {threads!r}')
    return settings


def settingsToOpts(settings):
    try:
        return _settingsToOpts(dict(settings or {}))
    except (ValueError, TypeError) as e:
        raise ConfigError('settings', str(e))


def _settingsToOpts(s):
    integrator = IntegratorOpts(
        rtol=float(s.get('RTOL', 1e-9)),
        atol=float(s.get('ATOL', 1e-12)),
        max_steps=int(s.get('MAX_STEPS', 1_000_000)),
        rescale_threshold=float(s.get('RESCALE_THRESHOLD', 1e8)),
        escape_threshold=float(s.get('ESCAPE_THRESHOLD', 1e10)),
    )
    divergence = DivergenceOpts(
        t_max=float(s.get('T_MAX', 200.0)),
        checkpoints=int(s.get('CHECKPOINTS', 8)),
        threshold=float(s.get('THRESHOLD', 50.0)),
        flat_threshold=float(s.get('FLAT_THRESHOLD', 1e-3)),
        grid_points_per_checkpoint=int(s.get('GRID_POINTS_PER_CHECKPOINT', 16)),
    )
    criteria = CriteriaOpts(
        divergence=divergence,
        baseline_k_scale=float(s.get('BASELINE_K_SCALE', 1e-3)),
        eigen_lower_bound=str(s.get('EIGEN_LOWER_BOUND', 'lambda1')),
        rank_tol=float(s.get('RANK_TOL', 1e-8)),
        threads=int(s.get('THREADS', 1)),
    )
    return RunOpts(
        integrator=integrator,
        criteria=criteria,
        horizon_span=float(s.get('HORIZON_SPAN', 50.0)),
        zero_threshold=float(s.get('ZERO_THRESHOLD', 1e-6)),
        hermitian_tol=float(s.get('HERMITIAN_TOL', 1e-10)),
        validation_samples=int(s.get('VALIDATION_SAMPLES', 257)),
        validation_span=float(s.get('VALIDATION_SPAN', 100.0)),
    )


def _checkKeys(path, where, mapping, allowed):
    if not isinstance(mapping, dict):
        raise ConfigError(path, f'{where} must be an object, got {type(mapping).__name__}')
    unknown = set(map(str, mapping)) - allowed
    if unknown:
        raise ConfigError(path, f'unknown key(s) {sorted(unknown)} in {where} (allowed: {sorted(allowed)})')


def _number(path, where, value):
    # YAML 1.1 reads exponent-only floats like 1e-9 as strings
    if isinstance(value, bool):
        raise ConfigError(path, f'{where} must be a number, got a boolean')
    if isinstance(value, (int, float, str)):
        try:
            value = float(value)
        except (ValueError, OverflowError):
            raise ConfigError(path, f'{where} must be a finite number, got {value!r}')
    else:
        raise ConfigError(path, f'{where} must be a number, got {type(value).__name__}')
    if not math.isfinite(value):
        raise ConfigError(path, f'{where} must be finite, got {value!r}')
    return value


def _integer(path, where, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f'{where} must be an integer, got {value!r}')
    return value


def _expression(path, where, value):
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise ConfigError(path, f'{where} must be an expression string or a number, got {type(value).__name__}')
    try:
        return parseExpr(value)
    except ParseError as e:
        raise ParseError(f'{where}: {e.reason}', e.offset, e.expected)


def _rows(path, name, value, n):
    if not isinstance(value, list) or len(value) != n or any(not isinstance(row, list) or len(row) != n for row in value):
        raise ConfigError(path, f'{name} must be an {n}x{n} array')
    return value


def _timeMatrix(path, name, value, n):
    entries = []
    for i, row in enumerate(_rows(path, name, value, n)):
        entry_row = []
        for j, entry in enumerate(row):
            where = f'{name}[{i}][{j}]'
            if isinstance(entry, dict):
                _checkKeys(path, where, entry, ENTRY_KEYS)
                if 're' not in entry:
                    raise ConfigError(path, f'{where} is missing "re"')
                re_part = _expression(path, f'{where}.re', entry['re'])
                im_part = _expression(path, f'{where}.im', entry['im']) if 'im' in entry else ZERO
            else:
                re_part, im_part = _expression(path, where, entry), ZERO
            entry_row.append((re_part, im_part))
        entries.append(entry_row)
    return TimeMatrix.fromEntries(name, entries)


def _numericMatrix(path, name, value, n):
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(_rows(path, name, value, n)):
        for j, entry in enumerate(row):
            where = f'{name}[{i}][{j}]'
            if isinstance(entry, dict):
                _checkKeys(path, where, entry, ENTRY_KEYS)
                out[i, j] = complex(_number(path, f'{where}.re', entry.get('re', 0)), _number(path, f'{where}.im', entry.get('im', 0)))
            else:
                out[i, j] = _number(path, where, entry)
    return out


def _integratorOpts(path, section, opts):
    _checkKeys(path, 'integrator', section, INTEGRATOR_KEYS)
    changes = {}
    for key in ['rtol', 'atol']:
        if key in section:
            changes[key] = _number(path, f'integrator.{key}', section[key])
            if changes[key] <= 0:
                raise ConfigError(path, f'integrator.{key} must be positive')
    integrator = replace(opts.integrator, **changes)
    horizon = _number(path, 'integrator.T', section['T']) if 'T' in section else None
    return replace(opts, integrator=integrator, horizon=horizon)


def _criteriaOpts(path, section, opts, n):
    _checkKeys(path, 'criteria', section, CRITERIA_KEYS)
    divergence = opts.criteria.divergence
    changes = {}
    if 'T_max' in section:
        changes['t_max'] = _number(path, 'criteria.T_max', section['T_max'])
    if 'checkpoints' in section:
        changes['checkpoints'] = _integer(path, 'criteria.checkpoints', section['checkpoints'])
    if 'threshold' in section:
        changes['threshold'] = _number(path, 'criteria.threshold', section['threshold'])
    try:
        divergence = replace(divergence, **changes)
    except ValueError as e:
        raise ConfigError(path, str(e))

    criteria = replace(opts.criteria, divergence=divergence)
    if 'K' in section:
        K = _numericMatrix(path, 'criteria.K', section['K'], n)
        if np.any(K.imag != 0) or not np.allclose(K, K.T) or not np.any(K != 0):
            raise ConfigError(path, 'criteria.K must be a real symmetric nonzero matrix')
        criteria = replace(criteria, baseline_k=K.real)
    if 'g_weight' in section:
        W = _numericMatrix(path, 'criteria.g_weight', section['g_weight'], n)
        try:
            FunctionalSpec.fromWeight(W)
        except (HamoscError, ValueError) as e:
            raise ConfigError(path, f'criteria.g_weight: {e}')
        criteria = replace(criteria, g_weight=W)
    return replace(opts, criteria=criteria)


def systemFromDocument(config, path='<config>', opts=None, name=''):
    opts = opts if opts is not None else RunOpts()
    _checkKeys(path, 'the document', config, TOP_KEYS)
    missing = REQUIRED_KEYS - set(config)
    if missing:
        raise ConfigError(path, f'missing key(s) {sorted(missing)}')

    n = _integer(path, 'n', config['n'])
    if n < 1:
        raise ConfigError(path, f'n must be positive, got {n}')
    t0 = _number(path, 't0', config.get('t0', 0.0))

    A = _timeMatrix(path, 'A', config['A'], n)
    B = _timeMatrix(path, 'B', config['B'], n)
    C = _timeMatrix(path, 'C', config['C'], n)
    mu = _expression(path, 'mu', config.get('mu', '0'))
    p = _expression(path, 'p', config.get('p', '1'))

    phi0 = _numericMatrix(path, 'phi0', config['phi0'], n) if 'phi0' in config else np.eye(n, dtype=complex)
    psi0 = _numericMatrix(path, 'psi0', config['psi0'], n) if 'psi0' in config else np.zeros((n, n), dtype=complex)

    if 'integrator' in config:
        opts = _integratorOpts(path, config['integrator'], opts)
    if 'criteria' in config:
        opts = _criteriaOpts(path, config['criteria'], opts, n)
    if opts.horizon is not None and opts.horizon <= t0:
        raise ConfigError(path, f'integrator.T must exceed t0 = {t0!r}')

    spec = SystemSpec(n=n, t0=t0, A=A, B=B, C=C, mu=mu, p=p, name=name)
    return spec, phi0, psi0, opts


def systemFromConfig(project_name, project_folder='', settings=None):
    config_path = Path(project_folder) / f'{project_name}'
    path = str(config_path)
    try:
        with open(config_path, 'rb') as f:
            raw = f.read()
    except OSError as e:
        raise ConfigError(path, f'cannot read file ({e.strerror})')

    try:
        text = raw.decode('utf-8')
    except UnicodeDecodeError as e:
        raise ConfigError(path, f'not valid UTF-8 at byte {e.start}')
    try:
        config = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(path, f'not a valid JSON/YAML document ({e})')
    except (ValueError, TypeError, RecursionError) as e:
        raise ConfigError(path, f'not a valid JSON/YAML document ({type(e).__name__})')

    opts = settingsToOpts(settings if settings is not None else {})
    spec, phi0, psi0, opts = systemFromDocument(config, path=path, opts=opts, name=config_path.stem)
    cLog(f'Loaded {path}: n={spec.n}, t0={spec.t0!r}', 'blue')

    return SystemConfig(
        spec=spec,
        phi0=phi0,
        psi0=psi0,
        opts=opts,
        config_hash=hashlib.sha256(raw).hexdigest(),
        path=path,
    )
