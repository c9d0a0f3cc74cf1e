'''
Machine-readable output: JSON report documents and the per-step trajectory CSV.

Documents carry no wall-clock or path content, so the same config and tool version always
serialize to the same bytes. Floats are written with 17 significant digits in both the JSON
and the CSV; in JSON, NaN and infinities become the strings "nan", "inf" and "-inf".
'''

import csv
import json
import json.encoder
import math

import numpy as np

from src.data.logs import cLog


TOOL_VERSION = '1.0.0'
CSV_COLUMNS = ['t', 'sigma_min_ratio', 'conjoined_defect', 'log_abs_det', 'det_phase']


def sanitize(value):
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return sanitize(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    if isinstance(value, complex):
        return {'re': sanitize(value.real), 'im': sanitize(value.imag)}
    return value


def _header(config):
    return {
        'tool_version': TOOL_VERSION,
        'config_hash': config.config_hash,
        'system': config.spec.name,
        'n': config.spec.n,
        't0': config.spec.t0,
    }


def _zeros(zeros):
    return [{'t': z.t_zero, 'sigma_min_ratio': z.sigma_ratio_min, 'kind': z.kind} for z in zeros]


def _rescales(events):
    return [{'t': t, 'factor': factor} for t, factor in events]


def validationDocument(config, report):
    doc = _header(config)
    doc['validation'] = report.asDict()
    return doc


def integrateDocument(config, traj, zeros, near_misses, T):
    doc = _header(config)
    doc['integration'] = {
        'T': T,
        't_end': traj.tEnd,
        'accepted_steps': len(traj) - 1,
        'max_conjoined_defect': float(np.max(traj.conjoined_defect)),
        'max_relative_defect': float(np.max(traj.relative_defect)),
        'rescale_events': _rescales(traj.rescale_log),
        'zeros': _zeros(zeros),
        'near_misses': [{'t': t, 'sigma_min_ratio': v} for t, v in near_misses],
    }
    return doc


def criteriaDocument(config, reports):
    doc = _header(config)
    doc['criteria'] = [r.asDict() for r in reports]
    return doc


def compareDocument(config, report):
    doc = criteriaDocument(config, report.reports)
    doc['comparison'] = {
        'horizon': report.horizon,
        'zeros': _zeros(report.zeros),
        'max_conjoined_defect': report.max_conjoined_defect,
        'rescale_events': _rescales(report.rescale_events),
        'disagreement': report.disagreement,
        'notes': list(report.notes),
    }
    return doc


def _jsonFloat(value):
    text = format(value, '.17g')
    # A bare '2' would read back as an int
    return text if '.' in text or 'e' in text else text + '.0'


class ReportEncoder(json.JSONEncoder):
    '''Encodes sanitized documents, floats with 17 significant digits.'''

    def iterencode(self, o, _one_shot=False):
        encoder = json.encoder.encode_basestring_ascii if self.ensure_ascii else json.encoder.encode_basestring
        indent = ' ' * self.indent if isinstance(self.indent, int) else self.indent
        return json.encoder._make_iterencode(
            {} if self.check_circular else None,
            self.default,
            encoder,
            indent,
            _jsonFloat,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            _one_shot,
        )(o, 0)


def writeJson(doc, path):
    text = json.dumps(sanitize(doc), cls=ReportEncoder, sort_keys=True, indent=2, allow_nan=False)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text + '\n')
    cLog(f'Wrote {path}', 'blue')


def detProxy(Phi, log_scale, is_real):
    '''
    (log |det Phi|, phase of det Phi) in true scale. det Phi itself underflows or overflows
    long before its logarithm does. The phase is 0 or pi for real systems.
    '''
    sign, logabs = np.linalg.slogdet(Phi)
    logabs = logabs - Phi.shape[0] * log_scale
    if sign == 0:
        return -math.inf, 0.0
    phase = float(np.angle(sign))
    if is_real:
        phase = 0.0 if sign.real > 0 else math.pi
    return float(logabs), phase


def _fmt(value):
    return format(float(value), '.17g')


def writeTrajectoryCsv(traj, path):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CSV_COLUMNS)
        for k, t in enumerate(traj.times):
            logabs, phase = detProxy(traj.phis[k], traj.log_scale[k], traj.is_real)
            writer.writerow([_fmt(t), _fmt(traj.sigma_ratio[k]), _fmt(traj.conjoined_defect[k]), _fmt(logabs), _fmt(phase)])
    cLog(f'Wrote {len(traj)} rows to {path}', 'blue')
