"""
CSV / JSON 產出。

同一份設定必須產生逐位元組相同的檔案：
    * CSV 欄位順序固定，浮點數一律 '{:.12e}'，None 與非有限值寫成空字串
    * JSON 以 DRF JSONRenderer 輸出，帶 schema_version，不含時間戳
"""
import csv
import logging
import math
from pathlib import Path

from django.conf import settings
from rest_framework.renderers import JSONRenderer

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '{:.12e}'

SPECTRUM_COLUMNS = ('value', 'multiplicity', 'operator', 'mode', 'err')
CURVATURE_COLUMNS = ('t', 'f', 'f1', 'f2', 'S', 'region')
BOUND_COLUMNS = ('inequality', 'rhs', 'slack')
CERTIFICATE_COLUMNS = (
    'n', 'r', 'L', 'N', 'lambda1_sq', 'err_lambda', 'conjecture_rhs',
    'err_rhs', 'cap_C1', 'margin', 'verdict',
)
SWEEP_INDEX_COLUMNS = tuple(f'lambda{j}_sq' for j in range(1, 6))
SWEEP_LAPLACE_COLUMNS = tuple(f'laplace{j}' for j in range(1, 6))
SWEEP_COLUMNS = (
    ('n', 'r', 'L', 'N', 'ratio', 'conjecture_rhs')
    + SWEEP_INDEX_COLUMNS
    + ('cap_check',)
    + SWEEP_LAPLACE_COLUMNS
    + (
        'laplace_cap_check', 'mu1', 'lichnerowicz_slack', 'friedrich_slack',
        'hijazi_slack', 'margin', 'error_budget', 'verdict', 'violation', 'error',
    )
)
EPSILON_COLUMNS = ('j', 'mu', 'eps', 'value', 'direct', 'quotient')
ORACLE_COLUMNS = ('name', 'expected', 'observed', 'expected_mult', 'observed_mult', 'rel_error', 'passed')
COO_COLUMNS = ('row', 'col', 'value')


def format_cell(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return FLOAT_FORMAT.format(value) if math.isfinite(value) else ''
    if hasattr(value, 'dtype'):
        return format_cell(value.item())
    return str(value)


def write_csv(path, columns, rows):
    """rows 為 dict 或序列；空的 rows 只寫表頭。"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                row = [row.get(column) for column in columns]
            writer.writerow([format_cell(value) for value in row])
    return path


def render_json(data):
    payload = {'schema_version': settings.SPECTRAL_LAB['SCHEMA_VERSION']}
    payload.update(data)
    return JSONRenderer().render(payload, renderer_context={'indent': 2}) + b'\n'


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(render_json(data))
    return path


def emit(out_dir, name, columns, rows, summary):
    """寫出 <name>.csv 與 <name>.json，回傳兩個路徑。"""
    out_dir = Path(out_dir)
    csv_path = write_csv(out_dir / f'{name}.csv', columns, rows)
    json_path = write_json(out_dir / f'{name}.json', summary)
    logger.info("wrote %s and %s", csv_path, json_path)
    return csv_path, json_path


def write_config(out_dir, config):
    return write_json(Path(out_dir) / 'config.json', {'config': config})


def spectrum_rows(spectrum):
    return [
        {
            'value': entry.value,
            'multiplicity': entry.multiplicity,
            'operator': spectrum.operator,
            'mode': entry.mode,
            'err': entry.err,
        }
        for entry in spectrum.entries
    ]


def curvature_rows(p, c):
    names = [None] * p.size
    for region in p.regions:
        for i in range(region.first, region.last + 1):
            if names[i] is None:
                names[i] = region.name
    return [
        (float(p.t[i]), float(p.f[i]), float(p.f1[i]), float(p.f2[i]), float(c.S[i]), names[i])
        for i in range(p.size)
    ]


def bound_rows(report):
    rhs = {
        'lichnerowicz': report.lichnerowicz_rhs,
        'friedrich': report.friedrich_rhs,
        'hijazi': report.hijazi_rhs,
        'baer': report.baer_rhs,
        'conjecture': report.conjecture_rhs,
    }
    slacks = report.slacks
    return [(name, value, slacks[name]) for name, value in rhs.items() if value is not None]


def certificate_row(certificate):
    return {column: getattr(certificate, column) for column in CERTIFICATE_COLUMNS}


def sweep_rows(table):
    rows = []
    for row in table.rows:
        data = {column: getattr(row, column, None) for column in SWEEP_COLUMNS}
        for column, value in zip(SWEEP_INDEX_COLUMNS, row.lambda_sq):
            data[column] = value
        for column, value in zip(SWEEP_LAPLACE_COLUMNS, row.laplace):
            data[column] = value
        rows.append(data)
    return rows


def epsilon_rows(sweeps):
    return [
        (sweep.j, sweep.mu, row.eps, row.value, row.direct, row.quotient)
        for sweep in sweeps
        for row in sweep.rows
    ]


def oracle_rows(report):
    return [
        (
            check.name, check.expected, check.observed, check.expected_mult,
            check.observed_mult, check.rel_error, check.passed,
        )
        for check in report.checks
    ]


def write_matrix(path, op):
    """座標格式 (row, col, value) 的矩陣傾印。"""
    return write_csv(path, COO_COLUMNS, op.to_coo())
