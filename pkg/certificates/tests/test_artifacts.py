import csv
import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from certificates import artifacts
from certificates.services import REFUTED, SweepRow, SweepTable
from geometry.profile import build_round_profile
from spectra.modes import laplace_mode
from spectra.radial_operators import LAPLACE
from spectra.services import radial_operator


class FormatCellTestCase(SimpleTestCase):
    """CSV 儲存格格式"""

    def test_values(self):
        self.assertEqual(artifacts.format_cell(None), '')
        self.assertEqual(artifacts.format_cell(True), 'true')
        self.assertEqual(artifacts.format_cell(False), 'false')
        self.assertEqual(artifacts.format_cell(1.5), '1.500000000000e+00')
        self.assertEqual(artifacts.format_cell(math.nan), '')
        self.assertEqual(artifacts.format_cell(-math.inf), '')
        self.assertEqual(artifacts.format_cell(3), '3')
        self.assertEqual(artifacts.format_cell('mu=1'), 'mu=1')

    def test_numpy_scalars(self):
        self.assertEqual(artifacts.format_cell(np.float64(2.0)), '2.000000000000e+00')
        self.assertEqual(artifacts.format_cell(np.int64(7)), '7')
        self.assertEqual(artifacts.format_cell(np.bool_(True)), 'true')


class WriteFilesTestCase(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_empty_rows_write_header(self):
        path = artifacts.write_csv(self.out / 'sub' / 'empty.csv', ('a', 'b'), [])
        self.assertEqual(path.read_text(encoding='utf-8'), 'a,b\n')

    def test_dict_rows_follow_columns(self):
        path = artifacts.write_csv(self.out / 'rows.csv', ('x', 'y'), [{'y': 2.0, 'x': 'p'}, {'x': 'q'}])
        lines = path.read_text(encoding='utf-8').splitlines()
        self.assertEqual(lines, ['x,y', 'p,2.000000000000e+00', 'q,'])

    def test_json_is_deterministic(self):
        data = {'value': 1.25, 'items': [1, 2, 3]}
        first = artifacts.render_json(data)
        self.assertEqual(first, artifacts.render_json(data))
        self.assertTrue(first.endswith(b'\n'))
        payload = json.loads(first)
        self.assertEqual(list(payload)[0], 'schema_version')
        self.assertEqual(payload['schema_version'], '1.0')
        self.assertEqual(payload['value'], 1.25)

    def test_config_file(self):
        path = artifacts.write_config(self.out, {'command': 'oracle', 'n': 3})
        self.assertEqual(path.name, 'config.json')
        payload = json.loads(path.read_text(encoding='utf-8'))
        self.assertEqual(payload, {'schema_version': '1.0', 'config': {'command': 'oracle', 'n': 3}})

    def test_emit_pair(self):
        csv_path, json_path = artifacts.emit(self.out, 'spectrum', ('value',), [(1.0,)], {'k': 1})
        self.assertEqual(csv_path.name, 'spectrum.csv')
        self.assertEqual(json_path.name, 'spectrum.json')

    def test_matrix_dump(self):
        """座標格式矩陣對稱，且與 bands 的非零個數一致"""
        p = build_round_profile(3, 1.0, 16)
        op = radial_operator(p, LAPLACE, laplace_mode(3, 1))
        path = artifacts.write_matrix(self.out / 'matrix.csv', op)
        with path.open(encoding='utf-8') as handle:
            rows = list(csv.DictReader(handle))
        self.assertEqual(len(rows), len(op.to_coo()))
        entries = {(int(row['row']), int(row['col'])): float(row['value']) for row in rows}
        for (i, j), value in entries.items():
            self.assertEqual(entries[(j, i)], value)


class RowBuilderTestCase(SimpleTestCase):

    def test_sweep_columns(self):
        rows = (
            SweepRow(
                n=3, r=0.1, L=1.0, N=32, ratio=10.0, conjecture_rhs=3.75, lambda_sq=(2.0, 2.5),
                laplace=(0.0,), cap_check=True, margin=1.75, error_budget=1e-3, verdict=REFUTED,
            ),
            SweepRow(n=3, r=0.95, L=1.0, N=32, error='r 超出範圍'),
        )
        table = SweepTable(n=3, N=32, k=2, cap_bounds=None, laplace_cap_bounds=None, rows=rows)
        first, second = artifacts.sweep_rows(table)
        self.assertEqual(set(first), set(artifacts.SWEEP_COLUMNS))
        self.assertEqual(first['lambda1_sq'], 2.0)
        self.assertEqual(first['lambda2_sq'], 2.5)
        self.assertIsNone(first['lambda3_sq'])
        self.assertEqual(first['laplace1'], 0.0)
        self.assertIsNone(first['laplace2'])
        self.assertEqual(second['error'], 'r 超出範圍')
        self.assertIsNone(second['ratio'])
