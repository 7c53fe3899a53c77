import math

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, TestCase

from certificates.inequalities import CapBounds
from certificates.models import CertificateRecord
from certificates.services import (
    NOT_REFUTED,
    REFUTED,
    CounterexampleCertificate,
    OracleCheck,
    SweepRow,
    SweepTable,
    counterexample_certificate,
    extrapolated_lambda1,
    record_certificate,
    record_sweep,
    round_sphere_certificate,
    run_oracle_suite,
    sweep,
)
from geometry.profile import ProfileSpec, build_round_profile


class CounterexampleCertificateTestCase(SimpleTestCase):
    """細長 neck 的 Pinocchio metric 使 λ₁² 遠低於猜想右式"""

    def test_three_dimensions(self):
        certificate = counterexample_certificate(ProfileSpec(n=3, r=0.1, L=100.0, N=32))
        self.assertEqual(certificate.verdict, REFUTED)
        self.assertTrue(certificate.refuted)
        self.assertGreater(certificate.margin, 10.0 * certificate.error_budget)
        self.assertLessEqual(certificate.lambda1_sq, certificate.cap_C1)
        self.assertAlmostEqual(certificate.conjecture_rhs, 3.0 / 8.0 * certificate.ratio, places=9)
        self.assertAlmostEqual(certificate.margin, certificate.conjecture_rhs - certificate.lambda1_sq, places=12)

    def test_four_dimensions(self):
        certificate = counterexample_certificate(ProfileSpec(n=4, r=0.1, L=100.0, N=32))
        self.assertEqual(certificate.verdict, REFUTED)
        self.assertGreater(certificate.margin, certificate.error_budget)

    def test_two_dimensions_rejected(self):
        with self.assertRaises(ValidationError):
            counterexample_certificate(ProfileSpec(n=2, r=0.1, L=1.0, N=32))

    def test_round_sphere_is_not_refuted(self):
        """等號情形：margin 落在誤差預算內"""
        certificate = round_sphere_certificate(3, 64)
        self.assertEqual(certificate.verdict, NOT_REFUTED)
        self.assertLess(abs(certificate.margin), 1e-3)
        self.assertTrue(math.isnan(certificate.cap_C1))

    def test_extrapolation(self):
        value = extrapolated_lambda1(build_round_profile(3, 1.0, 32))[1]
        self.assertAlmostEqual(value.value, value.fine + (value.fine - value.coarse) / 3.0, places=14)
        self.assertLess(abs(value.value - 1.5), abs(value.coarse - 1.5))


class SweepTestCase(SimpleTestCase):
    """r × L 網格"""

    def test_rows_and_cap_checks(self):
        table = sweep((0.1,), (1.0, 10.0), 3, 32, k=2)
        self.assertEqual(len(table.rows), 2)
        self.assertEqual(table.failed, [])
        self.assertEqual(table.violations, [])
        first, second = table.rows
        self.assertLess(first.ratio, second.ratio)
        for row in table.rows:
            self.assertTrue(row.cap_check)
            self.assertTrue(row.laplace_cap_check)
            self.assertEqual(len(row.lambda_sq), 2)
            self.assertEqual(len(row.laplace), 2)
            self.assertGreater(row.hijazi_slack, 0.0)
        self.assertEqual(len(table.cap_bounds.values), 2)

    def test_invalid_cell_recorded(self):
        table = sweep((0.1, 0.95), (1.0,), 3, 32, k=1)
        self.assertEqual(len(table.rows), 2)
        self.assertEqual(len(table.failed), 1)
        failed = table.failed[0]
        self.assertEqual(failed.r, 0.95)
        self.assertIsNone(failed.ratio)
        self.assertEqual(table.rows[0].error, '')

    def test_empty_grid(self):
        table = sweep((), (1.0,), 3, 32)
        self.assertEqual(table.rows, ())
        self.assertIsNone(table.cap_bounds)

    def test_arguments(self):
        with self.assertRaises(ValidationError):
            sweep((0.1,), (1.0,), 2, 32)
        with self.assertRaises(ValidationError):
            sweep((0.1,), (1.0,), 3, 32, k=6)


class OracleTestCase(SimpleTestCase):
    """圓球上的古典譜公式"""

    def test_three_sphere(self):
        report = run_oracle_suite(3, 128, levels=4)
        failed = [check.name for check in report.checks if not check.passed]
        self.assertEqual(failed, [])
        self.assertTrue(report.passed)
        names = [check.name for check in report.checks]
        self.assertIn('laplace 15', names)
        self.assertIn('dirac -1.5', names)
        self.assertIn('hijazi_rhs', names)

    def test_two_sphere_geometry(self):
        report = run_oracle_suite(2, 128, levels=3)
        checks = {check.name: check for check in report.checks}
        self.assertNotIn('hijazi_rhs', checks)
        for name in ('area', 'baer_rhs', 'laplace 0', 'laplace 2', 'laplace 6'):
            self.assertTrue(checks[name].passed, msg=name)

    def test_three_sphere_fine_grid(self):
        """N = 2000、十層 Laplace 與六層 Dirac，全部在 1e-3 內"""
        report = run_oracle_suite(3, 2000, levels=10)
        failed = [check.name for check in report.checks if not check.passed]
        self.assertEqual(failed, [])
        self.assertLessEqual(report.max_rel_error, 1e-3)
        dirac = [check for check in report.checks if check.name.startswith('dirac')]
        self.assertEqual(len(dirac), 12)
        self.assertEqual(dirac[0].name, 'dirac -1.5')
        self.assertEqual(dirac[1].name, 'dirac 1.5')
        self.assertEqual(dirac[-1].expected_mult, 42)

    def test_two_sphere_dirac(self):
        """S² 上 ±(1 + k)，每個符號重數 2(k + 1)"""
        report = run_oracle_suite(2, 1024, levels=4)
        failed = [check.name for check in report.checks if not check.passed]
        self.assertEqual(failed, [])
        checks = {check.name: check for check in report.checks}
        for k in range(4):
            for sign in (-1, 1):
                check = checks[f"dirac {sign * (1 + k):g}"]
                self.assertEqual(check.observed_mult, 2 * (k + 1))
                self.assertEqual(check.observed < 0.0, sign < 0)

    def test_check_multiplicity(self):
        self.assertFalse(OracleCheck('x', 3.0, 3.0, expected_mult=4, observed_mult=3).passed)
        self.assertTrue(OracleCheck('x', 3.0, 3.0001, expected_mult=4, observed_mult=4).passed)
        self.assertFalse(OracleCheck('x', 3.0, math.nan, expected_mult=4).passed)


class RecordTestCase(TestCase):

    def make_certificate(self, **kwargs):
        data = dict(
            n=3, r=0.1, L=100.0, N=32, lambda1_sq=1.2, err_lambda=1e-4,
            conjecture_rhs=35.0, err_rhs=2e-4, cap_C1=5.0, margin=33.8, verdict=REFUTED,
        )
        data.update(kwargs)
        return CounterexampleCertificate(**data)

    def test_record_certificate(self):
        record = record_certificate(self.make_certificate(), config={'command': 'certificate'})
        record.refresh_from_db()
        self.assertEqual(record.kind, CertificateRecord.KIND_CERTIFICATE)
        self.assertEqual(record.verdict, REFUTED)
        self.assertAlmostEqual(record.error_budget, 3e-4)
        self.assertEqual(record.config, {'command': 'certificate'})
        self.assertEqual(str(record), 'n=3 r=0.1 L=100 N=32: REFUTED')

    def test_dimension_and_resolution_columns_are_distinct(self):
        """SQLite 欄位名稱不分大小寫，n 與 N 必須對應到不同欄位"""
        columns = {CertificateRecord._meta.get_field(name).column.lower() for name in ('n', 'N')}
        self.assertEqual(len(columns), 2)
        record = record_certificate(self.make_certificate(n=4, N=48))
        stored = CertificateRecord.objects.values('n', 'N').get(pk=record.pk)
        self.assertEqual(stored, {'n': 4, 'N': 48})

    def test_record_sweep_skips_failed_cells(self):
        cap = CapBounds(n=3, t_body=2.0, w_taper=1.0, N=32, values=(5.0,), errors=(0.0,), operator='dirac')
        rows = (
            SweepRow(
                n=3, r=0.1, L=1.0, N=32, ratio=10.0, conjecture_rhs=3.75, lambda1_sq=2.0,
                err_lambda=5e-4, err_rhs=5e-4, lambda_sq=(2.01,), margin=1.75, error_budget=1e-3, verdict=REFUTED,
            ),
            SweepRow(n=3, r=0.95, L=1.0, N=32, error='r 超出範圍'),
        )
        table = SweepTable(n=3, N=32, k=1, cap_bounds=cap, laplace_cap_bounds=None, rows=rows)
        records = record_sweep(table)
        self.assertEqual(len(records), 1)
        self.assertEqual(CertificateRecord.objects.filter(kind=CertificateRecord.KIND_SWEEP).count(), 1)
        self.assertEqual(records[0].cap_C1, 5.0)
        self.assertEqual(records[0].lambda1_sq, 2.0)
        self.assertAlmostEqual(records[0].err_rhs, 5e-4)
