import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from certificates.exceptions import TheoremViolation
from certificates.inequalities import (
    bounds_for_index,
    cap_upper_bounds,
    evaluate_bounds,
    fit_neck_tail,
    laplace_cap_upper_bounds,
    reference_spec,
)
from certificates.services import extrapolated_lambda1, neck_tail_check
from geometry.curvature import global_quantities, neck_limit, scalar_curvature_field
from geometry.profile import ProfileSpec, build_pinocchio_profile, build_round_profile
from spectra.services import Spectrum, SpectrumEntry, dirac_spectrum, laplace_spectrum, yamabe_spectrum


def fake_dirac(n, value):
    entries = (
        SpectrumEntry(-value, 2, 'mu=1', 0),
        SpectrumEntry(value, 2, 'mu=1', 0),
    )
    return Spectrum(operator='Dirac', n=n, entries=entries, truncation_floor=math.inf, certified=True)


class EqualityCaseTestCase(SimpleTestCase):
    """圓球 Sⁿ(1) 是 Friedrich、Hijazi 與猜想的等號情形"""

    def test_three_sphere(self):
        p = build_round_profile(3, 1.0, 64)
        c = scalar_curvature_field(p)
        q = global_quantities(p, c)
        dirac, lambda1 = extrapolated_lambda1(p)
        mu1 = yamabe_spectrum(p, c, 1).kth(1)
        report = evaluate_bounds(
            p, c, dirac, mu1, q,
            error_budget=2.0 * lambda1.value * lambda1.err,
            lambda1=lambda1.value, err_lambda=lambda1.err,
        )
        self.assertAlmostEqual(report.friedrich_rhs, 2.25, places=6)
        self.assertAlmostEqual(report.hijazi_rhs, 2.25, places=5)
        self.assertAlmostEqual(report.conjecture_rhs, 2.25, places=6)
        self.assertAlmostEqual(report.lambda1_sq, 2.25, places=3)
        self.assertAlmostEqual(report.lichnerowicz_rhs, 1.5, places=6)
        self.assertIsNone(report.baer_rhs)
        for name in ('friedrich', 'hijazi', 'conjecture'):
            self.assertLess(abs(report.slacks[name]), 1e-3)
        self.assertAlmostEqual(report.slacks['lichnerowicz'], 0.75, places=3)

    def test_two_sphere_baer(self):
        p = build_round_profile(2, 1.0, 64)
        c = scalar_curvature_field(p)
        q = global_quantities(p, c)
        report = evaluate_bounds(p, c, dirac_spectrum(p, 1), None, q, check=False)
        self.assertAlmostEqual(report.baer_rhs, 1.0, places=5)
        self.assertIsNone(report.hijazi_rhs)
        self.assertIsNone(report.mu1)
        self.assertAlmostEqual(report.lambda1_sq, 1.0, delta=0.1)

    def test_mu1_required_in_higher_dimensions(self):
        p = build_round_profile(3, 1.0, 32)
        c = scalar_curvature_field(p)
        with self.assertRaises(ValidationError):
            evaluate_bounds(p, c, fake_dirac(3, 1.5), None, global_quantities(p, c))


class TheoremViolationTestCase(SimpleTestCase):
    """λ₁² 低於已證明的下界時必須報錯"""

    def setUp(self):
        self.p = build_round_profile(3, 1.0, 32)
        self.c = scalar_curvature_field(self.p)
        self.q = global_quantities(self.p, self.c)

    def test_small_eigenvalue_raises(self):
        with self.assertRaises(TheoremViolation) as ctx:
            evaluate_bounds(self.p, self.c, fake_dirac(3, 0.5), 6.0, self.q)
        self.assertTrue(any('friedrich' in v for v in ctx.exception.violations))
        self.assertTrue(any('hijazi' in v for v in ctx.exception.violations))

    def test_check_disabled_returns_report(self):
        report = evaluate_bounds(self.p, self.c, fake_dirac(3, 0.5), 6.0, self.q, check=False)
        self.assertAlmostEqual(report.lambda1_sq, 0.25)
        self.assertTrue(report.violations())

    def test_conjecture_is_not_a_theorem(self):
        """猜想右式不成立時不算違反定理"""
        report = evaluate_bounds(self.p, self.c, fake_dirac(3, 1.5), 6.0, self.q)
        self.assertEqual(report.violations(), [])

    def test_error_budget_widens_tolerance(self):
        report = evaluate_bounds(self.p, self.c, fake_dirac(3, 1.49), 6.0, self.q, error_budget=0.1)
        self.assertEqual(report.tol, 0.1)
        self.assertEqual(report.violations(), [])


class CapBoundsTestCase(SimpleTestCase):
    """C_k 只依賴 Body"""

    def test_independent_of_neck(self):
        values = []
        for r, L in ((0.1, 10.0), (0.4, 0.0), (0.3, 60.0)):
            p = build_pinocchio_profile(ProfileSpec(n=3, r=r, L=L, N=32))
            values.append(dirac_spectrum(p, 4, cap=True).values(4))
        np.testing.assert_array_equal(values[0], values[1])
        np.testing.assert_array_equal(values[0], values[2])

    def test_nondecreasing_with_errors(self):
        cap = cap_upper_bounds(3, 2.0, 1.0, 4, 32)
        self.assertEqual(len(cap.values), 4)
        self.assertEqual(len(cap.errors), 4)
        self.assertTrue(all(a <= b for a, b in zip(cap.values, cap.values[1:])))
        self.assertTrue(all(e >= 0.0 for e in cap.errors))
        self.assertEqual(cap[1], cap.values[0])
        self.assertEqual(cap.operator, 'dirac')

    def test_reference_spec_is_valid(self):
        spec = reference_spec(3, 2.0, 1.0, 32)
        self.assertEqual(spec.L, 0.0)
        spec.validate()

    def test_pinocchio_eigenvalues_within_cap(self):
        p = build_pinocchio_profile(ProfileSpec(n=3, r=0.1, L=10.0, N=32))
        q = global_quantities(p, scalar_curvature_field(p))
        cap = cap_upper_bounds(3, 2.0, 1.0, 3, 32)
        dirac = dirac_spectrum(p, 3)
        for j in range(1, 4):
            bound = bounds_for_index(j, dirac, cap, q)
            self.assertTrue(bound.within_cap, msg=f"j={j}")
            self.assertAlmostEqual(bound.max_constant, bound.lambda_sq / q.ratio)

    def test_laplace_within_cap(self):
        p = build_pinocchio_profile(ProfileSpec(n=3, r=0.1, L=10.0, N=32))
        q = global_quantities(p, scalar_curvature_field(p))
        cap = laplace_cap_upper_bounds(3, 2.0, 1.0, 3, 32)
        laplace = laplace_spectrum(p, 3)
        self.assertEqual(cap.operator, 'laplace')
        for j in range(1, 4):
            self.assertTrue(bounds_for_index(j, laplace, cap, q).within_cap, msg=f"j={j}")


class NeckTailTestCase(SimpleTestCase):
    """1/|∫S/vol - (n-1)(n-2)/r²| 對 L 為仿射"""

    def test_fit_verified(self):
        fit = neck_tail_check(3, 0.1, (25.0, 50.0, 100.0), 32)
        self.assertTrue(fit.verified)
        self.assertGreater(fit.slope, 0.0)
        self.assertLess(fit.relative_error, 1e-6)
        for L, gap in zip(fit.L_values, fit.gaps):
            self.assertLessEqual(gap, fit.C / L * (1.0 + 1e-6))

    def test_synthetic_tail(self):
        limit = neck_limit(3, 0.5)
        ratios = [limit - 10.0 / (2.0 + L) for L in (1.0, 2.0, 4.0)]
        fit = fit_neck_tail((1.0, 2.0, 4.0), ratios, limit)
        self.assertAlmostEqual(fit.C, 10.0, places=9)
        self.assertTrue(fit.verified)

    def test_requires_three_lengths(self):
        with self.assertRaises(ValidationError):
            fit_neck_tail((1.0, 2.0), (1.0, 2.0), 3.0)
