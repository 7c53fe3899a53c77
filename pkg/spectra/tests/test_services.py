import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from geometry.curvature import scalar_curvature_field
from geometry.profile import ProfileSpec, build_pinocchio_profile, build_round_profile
from spectra.exceptions import ResolutionError
from spectra.radial_operators import DIRAC, LAPLACE
from spectra.services import (
    Spectrum,
    SpectrumEntry,
    convergence_estimate,
    dirac_spectrum,
    laplace_spectrum,
    spectrum_for,
    yamabe_spectrum,
)
from spectra.workers import parallel_map, resolve_jobs


def square(x):
    return x * x


class LaplaceSpectrumTestCase(SimpleTestCase):
    """圓球上 ℓ(ℓ+n-1) 與其重數"""

    def test_three_sphere(self):
        p = build_round_profile(3, 1.0, 128)
        spectrum = laplace_spectrum(p, 14)
        self.assertEqual(spectrum.operator, 'LaplaceFunctions')
        groups = spectrum.distinct(count=3)
        for (value, mult), (expected, expected_mult) in zip(groups, ((0.0, 1), (3.0, 4), (8.0, 9))):
            self.assertAlmostEqual(value, expected, places=2)
            self.assertEqual(mult, expected_mult)
        self.assertAlmostEqual(spectrum.kth(14), 8.0, places=2)
        self.assertTrue(spectrum.certified)

    def test_two_sphere(self):
        p = build_round_profile(2, 1.0, 64)
        values = laplace_spectrum(p, 4).values(4)
        np.testing.assert_allclose(values, [0.0, 2.0, 2.0, 2.0], atol=1e-2)

    def test_constants_on_pinocchio(self):
        p = build_pinocchio_profile(ProfileSpec(n=3, r=0.2, L=2.0, N=32))
        spectrum = laplace_spectrum(p, 1)
        self.assertAlmostEqual(spectrum.kth(1), 0.0, places=6)
        self.assertEqual(spectrum.meta['r'], 0.2)
        self.assertEqual(spectrum.meta['N'], 32)

    def test_parallel_matches_serial(self):
        p = build_round_profile(2, 1.0, 32)
        serial = laplace_spectrum(p, 6, jobs=1).values(6)
        parallel = laplace_spectrum(p, 6, jobs=2).values(6)
        np.testing.assert_array_equal(serial, parallel)

    def test_invalid_k(self):
        p = build_round_profile(3, 1.0, 32)
        with self.assertRaises(ValidationError):
            laplace_spectrum(p, 0)

    def test_grid_too_coarse(self):
        p = build_round_profile(3, 1.0, 16)
        with self.assertRaises(ResolutionError) as ctx:
            laplace_spectrum(p, 500)
        self.assertIsNotNone(ctx.exception.suggested_N)


class DiracSpectrumTestCase(SimpleTestCase):
    """圓球上 ±(n/2 + k)"""

    def test_three_sphere(self):
        p = build_round_profile(3, 1.0, 64)
        spectrum = dirac_spectrum(p, 4)
        self.assertEqual(spectrum.operator, 'Dirac')
        values = spectrum.values(4)
        np.testing.assert_allclose(np.abs(values), 1.5, atol=1e-2)
        self.assertEqual(sorted(np.sign(values)), [-1.0, -1.0, 1.0, 1.0])

    def test_symmetric_pairs(self):
        p = build_pinocchio_profile(ProfileSpec(n=3, r=0.3, L=1.0, N=32))
        spectrum = dirac_spectrum(p, 8)
        positive = sorted((e.value, e.multiplicity) for e in spectrum.entries if e.value > 0)
        negative = sorted((-e.value, e.multiplicity) for e in spectrum.entries if e.value < 0)
        self.assertEqual(positive, negative)

    def test_two_sphere(self):
        """S² 上 ±(1 + k)，每個符號重數 2(k + 1)"""
        p = build_round_profile(2, 1.0, 256)
        groups = dirac_spectrum(p, 24).distinct(count=6)
        expected = [(-1.0, 2), (1.0, 2), (-2.0, 4), (2.0, 4), (-3.0, 6), (3.0, 6)]
        self.assertEqual([mult for _, mult in groups], [mult for _, mult in expected])
        for (value, _), (target, _) in zip(groups, expected):
            self.assertAlmostEqual(value, target, delta=1e-3)

    def test_distinct_orders_negative_before_positive(self):
        """同一層的值在不同模態間略有差異時，-λ 仍排在 +λ 之前"""
        entries = (
            SpectrumEntry(-2.50004, 2, 'a', 0), SpectrumEntry(2.50004, 2, 'a', 0),
            SpectrumEntry(-2.49996, 4, 'b', 0), SpectrumEntry(2.49996, 4, 'b', 0),
            SpectrumEntry(-1.5, 2, 'c', 0), SpectrumEntry(1.5, 2, 'c', 0),
        )
        spectrum = Spectrum('Dirac', 3, entries, truncation_floor=10.0, certified=True)
        groups = spectrum.distinct()
        self.assertEqual([mult for _, mult in groups], [2, 2, 6, 6])
        self.assertEqual([value < 0.0 for value, _ in groups], [True, False, True, False])
        self.assertAlmostEqual(groups[2][0], -(2 * 2.50004 + 4 * 2.49996) / 6.0, places=12)
        self.assertAlmostEqual(groups[3][0], -groups[2][0], places=12)

    def test_cap_returns_squares(self):
        p = build_pinocchio_profile(ProfileSpec(n=3, r=0.1, L=5.0, N=32))
        cap = dirac_spectrum(p, 2, cap=True)
        full = dirac_spectrum(p, 2)
        self.assertEqual(cap.operator, 'DiracSquared')
        self.assertTrue(cap.cap)
        self.assertGreater(cap.kth(1), 0.0)
        self.assertGreaterEqual(cap.kth(1), full.kth(1) ** 2 * (1.0 - 1e-9))


class YamabeSpectrumTestCase(SimpleTestCase):
    """S³ 上 8·ℓ(ℓ+2) + 6"""

    def setUp(self):
        self.p = build_round_profile(3, 1.0, 64)
        self.c = scalar_curvature_field(self.p)

    def test_lowest_is_scalar_curvature(self):
        self.assertAlmostEqual(yamabe_spectrum(self.p, self.c, 1).kth(1), 6.0, places=6)

    def test_first_harmonic(self):
        value, mult = yamabe_spectrum(self.p, self.c, 5).distinct(count=2)[1]
        self.assertAlmostEqual(value / 30.0, 1.0, places=3)
        self.assertEqual(mult, 4)

    def test_two_dimensions_rejected(self):
        p = build_round_profile(2, 1.0, 32)
        with self.assertRaises(ValidationError):
            yamabe_spectrum(p, scalar_curvature_field(p), 1)

    def test_spectrum_for_builds_curvature(self):
        spectrum = spectrum_for(self.p, 'yamabe', 1)
        self.assertEqual(spectrum.operator, 'Yamabe')
        with self.assertRaises(ValidationError):
            spectrum_for(self.p, 'bochner', 1)


class ErrorEstimateTestCase(SimpleTestCase):
    """Richardson 誤差與收斂階"""

    def test_errors_attached(self):
        p = build_round_profile(3, 1.0, 32)
        spectrum = dirac_spectrum(p, 2, estimate_errors=True)
        self.assertIsNotNone(spectrum.entries[0].err)
        self.assertLess(spectrum.entries[0].err, 1e-2)
        self.assertIsNone(dirac_spectrum(p, 2).entries[0].err)

    def test_zero_eigenvalue(self):
        p = build_round_profile(3, 1.0, 16)
        estimate = convergence_estimate(p, LAPLACE, 1)
        self.assertLess(estimate.err, 1e-6)
        self.assertAlmostEqual(estimate.value, 0.0, places=6)

    def assertSecondOrder(self, estimate):
        self.assertFalse(math.isnan(estimate.order))
        self.assertGreaterEqual(estimate.order, 1.8)
        self.assertLessEqual(estimate.order, 2.2)

    def test_round_dirac_second_order(self):
        estimate = convergence_estimate(build_round_profile(3, 1.0, 16), DIRAC, 1)
        self.assertAlmostEqual(estimate.value, 1.5, delta=1e-2)
        self.assertSecondOrder(estimate)

    def test_round_laplace_second_order(self):
        estimate = convergence_estimate(build_round_profile(3, 1.0, 16), LAPLACE, 2)
        self.assertAlmostEqual(estimate.value, 3.0, delta=1e-2)
        self.assertSecondOrder(estimate)

    def test_pinocchio_dirac_second_order(self):
        p = build_pinocchio_profile(ProfileSpec(n=3, r=0.1, L=10.0, N=32))
        self.assertSecondOrder(convergence_estimate(p, DIRAC, 1))

    def test_pinocchio_laplace_second_order(self):
        p = build_pinocchio_profile(ProfileSpec(n=3, r=0.3, L=1.0, N=32))
        estimate = convergence_estimate(p, LAPLACE, 2)
        self.assertGreater(estimate.value, 0.0)
        self.assertSecondOrder(estimate)

    def test_noise_guard_follows_tolerance(self):
        """差值小於求解容許誤差時不回報收斂階"""
        estimate = convergence_estimate(build_round_profile(3, 1.0, 16), DIRAC, 1, tol=1e-2)
        self.assertTrue(math.isnan(estimate.order))


class WorkerPoolTestCase(SimpleTestCase):

    def test_serial_keeps_order(self):
        self.assertEqual(parallel_map(square, [3, 1, 2], jobs=1), [9, 1, 4])

    def test_pool_keeps_order(self):
        self.assertEqual(parallel_map(square, range(6), jobs=2), [0, 1, 4, 9, 16, 25])

    def test_resolve_jobs(self):
        self.assertEqual(resolve_jobs(0), 1)
        self.assertEqual(resolve_jobs(4), 4)
