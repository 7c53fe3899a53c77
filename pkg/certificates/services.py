"""
反例證書、(r, L) sweep 與圓球 oracle。
"""
import logging
import math
from dataclasses import dataclass, field

from django.core.exceptions import ValidationError
from django.db import transaction

from geometry.curvature import (
    conjectured_bound,
    global_quantities,
    neck_limit,
    scalar_curvature_field,
    sphere_volume,
)
from geometry.profile import ProfileSpec, build_pinocchio_profile, build_round_profile
from spectra.exceptions import ResolutionError
from spectra.modes import round_dirac_multiplicity, round_laplace_multiplicity
from spectra.services import dirac_spectrum, laplace_spectrum, yamabe_spectrum
from spectra.workers import parallel_map
from .exceptions import TheoremViolation
from .inequalities import (
    bounds_for_index,
    cap_upper_bounds,
    evaluate_bounds,
    fit_neck_tail,
    laplace_cap_upper_bounds,
)
from .models import CertificateRecord

logger = logging.getLogger(__name__)

REFUTED = 'REFUTED'
NOT_REFUTED = 'NOT_REFUTED'
SWEEP_INDEX_MAX = 5
ORACLE_RTOL = 1e-3
ORACLE_DIRAC_LEVELS = 6


@dataclass(frozen=True)
class CounterexampleCertificate:
    n: int
    r: float
    L: float
    N: int
    lambda1_sq: float
    err_lambda: float
    conjecture_rhs: float
    err_rhs: float
    cap_C1: float
    margin: float
    verdict: str
    ratio: float = None

    @property
    def error_budget(self):
        return self.err_lambda + self.err_rhs

    @property
    def refuted(self):
        return self.verdict == REFUTED


@dataclass(frozen=True)
class SweepRow:
    n: int
    r: float
    L: float
    N: int
    ratio: float = None
    conjecture_rhs: float = None
    lambda1_sq: float = None
    err_lambda: float = None
    err_rhs: float = None
    lambda_sq: tuple = ()
    laplace: tuple = ()
    cap_check: bool = None
    laplace_cap_check: bool = None
    mu1: float = None
    lichnerowicz_slack: float = None
    friedrich_slack: float = None
    hijazi_slack: float = None
    margin: float = None
    error_budget: float = None
    verdict: str = None
    error: str = ''
    violation: str = ''


@dataclass(frozen=True)
class SweepTable:
    n: int
    N: int
    k: int
    cap_bounds: object
    laplace_cap_bounds: object
    rows: tuple

    @property
    def failed(self):
        return [row for row in self.rows if row.error]

    @property
    def violations(self):
        return [row for row in self.rows if row.violation]


@dataclass(frozen=True)
class OracleCheck:
    name: str
    expected: float
    observed: float
    expected_mult: int = None
    observed_mult: int = None
    rtol: float = ORACLE_RTOL

    @property
    def rel_error(self):
        return abs(self.observed - self.expected) / max(1.0, abs(self.expected))

    @property
    def passed(self):
        return self.rel_error <= self.rtol and self.expected_mult == self.observed_mult


@dataclass(frozen=True)
class OracleReport:
    n: int
    N: int
    checks: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    @property
    def max_rel_error(self):
        return max((check.rel_error for check in self.checks), default=0.0)


@dataclass(frozen=True)
class ExtrapolatedEigenvalue:
    coarse: float
    fine: float
    value: float
    err: float


def extrapolated_lambda1(p, tol=None, driver=None, jobs=None):
    """
    |λ₁| 在 h 與 h/2 上的 Richardson 外插：
        value = λ_{h/2} + (λ_{h/2} - λ_h)/3,    err = |λ_h - λ_{h/2}|/3
    回傳 (h 上的 Dirac 譜, ExtrapolatedEigenvalue)。
    """
    dirac = dirac_spectrum(p, 1, tol=tol, driver=driver, jobs=jobs)
    fine = dirac_spectrum(p.refined(2), 1, tol=tol, driver=driver, jobs=jobs)
    coarse_value, fine_value = abs(dirac.kth(1)), abs(fine.kth(1))
    return dirac, ExtrapolatedEigenvalue(
        coarse=coarse_value,
        fine=fine_value,
        value=fine_value + (fine_value - coarse_value) / 3.0,
        err=abs(coarse_value - fine_value) / 3.0,
    )


def _certify(p, cap_C1, tol=None, driver=None, jobs=None):
    """λ₁ 取 Richardson 外插值並以同一估計當誤差，∫S/vol 以 h → h/2 的 quadrature 差值估誤差。"""
    n = p.n
    c = scalar_curvature_field(p)
    q = global_quantities(p, c)
    rhs = conjectured_bound(q, n)
    fine = p.refined(2)
    rhs_fine = conjectured_bound(global_quantities(fine, scalar_curvature_field(fine)), n)

    _, lambda1 = extrapolated_lambda1(p, tol=tol, driver=driver, jobs=jobs)
    err_lambda = 2.0 * lambda1.value * lambda1.err
    lambda1_sq = lambda1.value ** 2
    err_rhs = abs(rhs - rhs_fine)
    margin = rhs - lambda1_sq
    verdict = REFUTED if margin > err_lambda + err_rhs else NOT_REFUTED
    return c, q, lambda1, dict(
        lambda1_sq=lambda1_sq,
        err_lambda=err_lambda,
        conjecture_rhs=rhs,
        err_rhs=err_rhs,
        cap_C1=cap_C1,
        margin=margin,
        verdict=verdict,
        ratio=q.ratio,
    )


def counterexample_certificate(spec, tol=None, driver=None, jobs=None):
    if spec.n < 3:
        raise ValidationError("反例證書需要 n ≥ 3。")
    spec.validate()

    # 1. (r, L) 無關的上界 C_1
    cap = cap_upper_bounds(spec.n, spec.t_body, spec.w_taper, 1, spec.N, tol=tol, driver=driver, jobs=jobs)

    # 2. 證書本體
    p = build_pinocchio_profile(spec)
    _, _, _, fields = _certify(p, cap[1], tol=tol, driver=driver, jobs=jobs)
    certificate = CounterexampleCertificate(n=spec.n, r=spec.r, L=spec.L, N=spec.N, **fields)
    logger.info(
        "certificate n=%d r=%g L=%g N=%d: %s (margin %.6g, budget %.3g)",
        spec.n, spec.r, spec.L, spec.N, certificate.verdict,
        certificate.margin, certificate.error_budget,
    )
    return certificate


def round_sphere_certificate(n, N, tol=None, driver=None, jobs=None):
    """Sⁿ(1) 是猜想的等號情形，margin 應接近 0。"""
    if n < 3:
        raise ValidationError("反例證書需要 n ≥ 3。")
    p = build_round_profile(n, 1.0, N)
    _, _, _, fields = _certify(p, math.nan, tol=tol, driver=driver, jobs=jobs)
    return CounterexampleCertificate(n=n, r=1.0, L=0.0, N=N, **fields)


def _sweep_cell(job):
    """單一 (r, L) 格子；錯誤記在列上而不往外丟。"""
    spec, k, cap, laplace_cap, tol, driver = job
    base = dict(n=spec.n, r=spec.r, L=spec.L, N=spec.N)
    try:
        p = build_pinocchio_profile(spec)
        c, q, lambda1, fields = _certify(p, cap[1], tol=tol, driver=driver, jobs=1)
        dirac = dirac_spectrum(p, k, tol=tol, driver=driver, jobs=1)
        laplace = laplace_spectrum(p, k, tol=tol, driver=driver, jobs=1)
        mu1 = yamabe_spectrum(p, c, 1, tol=tol, driver=driver, jobs=1).kth(1)
    except (ValidationError, ResolutionError) as exc:
        logger.warning("sweep cell r=%g L=%g failed: %s", spec.r, spec.L, exc)
        return SweepRow(**base, error=str(exc))

    dirac_bounds = [bounds_for_index(j, dirac, cap, q, tol=None) for j in range(1, k + 1)]
    laplace_bounds = [bounds_for_index(j, laplace, laplace_cap, q, tol=None) for j in range(1, k + 1)]
    report = evaluate_bounds(
        p, c, dirac, mu1, q,
        error_budget=fields['err_lambda'], check=False,
        lambda1=lambda1.value, err_lambda=lambda1.err,
    )
    slacks = report.slacks
    return SweepRow(
        **base,
        ratio=q.ratio,
        conjecture_rhs=fields['conjecture_rhs'],
        lambda1_sq=fields['lambda1_sq'],
        err_lambda=fields['err_lambda'],
        err_rhs=fields['err_rhs'],
        lambda_sq=tuple(b.lambda_sq for b in dirac_bounds),
        laplace=tuple(b.lambda_sq for b in laplace_bounds),
        cap_check=all(b.within_cap for b in dirac_bounds),
        laplace_cap_check=all(b.within_cap for b in laplace_bounds),
        mu1=mu1,
        lichnerowicz_slack=slacks['lichnerowicz'],
        friedrich_slack=slacks['friedrich'],
        hijazi_slack=slacks['hijazi'],
        margin=fields['margin'],
        error_budget=fields['err_lambda'] + fields['err_rhs'],
        verdict=fields['verdict'],
        violation="; ".join(report.violations()),
    )


def sweep(r_values, L_values, n, N, t_body=2.0, w_taper=1.0, k=SWEEP_INDEX_MAX, tol=None, driver=None, jobs=None):
    """
    每個 (r, L) 一列；C_k 與 C⁰_k 只算一次，對整張表共用。
    格子之間互相獨立，交給 worker pool。
    """
    if n < 3:
        raise ValidationError("sweep 需要 n ≥ 3。")
    if not 1 <= k <= SWEEP_INDEX_MAX:
        raise ValidationError(f"k 必須落在 [1, {SWEEP_INDEX_MAX}]。")

    specs = [
        ProfileSpec(n=n, r=r, L=L, t_body=t_body, w_taper=w_taper, N=N)
        for r in r_values for L in L_values
    ]
    if not specs:
        return SweepTable(n=n, N=N, k=k, cap_bounds=None, laplace_cap_bounds=None, rows=())

    cap = cap_upper_bounds(n, t_body, w_taper, k, N, tol=tol, driver=driver, jobs=jobs)
    laplace_cap = laplace_cap_upper_bounds(n, t_body, w_taper, k, N, tol=tol, driver=driver, jobs=jobs)
    rows = parallel_map(
        _sweep_cell,
        [(spec, k, cap, laplace_cap, tol, driver) for spec in specs],
        jobs=jobs,
    )
    logger.info("sweep n=%d N=%d: %d cells, %d failed", n, N, len(rows), sum(1 for r in rows if r.error))
    return SweepTable(n=n, N=N, k=k, cap_bounds=cap, laplace_cap_bounds=laplace_cap, rows=tuple(rows))


def neck_tail_check(n, r, L_values, N, t_body=2.0, w_taper=1.0):
    """∫S/vol 朝 (n-1)(n-2)/r² 的收斂：前兩個 L 擬合，第三個驗證。"""
    ratios = []
    for L in L_values:
        p = build_pinocchio_profile(ProfileSpec(n=n, r=r, L=L, t_body=t_body, w_taper=w_taper, N=N))
        ratios.append(global_quantities(p, scalar_curvature_field(p)).ratio)
    return fit_neck_tail(L_values, ratios, neck_limit(n, r))


def _distinct_checks(name, spectrum, expected):
    observed = spectrum.distinct(count=len(expected))
    checks = []
    for (value, mult), (obs_value, obs_mult) in zip(expected, observed):
        checks.append(OracleCheck(
            name=f"{name} {value:g}",
            expected=value, observed=obs_value,
            expected_mult=mult, observed_mult=obs_mult,
        ))
    for value, mult in expected[len(observed):]:
        checks.append(OracleCheck(name=f"{name} {value:g}", expected=value, observed=math.nan, expected_mult=mult))
    return checks


def run_oracle_suite(n, N, levels=10, tol=None, driver=None, jobs=None):
    """
    圓球 Sⁿ(1) 上與古典公式比對：
        Laplace  ℓ(ℓ+n-1)，重數 C(ℓ+n, n) - C(ℓ+n-2, n)
        Dirac    ±(n/2 + k)，每個符號重數 2^{⌊n/2⌋}·C(k+n-1, k)
    以及 Friedrich/Hijazi 的等號情形（n ≥ 3）或 Bär 的等號情形（n = 2）。
    """
    p = build_round_profile(n, 1.0, N)
    options = dict(tol=tol, driver=driver, jobs=jobs)

    # 1. Laplace
    laplace_expected = [(float(l * (l + n - 1)), round_laplace_multiplicity(n, l)) for l in range(levels)]
    laplace = laplace_spectrum(p, sum(m for _, m in laplace_expected), **options)
    checks = _distinct_checks('laplace', laplace, laplace_expected)

    # 2. Dirac：依 (|λ|, λ) 排序，-λ 在 +λ 之前
    dirac_expected = []
    for k in range(ORACLE_DIRAC_LEVELS):
        value = n / 2.0 + k
        mult = round_dirac_multiplicity(n, k)
        dirac_expected += [(-value, mult), (value, mult)]
    dirac = dirac_spectrum(p, sum(m for _, m in dirac_expected), **options)
    checks += _distinct_checks('dirac', dirac, dirac_expected)

    # 3. 等號情形
    c = scalar_curvature_field(p)
    q = global_quantities(p, c)
    mu1 = yamabe_spectrum(p, c, 1, **options).kth(1) if n >= 3 else None
    report = evaluate_bounds(p, c, dirac, mu1, q, check=False)
    equality = (n / 2.0) ** 2
    checks.append(OracleCheck('lambda1_sq', equality, report.lambda1_sq))
    checks.append(OracleCheck('conjecture_rhs', equality, report.conjecture_rhs))
    checks.append(OracleCheck('friedrich_rhs', equality, report.friedrich_rhs))
    if n >= 3:
        checks.append(OracleCheck('hijazi_rhs', equality, report.hijazi_rhs))
    else:
        checks.append(OracleCheck('baer_rhs', 1.0, report.baer_rhs))
        checks.append(OracleCheck('area', sphere_volume(2), q.vol))

    oracle = OracleReport(n=n, N=N, checks=tuple(checks))
    logger.info("oracle n=%d N=%d: %s (max rel error %.3e)", n, N, oracle.passed, oracle.max_rel_error)
    return oracle


def record_certificate(certificate, kind=CertificateRecord.KIND_CERTIFICATE, config=None):
    with transaction.atomic():
        return CertificateRecord.objects.create(
            kind=kind,
            n=certificate.n,
            r=certificate.r,
            L=certificate.L,
            N=certificate.N,
            lambda1_sq=certificate.lambda1_sq,
            err_lambda=certificate.err_lambda,
            conjecture_rhs=certificate.conjecture_rhs,
            err_rhs=certificate.err_rhs,
            cap_C1=certificate.cap_C1,
            margin=certificate.margin,
            verdict=certificate.verdict,
            config=config or {},
        )


def record_sweep(table, config=None):
    """失敗的格子不寫入。"""
    records = []
    with transaction.atomic():
        for row in table.rows:
            if row.error:
                continue
            records.append(CertificateRecord.objects.create(
                kind=CertificateRecord.KIND_SWEEP,
                n=row.n, r=row.r, L=row.L, N=row.N,
                lambda1_sq=row.lambda1_sq,
                err_lambda=row.err_lambda,
                conjecture_rhs=row.conjecture_rhs,
                err_rhs=row.err_rhs,
                cap_C1=table.cap_bounds[1],
                margin=row.margin,
                verdict=row.verdict,
                config=config or {},
            ))
    return records
