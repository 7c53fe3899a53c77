"""
特徵值不等式的數值檢查、(r, L) 無關的 Rayleigh 上界 C_k，以及 neck 尾端擬合。

    Lichnerowicz   λ² ≥ S_min/4
    Friedrich      λ² ≥ n/(4(n-1))·S_min
    Hijazi         λ² ≥ n/(4(n-1))·μ₁           (n ≥ 3，μ₁ 為 Yamabe 第一特徵值)
    Bär            λ² ≥ 2πχ/area                (n = 2，χ = 2)
    猜想           λ² ≥ n/(4(n-1))·∫S/vol
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from geometry.curvature import conjectured_bound
from geometry.profile import MAX_NECK_RADIUS, ProfileSpec, build_pinocchio_profile
from spectra.services import dirac_spectrum, laplace_spectrum
from .exceptions import TheoremViolation

logger = logging.getLogger(__name__)

EULER_CHARACTERISTIC = 2
NECK_TAIL_RTOL = 1e-6


@dataclass(frozen=True)
class BoundReport:
    n: int
    lambda1_sq: float
    err_lambda1_sq: float
    S_min: float
    mu1: float
    lichnerowicz_rhs: float
    friedrich_rhs: float
    hijazi_rhs: float
    baer_rhs: float
    conjecture_rhs: float
    tol: float

    @property
    def slacks(self):
        """λ₁² - rhs；不適用的不等式不列出。"""
        rhs = {
            'lichnerowicz': self.lichnerowicz_rhs,
            'friedrich': self.friedrich_rhs,
            'hijazi': self.hijazi_rhs,
            'baer': self.baer_rhs,
            'conjecture': self.conjecture_rhs,
        }
        return {name: self.lambda1_sq - value for name, value in rhs.items() if value is not None}

    def violations(self):
        problems = []
        for name, slack in self.slacks.items():
            if name != 'conjecture' and slack < -self.tol:
                problems.append(f"{name} slack {slack:.3e} < -{self.tol:.1e}")
        if self.hijazi_rhs is not None and self.hijazi_rhs < self.friedrich_rhs - self.tol:
            problems.append("hijazi_rhs < friedrich_rhs")
        # S_min < 0 時順序反轉，不檢查
        if self.S_min >= 0.0 and self.friedrich_rhs < self.lichnerowicz_rhs - self.tol:
            problems.append("friedrich_rhs < lichnerowicz_rhs")
        return problems


@dataclass(frozen=True)
class CapBounds:
    """cap_upper_bounds 的結果：values[j-1] = C_j。"""
    n: int
    t_body: float
    w_taper: float
    N: int
    values: tuple
    errors: tuple
    operator: str

    def __getitem__(self, j):
        return self.values[j - 1]


@dataclass(frozen=True)
class IndexBound:
    k: int
    lambda_sq: float
    cap_bound: float
    ratio: float
    max_constant: float
    within_cap: bool


@dataclass(frozen=True)
class NeckTailFit:
    L_values: tuple
    gaps: tuple
    intercept: float
    slope: float
    C: float
    predicted_gap: float
    relative_error: float
    verified: bool


def evaluate_bounds(p, c, dirac, mu1, q, error_budget=0.0, tol=None, check=True, lambda1=None, err_lambda=None):
    """
    dirac 至少要列出 λ₁；mu1 為 ℓ = 0 徑向 Yamabe 問題的最低特徵值（n = 2 時傳 None）。
    lambda1 / err_lambda 可改用外插後的 |λ₁| 與其誤差。
    check=True 時定理不成立會丟出 TheoremViolation。
    """
    n = p.n
    if lambda1 is None:
        lambda1 = abs(dirac.kth(1))
        err = dirac.entries[0].err or 0.0
    else:
        err = err_lambda or 0.0
    factor = n / (4.0 * (n - 1))
    if tol is None:
        tol = max(settings.SPECTRAL_LAB['THEOREM_TOL'], error_budget)

    if n >= 3 and mu1 is None:
        raise ValidationError("n ≥ 3 需要 Yamabe 第一特徵值 μ₁。")
    report = BoundReport(
        n=n,
        lambda1_sq=lambda1 ** 2,
        err_lambda1_sq=2.0 * lambda1 * err,
        S_min=c.S_min,
        mu1=mu1,
        lichnerowicz_rhs=c.S_min / 4.0,
        friedrich_rhs=factor * c.S_min,
        hijazi_rhs=factor * mu1 if n >= 3 else None,
        baer_rhs=2.0 * math.pi * EULER_CHARACTERISTIC / q.vol if n == 2 else None,
        conjecture_rhs=conjectured_bound(q, n),
        tol=tol,
    )
    problems = report.violations()
    if problems:
        logger.error("theorem check failed (n=%d): %s", n, "; ".join(problems))
        if check:
            raise TheoremViolation(report, problems)
    return report


def reference_spec(n, t_body, w_taper, N):
    """C_k 只依賴 Body；任選一組合法的 (r, L) 建 profile。"""
    r = 0.5 * min(MAX_NECK_RADIUS, math.sin(t_body))
    return ProfileSpec(n=n, r=r, L=0.0, t_body=t_body, w_taper=w_taper, N=N)


def _cap_bounds(spectrum_fn, operator, n, t_body, w_taper, k, N, estimate_errors, **kwargs):
    p = build_pinocchio_profile(reference_spec(n, t_body, w_taper, N))
    spectrum = spectrum_fn(p, k, cap=True, estimate_errors=estimate_errors, **kwargs)
    values = spectrum.values(k)
    errors = []
    for entry in spectrum.entries:
        errors.extend([entry.err or 0.0] * entry.multiplicity)
        if len(errors) >= k:
            break
    return CapBounds(
        n=n, t_body=t_body, w_taper=w_taper, N=N,
        values=tuple(float(v) for v in values),
        errors=tuple(float(e) for e in errors[:k]),
        operator=operator,
    )


def cap_upper_bounds(n, t_body, w_taper, k, N, estimate_errors=True, **kwargs):
    """
    C_j = 支撐在 Body 內的 D² 第 j 個特徵值（計重數、跨模態合併）。
    參數裡沒有 r 與 L，對所有 Pinocchio metric 都是 λ_j² 的上界。
    """
    return _cap_bounds(dirac_spectrum, 'dirac', n, t_body, w_taper, k, N, estimate_errors, **kwargs)


def laplace_cap_upper_bounds(n, t_body, w_taper, k, N, estimate_errors=True, **kwargs):
    """函數 Laplace 算子的同一組上界 C⁰_j。"""
    return _cap_bounds(laplace_spectrum, 'laplace', n, t_body, w_taper, k, N, estimate_errors, **kwargs)


def bounds_for_index(k, spectrum, cap_bounds, q, tol=None):
    """
    λ_k² ≥ C·∫S/vol 這一族不等式在此例中容許的最大常數 C = λ_k²/(∫S/vol)。
    Dirac 譜取 |λ_k|²，Laplace 譜直接取 λ_k。
    """
    if tol is None:
        tol = settings.SPECTRAL_LAB['THEOREM_TOL']
    value = spectrum.kth(k)
    lambda_sq = value ** 2 if cap_bounds.operator == 'dirac' else value
    cap = cap_bounds[k]
    return IndexBound(
        k=k,
        lambda_sq=lambda_sq,
        cap_bound=cap,
        ratio=q.ratio,
        max_constant=lambda_sq / q.ratio if q.ratio > 0.0 else math.inf,
        within_cap=lambda_sq <= cap + max(tol, cap_bounds.errors[k - 1]),
    )


def fit_neck_tail(L_values, ratios, limit, rtol=NECK_TAIL_RTOL):
    """
    1/|ratio(L) - limit| 對 L 為仿射函數 a + b·L。
    用前兩個點擬合，在第三個點驗證，並回報 |ratio - limit| ≤ C/L 的 C = 1/b。
    """
    if len(L_values) != 3 or len(ratios) != 3:
        raise ValidationError("neck 尾端擬合需要剛好三個 L。")
    L = np.asarray(L_values, dtype=float)
    gaps = np.abs(np.asarray(ratios, dtype=float) - limit)
    if np.any(gaps == 0.0) or np.any(L <= 0.0):
        raise ValidationError("L 必須為正且 ratio 不可恰等於極限。")

    system = np.array([[1.0, L[0]], [1.0, L[1]]])
    intercept, slope = np.linalg.solve(system, 1.0 / gaps[:2])
    if slope <= 0.0:
        raise ValidationError("擬合出的斜率非正，ratio 沒有朝極限收斂。")
    predicted = 1.0 / (intercept + slope * L[2])
    relative_error = abs(predicted - gaps[2]) / gaps[2]
    C = 1.0 / slope
    verified = relative_error <= rtol and bool(np.all(gaps <= C / L * (1.0 + rtol)))
    return NeckTailFit(
        L_values=tuple(L.tolist()),
        gaps=tuple(gaps.tolist()),
        intercept=float(intercept),
        slope=float(slope),
        C=float(C),
        predicted_gap=float(predicted),
        relative_error=float(relative_error),
        verified=verified,
    )
