"""
由各角向模態的徑向特徵值組合出整個流形的譜。

每個模態只解出需要的最低幾個特徵值：
    * Laplace 型算子的模態最小值隨 ℓ 單調不減，某模態最小值超過目前第 k 個值即可停止。
    * Dirac 算子使用 |λ| ≥ √(μ(μ - max|f'|))/max f 作為每個模態的保證下界；
      下界不可用時改用經驗規則（連續三個模態最小值 > 1.5 倍第 k 個值），並標記為未認證。
truncation_floor 以下的值保證完整（沒有遺漏的模態或徑向分支）。
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from geometry.curvature import scalar_curvature_field
from geometry.profile import BODY
from .eigensolve import count_below, generalized_eigen
from .exceptions import ResolutionError
from .modes import dirac_mode, laplace_mode
from .radial_operators import (
    DIRAC,
    LAPLACE,
    OPERATOR_KINDS,
    YAMABE,
    assemble_cap_dirichlet,
    assemble_dirac_radial,
    assemble_laplace_radial,
    assemble_yamabe_radial,
)
from .workers import parallel_map, resolve_jobs

logger = logging.getLogger(__name__)

OPERATOR_NAMES = {
    LAPLACE: 'LaplaceFunctions',
    YAMABE: 'Yamabe',
    DIRAC: 'Dirac',
}
DIRAC_SQUARED_NAME = 'DiracSquared'
HEURISTIC_STREAK = 3
HEURISTIC_FACTOR = 1.5
MAX_MODES = 10_000
DISTINCT_RTOL = 1e-3


@dataclass(frozen=True)
class SpectrumEntry:
    value: float
    multiplicity: int
    mode: str
    radial_index: int
    err: float = None


@dataclass(frozen=True, eq=False)
class Spectrum:
    operator: str
    n: int
    entries: tuple
    truncation_floor: float
    certified: bool
    cap: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def total_multiplicity(self):
        return sum(entry.multiplicity for entry in self.entries)

    def values(self, count=None):
        """依排序展開重數後的值。"""
        expanded = []
        for entry in self.entries:
            expanded.extend([entry.value] * entry.multiplicity)
            if count is not None and len(expanded) >= count:
                break
        return np.array(expanded[:count] if count is not None else expanded)

    def kth(self, k):
        """第 k 個值（1 起算，計重數）。"""
        values = self.values(k)
        if values.size < k:
            raise ResolutionError(f"譜只列出 {values.size} 個值，不足 k = {k}。")
        return float(values[k - 1])

    def distinct(self, rtol=DISTINCT_RTOL, count=None):
        """
        把相對差 ≤ rtol 的值合併，回傳 [(value, multiplicity)]。
        正負值分開分組，各組以重數加權平均代表，最後照 entries 的排序規則輸出。
        """
        groups = []
        for negative in (True, False):
            members = sorted(
                (e for e in self.entries if (e.value < 0.0) == negative),
                key=lambda e: abs(e.value),
            )
            first, total, mult = None, 0.0, 0
            for entry in members:
                if first is not None and abs(entry.value - first) <= rtol * max(1.0, abs(first)):
                    total += entry.value * entry.multiplicity
                    mult += entry.multiplicity
                    continue
                if first is not None:
                    groups.append((total / mult, mult))
                first, total, mult = entry.value, entry.value * entry.multiplicity, entry.multiplicity
            if first is not None:
                groups.append((total / mult, mult))
        groups.sort(key=lambda g: _sort_key(self.operator, g[0]))
        return groups[:count] if count is not None else groups


def _sort_key(operator, value):
    return (abs(value), value) if operator == OPERATOR_NAMES[DIRAC] else (value,)


@dataclass(frozen=True, eq=False)
class ModeSolve:
    mode: object
    values: np.ndarray
    coverage: float
    lowest: float
    residual: float


@dataclass(frozen=True)
class ConvergenceEstimate:
    value: float
    err: float
    order: float
    values: tuple


def radial_operator(p, kind, mode, cap=False, curvature=None):
    if cap:
        return assemble_cap_dirichlet(kind, p, mode, curvature=curvature)
    if kind == LAPLACE:
        return assemble_laplace_radial(p, mode)
    if kind == YAMABE:
        return assemble_yamabe_radial(p, curvature, mode)
    return assemble_dirac_radial(p, mode)


def _solve_mode(job):
    """
    解一個模態中低於 threshold 的值（最多 need 個），並多解一個作為此模態的覆蓋界。
    完整 Dirac 系統只取正的一半，負的一半由對稱性得到。
    """
    p, kind, cap, mode, threshold, need, options = job
    op = radial_operator(p, kind, mode, cap, options.get('curvature'))
    offset = op.size // 2 if kind == DIRAC and not cap else 0
    available = op.size - offset

    keep = min(need, available)
    if math.isfinite(threshold):
        below = count_below(op.bands, op.weights, threshold) - offset
        keep = max(0, min(keep, below))
    request = min(keep + 1, available)
    if request == 0:
        return ModeSolve(mode, np.empty(0), math.inf, math.inf, 0.0)

    result = generalized_eigen(
        op.bands, op.weights,
        which=(offset, offset + request - 1),
        tol=options.get('tol'),
        driver=options.get('driver'),
    )
    values = result.values
    return ModeSolve(
        mode=mode,
        values=values[:keep].copy(),
        coverage=float(values[keep]) if request > keep else math.inf,
        lowest=float(values[0]),
        residual=float(result.residuals.max()),
    )


def _running_kth(solves, weight, k):
    pool = sorted((value, weight(s.mode)) for s in solves for value in s.values)
    total = 0
    for value, w in pool:
        total += w
        if total >= k:
            return value
    return math.inf


class _Family:
    """一種算子在一張 profile 上的模態族：模態、權重、所需個數與截斷下界。"""

    def __init__(self, p, kind, k, cap):
        self.p = p
        self.kind = kind
        self.k = k
        self.cap = cap
        self.bound = None
        if kind == DIRAC:
            self._setup_dirac_bound()

    def mode(self, index):
        if self.kind == DIRAC:
            return dirac_mode(self.p.n, index)
        return laplace_mode(self.p.n, index)

    def weight(self, mode):
        """每個徑向值在譜中計入的重數。"""
        if self.kind != DIRAC:
            return mode.mult
        return mode.systems if self.cap else 2 * mode.systems

    def need(self, mode):
        return math.ceil(self.k / self.weight(mode))

    def _setup_dirac_bound(self):
        p = self.p
        if self.cap:
            window = slice(0, p.region(BODY).last + 1)
        else:
            window = slice(0, p.size)
        t = p.t[window]
        mid = p.evaluate(t[:-1] + np.diff(t) / 2.0)[0]
        self.f_max = float(max(p.f[window].max(), mid.max()))
        self.slope_max = float(np.abs(p.f1[window]).max())
        self.bound = self._dirac_bound

    def _dirac_bound(self, mode):
        # |λ|² ≥ μ(μ - max|f'|)/max f²；cap 問題的值本身就是 λ²
        mu = mode.mu
        if mu <= self.slope_max:
            return None
        squared = mu * (mu - self.slope_max) / self.f_max ** 2
        return squared if self.cap else math.sqrt(squared)


def _collect(family, options, jobs):
    solves = []
    floor = math.inf
    certified = True
    streak = 0
    index = 0
    jobs = resolve_jobs(jobs)
    done = False
    while not done:
        if index >= MAX_MODES:
            raise ResolutionError(f"超過 {MAX_MODES} 個模態仍未收齊 k 個值。")
        running = _running_kth(solves, family.weight, family.k)

        # 1. 這一批要解的模態；保證下界已超過第 k 個值就停
        batch = []
        for offset in range(jobs):
            mode = family.mode(index + offset)
            limit = family.bound(mode) if family.bound else None
            if limit is not None and math.isfinite(running) and limit >= running:
                floor = min(floor, limit)
                done = True
                break
            batch.append(mode)
        index += len(batch)

        jobs_args = [
            (family.p, family.kind, family.cap, mode, running, family.need(mode), options)
            for mode in batch
        ]
        results = parallel_map(_solve_mode, jobs_args, jobs=jobs)
        logger.info(
            "%s modes %s: solved %d radial problems",
            family.kind, [m.label for m in batch], len(results),
        )

        # 2. 依序合併
        for result in results:
            running = _running_kth(solves, family.weight, family.k)
            if math.isfinite(running) and result.lowest >= running:
                if family.bound is None:
                    floor = min(floor, result.lowest)
                    done = True
                    break
                streak = streak + 1 if result.lowest > HEURISTIC_FACTOR * running else 0
                if streak >= HEURISTIC_STREAK:
                    certified = False
                    floor = min(floor, result.lowest)
                    logger.warning(
                        "%s truncation fell back to the heuristic rule at %s",
                        family.kind, result.mode.label,
                    )
                    done = True
                    break
            else:
                streak = 0
            solves.append(result)
            floor = min(floor, result.coverage)
    return solves, floor, certified


def _effective_N(p):
    if p.N:
        return p.N * p.refinement
    return int(round(1.0 / float(p.h.max())))


def _check_resolution(p, kind, cap, value):
    limits = settings.SPECTRAL_LAB['RESOLUTION_LIMIT']
    h = float(p.h.max())
    if kind == DIRAC:
        magnitude = math.sqrt(abs(value)) if cap else abs(value)
        if magnitude * h > limits['dirac']:
            raise ResolutionError(
                f"|λ|·h = {magnitude * h:.3f} 超過 {limits['dirac']}。",
                suggested_N=math.ceil(magnitude / limits['dirac']) + 1,
            )
        return
    scale = 4.0 * (p.n - 1) / (p.n - 2) if kind == YAMABE else 1.0
    stiffness = abs(value) / scale
    if stiffness * h * h > limits['laplace']:
        raise ResolutionError(
            f"λ·h² = {stiffness * h * h:.3f} 超過 {limits['laplace']}。",
            suggested_N=math.ceil(math.sqrt(stiffness / limits['laplace'])) + 1,
        )


def _richardson(family, solves, options, jobs):
    """同一組 (模態, 徑向索引) 在 h/2 上重解，err = |λ_h - λ_{h/2}|/3。"""
    fine = family.p.refined(2)
    fine_options = dict(options)
    if 'curvature' in options:
        fine_options['curvature'] = scalar_curvature_field(fine)
    jobs_args = [
        (fine, family.kind, family.cap, s.mode, math.inf, s.values.size, fine_options)
        for s in solves
    ]
    refined = parallel_map(_solve_mode, jobs_args, jobs=jobs)
    errors = {}
    for coarse, fine_solve in zip(solves, refined):
        count = min(coarse.values.size, fine_solve.values.size)
        errors[coarse.mode.label] = np.abs(coarse.values[:count] - fine_solve.values[:count]) / 3.0
    return errors


def _entries(family, solves, floor, errors):
    entries = []
    for s in solves:
        mode_errors = errors.get(s.mode.label) if errors else None
        for j, value in enumerate(s.values):
            if value >= floor:
                continue
            err = float(mode_errors[j]) if mode_errors is not None and j < mode_errors.size else None
            value = float(value)
            if family.kind == DIRAC and not family.cap:
                entries.append(SpectrumEntry(-value, s.mode.systems, s.mode.label, j, err))
                entries.append(SpectrumEntry(value, s.mode.systems, s.mode.label, j, err))
            else:
                entries.append(SpectrumEntry(value, family.weight(s.mode), s.mode.label, j, err))
    operator = _operator_name(family)
    entries.sort(key=lambda e: _sort_key(operator, e.value))
    return tuple(entries)


def _operator_name(family):
    if family.kind == DIRAC and family.cap:
        return DIRAC_SQUARED_NAME
    return OPERATOR_NAMES[family.kind]


def _meta(p, solves):
    meta = {
        'n': p.n,
        'N': _effective_N(p),
        'profile': p.kind,
        'modes': len(solves),
        'max_residual': max((s.residual for s in solves), default=0.0),
    }
    if p.spec is not None:
        meta.update(r=p.spec.r, L=p.spec.L, t_body=p.spec.t_body, w_taper=p.spec.w_taper)
    return meta


def _spectrum(p, kind, k, cap=False, curvature=None, estimate_errors=False, tol=None, driver=None, jobs=None):
    if k < 1:
        raise ValidationError("k 必須 ≥ 1。")
    if kind not in OPERATOR_KINDS:
        raise ValidationError(f"未知的算子種類：{kind}。")

    family = _Family(p, kind, k, cap)
    options = {'tol': tol, 'driver': driver}
    if curvature is not None:
        options['curvature'] = curvature

    solves, floor, certified = _collect(family, options, jobs)
    errors = _richardson(family, solves, options, jobs) if estimate_errors else None
    entries = _entries(family, solves, floor, errors)

    spectrum = Spectrum(
        operator=_operator_name(family),
        n=p.n,
        entries=entries,
        truncation_floor=floor,
        certified=certified,
        cap=cap,
        meta=_meta(p, solves),
    )
    if spectrum.total_multiplicity < k:
        raise ResolutionError(
            f"格點只解析出 {spectrum.total_multiplicity} 個值，不足 k = {k}。",
            suggested_N=2 * _effective_N(p),
        )
    _check_resolution(p, kind, cap, spectrum.kth(k))
    logger.info(
        "%s spectrum (n=%d, N=%d, cap=%s): k=%d, floor=%.6g, certified=%s",
        spectrum.operator, p.n, spectrum.meta['N'], cap, k, floor, certified,
    )
    return spectrum


def laplace_spectrum(p, k, cap=False, estimate_errors=False, tol=None, driver=None, jobs=None):
    return _spectrum(p, LAPLACE, k, cap=cap, estimate_errors=estimate_errors, tol=tol, driver=driver, jobs=jobs)


def yamabe_spectrum(p, c, k, cap=False, estimate_errors=False, tol=None, driver=None, jobs=None):
    if p.n == 2:
        raise ValidationError("n = 2 時 Yamabe 算子無定義。")
    return _spectrum(
        p, YAMABE, k, cap=cap, curvature=c,
        estimate_errors=estimate_errors, tol=tol, driver=driver, jobs=jobs,
    )


def dirac_spectrum(p, k, cap=False, estimate_errors=False, tol=None, driver=None, jobs=None):
    """
    entries 依 (|λ|, λ) 排序，正負成對且重數相同。
    cap=True 時回傳支撐在 Body 內的 D² 特徵值（operator = DiracSquared）。
    """
    return _spectrum(p, DIRAC, k, cap=cap, estimate_errors=estimate_errors, tol=tol, driver=driver, jobs=jobs)


def spectrum_for(p, op_kind, k, **kwargs):
    if op_kind == LAPLACE:
        return laplace_spectrum(p, k, **kwargs)
    if op_kind == YAMABE:
        return yamabe_spectrum(p, scalar_curvature_field(p), k, **kwargs)
    if op_kind == DIRAC:
        return dirac_spectrum(p, k, **kwargs)
    raise ValidationError(f"未知的算子種類：{op_kind}。")


def _magnitude(spectrum, k):
    value = spectrum.kth(k)
    return abs(value) if spectrum.operator == OPERATOR_NAMES[DIRAC] else value


def convergence_estimate(p, op_kind, value_index, **kwargs):
    """
    在 h, h/2, h/4 上解第 value_index 個值（Dirac 取 |λ|）。
    err = |λ_h - λ_{h/2}|/3，order = log2(|λ_h - λ_{h/2}| / |λ_{h/2} - λ_{h/4}|)。
    差值落在求解容許誤差內時 order 為 nan。
    """
    values = tuple(
        _magnitude(spectrum_for(grid, op_kind, value_index, **kwargs), value_index)
        for grid in (p, p.refined(2), p.refined(4))
    )
    first = abs(values[0] - values[1])
    second = abs(values[1] - values[2])
    # 與特徵值求解的容許誤差一致
    tol = kwargs.get('tol')
    if tol is None:
        tol = settings.SPECTRAL_LAB['EIGEN_TOL'] * max(1.0, abs(values[0]))
    noise = 1e3 * tol
    order = math.log2(first / second) if first > noise and second > noise else math.nan
    return ConvergenceEstimate(value=values[1], err=first / 3.0, order=order, values=values)
