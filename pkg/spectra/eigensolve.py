"""
對稱帶狀矩陣的特徵值核心。

帶狀矩陣以下三角對角線儲存：bands[d][i] = A[i + d, i]，d = 0, 1, 2。
廣義問題 A·v = λ·B·v（B 為正對角）的流程：
    B^{-1/2}·A·B^{-1/2} → 頻寬 2 時做 Givens 化簡 → Sturm 二分法 → 反迭代算殘差。
"""
import logging

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from scipy.linalg import LinAlgError, eigvalsh_tridiagonal, solve_banded

from .exceptions import EigenSolveError, WeightError

logger = logging.getLogger(__name__)

DRIVERS = ('stebz', 'bisect')
EPS = np.finfo(float).eps
MAX_BANDWIDTH = 2
MAX_BISECTION_STEPS = 200
INVERSE_ITERATION_STEPS = 3
RESIDUAL_FLOOR = 1e3 * EPS
ORTHOGONALITY_LIMIT = 1e-10


def as_bands(bands):
    """整理成 float 陣列的 tuple，並去掉尾端全為 0 的對角線。"""
    arrays = [np.asarray(band, dtype=float) for band in bands]
    if not arrays:
        raise ValidationError("至少需要主對角線。")
    n = arrays[0].size
    for d, band in enumerate(arrays):
        if band.size != max(n - d, 0):
            raise ValidationError(f"第 {d} 條對角線長度應為 {max(n - d, 0)}，收到 {band.size}。")
    while len(arrays) > 1 and not np.any(arrays[-1]):
        arrays.pop()
    if len(arrays) > MAX_BANDWIDTH + 1:
        raise ValidationError(f"頻寬最多為 {MAX_BANDWIDTH}。")
    return tuple(arrays)


def banded_to_dense(bands):
    bands = [np.asarray(band, dtype=float) for band in bands]
    A = np.diag(bands[0])
    for d in range(1, len(bands)):
        if bands[d].size:
            A += np.diag(bands[d], -d) + np.diag(bands[d], d)
    return A


def banded_matvec(bands, x):
    y = bands[0] * x
    for d in range(1, len(bands)):
        if bands[d].size:
            y[d:] += bands[d] * x[:-d]
            y[:-d] += bands[d] * x[d:]
    return y


def infinity_norm(bands):
    rows = np.abs(bands[0]).copy()
    for d in range(1, len(bands)):
        if bands[d].size:
            rows[d:] += np.abs(bands[d])
            rows[:-d] += np.abs(bands[d])
    return float(rows.max()) if rows.size else 0.0


def givens_parameters(a, b):
    """
    回傳 (c, s) 使得
        [ c  s]ᵀ [a]   [r]
        [-s  c]  [b] = [0]
    """
    if b == 0.0:
        return 1.0, 0.0
    if abs(b) > abs(a):
        tau = -a / b
        s = 1.0 / np.sqrt(1.0 + tau * tau)
        return s * tau, s
    tau = -b / a
    c = 1.0 / np.sqrt(1.0 + tau * tau)
    return c, c * tau


def _rotate_window(B, p, c, s):
    # 只取出 p 附近的小方塊做 G·A·Gᵀ，再寫回帶狀儲存
    n = B.shape[1]
    lo, hi = max(0, p - 3), min(n, p + 5)
    size = hi - lo
    W = np.zeros((size, size))
    for k in range(B.shape[0]):
        idx = np.arange(lo, hi - k)
        W[idx - lo + k, idx - lo] = B[k, idx]
        W[idx - lo, idx - lo + k] = B[k, idx]
    i, j = p - lo, p + 1 - lo
    top, bottom = W[i].copy(), W[j].copy()
    W[i] = c * top - s * bottom
    W[j] = s * top + c * bottom
    left, right = W[:, i].copy(), W[:, j].copy()
    W[:, i] = c * left - s * right
    W[:, j] = s * left + c * right
    for k in range(B.shape[0]):
        idx = np.arange(lo, hi - k)
        B[k, idx] = W[idx - lo + k, idx - lo]


class TridiagonalReduction:
    """
    d, e 為化簡後的三對角矩陣，A = Q·T·Qᵀ。
    Q 不存成矩陣，只記錄旋轉 (p, c, s)，需要時用 apply 作用在向量上。
    """

    def __init__(self, d, e, rotations=(), certificate=0.0):
        self.d = d
        self.e = e
        self.rotations = rotations
        self.certificate = certificate

    def apply(self, y):
        """回傳 Q·y；y 可以是向量或以行排列的多個向量。"""
        y = np.array(y, dtype=float)
        for p, c, s in reversed(self.rotations):
            top, bottom = y[p].copy(), y[p + 1].copy()
            y[p] = c * top + s * bottom
            y[p + 1] = c * bottom - s * top
        return y


def reduce_band_to_tridiagonal(bands):
    """
    以 Givens 旋轉把頻寬 2 的對稱矩陣化成三對角，並把 bulge 一路往下推。
    全程在帶狀儲存裡運算（多一條對角線放 bulge）。
    certificate = Σ|c² + s² - 1|，為 QᵀQ - I 的上界估計。
    """
    bands = as_bands(bands)
    n = bands[0].size
    if len(bands) <= 2:
        e = bands[1].copy() if len(bands) == 2 else np.zeros(max(n - 1, 0))
        return TridiagonalReduction(bands[0].copy(), e)

    # B[k, i] = A[i + k, i]
    B = np.zeros((MAX_BANDWIDTH + 2, n))
    for k, band in enumerate(bands):
        B[k, :band.size] = band
    rotations = []
    certificate = 0.0
    for j in range(n - 2):
        row, col = j + 2, j
        while row < n and B[row - col, col] != 0.0:
            p = row - 1
            c, s = givens_parameters(B[p - col, col], B[row - col, col])
            _rotate_window(B, p, c, s)
            B[row - col, col] = 0.0
            rotations.append((p, c, s))
            certificate += abs(c * c + s * s - 1.0)
            # 旋轉在 (row + 2, row - 1) 產生新的 bulge
            row, col = row + 2, p

    logger.debug("band reduction n=%d: %d rotations, certificate %.3e", n, len(rotations), certificate)
    return TridiagonalReduction(
        B[0].copy(), B[1, :n - 1].copy(),
        rotations=tuple(rotations), certificate=certificate,
    )


def sturm_count(d, e, sigma):
    """
    T - σI 的 LDLᵀ 分解中負 pivot 的個數，即 T 小於 σ 的特徵值個數。
    sigma 可以是純量或陣列（一次算多個 shift）。
    """
    d = np.asarray(d, dtype=float)
    e2 = np.asarray(e, dtype=float) ** 2
    sigma = np.asarray(sigma, dtype=float)
    scalar = sigma.ndim == 0
    sigma = np.atleast_1d(sigma)

    pivmin = np.finfo(float).tiny * max(1.0, float(e2.max()) if e2.size else 1.0)
    count = np.zeros(sigma.shape, dtype=np.int64)
    q = np.ones_like(sigma)
    for i in range(d.size):
        q = d[i] - sigma if i == 0 else (d[i] - sigma) - e2[i - 1] / q
        q = np.where(np.abs(q) <= pivmin, -pivmin, q)
        count += q < 0.0
    return int(count[0]) if scalar else count


def gershgorin_interval(d, e):
    radius = np.zeros_like(d)
    radius[:-1] += np.abs(e)
    radius[1:] += np.abs(e)
    return float((d - radius).min()), float((d + radius).max())


def tridiagonal_norm(d, e):
    return infinity_norm((np.asarray(d, dtype=float), np.asarray(e, dtype=float)))


class EigenResult:
    """
    values 由小到大；first 是第一個值在全部特徵值中的索引。
    residuals 為 B 加權範數下的 ‖A·v - λ·B·v‖ / ‖v‖。
    """

    def __init__(self, values, residuals, iterations, first=0, vectors=None, tol=0.0):
        self.values = values
        self.residuals = residuals
        self.iterations = iterations
        self.first = first
        self.vectors = vectors
        self.tol = tol

    def __len__(self):
        return self.values.size

    @property
    def indices(self):
        return range(self.first, self.first + len(self))

    @classmethod
    def empty(cls, first=0, tol=0.0):
        return cls(np.empty(0), np.empty(0), {}, first=first, tol=tol)


def _resolve_range(d, e, which, interval):
    n = d.size
    if which is not None and interval is not None:
        raise ValidationError("which 與 interval 只能指定一個。")
    if interval is not None:
        low, high = interval
        i0 = sturm_count(d, e, low)
        i1 = sturm_count(d, e, high) - 1
        return i0, i1
    if which is None:
        return 0, n - 1
    i0, i1 = which
    if i0 < 0 or i1 >= n:
        raise ValidationError(f"特徵值索引 {which} 超出矩陣維度 {n}。")
    return i0, i1


def _bisect(d, e, indices, tol, bracket=None):
    """
    對所有要求的索引同時做二分法，每一步只呼叫一次批次 Sturm 計數。
    bracket = (a, b) 需滿足 count(a) ≤ index < count(b)；tol 可以是逐值的陣列。
    """
    if bracket is None:
        low, high = gershgorin_interval(d, e)
        pad = float(np.max(tol)) + 2.0 * EPS * max(abs(low), abs(high), 1.0)
        a = np.full(indices.size, low - pad)
        b = np.full(indices.size, high + pad)
    else:
        a, b = (np.array(x, dtype=float) for x in bracket)
    steps = 0
    while steps < MAX_BISECTION_STEPS:
        limit = np.maximum(tol, 4.0 * EPS * np.maximum(np.abs(a), np.abs(b)))
        if not np.any(b - a > limit):
            break
        mid = 0.5 * (a + b)
        below = sturm_count(d, e, mid) > indices
        b = np.where(below, mid, b)
        a = np.where(below, a, mid)
        steps += 1
    return 0.5 * (a + b), steps


def _verify_counts(d, e, values, indices, slack):
    below = sturm_count(d, e, values - slack)
    above = sturm_count(d, e, values + slack)
    if np.any(below > indices) or np.any(above <= indices):
        raise EigenSolveError("Sturm 計數與求得的特徵值索引不一致。")

    shifts = np.sort(np.concatenate([values - slack, values + slack]))
    if np.any(np.diff(sturm_count(d, e, shifts)) < 0):
        raise EigenSolveError("Sturm 計數對 shift 不單調。")


def _inverse_iteration(d, e, values, norm):
    n = d.size
    rng = np.random.default_rng(0)
    vectors = np.empty((n, values.size))
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[2, :-1] = e
    for col, value in enumerate(values):
        delta = 8.0 * EPS * max(norm, 1.0)
        x = rng.standard_normal(n)
        for _ in range(INVERSE_ITERATION_STEPS):
            while True:
                ab[1] = d - (value + delta)
                try:
                    x = solve_banded((1, 1), ab, x, check_finite=False)
                    break
                except LinAlgError:
                    delta *= 16.0
            x /= np.linalg.norm(x)
        vectors[:, col] = x
    return vectors


def tridiag_eigen_bisection(d, e, which=None, interval=None, tol=None, driver=None, vectors=False):
    """
    對稱三對角矩陣 (d, e) 的部分特徵值。

    which = (i0, i1) 取第 i0..i1 個（含兩端）；interval = (a, b) 取落在 [a, b) 的全部。
    tol 為絕對容許誤差。未指定時先以 EIGEN_TOL·‖T‖∞ 求出並驗證每個值，
    再在 Sturm 區間內二分到 EIGEN_TOL·max(|λ|, 1)。
    """
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    lab = settings.SPECTRAL_LAB
    driver = driver or lab['EIGEN_DRIVER']
    if driver not in DRIVERS:
        raise ValidationError(f"未知的特徵值 driver：{driver}。")

    norm = tridiagonal_norm(d, e)
    relative = tol is None
    if relative:
        tol = lab['EIGEN_TOL'] * max(norm, np.finfo(float).tiny)

    i0, i1 = _resolve_range(d, e, which, interval)
    if i1 < i0:
        return EigenResult.empty(first=i0, tol=tol)
    indices = np.arange(i0, i1 + 1)

    # 1. 特徵值
    if d.size == 1:
        values, iterations = d.copy(), {'driver': driver}
    elif driver == 'stebz':
        values = eigvalsh_tridiagonal(
            d, e, select='i', select_range=(i0, i1), tol=tol, lapack_driver='stebz',
        )
        iterations = {'driver': 'stebz'}
    else:
        values, steps = _bisect(d, e, indices, tol)
        iterations = {'driver': 'bisect', 'bisection_steps': steps}
    values = np.sort(values)

    # 2. Sturm 計數驗證
    slack = 2.0 * tol + 16.0 * EPS * max(norm, 1.0)
    _verify_counts(d, e, values, indices, slack)
    iterations['sturm_checks'] = 3

    # 3. 在已驗證的區間內細化到相對精度
    if relative and d.size > 1:
        fine = lab['EIGEN_TOL'] * np.maximum(np.abs(values), 1.0)
        if np.any(fine < tol):
            values, steps = _bisect(d, e, indices, fine, bracket=(values - slack, values + slack))
            iterations['refine_steps'] = steps

    # 4. 反迭代與殘差
    basis = _inverse_iteration(d, e, values, norm)
    iterations['inverse_iterations'] = INVERSE_ITERATION_STEPS * values.size
    T = (d, e)
    residuals = np.array([
        np.linalg.norm(banded_matvec(T, basis[:, i]) - values[i] * basis[:, i])
        for i in range(values.size)
    ])
    bound = max(tol, RESIDUAL_FLOOR * norm)
    if np.any(residuals > bound):
        raise EigenSolveError(f"殘差 {residuals.max():.3e} 超過容許值 {bound:.3e}。")

    return EigenResult(
        values, residuals, iterations,
        first=i0, vectors=basis if vectors else None, tol=tol,
    )


def _scaled_problem(bands, weights):
    bands = as_bands(bands)
    n = bands[0].size
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise WeightError(f"權重長度應為 {n}，收到 {w.size}。")
    if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
        raise WeightError("權重 B 必須全部為有限正數。")
    s = 1.0 / np.sqrt(w)
    scaled = tuple(band * s[d:] * s[:n - d] for d, band in enumerate(bands))
    return bands, w, s, scaled


def generalized_eigen(bands, weights, which=None, interval=None, tol=None, driver=None, vectors=False):
    """A·v = λ·B·v 的部分特徵值；回傳的向量滿足 vᵀ·B·v = 1。"""
    bands, w, s, scaled = _scaled_problem(bands, weights)
    reduction = reduce_band_to_tridiagonal(scaled)
    if reduction.certificate > ORTHOGONALITY_LIMIT:
        raise EigenSolveError(f"Givens 旋轉失去正交性：{reduction.certificate:.3e}。")

    result = tridiag_eigen_bisection(
        reduction.d, reduction.e, which=which, interval=interval,
        tol=tol, driver=driver, vectors=True,
    )
    iterations = dict(result.iterations, rotations=len(reduction.rotations))
    if not len(result):
        return EigenResult.empty(first=result.first, tol=result.tol)

    v = reduction.apply(result.vectors) * s[:, None]

    # 原始 pencil 的殘差，以 B^{-1} 範數量測
    residuals = np.empty(len(result))
    for i, value in enumerate(result.values):
        r = (banded_matvec(bands, v[:, i]) - value * w * v[:, i]) * s
        residuals[i] = np.linalg.norm(r) / np.sqrt(np.sum(w * v[:, i] ** 2))
    bound = 2.0 * max(result.tol, RESIDUAL_FLOOR * tridiagonal_norm(reduction.d, reduction.e))
    if np.any(residuals > bound):
        raise EigenSolveError(f"廣義問題殘差 {residuals.max():.3e} 超過容許值 {bound:.3e}。")

    return EigenResult(
        result.values, residuals, iterations,
        first=result.first, vectors=v if vectors else None, tol=result.tol,
    )


def lowest_k_generalized(bands, weights, k, tol=None, driver=None, vectors=False):
    if k < 1:
        raise ValidationError("k 必須 ≥ 1。")
    return generalized_eigen(bands, weights, which=(0, k - 1), tol=tol, driver=driver, vectors=vectors)


def count_below(bands, weights, sigma):
    """廣義問題小於 sigma 的特徵值個數（Sylvester 慣性定律）。"""
    _, _, _, scaled = _scaled_problem(bands, weights)
    reduction = reduce_band_to_tridiagonal(scaled)
    return sturm_count(reduction.d, reduction.e, sigma)
