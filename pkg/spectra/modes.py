"""
Fiber S^{n-1}(1) 上的角向模態：Laplace 球諧函數與 Dirac fiber 特徵值。
"""
from dataclasses import dataclass

from django.core.exceptions import ValidationError
from scipy.special import comb


def _binomial(a, b):
    # a < b 或 a < 0 時為 0
    return int(comb(a, b, exact=True)) if a >= 0 else 0


@dataclass(frozen=True)
class LaplaceMode:
    ell: int
    value: float
    mult: int

    @property
    def label(self):
        return f"ell={self.ell}"


@dataclass(frozen=True)
class DiracMode:
    k: int
    mu: float
    mult: int
    # 偶數 n 時 fiber 為奇數維，±μ 各自產生一組徑向系統
    signs: int = 1

    @property
    def systems(self):
        """此模態展開出的 2 分量徑向系統個數。"""
        return self.mult * self.signs

    @property
    def label(self):
        return f"mu={self.mu:g}"


def laplace_mode(n, ell):
    mult = _binomial(ell + n - 1, n - 1) - _binomial(ell + n - 3, n - 1)
    return LaplaceMode(ell=ell, value=float(ell * (ell + n - 2)), mult=mult)


def dirac_mode(n, k):
    mult = 2 ** ((n - 1) // 2) * _binomial(k + n - 2, k)
    return DiracMode(k=k, mu=(n - 1) / 2.0 + k, mult=mult, signs=2 if n % 2 == 0 else 1)


def laplace_modes(n, ell_max):
    if n < 2:
        raise ValidationError(f"維度 n 必須 ≥ 2，收到 {n}。")
    return [laplace_mode(n, ell) for ell in range(ell_max + 1)]


def dirac_modes(n, k_max):
    """n = 2 時 fiber S¹ 取 bounding spin structure，μ = 1/2 + k。"""
    if n < 2:
        raise ValidationError(f"維度 n 必須 ≥ 2，收到 {n}。")
    return [dirac_mode(n, k) for k in range(k_max + 1)]


def round_laplace_multiplicity(n, ell):
    """Sⁿ(1) 上 ℓ(ℓ+n-1) 的重數 C(ℓ+n, n) - C(ℓ+n-2, n)。"""
    return _binomial(ell + n, n) - _binomial(ell + n - 2, n)


def round_dirac_multiplicity(n, k):
    """Sⁿ(1) 上 ±(n/2 + k) 各自的重數 2^{⌊n/2⌋}·C(k+n-1, k)。"""
    return 2 ** (n // 2) * _binomial(k + n - 1, k)
