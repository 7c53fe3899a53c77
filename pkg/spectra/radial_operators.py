"""
各角向模態的離散徑向算子 (A, B)，A 以下三角對角線儲存，B 為正對角權重。

Laplace 型算子離散化二次形式
    q(u) = ∫ (u'² + ℓ(ℓ+n-2)/f²·u²)·f^{n-1} dt,    m(u) = ∫ u²·f^{n-1} dt
剛度取半格點上的 f^{n-1}，質量與位能在每個 cell 的四分點做 lumping。

Dirac 算子在 chiral 基底 c = (a+b)/√2, d = (a-b)/√2 下為
    D̃_μ(c, d) = (d' + (μ/f)·d, -c' + (μ/f)·c)
d 放在格點、c 放在半格點，交錯排列 c_0, d_1, c_1, d_2, … 後是對角為 0 的對稱三對角矩陣。
"""
import logging
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from geometry.profile import BODY
from .eigensolve import banded_to_dense
from .modes import DiracMode, LaplaceMode

logger = logging.getLogger(__name__)

LAPLACE = 'laplace'
YAMABE = 'yamabe'
DIRAC = 'dirac'
DIRAC_SQUARED = 'dirac_squared'
OPERATOR_KINDS = (LAPLACE, YAMABE, DIRAC)
CHIRAL_STAGGERED = 'chiral-staggered'


@dataclass(frozen=True, eq=False)
class RadialOperator:
    kind: str
    mode: object
    bands: tuple
    weights: np.ndarray
    positions: np.ndarray
    h: float
    domain: tuple
    convention: str = ''
    cap: bool = False

    @property
    def size(self):
        return self.weights.size

    @property
    def bandwidth(self):
        return len(self.bands) - 1

    @property
    def label(self):
        prefix = 'cap:' if self.cap else ''
        return f"{prefix}{self.kind}[{self.mode.label}]"

    def to_dense(self):
        return banded_to_dense(self.bands)

    def to_coo(self):
        """非零元素的 (row, col, value)，上下三角都列出。"""
        entries = []
        for d, band in enumerate(self.bands):
            for i in np.flatnonzero(band):
                value = float(band[i])
                entries.append((int(i + d), int(i), value))
                if d:
                    entries.append((int(i), int(i + d), value))
        return sorted(entries)


def _check_laplace_mode(p, mode):
    if not isinstance(mode, LaplaceMode) or mode.value != mode.ell * (mode.ell + p.n - 2):
        raise ValidationError(f"Laplace 模態 {mode} 與 profile 維度 n={p.n} 不符。")


def _check_dirac_mode(p, mode):
    if not isinstance(mode, DiracMode) or mode.mu != (p.n - 1) / 2.0 + mode.k:
        raise ValidationError(f"Dirac 模態 {mode} 與 profile 維度 n={p.n} 不符。")


def _body_end(p):
    if not p.has_region(BODY) or p.region(BODY).cells < 2:
        raise ValidationError("Body 區段至少需要兩個 cell 才能做 cap 限制。")
    return p.region(BODY).last


def _laplace_parts(p):
    """回傳 (剛度 k_j, 剛度對角, 質量 m_i, 位能權重)。"""
    n = p.n
    t, h = p.t, p.h
    mid = p.evaluate(t[:-1] + h / 2.0)[0]
    near_left = p.evaluate(t[:-1] + h / 4.0)[0]
    near_right = p.evaluate(t[1:] - h / 4.0)[0]

    stiffness = mid ** (n - 1) / h
    diag = np.zeros(p.size)
    diag[:-1] += stiffness
    diag[1:] += stiffness

    def lumped(power):
        m = np.zeros(p.size)
        m[:-1] += h / 2.0 * near_left ** power
        m[1:] += h / 2.0 * near_right ** power
        return m

    return stiffness, diag, lumped(n - 1), lumped(n - 3)


def _laplace_domain(p, mode, cap):
    # ℓ = 0 在極點用自然邊界，ℓ ≥ 1 在極點為 Dirichlet
    first = 0 if mode.ell == 0 else 1
    last = _body_end(p) - 1 if cap else (p.size - 1 if mode.ell == 0 else p.size - 2)
    return first, last


def _assemble_laplace(p, mode, cap=False, curvature=None):
    _check_laplace_mode(p, mode)
    stiffness, diag, mass, potential = _laplace_parts(p)
    first, last = _laplace_domain(p, mode, cap)
    window = slice(first, last + 1)

    main = diag + mode.value * potential
    off = -stiffness
    kind = LAPLACE
    if curvature is not None:
        scale = 4.0 * (p.n - 1) / (p.n - 2)
        main = scale * main + curvature.S * mass
        off = scale * off
        kind = YAMABE

    return RadialOperator(
        kind=kind,
        mode=mode,
        bands=(main[window].copy(), off[first:last].copy()),
        weights=mass[window].copy(),
        positions=p.t[window].copy(),
        h=float(p.h[first:max(last, first + 1)].max()),
        domain=(first, last),
        cap=cap,
    )


def _check_yamabe(p, c):
    if p.n == 2:
        raise ValidationError("n = 2 時 Yamabe 算子 4(n-1)/(n-2)·Δ + S 無定義。")
    if c.S.shape != p.t.shape:
        raise ValidationError("curvature 與 profile 的格點數不符。")


def assemble_laplace_radial(p, mode):
    return _assemble_laplace(p, mode)


def assemble_yamabe_radial(p, c, mode):
    """A_Y = 4(n-1)/(n-2)·A_Δ + diag(S)·B，權重與 Laplace 相同。"""
    _check_yamabe(p, c)
    return _assemble_laplace(p, mode, curvature=c)


def _dirac_parts(p, mu):
    t, h = p.t, p.h
    V = mu / p.evaluate(t[:-1] + h / 2.0)[0]
    upper = 1.0 + h * V / 2.0   # c_j 與 d_{j+1}
    lower = -1.0 + h * V / 2.0  # c_j 與 d_j
    w = np.zeros(p.size)
    w[1:-1] = (h[:-1] + h[1:]) / 2.0
    return upper, lower, w


def assemble_dirac_radial(p, mode):
    """
    交錯的 c_0, d_1, …, c_{M-2}, d_{M-1}；兩極各截掉一個 cell（d_0 = 0, c_{M-1/2} = 0）。
    對角為 0，所以 diag((-1)^i) 共軛後得到 -A：譜對 0 完全對稱。
    """
    _check_dirac_mode(p, mode)
    upper, lower, w = _dirac_parts(p, mode.mu)
    h = p.h
    m = p.size - 2
    if m < 1:
        raise ValidationError("格點太少，無法建立 Dirac 徑向系統。")

    off = np.empty(2 * m - 1)
    off[0::2] = upper[:m]
    off[1::2] = lower[1:m]
    weights = np.empty(2 * m)
    weights[0::2] = h[:m]
    weights[1::2] = w[1:m + 1]
    positions = np.empty(2 * m)
    positions[0::2] = p.t[:m] + h[:m] / 2.0
    positions[1::2] = p.t[1:m + 1]

    return RadialOperator(
        kind=DIRAC,
        mode=mode,
        bands=(np.zeros(2 * m), off),
        weights=weights,
        positions=positions,
        h=float(h.max()),
        domain=(0, m),
        convention=CHIRAL_STAGGERED,
    )


def _assemble_dirac_cap(p, mode):
    """
    支撐在 Body 內的 spinor 上的 D² 二次形式。
    G = W_c^{-1/2}·K·W_d^{-1/2} 是下雙對角矩陣，D² 分成 G_dᵀG_d 與 G_cG_cᵀ 兩個三對角區塊，
    兩塊之間的耦合為 0，特徵值就是 λ²。
    """
    _check_dirac_mode(p, mode)
    m = _body_end(p) - 1
    upper, lower, w = _dirac_parts(p, mode.mu)
    h = p.h

    alpha = upper[:m] / np.sqrt(h[:m] * w[1:m + 1])       # G[j, j]
    beta = lower[1:m + 1] / np.sqrt(h[1:m + 1] * w[1:m + 1])  # G[j, j-1]，j = 1..m

    d_main = alpha ** 2 + beta ** 2
    d_off = beta[:-1] * alpha[1:]
    beta_c = np.concatenate([[0.0], beta[:-1]])
    c_main = alpha ** 2 + beta_c ** 2
    c_off = alpha[:-1] * beta[:-1]

    half_nodes = p.t[:m] + h[:m] / 2.0
    return RadialOperator(
        kind=DIRAC_SQUARED,
        mode=mode,
        bands=(np.concatenate([d_main, c_main]), np.concatenate([d_off, [0.0], c_off])),
        weights=np.ones(2 * m),
        positions=np.concatenate([p.t[1:m + 1], half_nodes]),
        h=float(h[:m + 1].max()),
        domain=(0, m),
        convention=CHIRAL_STAGGERED,
        cap=True,
    )


def assemble_cap_dirichlet(op_kind, p, mode, curvature=None):
    """
    限制在 [0, t_body) 的同一組離散化，t_body 端所有分量為 Dirichlet。
    只用到 Body 的格點與 f 值，所以對所有 (r, L) 得到逐位元相同的矩陣。
    Dirac 回傳的是 D² 的 Gram 區塊，特徵值為 λ²。
    """
    if op_kind == LAPLACE:
        return _assemble_laplace(p, mode, cap=True)
    if op_kind == YAMABE:
        if curvature is None:
            raise ValidationError("Yamabe cap 需要 curvature。")
        _check_yamabe(p, curvature)
        return _assemble_laplace(p, mode, cap=True, curvature=curvature)
    if op_kind == DIRAC:
        return _assemble_dirac_cap(p, mode)
    raise ValidationError(f"未知的算子種類：{op_kind}。")
