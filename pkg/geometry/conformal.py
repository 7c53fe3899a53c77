"""
徑向 conformal change g₁ = u^{4/(n-2)}·g。

    S₁    = u^{-(n+2)/(n-2)}·Y(u)
    dvol₁ = u^{2n/(n-2)}·dvol
    ∫S₁ dvol₁ = ∫u·Y(u) dvol = ∫(4(n-1)/(n-2)·u'² + S·u²) dvol
"""
import logging
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from spectra.eigensolve import banded_matvec, generalized_eigen
from spectra.modes import laplace_mode
from spectra.radial_operators import assemble_yamabe_radial
from .curvature import extrapolate_to_pole, integrate_radial, sphere_volume

logger = logging.getLogger(__name__)

DEFAULT_EPS = tuple(10.0 ** -k for k in range(9))


@dataclass(frozen=True, eq=False)
class ConformalReport:
    u: np.ndarray
    S1: np.ndarray
    total_S1: float
    vol1: float
    total_uYu: float
    identity_residual: float
    eps: float = None
    mu: float = None


@dataclass(frozen=True)
class EpsilonRow:
    eps: float
    value: float
    direct: float
    quotient: float


@dataclass(frozen=True, eq=False)
class EpsilonSweep:
    j: int
    mu: float
    rows: tuple
    extrapolated_limit: float
    residual: float


def _yamabe_scale(n):
    if n == 2:
        raise ValidationError("n = 2 時 Yamabe 算子 4(n-1)/(n-2)·Δ + S 無定義。")
    return 4.0 * (n - 1) / (n - 2)


def _radial_function(p, u):
    u = np.asarray(u, dtype=float)
    if u.shape != p.t.shape:
        raise ValidationError(f"徑向函數長度應為 {p.size}，收到 {u.size}。")
    return u


def _second_derivative(t, u):
    # 非等距三點公式
    left = t[1:-1] - t[:-2]
    right = t[2:] - t[1:-1]
    return 2.0 * (
        u[:-2] / (left * (left + right))
        - u[1:-1] / (left * right)
        + u[2:] / (right * (left + right))
    )


def yamabe_apply(p, c, u):
    """Y(u) = 4(n-1)/(n-2)·Δu + S·u，Δu = -u'' - (n-1)(f'/f)·u'。"""
    scale = _yamabe_scale(p.n)
    u = _radial_function(p, u)
    du = np.gradient(u, p.t, edge_order=2)

    Y = np.empty(p.size)
    laplacian = -_second_derivative(p.t, u) - (p.n - 1) * (p.f1[1:-1] / p.f[1:-1]) * du[1:-1]
    Y[1:-1] = scale * laplacian + c.S[1:-1] * u[1:-1]
    Y[0] = extrapolate_to_pole(p.t[1:4], Y[1:4], p.t[0])
    Y[-1] = extrapolate_to_pole(p.t[-4:-1], Y[-4:-1], p.t[-1])
    return Y


def conformal_scalar_curvature(p, c, u, eps=None, mu=None):
    n = p.n
    _yamabe_scale(n)
    u = _radial_function(p, u)
    if np.any(u <= 0.0):
        raise ValidationError("conformal factor u 必須處處為正。")

    Yu = yamabe_apply(p, c, u)
    S1 = u ** (-(n + 2) / (n - 2)) * Yu
    volume_factor = u ** (2.0 * n / (n - 2))
    total_S1 = integrate_radial(p, S1 * volume_factor)
    total_uYu = integrate_radial(p, u * Yu)

    return ConformalReport(
        u=u,
        S1=S1,
        total_S1=total_S1,
        vol1=integrate_radial(p, volume_factor),
        total_uYu=total_uYu,
        identity_residual=abs(total_S1 - total_uYu) / max(1.0, abs(total_S1)),
        eps=eps,
        mu=mu,
    )


def total_scalar_identity_check(report):
    """|∫S₁ dvol₁ - ∫u·Y(u) dvol| / max(1, |∫S₁ dvol₁|)。"""
    return abs(report.total_S1 - report.total_uYu) / max(1.0, abs(report.total_S1))


def dirichlet_form(p, c, u):
    scale = _yamabe_scale(p.n)
    u = _radial_function(p, u)
    du = np.gradient(u, p.t, edge_order=2)
    return integrate_radial(p, scale * du ** 2 + c.S * u ** 2)


def dirichlet_form_residual(p, c, u):
    """分部積分恆等式 ∫u·Y(u) = ∫(4(n-1)/(n-2)·u'² + S·u²) 的離散誤差。"""
    form = dirichlet_form(p, c, u)
    direct = integrate_radial(p, _radial_function(p, u) * yamabe_apply(p, c, u))
    return abs(direct - form) / max(1.0, abs(form))


def random_conformal_factor(p, rng, terms=4, amplitude=0.3):
    """u = exp(Σ a_k·cos(kπt/T))，在兩極皆為偶函數，所以是平滑的徑向函數。"""
    coeffs = amplitude * rng.standard_normal(terms)
    phase = np.pi * p.t / p.T
    return np.exp(sum(a * np.cos((k + 1) * phase) for k, a in enumerate(coeffs)))


def _extrapolate_to_zero(eps_values, values):
    # 線性模型 value = a + b·ε
    system = np.array([[1.0, e] for e in eps_values])
    return float(np.linalg.solve(system, values)[0])


def epsilon_unboundedness_sweep(p, c, j, eps=DEFAULT_EPS, tol=None, driver=None):
    """
    取 ℓ = 0 徑向 Yamabe 問題的第 j 個特徵對 (μ_j, u_j)，∫u_j² dvol = 1，
    對每個 ε 計算 u_ε = √(u_j² + ε) 的 total scalar curvature ∫u_ε·Y(u_ε) dvol。
    value 以離散 Dirichlet form 計算，direct 以逐點 Y(u_ε) 計算，quotient 為 value / ∫u_ε²。
    """
    if not eps:
        raise ValidationError("ε 列表不可為空。")
    if len(eps) < 2:
        raise ValidationError("外插至少需要兩個 ε。")
    if any(e <= 0.0 for e in eps):
        raise ValidationError("ε 必須為正。")

    op = assemble_yamabe_radial(p, c, laplace_mode(p.n, 0))
    if not 0 <= j < op.size:
        raise ValidationError(f"模態索引 j = {j} 超出範圍。")
    result = generalized_eigen(op.bands, op.weights, which=(j, j), tol=tol, driver=driver, vectors=True)
    mu = float(result.values[0])
    if mu <= 0.0:
        raise ValidationError(f"μ_{j} = {mu:.6g} ≤ 0，ε 技巧需要正的 Yamabe 特徵值。")

    omega = sphere_volume(p.n - 1)
    u = result.vectors[:, 0] / np.sqrt(omega)
    if u[np.argmax(np.abs(u))] < 0.0:
        u = -u

    rows = []
    for e in eps:
        u_eps = np.sqrt(u ** 2 + e)
        value = omega * float(u_eps @ banded_matvec(op.bands, u_eps))
        mass = omega * float(np.sum(op.weights * u_eps ** 2))
        direct = integrate_radial(p, u_eps * yamabe_apply(p, c, u_eps))
        rows.append(EpsilonRow(eps=e, value=value, direct=direct, quotient=value / mass))

    smallest = sorted(rows, key=lambda row: row.eps)[:2]
    limit = _extrapolate_to_zero([row.eps for row in smallest], [row.value for row in smallest])
    logger.info("epsilon sweep j=%d: mu=%.8g, limit=%.8g", j, mu, limit)
    return EpsilonSweep(
        j=j,
        mu=mu,
        rows=tuple(rows),
        extrapolated_limit=limit,
        residual=abs(limit - mu) / max(1.0, abs(mu)),
    )
