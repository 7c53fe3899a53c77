"""
Scalar curvature、體積與 total scalar curvature。

對 g = dt² + f²·g_{S^{n-1}}：
    S = -2(n-1)·f''/f + (n-1)(n-2)·(1 - f'²)/f²
極點上的值以內部三點做二次外插。
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError
from scipy.integrate import simpson
from scipy.special import gamma

logger = logging.getLogger(__name__)

POSITIVITY_FLOOR = 1e-12


def sphere_volume(m):
    """單位球面 S^m 的體積 ω_m。"""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / gamma((m + 1) / 2.0)


def neck_limit(n, r):
    """Neck 上的 scalar curvature，也是 L → ∞ 時 ∫S/vol 的極限。"""
    return (n - 1) * (n - 2) / r ** 2


@dataclass(frozen=True, eq=False)
class CurvatureField:
    n: int
    S: np.ndarray
    S_min: float
    region_integrals: dict


@dataclass(frozen=True)
class GlobalQuantities:
    n: int
    vol: float
    total_S: float
    ratio: float
    omega: float
    region_volumes: dict
    region_totals: dict


def extrapolate_to_pole(x, y, x0):
    coeffs = np.polynomial.polynomial.polyfit(x, y, 2)
    return float(np.polynomial.polynomial.polyval(x0, coeffs))


def region_integrals(p, values):
    """
    對每個區段做 composite Simpson：ω_{n-1}·∫ values·f^{n-1} dt。
    區段邊界是積分斷點，C² 接點不會拉低收斂階。
    """
    omega = sphere_volume(p.n - 1)
    weight = p.f ** (p.n - 1)
    totals = {}
    for region in p.regions:
        if region.cells == 0:
            totals[region.name] = 0.0
            continue
        window = slice(region.first, region.last + 1)
        totals[region.name] = omega * float(simpson(values[window] * weight[window], x=p.t[window]))
    return totals


def integrate_radial(p, values):
    return sum(region_integrals(p, values).values())


def scalar_curvature_field(p):
    n = p.n
    f, f1, f2 = p.f[1:-1], p.f1[1:-1], p.f2[1:-1]
    if f.min() < POSITIVITY_FLOOR * p.f.max():
        raise ValidationError("profile 在內部格點低於正值下限，資料可能已損毀。")

    S = np.empty(p.size)
    S[1:-1] = -2.0 * (n - 1) * f2 / f + (n - 1) * (n - 2) * (1.0 - f1 ** 2) / f ** 2
    S[0] = extrapolate_to_pole(p.t[1:4], S[1:4], p.t[0])
    S[-1] = extrapolate_to_pole(p.t[-4:-1], S[-4:-1], p.t[-1])
    S.setflags(write=False)

    return CurvatureField(
        n=n,
        S=S,
        S_min=float(S.min()),
        region_integrals=region_integrals(p, S),
    )


def global_quantities(p, c):
    volumes = region_integrals(p, np.ones(p.size))
    vol = sum(volumes.values())
    total_S = sum(c.region_integrals.values())
    return GlobalQuantities(
        n=p.n,
        vol=vol,
        total_S=total_S,
        ratio=total_S / vol,
        omega=sphere_volume(p.n - 1),
        region_volumes=volumes,
        region_totals=dict(c.region_integrals),
    )


def conjectured_bound(q, n):
    """n/(4(n-1))·∫S/vol；可能為負，原樣回傳。"""
    return n / (4.0 * (n - 1)) * q.ratio
