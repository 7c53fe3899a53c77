"""
旋轉對稱的 warped-product profile：g = dt² + f(t)²·g_{S^{n-1}(1)}。

Pinocchio profile 由四段組成：Body (sin t)、Taper (五次 Hermite 過渡)、
Neck (f ≡ r，長度 L) 與 NoseCap (半徑 r 的半球，可選擇 C² 平滑)。
每一段使用等距格點，區段邊界一定落在格點上。
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

logger = logging.getLogger(__name__)

BODY = 'Body'
TAPER = 'Taper'
NECK = 'Neck'
NOSE_CAP = 'NoseCap'

MIN_CELLS_PER_UNIT = 16
DEFAULT_CELLS_PER_UNIT = 64
MAX_NECK_RADIUS = 0.9


class SinePiece:
    """f(t) = R·sin(t/R)。"""

    def __init__(self, R=1.0):
        self.R = R

    def evaluate(self, t):
        x = t / self.R
        return self.R * np.sin(x), np.cos(x), -np.sin(x) / self.R


class QuinticHermitePiece:
    """在 [t0, t0 + w] 上同時吻合兩端的值、一階與二階導數。"""

    def __init__(self, t0, w, left, right):
        self.t0 = t0
        self.w = w
        y0, d0, s0 = left
        y1, d1, s1 = right
        c0, c1, c2 = y0, w * d0, w * w * s0 / 2.0
        rhs = np.array([
            y1 - (c0 + c1 + c2),
            w * d1 - (c1 + 2.0 * c2),
            w * w * s1 - 2.0 * c2,
        ])
        system = np.array([[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]])
        c3, c4, c5 = np.linalg.solve(system, rhs)
        self.poly = np.polynomial.Polynomial([c0, c1, c2, c3, c4, c5])
        self.dpoly = self.poly.deriv()
        self.ddpoly = self.poly.deriv(2)

    def evaluate(self, t):
        x = (t - self.t0) / self.w
        return self.poly(x), self.dpoly(x) / self.w, self.ddpoly(x) / self.w ** 2


class ConstantPiece:

    def __init__(self, value):
        self.value = value

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        return np.full_like(t, self.value), np.zeros_like(t), np.zeros_like(t)


class CapPiece:
    """
    半徑 r 的半球 f = r·sin((T - t)/r)。

    blend > 0 時在起點附近以五次 smoothstep β 混合 f = r + β·(h - r)，
    使得與 Neck 的接點為 C²，且 s ≥ blend 後與半球完全一致。
    """

    def __init__(self, r, t0, T, blend):
        self.r = r
        self.t0 = t0
        self.T = T
        self.blend = blend

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        arg = (self.T - t) / self.r
        h = self.r * np.sin(arg)
        h1 = -np.cos(arg)
        h2 = -np.sin(arg) / self.r
        if self.blend <= 0.0:
            return h, h1, h2

        w = self.blend
        x = np.clip((t - self.t0) / w, 0.0, 1.0)
        beta = x ** 3 * (10.0 - 15.0 * x + 6.0 * x ** 2)
        beta1 = 30.0 * x ** 2 * (1.0 - x) ** 2 / w
        beta2 = 60.0 * x * (1.0 - 3.0 * x + 2.0 * x ** 2) / w ** 2
        gap = h - self.r
        f = self.r + beta * gap
        f1 = beta1 * gap + beta * h1
        f2 = beta2 * gap + 2.0 * beta1 * h1 + beta * h2
        return f, f1, f2


@dataclass(frozen=True)
class Segment:
    name: str
    start: float
    end: float
    piece: object


class PiecewiseShape:
    """依區段挑選 piece；落在邊界上的點一律使用左側區段。"""

    def __init__(self, segments):
        self.segments = tuple(segments)
        self.breaks = np.array([seg.end for seg in self.segments[:-1]])

    @property
    def length(self):
        return self.segments[-1].end

    def evaluate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        index = np.searchsorted(self.breaks, t, side='left')
        f = np.empty_like(t)
        f1 = np.empty_like(t)
        f2 = np.empty_like(t)
        for k, seg in enumerate(self.segments):
            mask = index == k
            if mask.any():
                f[mask], f1[mask], f2[mask] = seg.piece.evaluate(t[mask])
        return f, f1, f2


@dataclass(frozen=True)
class ProfileSpec:
    n: int
    r: float
    L: float
    t_body: float = 2.0
    w_taper: float = 1.0
    w_blend: float = None
    N: int = DEFAULT_CELLS_PER_UNIT

    @property
    def blend_width(self):
        return 0.1 * self.r if self.w_blend is None else self.w_blend

    @property
    def taper_start(self):
        return self.t_body

    @property
    def neck_start(self):
        return self.t_body + self.w_taper

    @property
    def neck_end(self):
        return self.neck_start + self.L

    @property
    def total_length(self):
        return self.neck_end + self.r * math.pi / 2.0

    def validate(self):
        if self.n < 2:
            raise ValidationError(f"維度 n 必須 ≥ 2，收到 {self.n}。")
        if not 0.0 < self.t_body < math.pi:
            raise ValidationError("t_body 必須落在 (0, π)。")
        if self.w_taper <= 0.0:
            raise ValidationError("w_taper 必須為正。")
        if self.L < 0.0:
            raise ValidationError("Neck 長度 L 不可為負。")
        if self.N < MIN_CELLS_PER_UNIT:
            raise ValidationError(f"解析度 N 必須 ≥ {MIN_CELLS_PER_UNIT}。")
        if self.r >= math.sin(self.t_body):
            raise ValidationError("Neck 半徑 r 必須小於 sin(t_body)，否則 Neck 比 Taper 起點還粗。")
        if not 0.0 < self.r < MAX_NECK_RADIUS:
            raise ValidationError(f"Neck 半徑 r 必須落在 (0, {MAX_NECK_RADIUS})。")
        if not 0.0 <= self.blend_width < self.r * math.pi / 2.0:
            raise ValidationError("w_blend 必須落在 [0, rπ/2)。")


@dataclass(frozen=True)
class Region:
    name: str
    start: float
    end: float
    first: int
    last: int

    @property
    def cells(self):
        return self.last - self.first

    @property
    def length(self):
        return self.end - self.start


@dataclass(frozen=True, eq=False)
class ProfileGrid:
    n: int
    t: np.ndarray
    f: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    regions: tuple
    T: float
    shape: PiecewiseShape = field(repr=False)
    cells: tuple = ()
    kind: str = 'pinocchio'
    spec: ProfileSpec = None
    refinement: int = 1
    N: int = 0

    @property
    def size(self):
        return self.t.size

    @property
    def h(self):
        """各 cell 的寬度。"""
        return np.diff(self.t)

    def region(self, name):
        for region in self.regions:
            if region.name == name:
                return region
        raise KeyError(name)

    def has_region(self, name):
        return any(region.name == name for region in self.regions)

    def evaluate(self, x):
        return self.shape.evaluate(x)

    def refined(self, factor):
        """每個 cell 再等分成 factor 份；原有格點仍是格點，區段邊界不變。"""
        return _assemble(
            self.shape, self.n,
            tuple(c * factor for c in self.cells),
            kind=self.kind, spec=self.spec,
            refinement=self.refinement * factor, N=self.N,
        )


@dataclass
class ValidationReport:
    joint_jumps: dict
    positivity_margin: float
    north_residual: float
    south_residual: float
    tol: float

    @property
    def max_joint_jump(self):
        return max(self.joint_jumps.values(), default=0.0)

    @property
    def passed(self):
        return (
            self.max_joint_jump <= self.tol
            and self.positivity_margin > 0.0
            and self.north_residual <= self.tol
            and self.south_residual <= self.tol
        )


def _frozen(array):
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


def _cell_count(length, N):
    """
    N = m·2^j（m 為奇數）時 cell 數為 2^j·⌈length·m⌉。
    N 加倍時 cell 數恰好加倍，舊格點都留在新格點上，且間距 ≤ 1/N。
    """
    if length <= 0.0:
        return 0
    doublings = (N & -N).bit_length() - 1
    odd = N >> doublings
    return max(1, math.ceil(length * odd - 1e-9)) << doublings


def _assemble(shape, n, cells, kind, spec=None, refinement=1, N=0):
    parts = []
    regions = []
    first = 0
    for seg, count in zip(shape.segments, cells):
        nodes = np.linspace(seg.start, seg.end, count + 1)
        parts.append(nodes if not parts else nodes[1:])
        regions.append(Region(seg.name, seg.start, seg.end, first, first + count))
        first += count

    t = np.concatenate(parts)
    f, f1, f2 = shape.evaluate(t)
    return ProfileGrid(
        n=n,
        t=_frozen(t),
        f=_frozen(f),
        f1=_frozen(f1),
        f2=_frozen(f2),
        regions=tuple(regions),
        T=float(t[-1]),
        shape=shape,
        cells=tuple(cells),
        kind=kind,
        spec=spec,
        refinement=refinement,
        N=N,
    )


def _check_taper(piece, spec):
    """Taper 必須嚴格為正且不超過 sin(t_body)。"""
    sample = np.linspace(spec.taper_start, spec.neck_start, 2001)
    values = piece.evaluate(sample)[0]
    ceiling = math.sin(spec.t_body)
    if values.min() <= 0.0:
        raise ValidationError("Taper 過渡段出現非正值，請調整 r 或 w_taper。")
    if values.max() > ceiling * (1.0 + 1e-12):
        raise ValidationError("Taper 過渡段超過 sin(t_body)，請調整 r 或 w_taper。")


def build_pinocchio_profile(spec):
    """
    建立 Pinocchio profile。
    [0, t_body] 上的格點與 f 值與 (r, L) 無關；Taper 與 NoseCap 與 L 無關。
    """
    spec.validate()

    # 1. 各區段的 piece
    tb = spec.t_body
    taper = QuinticHermitePiece(
        tb, spec.w_taper,
        left=(math.sin(tb), math.cos(tb), -math.sin(tb)),
        right=(spec.r, 0.0, 0.0),
    )
    _check_taper(taper, spec)

    T = spec.total_length
    shape = PiecewiseShape([
        Segment(BODY, 0.0, tb, SinePiece(1.0)),
        Segment(TAPER, tb, spec.neck_start, taper),
        Segment(NECK, spec.neck_start, spec.neck_end, ConstantPiece(spec.r)),
        Segment(NOSE_CAP, spec.neck_end, T, CapPiece(spec.r, spec.neck_end, T, spec.blend_width)),
    ])

    # 2. 每段的 cell 數只由該段長度與 N 決定
    cells = tuple(_cell_count(seg.end - seg.start, spec.N) for seg in shape.segments)
    grid = _assemble(shape, spec.n, cells, kind='pinocchio', spec=spec, N=spec.N)
    logger.info(
        "Pinocchio profile n=%d r=%g L=%g: %d nodes, T=%.6f",
        spec.n, spec.r, spec.L, grid.size, grid.T,
    )
    return grid


def build_round_profile(n, R, N=DEFAULT_CELLS_PER_UNIT):
    """圓球 Sⁿ(R)：f(t) = R·sin(t/R)，t ∈ [0, πR]。"""
    if n < 2:
        raise ValidationError(f"維度 n 必須 ≥ 2，收到 {n}。")
    if R <= 0.0:
        raise ValidationError("半徑 R 必須為正。")
    if N < MIN_CELLS_PER_UNIT:
        raise ValidationError(f"解析度 N 必須 ≥ {MIN_CELLS_PER_UNIT}。")

    shape = PiecewiseShape([Segment(BODY, 0.0, math.pi * R, SinePiece(R))])
    cells = (_cell_count(math.pi * R, N),)
    return _assemble(shape, n, cells, kind='round', N=N)


def validate_profile(p, tol=1e-10):
    """只產生報告，不丟出例外。"""
    jumps = {}
    nonempty = [
        (region, seg)
        for region, seg in zip(p.regions, p.shape.segments)
        if region.cells > 0
    ]
    for (left, left_seg), (right, right_seg) in zip(nonempty, nonempty[1:]):
        joint = np.array([left.end])
        f2_left = left_seg.piece.evaluate(joint)[2][0]
        f2_right = right_seg.piece.evaluate(joint)[2][0]
        jumps[f"{left.name}/{right.name}"] = float(abs(f2_left - f2_right))

    interior = p.f[1:-1]
    return ValidationReport(
        joint_jumps=jumps,
        positivity_margin=float(interior.min()) if interior.size else 0.0,
        north_residual=float(abs(p.f1[0] - 1.0)),
        south_residual=float(abs(p.f1[-1] + 1.0)),
        tol=tol,
    )
