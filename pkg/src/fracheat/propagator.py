"""Periodic grids and the linear solution operators as Fourier multipliers.

A field on ``[-L, L)^N`` is transformed with a real FFT.  Every operator is a
function of the (negated) Laplacian symbol ``|xi|^2``:

* heat semigroup      ``exp(-t |xi|^2)``
* P_alpha(t)          ``E_{alpha,1}(-t^alpha |xi|^2)``
* S_alpha(t)          ``E_{alpha,alpha}(-t^alpha |xi|^2) / alpha``

The default symbol is the one of the second-order central difference
Laplacian, ``sum_i (2/h sin(xi_i h / 2))^2``.  With it the heat multiplier is
the exact semigroup of the lattice Laplacian, whose kernel is positive, so
positivity and the maximum principle hold to rounding for any grid data.
The exact symbol ``|xi|^2`` is available as ``symbol="spectral"``; it is more
accurate on smooth data but rings around jumps and point-like data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy import fft as sfft

from .errors import DomainError, EvaluationError
from .specfun import (
    DEFAULT_CONTROL,
    halpha_quadrature,
    mainardi_density,
    mittag_leffler,
)

__all__ = [
    "Grid",
    "Field",
    "unit_ball_volume",
    "apply_heat",
    "apply_p_alpha",
    "apply_s_alpha",
    "quadrature_p_alpha",
    "quadrature_s_alpha",
    "p_alpha_multipliers",
    "s_alpha_multipliers",
    "check_box",
]

SYMBOLS = ("difference", "spectral")


def unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-half_width, half_width)^dim``."""

    dim: int
    half_width: float
    points_per_axis: int
    symbol: str = "difference"

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not self.half_width > 0:
            raise DomainError(f"half_width must be positive, got {self.half_width}")
        n = self.points_per_axis
        if n < 8 or n & (n - 1):
            raise DomainError(f"points_per_axis must be a power of two >= 8, got {n}")
        if self.symbol not in SYMBOLS:
            raise DomainError(f"symbol must be one of {SYMBOLS}, got {self.symbol!r}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def volume(self) -> float:
        return (2.0 * self.half_width) ** self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        """Cell centres along one axis; the origin is a cell centre."""
        n = self.points_per_axis
        return -self.half_width + self.spacing * np.arange(n)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.coords))

    @cached_property
    def origin_index(self) -> tuple[int, ...]:
        return (self.points_per_axis // 2,) * self.dim

    def _axis_symbol(self, xi: np.ndarray) -> np.ndarray:
        if self.symbol == "spectral":
            return xi**2
        h = self.spacing
        return (2.0 / h * np.sin(0.5 * xi * h)) ** 2

    @cached_property
    def laplace_symbol(self) -> np.ndarray:
        """``|xi|^2`` (or its lattice analogue) on the rfft layout, read-only."""
        n = self.points_per_axis
        h = self.spacing
        full = self._axis_symbol(2 * math.pi * sfft.fftfreq(n, d=h))
        half = self._axis_symbol(2 * math.pi * sfft.rfftfreq(n, d=h))
        parts = []
        for i in range(self.dim):
            shp = [1] * self.dim
            vec = half if i == self.dim - 1 else full
            shp[i] = vec.size
            parts.append(vec.reshape(shp))
        out = np.zeros(parts[0].shape)
        for part in parts:
            out = out + part
        out.setflags(write=False)
        return out

    @cached_property
    def _symbol_levels(self) -> tuple[np.ndarray, np.ndarray]:
        # multipliers depend only on |xi|^2, which takes far fewer distinct
        # values than there are modes; rounding merges symmetric duplicates
        sym = self.laplace_symbol
        scale = max(float(sym.max()), 1.0)
        keys = np.round(sym / scale, 13)
        _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        levels = sym.ravel()[first]
        return levels, inverse.reshape(sym.shape)

    def forward(self, values: np.ndarray) -> np.ndarray:
        return sfft.rfftn(values, axes=tuple(range(-self.dim, 0)))

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return sfft.irfftn(coeffs, s=self.shape, axes=tuple(range(-self.dim, 0)))


@dataclass(frozen=True, eq=False)
class Field:
    """Real grid function.  Values are stored read-only."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise DomainError(f"field shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.isfinite(vals).all():
            raise DomainError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(c)))

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def __mul__(self, k: float) -> "Field":
        return Field(self.grid, self.values * k)

    __rmul__ = __mul__


def _check_time(t: float) -> None:
    if not t > 0:
        raise DomainError(f"time must be positive, got {t}")


def _apply(f: Field, multiplier: np.ndarray) -> Field:
    g = f.grid
    out = g.inverse(g.forward(f.values) * multiplier)
    return Field(g, out)


def apply_heat(f: Field, t: float) -> Field:
    """``e^{t Delta} f`` on the periodic grid."""
    _check_time(t)
    return _apply(f, np.exp(-t * f.grid.laplace_symbol))


def _ml_on_levels(grid: Grid, alpha: float, beta: float, times: np.ndarray) -> np.ndarray:
    """E_{alpha,beta}(-t^alpha |xi|^2) for every time, on the distinct symbol levels."""
    levels, _ = grid._symbol_levels
    z = -np.outer(np.asarray(times, dtype=float) ** alpha, levels)
    try:
        return mittag_leffler(alpha, beta, z, DEFAULT_CONTROL)
    except EvaluationError as exc:
        raise EvaluationError(
            f"multiplier evaluation failed for alpha={alpha}, beta={beta}: {exc}",
            partial=exc.partial,
            terms=exc.terms,
        ) from exc


def _spread(grid: Grid, table: np.ndarray) -> np.ndarray:
    _, inverse = grid._symbol_levels
    return table[..., inverse]


@lru_cache(maxsize=32)
def _cached_p(grid: Grid, alpha: float, times: tuple) -> np.ndarray:
    return _ml_on_levels(grid, alpha, 1.0, np.array(times))


@lru_cache(maxsize=32)
def _cached_s(grid: Grid, alpha: float, times: tuple) -> np.ndarray:
    return _ml_on_levels(grid, alpha, alpha, np.array(times)) / alpha


def p_alpha_multipliers(grid: Grid, alpha: float, times) -> np.ndarray:
    """Stack of P_alpha multipliers, shape ``(len(times),) + rfft shape``.

    Tables are memoised per grid, order and time list; callers must not
    modify the returned array.
    """
    times = tuple(float(t) for t in np.atleast_1d(times))
    if alpha == 1.0:
        return np.exp(-np.multiply.outer(np.array(times), grid.laplace_symbol))
    return _spread(grid, _cached_p(grid, float(alpha), times))


def s_alpha_multipliers(grid: Grid, alpha: float, times) -> np.ndarray:
    """Stack of S_alpha multipliers; see :func:`p_alpha_multipliers`."""
    times = tuple(float(t) for t in np.atleast_1d(times))
    if alpha == 1.0:
        return np.exp(-np.multiply.outer(np.array(times), grid.laplace_symbol))
    return _spread(grid, _cached_s(grid, float(alpha), times))


def _check_alpha(alpha: float) -> None:
    if not (0 < alpha <= 1):
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")


def apply_p_alpha(f: Field, alpha: float, t: float) -> Field:
    """P_alpha(t) f through the Mittag-Leffler multiplier."""
    _check_alpha(alpha)
    _check_time(t)
    mult = p_alpha_multipliers(f.grid, alpha, [t])[0]
    return _apply(f, mult)


def apply_s_alpha(f: Field, alpha: float, t: float) -> Field:
    """S_alpha(t) f; its action on constants is division by Gamma(1 + alpha)."""
    _check_alpha(alpha)
    _check_time(t)
    mult = s_alpha_multipliers(f.grid, alpha, [t])[0]
    return _apply(f, mult)


def _theta_mixture(f: Field, alpha: float, t: float, nodes: int, weight_power: int) -> Field:
    _check_alpha(alpha)
    _check_time(t)
    if nodes < 16:
        raise DomainError(f"nodes must be >= 16, got {nodes}")
    if alpha == 1.0:
        return apply_heat(f, t)
    try:
        theta, w = halpha_quadrature(alpha, nodes)
    except EvaluationError as exc:
        raise EvaluationError(f"could not set up the theta range for alpha={alpha}: {exc}") from exc
    dens = mainardi_density(alpha, theta) * w * theta**weight_power
    sym = f.grid.laplace_symbol
    mult = np.zeros(sym.shape)
    ta = t**alpha
    for th, wt in zip(theta, dens):
        if wt != 0.0:
            mult += wt * np.exp(-ta * th * sym)
    return _apply(f, mult)


def quadrature_p_alpha(f: Field, alpha: float, t: float, nodes: int = 32) -> Field:
    """P_alpha(t) f as a quadrature mixture of heat semigroups over theta.

    Independent of the Mittag-Leffler code path; intended as a cross-check.
    """
    return _theta_mixture(f, alpha, t, nodes, 0)


def quadrature_s_alpha(f: Field, alpha: float, t: float, nodes: int = 32) -> Field:
    """S_alpha(t) f as a theta-quadrature; companion of :func:`quadrature_p_alpha`."""
    return _theta_mixture(f, alpha, t, nodes, 1)


def check_box(grid: Grid, f: Field, horizon: float, mass_fraction: float = 1e-6) -> bool:
    """Warn when the box is too small for the data's support over ``horizon``.

    The essential support is the smallest radius holding all but
    ``mass_fraction`` of the absolute mass; it must stay ``4 sqrt(horizon)``
    away from the box edge.
    """
    a = np.abs(f.values).ravel()
    total = a.sum()
    if total == 0:
        return True
    r = grid.radius.ravel()
    order = np.argsort(r)
    cum = np.cumsum(a[order])
    idx = min(int(np.searchsorted(cum, (1 - mass_fraction) * total)), r.size - 1)
    support = r[order][idx]
    ok = grid.half_width - support >= 4.0 * math.sqrt(horizon)
    if not ok:
        warnings.warn(
            f"box half-width {grid.half_width} leaves less than 4*sqrt(T) = "
            f"{4 * math.sqrt(horizon):.3g} between the data support ({support:.3g}) and the boundary",
            RuntimeWarning,
            stacklevel=2,
        )
    return ok
