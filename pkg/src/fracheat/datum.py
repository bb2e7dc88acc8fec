"""Initial data families, exact ball masses, grid sampling and local norms.

Every parametric family is radial about the origin.  Ball masses centred
at the origin are closed forms; off-centre balls use a one-dimensional
radial integral weighted by the fraction of each sphere that lies inside
the ball.  Gridded data use sliding-window sums, implemented as periodic
FFT convolutions with a ball stencil whose boundary cells carry fractional
weights.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import integrate, optimize, special
from scipy.ndimage import map_coordinates

from .errors import DomainError, SamplingError
from .propagator import Field, Grid, unit_ball_volume

__all__ = [
    "ProblemParams",
    "DiracApprox",
    "LogSingular",
    "PowerLaw",
    "Decaying",
    "Constant",
    "GridDensity",
    "InitialDatum",
    "FAMILIES",
    "make_datum",
    "sphere_area",
    "sample_on_grid",
    "ball_mass",
    "sup_ball_mass",
    "total_mass",
    "power_ball_integral",
    "uloc_norm",
    "morrey_norm",
    "window_sums",
]

CRITICAL_TOL = 1e-12
# sub-cell midpoint points per axis around singularities and jumps
_FINE_SUBCELLS = 16
_COARSE_SUBCELLS = 4


def sphere_area(dim: int) -> float:
    """Surface measure s_N = N omega_N of the unit sphere."""
    return dim * unit_ball_volume(dim)


@dataclass(frozen=True)
class ProblemParams:
    dim: int
    p: float
    alpha: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if not (0 < self.alpha <= 1):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")

    @property
    def fujita(self) -> float:
        return 1.0 + 2.0 / self.dim

    @property
    def regime(self) -> str:
        if abs(self.p - self.fujita) <= CRITICAL_TOL:
            return "critical"
        return "subcritical" if self.p < self.fujita else "supercritical"

    @property
    def singular_exponent(self) -> float:
        """2/(p-1): homogeneity of the self-similar profile."""
        return 2.0 / (self.p - 1.0)

    @property
    def amplitude_exponent(self) -> float:
        """Exponent of lambda in u_lambda = lambda^{2 alpha/(p-1)} u(lambda^2 t, lambda^alpha x)."""
        return 2.0 * self.alpha / (self.p - 1.0)


# ---------------------------------------------------------------------------
# radial helpers


def _cap_fraction(dim: int, r, d: float, sigma: float):
    """Fraction of the sphere |x| = r inside B(c, sigma) with |c| = d > 0."""
    r = np.asarray(r, dtype=float)
    if dim == 1:
        return 0.5 * ((np.abs(r - d) < sigma).astype(float) + (r + d < sigma).astype(float))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (r**2 + d**2 - sigma**2) / (2.0 * r * d)
    c = np.clip(np.nan_to_num(c, nan=-1.0), -1.0, 1.0)
    if dim == 2:
        return np.arccos(c) / math.pi
    return 0.5 * (1.0 - c)


class _Radial:
    """Shared machinery for radial families; subclasses define the profile."""

    kappa: float

    # profile(r, dim) -> density at radius r
    def profile(self, r, dim: int):
        raise NotImplementedError

    def origin_mass(self, sigma: float, dim: int) -> float:
        raise NotImplementedError

    def breakpoints(self, dim: int) -> tuple[float, ...]:
        return ()

    def monotone(self, dim: int) -> bool:
        return True

    def outer_radius(self, dim: int) -> float:
        return math.inf

    def total(self, dim: int) -> float:
        return self.origin_mass(math.inf, dim)

    def ball_mass(self, center, sigma: float) -> float:
        center = np.atleast_1d(np.asarray(center, dtype=float))
        dim = center.size
        if not sigma > 0:
            raise DomainError(f"sigma must be positive, got {sigma}")
        d = float(np.linalg.norm(center))
        if d == 0.0:
            return self.origin_mass(sigma, dim)
        inner = max(sigma - d, 0.0)
        lo, hi = abs(d - sigma), min(d + sigma, self.outer_radius(dim))
        mass = self.origin_mass(inner, dim) if inner > 0 else 0.0
        if hi <= lo:
            return mass
        s_n = sphere_area(dim)

        def integrand(r):
            return s_n * r ** (dim - 1) * float(self.profile(r, dim)) * float(_cap_fraction(dim, r, d, sigma))

        pts = [b for b in self.breakpoints(dim) if lo < b < hi]
        val, _ = integrate.quad(integrand, lo, hi, points=pts or None, limit=200, epsabs=0.0, epsrel=1e-10)
        return mass + val

    def sup_mass(self, sigma: float, dim: int) -> float:
        if self.monotone(dim):
            return self.origin_mass(sigma, dim)
        # search along a ray; the profile is radial so direction is irrelevant
        reach = min(self.outer_radius(dim), 1e6) + sigma
        ds = np.linspace(0.0, reach, 65)
        vals = [self.ball_mass((x,) + (0.0,) * (dim - 1), sigma) for x in ds]
        i = int(np.argmax(vals))
        lo, hi = ds[max(i - 1, 0)], ds[min(i + 1, ds.size - 1)]
        res = optimize.minimize_scalar(
            lambda x: -self.ball_mass((x,) + (0.0,) * (dim - 1), sigma),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-10 * max(reach, 1.0)},
        )
        return max(vals[i], -res.fun)


@dataclass(frozen=True)
class DiracApprox(_Radial):
    """kappa * j * indicator of B(0, r_j), r_j = (j omega_N)^(-1/N); unit mass per kappa.

    ``j`` may be any positive real so the family is closed under dilation.
    """

    j: float
    kappa: float = 1.0
    family = "dirac_approx"

    def __post_init__(self):
        if not self.j > 0:
            raise DomainError(f"j must be positive, got {self.j}")
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")

    def support_radius(self, dim: int) -> float:
        return (self.j * unit_ball_volume(dim)) ** (-1.0 / dim)

    def profile(self, r, dim):
        return np.where(np.asarray(r) < self.support_radius(dim), self.kappa * self.j, 0.0)

    def origin_mass(self, sigma, dim):
        return self.kappa * min(sigma / self.support_radius(dim), 1.0) ** dim

    def power_integral(self, sigma, r, dim):
        rad = min(sigma, self.support_radius(dim))
        return (self.kappa * self.j) ** r * unit_ball_volume(dim) * rad**dim

    def breakpoints(self, dim):
        return (self.support_radius(dim),)

    def outer_radius(self, dim):
        return self.support_radius(dim)

    def scaled(self, k: float) -> "DiracApprox":
        return DiracApprox(self.j, self.kappa * k)

    def dilated(self, log_amp: float, log_factor: float, dim: int) -> "DiracApprox":
        return DiracApprox(
            math.exp(math.log(self.j) + dim * log_factor),
            self.kappa * math.exp(log_amp - dim * log_factor),
        )


@dataclass(frozen=True)
class LogSingular(_Radial):
    """kappa |x|^-N (shift - log|x|)^-(N/2 + 1 - eps) on |x| < exp(shift - 1).

    ``shift = 0`` is the standard log-singular datum supported in B(0, 1/e);
    a nonzero shift is what a dilation produces.
    """

    eps: float
    kappa: float = 1.0
    shift: float = 0.0
    family = "log_singular"

    def __post_init__(self):
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")

    def _check_dim(self, dim):
        if not self.eps < dim / 2:
            raise DomainError(f"eps must lie in (0, N/2) = (0, {dim / 2}), got {self.eps}")

    def _power(self, dim):
        return dim / 2 + 1 - self.eps

    def outer_radius(self, dim):
        return math.exp(self.shift - 1.0)

    def profile(self, r, dim):
        r = np.asarray(r, dtype=float)
        inside = (r > 0) & (r < self.outer_radius(dim))
        out = np.zeros(r.shape)
        rr = r[inside]
        out[inside] = self.kappa * rr ** (-dim) * (self.shift - np.log(rr)) ** (-self._power(dim))
        return np.where(r == 0, np.inf, out)

    def origin_mass(self, sigma, dim):
        self._check_dim(dim)
        if sigma <= 0:
            return 0.0
        k = dim / 2 - self.eps
        log_inv = self.shift - min(math.log(sigma), self.shift - 1.0)
        return self.kappa * sphere_area(dim) / k * log_inv ** (-k)

    def power_integral(self, sigma, r, dim):
        # |x|^{-N r} is not integrable at the origin for any r >= 1
        return math.inf

    def breakpoints(self, dim):
        return (self.outer_radius(dim),)

    def monotone(self, dim):
        return self._power(dim) <= dim

    def scaled(self, k):
        return LogSingular(self.eps, self.kappa * k, self.shift)

    def dilated(self, log_amp, log_factor, dim):
        return LogSingular(self.eps, self.kappa * math.exp(log_amp - dim * log_factor), self.shift - log_factor)


@dataclass(frozen=True)
class PowerLaw(_Radial):
    """kappa |x|^(-2/(p-1)), the self-similar singular profile for exponent ``p``."""

    kappa: float
    p: float
    family = "power_law"

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")

    @property
    def exponent(self) -> float:
        return 2.0 / (self.p - 1.0)

    def profile(self, r, dim):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return self.kappa * r ** (-self.exponent)

    def origin_mass(self, sigma, dim):
        a = self.exponent
        if a >= dim:
            return math.inf
        return self.kappa * sphere_area(dim) * sigma ** (dim - a) / (dim - a)

    def power_integral(self, sigma, r, dim):
        ar = self.exponent * r
        if ar >= dim:
            return math.inf
        return self.kappa**r * sphere_area(dim) * sigma ** (dim - ar) / (dim - ar)

    def scaled(self, k):
        return PowerLaw(self.kappa * k, self.p)

    def dilated(self, log_amp, log_factor, dim):
        return PowerLaw(self.kappa * math.exp(log_amp - self.exponent * log_factor), self.p)


def _decay_integral(x: float, dim: int, A: float) -> float:
    """int_0^x u^(N-1) (1 + u)^(-A) du."""
    if x <= 0:
        return 0.0
    if math.isinf(x):
        if A <= dim:
            return math.inf
        return math.exp(special.betaln(dim, A - dim))
    if x < 1.0:
        val, _ = integrate.quad(lambda u: u ** (dim - 1) * (1 + u) ** (-A), 0.0, x, epsabs=0.0, epsrel=1e-12)
        return val
    # binomial expansion of (v - 1)^(N-1) with v = 1 + u
    v = 1.0 + x
    total = 0.0
    for k in range(dim):
        c = math.comb(dim - 1, k) * (-1) ** (dim - 1 - k)
        e = k - A + 1.0
        total += c * (math.log(v) if abs(e) < 1e-14 else (v**e - 1.0) / e)
    return total


@dataclass(frozen=True)
class Decaying(_Radial):
    """kappa (1 + |x|/scale)^(-A)."""

    kappa: float
    A: float
    scale: float = 1.0
    family = "decaying"

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if not self.A > 0:
            raise DomainError(f"A must be positive, got {self.A}")
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale}")

    def profile(self, r, dim):
        return self.kappa * (1.0 + np.asarray(r, dtype=float) / self.scale) ** (-self.A)

    def origin_mass(self, sigma, dim):
        return self.kappa * sphere_area(dim) * self.scale**dim * _decay_integral(sigma / self.scale, dim, self.A)

    def power_integral(self, sigma, r, dim):
        return self.kappa**r * sphere_area(dim) * self.scale**dim * _decay_integral(sigma / self.scale, dim, self.A * r)

    def scaled(self, k):
        return Decaying(self.kappa * k, self.A, self.scale)

    def dilated(self, log_amp, log_factor, dim):
        return Decaying(self.kappa * math.exp(log_amp), self.A, self.scale * math.exp(-log_factor))


@dataclass(frozen=True)
class Constant(_Radial):
    c: float
    family = "constant"

    def __post_init__(self):
        if not self.c >= 0:
            raise DomainError(f"c must be nonnegative, got {self.c}")

    @property
    def kappa(self) -> float:
        return self.c

    def profile(self, r, dim):
        return np.full(np.shape(r), self.c) if np.ndim(r) else self.c

    def origin_mass(self, sigma, dim):
        if self.c == 0:
            return 0.0
        return self.c * unit_ball_volume(dim) * sigma**dim

    def ball_mass(self, center, sigma):
        if not sigma > 0:
            raise DomainError(f"sigma must be positive, got {sigma}")
        return self.origin_mass(sigma, np.atleast_1d(center).size)

    def power_integral(self, sigma, r, dim):
        return self.c**r * unit_ball_volume(dim) * sigma**dim

    def scaled(self, k):
        return Constant(self.c * k)

    def dilated(self, log_amp, log_factor, dim):
        return Constant(self.c * math.exp(log_amp))


@dataclass(frozen=True, eq=False)
class GridDensity:
    """A nonnegative density given by its cell values on a grid."""

    field: Field = field(repr=False)
    family = "grid_density"

    def __post_init__(self):
        if (self.field.values < 0).any():
            raise DomainError("grid densities must be nonnegative")

    @property
    def kappa(self) -> float:
        return 1.0

    @property
    def grid(self) -> Grid:
        return self.field.grid

    def scaled(self, k):
        return GridDensity(self.field * k)

    def dilated(self, log_amp, log_factor, dim):
        """amp * f(factor x) by linear interpolation on the same grid."""
        factor = math.exp(log_factor)
        if factor > 2.0:
            raise SamplingError(
                f"dilation by {factor:.3g} would compress the grid density below its resolution"
            )
        g = self.grid
        idx = [(factor * c + g.half_width) / g.spacing for c in g.coords]
        vals = map_coordinates(self.field.values, idx, order=1, mode="grid-wrap")
        return GridDensity(Field(g, math.exp(log_amp) * np.maximum(vals, 0.0)))


InitialDatum = Union[DiracApprox, LogSingular, PowerLaw, Decaying, Constant, GridDensity]

FAMILIES = {
    "dirac_approx": DiracApprox,
    "log_singular": LogSingular,
    "power_law": PowerLaw,
    "decaying": Decaying,
    "constant": Constant,
}


def make_datum(family: str, **params) -> InitialDatum:
    """Build a parametric datum from its family tag, as named in config files."""
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise DomainError(f"unknown datum family {family!r}; choose from {sorted(FAMILIES)}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {family}: {exc}") from None


# ---------------------------------------------------------------------------
# grid sampling


def _subcell_offsets(dim: int, k: int, h: float) -> np.ndarray:
    base = (np.arange(k) + 0.5) / k - 0.5
    mesh = np.meshgrid(*([base] * dim), indexing="ij")
    return h * np.stack([m.ravel() for m in mesh], axis=1)


def _average_over_cells(d: _Radial, g: Grid, mask: np.ndarray, k: int, skip_origin_ball: bool) -> np.ndarray:
    """Midpoint-rule cell averages on the cells selected by ``mask``."""
    centres = np.stack([c[mask] for c in g.coords], axis=1)
    offs = _subcell_offsets(g.dim, k, g.spacing)
    out = np.zeros(centres.shape[0])
    block = max(1, 2**21 // offs.shape[0])
    for i in range(0, centres.shape[0], block):
        pts = centres[i : i + block, None, :] + offs[None, :, :]
        r = np.sqrt((pts**2).sum(axis=-1))
        vals = d.profile(r, g.dim)
        if skip_origin_ball:
            vals = np.where(r < 0.5 * g.spacing, 0.0, vals)
        out[i : i + block] = vals.mean(axis=1)
    return out


def sample_on_grid(d: InitialDatum, g: Grid) -> Field:
    """Cell averages of the datum on the grid.

    Smooth regions use a 4-point-per-axis midpoint rule.  Cells near the
    origin and cells cut by a jump of the profile use 16 points per axis,
    and the origin cell of a singular profile gets the exact mass of its
    inscribed ball plus the midpoint rule on the rest.
    """
    if isinstance(d, GridDensity):
        if d.grid == g:
            return d.field
        raise SamplingError("grid densities can only be used on their own grid")
    if isinstance(d, Constant):
        return Field.constant(g, d.c)
    dim, h = g.dim, g.spacing
    if isinstance(d, LogSingular):
        d._check_dim(dim)
    r = g.radius
    half_diag = 0.5 * h * math.sqrt(dim)

    core = {
        DiracApprox: lambda: d.support_radius(dim),
        LogSingular: lambda: d.outer_radius(dim),
    }.get(type(d))
    if core is not None and core() < 2 * h:
        warnings.warn(
            f"{d.family} core radius {core():.3g} is below two grid cells (h={h:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )

    singular = isinstance(d, (LogSingular, PowerLaw))
    if isinstance(d, PowerLaw) and d.exponent >= dim:
        raise SamplingError(f"{d} is not locally integrable in dimension {dim}")

    if isinstance(d, DiracApprox):
        values = np.zeros(g.shape)
        rad = d.support_radius(dim)
        if rad <= 0.5 * h:
            # the whole ball sits inside the origin cell
            values[g.origin_index] = d.kappa / g.cell_volume
            return Field(g, values)
        if rad >= g.half_width:
            raise SamplingError(f"support radius {rad:.3g} does not fit in the box")
        near = r <= rad + half_diag
        values[near] = _average_over_cells(d, g, near, _FINE_SUBCELLS, False)
        # sub-cell counting is exact only up to the boundary cells; fix the mass
        values *= d.kappa / (values.sum() * g.cell_volume)
        return Field(g, values)

    fine = r <= 4 * h * math.sqrt(dim)
    for b in d.breakpoints(dim):
        fine |= np.abs(r - b) <= half_diag
    values = np.empty(g.shape)
    coarse = ~fine
    if coarse.any():
        values[coarse] = _average_over_cells(d, g, coarse, _COARSE_SUBCELLS, False)
    values[fine] = _average_over_cells(d, g, fine, _FINE_SUBCELLS, singular)
    if singular:
        o = g.origin_index
        # the midpoint average above already skips the inscribed ball
        values[o] += d.origin_mass(0.5 * h, dim) / g.cell_volume
        if not np.isfinite(values[o]):
            raise SamplingError("singular cell quadrature failed")
    return Field(g, values)


# ---------------------------------------------------------------------------
# sliding windows on grids


def _cell_fraction_in_ball(g: Grid, radius: float, sub: int = 8) -> np.ndarray:
    """Fraction of each cell inside B(0, radius), arranged on the grid layout."""
    h = g.spacing
    r = g.radius
    half_diag = 0.5 * h * math.sqrt(g.dim)
    frac = (r + half_diag <= radius).astype(float)
    edge = np.abs(r - radius) < half_diag
    if edge.any():
        centres = np.stack([c[edge] for c in g.coords], axis=1)
        offs = _subcell_offsets(g.dim, sub, h)
        pts = centres[:, None, :] + offs[None, :, :]
        frac[edge] = (np.sqrt((pts**2).sum(-1)) < radius).mean(axis=1)
    return frac


@lru_cache(maxsize=64)
def _stencil_hat(g: Grid, radius: float) -> np.ndarray:
    if radius > g.half_width:
        raise DomainError(f"window radius {radius} does not fit in the box of half-width {g.half_width}")
    frac = _cell_fraction_in_ball(g, radius)
    # move the origin cell to index 0 so the convolution is centred
    shifted = np.roll(frac, shift=[-i for i in g.origin_index], axis=tuple(range(g.dim)))
    out = g.forward(shifted)
    out.setflags(write=False)
    return out


def window_sums(values: np.ndarray, g: Grid, radius: float) -> np.ndarray:
    """int over B(z, radius) of the grid function, for every grid centre z."""
    hat = _stencil_hat(g, float(radius))
    return g.inverse(g.forward(values) * hat) * g.cell_volume


def _check_window_grid(g: Grid) -> None:
    if g.spacing > 0.25:
        raise DomainError(f"grid spacing {g.spacing} exceeds 1/4; too coarse for unit-ball windows")
    if g.half_width < 1.0:
        raise DomainError("the box must contain a unit ball")


def uloc_norm(f: Field, q: float) -> float:
    """sup_z ||f||_{L^q(B(z,1))} over grid centres."""
    if not q >= 1:
        raise DomainError(f"q must be >= 1, got {q}")
    _check_window_grid(f.grid)
    sums = window_sums(np.abs(f.values) ** q, f.grid, 1.0)
    return float(max(sums.max(), 0.0) ** (1.0 / q))


def morrey_norm(f: Field, q: float, lam: float, depth: int | None = None) -> float:
    """sup over centres and dyadic radii R = 2^-k <= 1 of R^{(lam-N)/q} ||f||_{L^q(B(z,R))}.

    The ladder stops at the last radius >= 2 grid cells unless ``depth`` is
    given, in which case it is further capped at ``depth`` levels.
    """
    g = f.grid
    if not q >= 1:
        raise DomainError(f"q must be >= 1, got {q}")
    if not (0 < lam <= g.dim):
        raise DomainError(f"lambda must lie in (0, N], got {lam}")
    _check_window_grid(g)
    kmax = int(math.floor(math.log2(1.0 / (2.0 * g.spacing))))
    if depth is not None:
        kmax = min(kmax, depth)
    a = np.abs(f.values) ** q
    best = 0.0
    for k in range(kmax + 1):
        R = 2.0**-k
        s = float(max(window_sums(a, g, R).max(), 0.0))
        best = max(best, R ** ((lam - g.dim) / q) * s ** (1.0 / q))
    return best


# ---------------------------------------------------------------------------
# ball masses


def _grid_ball_mass(d: GridDensity, center, sigma: float) -> float:
    g = d.grid
    c = np.asarray(center, dtype=float)
    rel = [x - ci for x, ci in zip(g.coords, c)]
    # periodic distance to the centre
    rel = [(x + g.half_width) % (2 * g.half_width) - g.half_width for x in rel]
    r = np.sqrt(sum(x**2 for x in rel))
    h = g.spacing
    half_diag = 0.5 * h * math.sqrt(g.dim)
    w = (r + half_diag <= sigma).astype(float)
    edge = np.abs(r - sigma) < half_diag
    if edge.any():
        centres = np.stack([x[edge] for x in rel], axis=1)
        offs = _subcell_offsets(g.dim, 8, h)
        pts = centres[:, None, :] + offs[None, :, :]
        w[edge] = (np.sqrt((pts**2).sum(-1)) < sigma).mean(axis=1)
    return float((w * d.field.values).sum() * g.cell_volume)


def ball_mass(d: InitialDatum, center, sigma: float) -> float:
    """mu(B(center, sigma)); ``inf`` signals a non-integrable singularity inside."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if isinstance(d, GridDensity):
        return _grid_ball_mass(d, center, sigma)
    return d.ball_mass(center, sigma)


def sup_ball_mass(d: InitialDatum, sigma: float, dim: int | None = None) -> float:
    """sup_z mu(B(z, sigma)): centre 0 for monotone radial data, a ray search
    for the non-monotone log-singular case, and all grid translates for
    gridded data."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if isinstance(d, GridDensity):
        g = d.grid
        if sigma >= g.half_width:
            return d.field.mass()
        return float(window_sums(d.field.values, g, sigma).max())
    if dim is None:
        raise DomainError("dim is required for parametric data")
    return d.sup_mass(sigma, dim)


def total_mass(d: InitialDatum, dim: int | None = None) -> float:
    if isinstance(d, GridDensity):
        return d.field.mass()
    return d.total(dim)


def power_ball_integral(d: InitialDatum, sigma: float, r: float, dim: int | None = None) -> float:
    """sup_z int_{B(z,sigma)} mu^r; exact at the origin for the parametric families."""
    if isinstance(d, GridDensity):
        g = d.grid
        return float(window_sums(d.field.values**r, g, min(sigma, g.half_width)).max())
    return d.power_integral(sigma, r, dim)
