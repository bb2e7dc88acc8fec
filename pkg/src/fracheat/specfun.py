"""Special functions: Gamma/Beta, Mittag-Leffler, the Mainardi-Wright density.

The Mittag-Leffler function is evaluated on the real line by three routes:

* the power series, where it is free of cancellation;
* the algebraic asymptotic expansion for large negative arguments, when the
  exponentially small remainder is below double precision;
* otherwise an inverse-Laplace contour integral (trapezoidal rule on a
  Weideman-Trefethen parabola) of ``s**(alpha-beta) / (s**alpha - z)``.

The subordination density is the Mainardi-Wright function

    M_alpha(theta) = sum_n (-theta)**n / (n! Gamma(1 - alpha (n + 1))),

summed directly for small ``theta`` and through a positive Zolotarev-type
integral over ``(0, pi)`` for large ``theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import DomainError, EvaluationError

__all__ = [
    "SeriesControl",
    "DEFAULT_CONTROL",
    "gamma_beta",
    "log_gamma",
    "mittag_leffler",
    "mainardi_density",
    "halpha_moment",
    "halpha_support",
    "halpha_quadrature",
    "r_constants",
]


@dataclass(frozen=True)
class SeriesControl:
    abs_tol: float = 1e-14
    max_terms: int = 2000
    switch_radius: float = 10.0

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_terms < 16:
            raise DomainError(f"max_terms must be >= 16, got {self.max_terms}")
        if not self.switch_radius > 0:
            raise DomainError(f"switch_radius must be positive, got {self.switch_radius}")


DEFAULT_CONTROL = SeriesControl()

# log of the largest tolerated series term before cancellation is assumed
_SERIES_CANCEL_LOG = 6.0
# half the number of trapezoid nodes on the Laplace inversion contour
_CONTOUR_NODES = 40
_ASYMPTOTIC_TERMS = 12


def _check_order(alpha: float, *, allow_one: bool = True) -> None:
    upper_ok = alpha <= 1 if allow_one else alpha < 1
    if not (alpha > 0 and upper_ok):
        rng = "(0, 1]" if allow_one else "(0, 1)"
        raise DomainError(f"alpha must lie in {rng}, got {alpha}")


def gamma_beta(x: float, y: float | None = None) -> float:
    """Gamma(x), or the Beta value B(x, y) when ``y`` is given.

    Beta is formed through log-Gamma so large arguments do not overflow.
    Only positive arguments are admitted.
    """
    if not x > 0:
        raise DomainError(f"gamma_beta needs x > 0, got {x}")
    if y is None:
        return float(special.gamma(x))
    if not y > 0:
        raise DomainError(f"gamma_beta needs y > 0, got {y}")
    return math.exp(special.gammaln(x) + special.gammaln(y) - special.gammaln(x + y))


def log_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    return float(special.gammaln(x))


# ---------------------------------------------------------------------------
# Mittag-Leffler


def _ml_series(alpha, beta, z, ctrl):
    z = np.asarray(z, dtype=float)
    total = np.zeros_like(z)
    done = np.zeros(z.shape, dtype=bool)
    logabs = np.log(np.abs(z), where=z != 0, out=np.full_like(z, -np.inf))
    sign = np.sign(z)
    chunk = 64
    k0 = 0
    while k0 < ctrl.max_terms:
        k = np.arange(k0, min(k0 + chunk, ctrl.max_terms), dtype=float)
        lg = special.gammaln(alpha * k + beta)
        with np.errstate(invalid="ignore"):
            logterm = k[:, None] * logabs.ravel()[None, :] - lg[:, None]
        logterm[:, (z.ravel() == 0)] = -np.inf
        if k0 == 0:
            logterm[0, :] = -lg[0]
        sgn = sign.ravel()[None, :] ** k[:, None]
        with np.errstate(over="ignore", invalid="ignore"):
            terms = sgn * np.exp(logterm)
        total += np.where(done, 0.0, terms.sum(axis=0)).reshape(z.shape)
        last = np.abs(terms[-1]).reshape(z.shape)
        # terms decrease once alpha*k exceeds |z|**(1/alpha)
        past_peak = alpha * k[-1] + beta > np.abs(z) ** (1.0 / alpha) + 1.0
        done |= past_peak & (last <= ctrl.abs_tol * np.maximum(1.0, np.abs(total)))
        k0 += chunk
        if done.all():
            return total
    raise EvaluationError(
        f"Mittag-Leffler series did not converge in {ctrl.max_terms} terms",
        partial=total,
        terms=ctrl.max_terms,
    )


def _ml_asymptotic(alpha, beta, z):
    """Algebraic expansion for z -> -inf and its error estimate."""
    z = np.asarray(z, dtype=float)
    k = np.arange(1, _ASYMPTOTIC_TERMS + 1, dtype=float)
    coef = special.rgamma(beta - alpha * k)
    powers = z[..., None] ** (-k)
    terms = -coef * powers
    value = terms.sum(axis=-1)
    trunc = np.abs(terms[..., -1]) + np.abs(terms[..., -2])
    if alpha == 1.0:
        expo = np.full_like(z, np.inf)
    elif alpha > 2.0 / 3.0:
        # remnant of the exponential mode that takes over as alpha -> 1
        lam = np.abs(z) ** (1.0 / alpha)
        with np.errstate(under="ignore"):
            expo = np.abs(z) ** ((1.0 - beta) / alpha) / alpha * np.exp(lam * math.cos(math.pi / alpha))
    else:
        expo = np.zeros_like(z)
    return value, trunc + expo


@lru_cache(maxsize=None)
def _contour_nodes(n: int):
    h = 3.0 / n
    u = h * np.arange(-n, n + 1)
    s = n * (0.1309 - 0.1194 * u**2 + 0.25j * u)
    ds = n * (-2 * 0.1194 * u + 0.25j)
    w = h / (2j * math.pi) * np.exp(s) * ds
    return s, w


def _ml_contour(alpha, beta, z):
    s, w = _contour_nodes(_CONTOUR_NODES)
    num = w * s ** (alpha - beta)
    sa = s**alpha
    z = np.asarray(z, dtype=float)
    flat = z.ravel()
    out = np.empty(flat.shape)
    step = max(1, 2**20 // s.size)
    for i in range(0, flat.size, step):
        zz = flat[i : i + step, None]
        out[i : i + step] = (num / (sa - zz)).sum(axis=1).real
    return out.reshape(z.shape)


def mittag_leffler(alpha: float, beta: float, z, ctrl: SeriesControl = DEFAULT_CONTROL):
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(z) for real ``z``.

    Accepts a scalar or an array ``z``; returns the same shape.
    """
    _check_order(alpha)
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    zarr = np.asarray(z, dtype=float)
    scalar = zarr.ndim == 0
    zarr = np.atleast_1d(zarr)
    out = np.empty(zarr.shape)

    if alpha == 1.0 and beta == 1.0:
        out = np.exp(zarr)
        return float(out[0]) if scalar else out

    absz = np.abs(zarr)
    with np.errstate(over="ignore"):
        cancel = np.where(zarr < 0, absz ** (1.0 / alpha), 0.0)
    use_series = (zarr >= 0) | ((absz <= ctrl.switch_radius) & (cancel <= _SERIES_CANCEL_LOG))
    if use_series.any():
        out[use_series] = _ml_series(alpha, beta, zarr[use_series], ctrl)
    rest = ~use_series
    if rest.any():
        zr = zarr[rest]
        val, err = _ml_asymptotic(alpha, beta, zr)
        ok = err <= 1e-15 * np.abs(val)
        res = np.empty(zr.shape)
        res[ok] = val[ok]
        if (~ok).any():
            res[~ok] = _ml_contour(alpha, beta, zr[~ok])
        out[rest] = res
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Mainardi-Wright density


def _mainardi_series(alpha, theta, ctrl):
    theta = np.asarray(theta, dtype=float)
    n = np.arange(ctrl.max_terms, dtype=float)
    arg = 1.0 - alpha * (n + 1.0)
    pole = (arg <= 0) & (arg == np.round(arg))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_inv_gamma = np.where(pole, -np.inf, -special.gammaln(arg))
    sgn = np.where(pole, 0.0, special.gammasgn(arg)) * (-1.0) ** n
    base = log_inv_gamma - special.gammaln(n + 1.0)
    out = np.empty(theta.shape)
    for idx, th in np.ndenumerate(theta):
        if th == 0.0:
            out[idx] = sgn[0] * math.exp(base[0])
            continue
        terms = sgn * np.exp(n * math.log(th) + base)
        tail = np.abs(terms[-8:]).max()
        if tail > ctrl.abs_tol:
            raise EvaluationError(
                "Mainardi series did not converge", partial=float(terms.sum()), terms=ctrl.max_terms
            )
        out[idx] = terms.sum()
    return out


def _zolotarev_kernel(alpha, phi):
    a = 1.0 - alpha
    return (np.sin(alpha * phi) / np.sin(phi)) ** (1.0 / a) * np.sin(a * phi) / np.sin(alpha * phi)


def _mainardi_integral(alpha, theta):
    """Positive integral representation, accurate for large theta."""
    a = 1.0 - alpha
    k0 = alpha ** (alpha / a) * a  # kernel value at phi = 0
    out = np.empty(np.shape(theta))
    for idx, th in np.ndenumerate(np.asarray(theta, dtype=float)):
        x = th ** (1.0 / a)
        lead = -x * k0 + (alpha / a) * math.log(th)
        if lead < -745.0:
            out[idx] = 0.0
            continue

        def f(phi):
            k = _zolotarev_kernel(alpha, phi)
            return k * np.exp(-x * (k - k0))

        # the integrand concentrates near phi = 0 with width ~ x**-1/2
        brk = min(math.pi / 2, 20.0 / math.sqrt(max(x, 1.0)))
        v1, _ = integrate.quad(f, 0.0, brk, epsabs=0.0, epsrel=1e-13, limit=200)
        v2, _ = integrate.quad(f, brk, math.pi, epsabs=0.0, epsrel=1e-13, limit=200)
        out[idx] = math.exp(lead) * (v1 + v2) / (math.pi * a)
    return out


def mainardi_density(alpha: float, theta, ctrl: SeriesControl = DEFAULT_CONTROL):
    """Subordination density h_alpha(theta), the Mainardi-Wright function."""
    _check_order(alpha, allow_one=False)
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0):
        raise DomainError("mainardi_density needs theta >= 0")
    scalar = th.ndim == 0
    th = np.atleast_1d(th)
    out = np.empty(th.shape)
    small = th <= 1.0
    if small.any():
        out[small] = _mainardi_series(alpha, th[small], ctrl)
    if (~small).any():
        out[~small] = _mainardi_integral(alpha, th[~small])
    out = np.maximum(out, 0.0)
    return float(out[0]) if scalar else out


def halpha_moment(alpha: float, delta: float) -> float:
    """int_0^inf theta**delta h_alpha(theta) dtheta = Gamma(1+delta)/Gamma(1+alpha*delta)."""
    _check_order(alpha)
    if not delta > -1:
        raise DomainError(f"moment of order {delta} diverges (need delta > -1)")
    return math.exp(log_gamma(1.0 + delta) - log_gamma(1.0 + alpha * delta))


@lru_cache(maxsize=64)
def halpha_support(alpha: float, rtol: float = 1e-16) -> float:
    """Upper truncation point beyond which theta**4 h_alpha(theta) < rtol."""
    _check_order(alpha, allow_one=False)
    th = 2.0
    while th**4 * mainardi_density(alpha, th) > rtol:
        th *= 1.25
    return th


@lru_cache(maxsize=64)
def halpha_quadrature(alpha: float, nodes: int = 32, panels: int = 24):
    """Composite Gauss-Legendre rule on [0, halpha_support(alpha)].

    Geometric panels toward theta = 0 resolve integrands such as
    h(theta) exp(-a theta) with large ``a``; uniform panels, more of them as
    alpha -> 1, resolve the steep right flank of the density.  Returns
    ``(theta, weight)``; weights exclude the density itself.
    """
    top = halpha_support(alpha)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    uniform = max(panels, int(math.ceil(4.0 / (1.0 - alpha))))
    edges = np.union1d(
        np.concatenate(([0.0], top * np.geomspace(1e-8, 1.0, panels))),
        np.linspace(0.0, top, uniform + 1),
    )
    th, w = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        th.append(0.5 * (b - a) * xg + 0.5 * (b + a))
        w.append(0.5 * (b - a) * wg)
    return np.concatenate(th), np.concatenate(w)


def r_constants(alpha: float) -> tuple[float, float]:
    """(E_{alpha,1}(-1/2), alpha E_{alpha,alpha}(-1/2))."""
    _check_order(alpha)
    r1 = mittag_leffler(alpha, 1.0, -0.5)
    r2 = alpha * mittag_leffler(alpha, alpha, -0.5)
    return r1, r2
