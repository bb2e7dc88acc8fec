"""Mild solutions by product integration of the Duhamel formula.

On the grid ``t_k = k dt`` the mild-solution identity becomes

    u_k = P(t_k) mu + sum_{m=1}^{k} S((m - 1/2) dt) [L_m g_{k-m} + R_m g_{k-m+1}]

with ``g = max(u, 0)^p`` and lag weights from the exact integrals of
``alpha (t_k - s)^(alpha-1)`` against the chosen interpolant of ``g`` on
each subinterval:

* ``product_rectangle``: left endpoint, ``L_m = dt^alpha (m^alpha - (m-1)^alpha)``;
* ``product_rectangle_implicit``: the same weight on the right endpoint;
* ``product_trapezoid``: linear interpolation between both endpoints.

The first subinterval always uses its right endpoint, since ``mu^p`` has
no meaning for measure-like data.  The discrete system is lower
triangular, so a Picard sweep over the whole trajectory converges in at
most ``M`` sweeps to the same values that time marching produces in one
pass; marching is the default and the global sweep is kept for checking.
Implicit steps are solved by a monotone fixed-point iteration started from
the explicit part, which converges to the smallest fixed point when one
exists.

For a blow-up the explicit left-endpoint scheme, which lags the true
growth, supplies the upper end ``t_high`` of the bracket (first crossing
of ``blowup_threshold``).  The implicit right-endpoint companion, which
leads it, supplies the lower end ``t_low`` (last step with a fixed point
below the threshold).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .criteria import rescale_problem
from .datum import DiracApprox, GridDensity, InitialDatum, LogSingular, ProblemParams, sample_on_grid
from .errors import DomainError, EvaluationError
from .propagator import Field, Grid, check_box, p_alpha_multipliers, s_alpha_multipliers
from .specfun import r_constants

__all__ = [
    "SolverConfig",
    "SolveOutcome",
    "KERNEL_RULES",
    "picard_solve",
    "caputo_ode_solve",
    "ode_minorant_lifespan",
    "lifespan_estimate",
    "LifespanResult",
]

KERNEL_RULES = ("product_rectangle", "product_rectangle_implicit", "product_trapezoid")


@dataclass(frozen=True)
class SolverConfig:
    time_steps: int = 256
    picard_tol: float = 1e-10
    picard_max_iters: int = 200
    blowup_threshold: float = 1e8
    kernel_rule: str = "product_rectangle"
    companion: bool = True
    mode: str = "march"
    snapshots: int = 16

    def __post_init__(self):
        if self.time_steps < 16:
            raise DomainError(f"time_steps must be >= 16, got {self.time_steps}")
        if not self.picard_tol > 0:
            raise DomainError(f"picard_tol must be positive, got {self.picard_tol}")
        if self.picard_max_iters < 1:
            raise DomainError("picard_max_iters must be >= 1")
        if not self.blowup_threshold > 0:
            raise DomainError("blowup_threshold must be positive")
        if self.kernel_rule not in KERNEL_RULES:
            raise DomainError(f"kernel_rule must be one of {KERNEL_RULES}, got {self.kernel_rule!r}")
        if self.mode not in ("march", "sweep"):
            raise DomainError(f"mode must be 'march' or 'sweep', got {self.mode!r}")


@dataclass
class SolveOutcome:
    status: str
    times: np.ndarray
    sup_norms: np.ndarray
    trajectory: list = field(default_factory=list)
    blowup_bracket: Optional[tuple[float, float]] = None
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        diag = {k: v for k, v in self.diagnostics.items() if not isinstance(v, np.ndarray)}
        return {
            "status": self.status,
            "horizon": float(self.times[-1]) if len(self.times) else 0.0,
            "blowup_bracket": list(self.blowup_bracket) if self.blowup_bracket else None,
            "max_sup": float(np.max(self.sup_norms)) if len(self.sup_norms) else 0.0,
            "diagnostics": diag,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, default=float)


# ---------------------------------------------------------------------------
# weights and tables


def lag_weights(alpha: float, dt: float, M: int, rule: str) -> tuple[np.ndarray, np.ndarray]:
    """(L_m, R_m) for m = 0..M (index 0 unused), already multiplied by alpha."""
    m = np.arange(M + 1, dtype=float)
    mm = np.maximum(m - 1.0, 0.0)
    whole = dt**alpha * (m**alpha - mm**alpha)
    whole[0] = 0.0
    if rule == "product_rectangle":
        return whole, np.zeros_like(whole)
    if rule == "product_rectangle_implicit":
        return np.zeros_like(whole), whole
    first = (m ** (alpha + 1) - mm ** (alpha + 1)) / (alpha + 1)
    zeroth = (m**alpha - mm**alpha) / alpha
    left = alpha * dt**alpha * (first - mm * zeroth)
    right = alpha * dt**alpha * (m * zeroth - first)
    left[0] = right[0] = 0.0
    return left, right


class _Tables:
    """Flattened multiplier tables shared by every solve on one time grid."""

    def __init__(self, grid: Grid, alpha: float, horizon: float, M: int, rule: str):
        dt = horizon / M
        times = dt * np.arange(1, M + 1)
        mid = dt * (np.arange(1, M + 1) - 0.5)
        nf = grid.laplace_symbol.size
        self.P = p_alpha_multipliers(grid, alpha, times).reshape(M, nf)
        S = s_alpha_multipliers(grid, alpha, mid).reshape(M, nf)
        left, right = lag_weights(alpha, dt, M, rule)
        KL = np.zeros((M + 2, nf))
        KR = np.zeros((M + 2, nf))
        KL[1 : M + 1] = S * left[1:, None]
        KR[1 : M + 1] = S * right[1:, None]
        # node weight for g_j at step k is KL[k-j] + KR[k-j+1]
        self.KC = KL[: M + 1] + KR[1 : M + 2]
        self.KL = KL
        self.KR1 = KR[1].copy()
        self.first = KL[1] + KR[1]
        self.times = np.concatenate(([0.0], times))
        self.M = M


def _g(u: np.ndarray, p: float) -> np.ndarray:
    return np.maximum(u, 0.0) ** p


class _March:
    """Time marching of one kernel rule; returns per-step results lazily."""

    def __init__(self, mu: Field, params: ProblemParams, tabs: _Tables, cfg: SolverConfig, rule: str):
        self.grid = mu.grid
        self.p = params.p
        self.tabs = tabs
        self.cfg = cfg
        self.rule = rule
        self.mu_hat = self.grid.forward(mu.values).ravel()

    def _inverse(self, coeffs):
        g = self.grid
        return g.inverse(coeffs.reshape(g.laplace_symbol.shape))

    def _forward(self, values):
        return self.grid.forward(values).ravel()

    def _fixed_point(self, base_hat, K):
        """Smallest solution of u = F^-1[base_hat + K ghat(u)] by monotone iteration."""
        cfg = self.cfg
        u = self._inverse(base_hat)
        it = 0
        res = math.inf
        for it in range(1, cfg.picard_max_iters + 1):
            nxt = self._inverse(base_hat + K * self._forward(_g(u, self.p)))
            if not np.isfinite(nxt).all():
                return None, it, math.inf
            top = float(np.abs(nxt).max())
            res = float(np.abs(nxt - u).max())
            u = nxt
            if top > cfg.blowup_threshold:
                return None, it, res
            if res <= cfg.picard_tol * max(1.0, top):
                return u, it, res
        return None, it, res

    def run(self, keep_every: int):
        tabs, cfg = self.tabs, self.cfg
        M = tabs.M
        nf = self.mu_hat.size
        G = np.zeros((M + 1, nf), dtype=complex)
        Gr = G.view(float).reshape(M + 1, nf, 2)
        sups = [float(np.abs(self._inverse(self.mu_hat)).max())]
        snaps = []
        iterations = 0
        worst_res = 0.0
        clip = 0.0
        implicit = self.rule != "product_rectangle"
        fail_k = None
        for k in range(1, M + 1):
            base = tabs.P[k - 1] * self.mu_hat
            if k == 1:
                u, it, res = self._fixed_point(base, tabs.first)
                iterations += it
                if u is None:
                    fail_k = 1
                    break
            else:
                if k > 2:
                    hist = np.einsum("mf,mfc->fc", tabs.KC[k - 2 : 0 : -1], Gr[2:k])
                    base = base + (hist[:, 0] + 1j * hist[:, 1])
                # the first subinterval carries g_1 in place of g_0
                base = base + (tabs.KL[k] + tabs.KC[k - 1]) * G[1]
                if implicit:
                    u, it, res = self._fixed_point(base, tabs.KR1)
                    iterations += it
                    if u is None:
                        fail_k = k
                        break
                else:
                    u = self._inverse(base)
                    res = 0.0
            worst_res = max(worst_res, res)
            top = float(np.abs(u).max())
            neg = float(max(-u.min(), 0.0))
            if top > 0:
                clip = max(clip, neg / top)
            if not np.isfinite(top) or top > cfg.blowup_threshold:
                sups.append(top)
                fail_k = k
                break
            sups.append(top)
            G[k] = self._forward(_g(u, self.p))
            if k % keep_every == 0 or k == M:
                snaps.append((float(tabs.times[k]), u))
        return {
            "sups": np.array(sups),
            "snaps": snaps,
            "fail_k": fail_k,
            "iterations": iterations,
            "residual": worst_res,
            "clip": clip,
        }


def _sweep(mu: Field, params: ProblemParams, tabs: _Tables, cfg: SolverConfig):
    """Global Picard iteration on the whole trajectory (explicit rule)."""
    g = mu.grid
    shape = g.laplace_symbol.shape
    M = tabs.M
    mu_hat = g.forward(mu.values).ravel()
    lin = tabs.P * mu_hat[None, :]
    U = np.stack([g.inverse(c.reshape(shape)) for c in lin])  # u^(0) = linear part
    K = M
    iterations = 0
    res = math.inf
    for iterations in range(1, max(cfg.picard_max_iters, M + 2) + 1):
        Ghat = np.stack([g.forward(_g(U[j], params.p)).ravel() for j in range(K)])
        new = np.empty_like(U[:K])
        for k in range(1, K + 1):
            acc = lin[k - 1].copy()
            # node j=0 is replaced by node 1 (right endpoint on the first interval)
            acc += (tabs.KL[k] + tabs.KC[k - 1]) * Ghat[0] if k > 1 else tabs.first * Ghat[0]
            if k > 2:
                acc += np.einsum("mf,mf->f", tabs.KC[k - 2 : 0 : -1], Ghat[1 : k - 1])
            new[k - 1] = g.inverse(acc.reshape(shape))
        sups = np.abs(new.reshape(K, -1)).max(axis=1)
        over = np.nonzero(~np.isfinite(sups) | (sups > cfg.blowup_threshold))[0]
        if over.size:
            K = int(over[0]) + 1
            new = new[:K]
        res = float(np.abs(new - U[:K]).max()) if np.isfinite(new).all() else math.inf
        U = new
        if over.size and K == 1:
            break
        top = float(np.abs(U).max())
        if res <= cfg.picard_tol * max(1.0, top):
            break
    return U, K, iterations, res


def picard_solve(
    d: InitialDatum | Field,
    params: ProblemParams,
    T: float,
    grid: Grid,
    cfg: SolverConfig = SolverConfig(),
) -> SolveOutcome:
    """Mild solution on ``[0, T]`` for the datum sampled on ``grid``."""
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    mu = d if isinstance(d, Field) else sample_on_grid(d, grid)
    if mu.grid != grid:
        raise DomainError("field and grid differ")
    if (mu.values < 0).any():
        raise DomainError("initial data must be nonnegative")
    if isinstance(d, (DiracApprox, LogSingular, GridDensity)):
        check_box(grid, mu, T)
    init_sup = mu.sup()
    if not cfg.blowup_threshold > 10 * init_sup:
        raise DomainError(
            f"blowup_threshold {cfg.blowup_threshold:g} must exceed 10x the initial sup {init_sup:g}"
        )
    M = int(math.ceil(cfg.time_steps * T)) if T > 1 else cfg.time_steps
    times = T / M * np.arange(M + 1)
    keep = max(1, M // max(cfg.snapshots, 1))

    if cfg.mode == "sweep":
        tabs = _Tables(grid, params.alpha, T, M, "product_rectangle")
        U, K, iters, res = _sweep(mu, params, tabs, cfg)
        sups = np.concatenate(([init_sup], np.abs(U.reshape(K, -1)).max(axis=1)))
        traj = [(0.0, mu)] + [(float(times[k]), Field(grid, U[k - 1])) for k in range(keep, K + 1, keep)]
        diag = {"iterations": iters, "residual": res, "mode": "sweep", "steps": M}
        if K < M or sups[-1] > cfg.blowup_threshold:
            return SolveOutcome("blowup", times[: K + 1], sups, traj, (float(times[K - 1]), float(times[K])), diag)
        status = "converged" if res <= cfg.picard_tol * max(1.0, sups.max()) else "inconclusive"
        return SolveOutcome(status, times, sups, traj, None, diag)

    tabs = _Tables(grid, params.alpha, T, M, cfg.kernel_rule)
    main = _March(mu, params, tabs, cfg, cfg.kernel_rule).run(keep)
    traj = [(0.0, mu)] + [(t, Field(grid, v)) for t, v in main["snaps"]]
    diag = {
        "iterations": main["iterations"],
        "residual": main["residual"],
        "clip_ratio": main["clip"],
        "steps": M,
        "kernel_rule": cfg.kernel_rule,
        "mode": "march",
    }
    if main["clip"] > 1e-6:
        diag["warning"] = "negative undershoot above 1e-6 of the sup norm"
    fail_k = main["fail_k"]
    sups = main["sups"]

    companion = None
    if cfg.companion and cfg.kernel_rule == "product_rectangle":
        ctabs = _Tables(grid, params.alpha, T, M, "product_rectangle_implicit")
        companion = _March(mu, params, ctabs, cfg, "product_rectangle_implicit").run(M + 1)
        ck = companion["fail_k"]
        diag["companion_last_time"] = float(times[ck - 1]) if ck is not None else float(T)
        diag["companion_survived"] = ck is None

    if fail_k is None:
        return SolveOutcome("converged", times, sups, traj, None, diag)

    t_high = float(times[fail_k])
    t_low = float(times[fail_k - 1])
    if companion is not None and companion["fail_k"] is not None:
        t_low = min(t_low, float(times[companion["fail_k"] - 1]))
    if cfg.kernel_rule != "product_rectangle" and sups[-1] <= cfg.blowup_threshold:
        # an implicit step found no fixed point below the threshold
        diag["failure"] = "no fixed point at the last step"
        if cfg.kernel_rule == "product_trapezoid":
            return SolveOutcome("inconclusive", times[: fail_k], sups, traj, None, diag)
    return SolveOutcome("blowup", times[: len(sups)], sups, traj, (t_low, t_high), diag)


# ---------------------------------------------------------------------------
# Caputo ODE oracle


def _l1_march(c, p, alpha, T, steps, implicit, threshold, max_newton=100):
    dt = T / steps
    coef = dt ** (-alpha) / math.gamma(2.0 - alpha)
    j = np.arange(steps + 1, dtype=float)
    b = (j + 1.0) ** (1.0 - alpha) - j ** (1.0 - alpha)
    u = np.empty(steps + 1)
    u[0] = c
    inc = np.zeros(steps + 1)  # inc[i] = u[i] - u[i-1]
    for k in range(1, steps + 1):
        # history sum_{j=1}^{k-1} b_j (u_{k-j} - u_{k-j-1})
        hist = float(np.dot(b[1:k], inc[k - 1 : 0 : -1])) if k > 1 else 0.0
        prev = u[k - 1]
        if not implicit:
            val = prev - hist + prev**p / coef
        else:
            # smallest root of phi(v) = coef (v - prev + hist) - v^p
            vmax = (coef / p) ** (1.0 / (p - 1.0))
            phi = lambda v: coef * (v - prev + hist) - v**p
            if phi(vmax) < 0:
                return u[:k], k, "nonexistent"
            v = prev if phi(prev) <= 0 else 0.0
            for _ in range(max_newton):
                step = phi(v) / (coef - p * v ** (p - 1.0))
                v -= step
                if abs(step) <= 1e-14 * max(1.0, abs(v)):
                    break
            else:
                return u[:k], k, "newton"
            val = v
        if not np.isfinite(val) or val > threshold:
            u[k] = val
            return u[: k + 1], k, "threshold"
        u[k] = val
        inc[k] = val - prev
    return u, None, None


def caputo_ode_solve(
    c: float,
    p: float,
    alpha: float,
    T: float,
    steps: int = 1024,
    blowup_threshold: float = 1e8,
) -> SolveOutcome:
    """L1 scheme for the Caputo ODE ``D^alpha u = u^p``, ``u(0) = c``.

    The implicit L1 scheme, solved by scalar Newton from the left of the
    smallest root, is the trajectory; blow-up brackets pair its last
    existence time with the threshold crossing of the explicit L1 scheme.
    """
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    if not p > 1:
        raise DomainError(f"p must exceed 1, got {p}")
    if not (0 < alpha <= 1):
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if steps < 64:
        raise DomainError(f"steps must be >= 64, got {steps}")
    times = T / steps * np.arange(steps + 1)
    u, fail, why = _l1_march(c, p, alpha, T, steps, True, blowup_threshold)
    diag = {"steps": steps}
    traj = list(zip(times[: len(u)].tolist(), u.tolist()))
    if fail is None:
        return SolveOutcome("converged", times, u, traj, None, diag)
    if why == "newton":
        diag["failure"] = "Newton iteration did not converge"
        return SolveOutcome("inconclusive", times[: len(u)], u, traj, None, diag)
    t_low = float(times[fail - 1])
    ue, efail, _ = _l1_march(c, p, alpha, T, steps, False, blowup_threshold)
    if efail is None:
        diag["failure"] = "explicit companion did not cross the threshold before T"
        return SolveOutcome("inconclusive", times[: len(u)], u, traj, None, diag)
    t_high = float(times[efail])
    diag["explicit_crossing"] = t_high
    return SolveOutcome("blowup", times[: len(u)], u, traj, (min(t_low, t_high), max(t_high, t_low + T / steps)), diag)


# ---------------------------------------------------------------------------
# ODE minorant


def ode_minorant_lifespan(
    M: float,
    rho: float,
    T: float,
    params: ProblemParams,
    C1: float = 1.0,
    C2: float = 1.0,
) -> float:
    """Blow-up time of zeta' = C2 r2 T^(alpha-1) t^(-beta) zeta^p, zeta(rho^(2/alpha)) = C1 r1 M.

    ``beta = N alpha (p-1)/2``.  Returns ``inf`` when the solution is global.
    """
    if not (M > 0 and rho > 0 and T > 0 and C1 > 0 and C2 > 0):
        raise DomainError("ode_minorant_lifespan needs positive M, rho, T, C1, C2")
    N, p, alpha = params.dim, params.p, params.alpha
    r1, r2 = r_constants(alpha)
    beta = N * alpha * (p - 1) / 2
    t0 = rho ** (2 / alpha)
    # required value of int_{t0}^{tau} t^-beta dt
    log_need = (1 - p) * math.log(C1 * r1 * M) - math.log((p - 1) * C2 * r2) - (alpha - 1) * math.log(T)
    need = math.exp(log_need)
    if abs(beta - 1) < 1e-14:
        return t0 * math.exp(need)
    a = 1 - beta
    if a > 0:
        return (t0**a + a * need) ** (1 / a)
    rest = t0**a + a * need  # a < 0
    if rest <= 0:
        return math.inf
    return rest ** (1 / a)


# ---------------------------------------------------------------------------
# lifespan by bisection


@dataclass
class LifespanResult:
    """Lifespan bracket, held as natural logs so tiny lifespans stay representable.

    ``log_low = -inf`` means no lower bound was found; ``log_high = inf``
    means no blow-up up to the largest horizon probed.
    """

    log_low: float
    log_high: float
    probes: list = field(default_factory=list)
    iterations: int = 0

    @property
    def t_low(self) -> float:
        return math.exp(self.log_low)

    @property
    def t_high(self) -> float:
        return math.exp(self.log_high) if self.log_high < 709.0 else math.inf

    @property
    def status(self) -> str:
        if math.isinf(self.log_high):
            return "global"
        return "bracketed" if math.isfinite(self.log_low) else "upper_only"

    @property
    def log_mid(self) -> float:
        if math.isinf(self.log_high):
            return math.inf
        if not math.isfinite(self.log_low):
            return self.log_high
        return 0.5 * (self.log_low + self.log_high)

    @property
    def t_mid(self) -> float:
        return math.exp(self.log_mid) if self.log_mid < 709.0 else math.inf

    def __iter__(self):
        yield self.t_low
        yield self.t_high


def _probe(d, params, log_T, grid, cfg, rescale):
    if rescale:
        dd, horizon = rescale_problem(d, params, log_T=log_T)
        log_scale = log_T
    else:
        dd, horizon, log_scale = d, math.exp(log_T), 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mu = sample_on_grid(dd, grid)
        if 10 * mu.sup() >= cfg.blowup_threshold:
            # already at the threshold: blow-up at the start, unresolved
            out = SolveOutcome("blowup", np.zeros(1), np.array([mu.sup()]), [], (0.0, horizon), {"saturated": True})
        else:
            out = picard_solve(mu, params, horizon, grid, cfg)
    return out, horizon, log_scale


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def lifespan_estimate(
    d: InitialDatum,
    params: ProblemParams,
    grid: Grid,
    cfg: SolverConfig = SolverConfig(),
    bisection_budget: int = 12,
    T_guess: float = 1.0,
    T_max: float = math.inf,
    rel_width: float = 1e-3,
    rescale: bool = True,
    resolved_fraction: float = 0.25,
) -> LifespanResult:
    """Bracket the lifespan by bisection on the horizon (geometric midpoints).

    Each probe solves to horizon ``T``; with ``rescale`` the problem is
    first mapped to the unit horizon so every probe shares one time grid
    and horizons far outside the float range can be probed.
    A converged probe raises ``t_low`` to ``T``.  A blow-up probe whose
    crossing is resolved (the implicit companion survives at least
    ``resolved_fraction`` of the horizon) lowers ``t_high`` to the crossing
    and raises ``t_low`` to the companion's last existence time.  An early
    blow-up only caps ``t_high`` at ``T``: on singular data the grid
    picture changes with the horizon, so brackets from unresolved crossings
    need not agree between probes.  Inconclusive probes move neither end.

    Before any bound is known on one side the search steps outward
    geometrically in ``log T``, so lifespans like ``exp(-1000)`` are
    reached in about ten probes.  ``t_high = inf`` means no blow-up up
    to ``T_max``.
    """
    if bisection_budget < 8:
        raise DomainError(f"bisection_budget must be >= 8, got {bisection_budget}")
    if not T_guess > 0:
        raise DomainError("T_guess must be positive")
    if not rescale and not math.isfinite(T_max):
        T_max = 1e300
    log_max = _log(T_max) if math.isfinite(T_max) else math.inf
    lo, hi = -math.inf, math.inf
    probes = []
    x = min(math.log(T_guess), log_max)
    guess = None
    down = up = 1.0
    useful = 0
    for it in range(1, bisection_budget + 1):
        try:
            out, horizon, log_scale = _probe(d, params, x, grid, cfg, rescale)
        except EvaluationError as exc:
            probes.append({"log_T": x, "status": "error", "message": str(exc)})
            out = None
        if out is not None:
            probes.append({"log_T": x, "status": out.status, "bracket": out.blowup_bracket})
            if out.status == "converged":
                useful += 1
                if x < hi:
                    lo = max(lo, x)
            elif out.status == "blowup":
                useful += 1
                a, b = out.blowup_bracket
                la, lb = _log(a) + log_scale, _log(b) + log_scale
                if a >= resolved_fraction * horizon and lo < lb:
                    hi = min(hi, lb)
                    if la < hi:
                        lo = max(lo, la)
                else:
                    hi = min(hi, x)
                    guess = lb
        if math.isinf(hi):
            if lo >= log_max:
                return LifespanResult(lo, math.inf, probes, it)
            x = min(max(x, lo) + max(math.log(8.0), up), log_max)
            up *= 2.0
        elif not math.isfinite(lo):
            step = max(math.log(8.0), down)
            x = min(guess, hi - step) if guess is not None and guess < hi else hi - step
            down *= 2.0
            guess = None
        elif math.expm1(hi - lo) <= rel_width:
            return LifespanResult(lo, hi, probes, it)
        else:
            nxt = 0.5 * (lo + hi)
            # a repeated inconclusive probe would repeat forever; lean upward
            x = nxt if out is not None and out.status != "inconclusive" else 0.5 * (nxt + hi)
    if useful == 0:
        raise EvaluationError("every lifespan probe was inconclusive", partial=probes, terms=len(probes))
    return LifespanResult(lo, hi, probes, bisection_budget)
