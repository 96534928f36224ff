"""Singularity measure S(tc) and the non-Markovianity sum N_M.

For a qubit family the original trajectory and the one restarted at tc
differ, as coherence vectors, by an affine function of the initial vector:

    n(T) - n_rc(T) = M(T) @ n0 + b(T)

so the trace distance is |M n0 + b| / 2. The measure maximises it over the
Bloch ball (inner problem, solved exactly) and over T in [tc, t_max] (outer
problem, grid plus golden-section refinement).
"""
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from dmsing.bloch import _polish_sphere_max, fibonacci_sphere
from dmsing.divisibility import RANK_TOL, find_singular_points
from dmsing.errors import ConfigError, DomainError, NumericalFailure
from dmsing.search import golden_section_max

FALLBACK_POINTS = 4096


class BallMax(NamedTuple):
    value: float
    argmax: np.ndarray
    solver: str  # "secular" | "sampled-fallback"


def _secular_root(coef, w, lo, hi, tol):
    # |n(mu)|**2 = sum coef_i**2 / (mu - w_i)**2 decreases on (max w, inf)
    def phi(mu):
        return float(np.sum((coef / (mu - w)) ** 2)) - 1.0

    if phi(hi) > 0:
        raise NumericalFailure("secular equation bracket does not enclose a root")
    if phi(lo) < 0:
        return lo
    return brentq(phi, lo, hi, xtol=tol * max(1.0, abs(hi)), rtol=4 * np.finfo(float).eps,
                  maxiter=500)


def _ball_max_secular(M, b, tol):
    A = M.T @ M
    g = M.T @ b
    w, Q = np.linalg.eigh(A)
    lam_max = w[-1]
    coef = Q.T @ g
    g_norm = float(np.linalg.norm(g))
    eig_tol = 1e-12 * max(1.0, lam_max)
    top = w >= lam_max - eig_tol
    g_top = float(np.linalg.norm(coef[top]))
    if g_top > 1e-12 * max(1.0, g_norm, lam_max):
        mu = _secular_root(coef, w, lam_max + g_top, lam_max + g_norm, tol)
        n = Q @ (coef / (mu - w))
    else:
        # hard case: g is (numerically) orthogonal to the top eigenspace
        rest = ~top
        n_rest = np.zeros_like(coef)
        n_rest[rest] = coef[rest] / (lam_max - w[rest])
        rest_norm = float(np.linalg.norm(n_rest))
        if rest_norm <= 1.0:
            n_rest[np.flatnonzero(top)[-1]] = math.sqrt(max(0.0, 1.0 - rest_norm ** 2))
            n = Q @ n_rest
        else:
            mu = _secular_root(coef[rest], w[rest], lam_max, lam_max + g_norm, tol)
            n_rest[rest] = coef[rest] / (mu - w[rest])
            n = Q @ n_rest
    n = n / np.linalg.norm(n)
    return n


def _ball_max_sampled(M, b, seed=0):
    dim = M.shape[1]
    if dim == 3:
        pts = fibonacci_sphere(FALLBACK_POINTS)
    else:
        pts = np.random.default_rng(seed).normal(size=(FALLBACK_POINTS, dim))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    vals = np.sum((pts @ M.T + b) ** 2, axis=1)

    def sq(x):
        y = M @ x + b
        return float(y @ y)

    def grad(x):
        return 2 * M.T @ (M @ x + b)

    best_x, best_v = None, -np.inf
    for x0 in pts[np.argsort(vals)[-4:]]:
        x, v = _polish_sphere_max(sq, grad, x0, steps=2000)
        if v > best_v:
            best_x, best_v = x, v
    return best_x


def max_norm_affine_over_ball(M, b, tol=1e-10):
    """Maximise |M @ n + b| over the unit ball |n| <= 1.

    The objective is convex, so the maximum sits on the sphere. Stationary
    points satisfy (mu I - M^T M) n = M^T b with mu >= lambda_max(M^T M);
    mu is the root of the secular equation |n(mu)| = 1. When M^T b has no
    component along the top eigenspace the remaining norm budget goes along a
    top eigenvector. If the root solve fails, a Fibonacci-sphere sample with
    projected-gradient polish is used instead.

    Returns ``BallMax(value, argmax, solver)``; for M = 0 the argmax is
    reported as the zero vector.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    if M.shape[0] != b.size:
        raise ValueError(f"shape mismatch: M{M.shape}, b{b.shape}")
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(b))):
        raise NumericalFailure("non-finite entries in the deviation map")
    if not np.any(M):
        return BallMax(float(np.linalg.norm(b)), np.zeros(M.shape[1]), "secular")
    solver = "secular"
    try:
        n = _ball_max_secular(M, b, tol)
        if not np.all(np.isfinite(n)):
            raise NumericalFailure("secular solve produced non-finite values")
    except (NumericalFailure, ValueError, RuntimeError):
        solver = "sampled-fallback"
        try:
            n = _ball_max_sampled(M, b)
        except Exception as exc:  # pragma: no cover - both paths failing is exceptional
            raise NumericalFailure(f"ball maximisation failed: {exc}") from exc
    return BallMax(float(np.linalg.norm(M @ n + b)), n, solver)


# -- trajectories ------------------------------------------------------------


def _check_times(family, t_c, T):
    if not (0 < t_c <= T):
        raise DomainError(f"need 0 < t_c <= T, got t_c={t_c!r}, T={T!r}")


def restart_trajectory(family, t_c, T):
    """Affine map n0 -> n_rc(T): evolve to t_c, then restart the family."""
    _check_times(family, t_c, T)
    return family(T - t_c).compose(family(t_c))


def deviation_affine(family, t_c, T):
    """(M, b) with n(T) - n_rc(T) = M @ n0 + b."""
    _check_times(family, t_c, T)
    full, first, rest = family(T), family(t_c), family(T - t_c)
    M = full.D - rest.D @ first.D
    b = full.f - rest.D @ first.f - rest.f
    return M, b


# -- singularity measure -----------------------------------------------------


@dataclass
class MeasureConfig:
    t_max: Optional[float] = None
    outer_grid: int = 400
    refine_tol: float = 1e-8
    ball_solver_tol: float = 1e-10


@dataclass
class MeasureResult:
    t_c: float
    S: float
    argmax_T: float
    argmax_n0: np.ndarray
    outer_evaluations: int
    inner_solver: str
    t_max: float = math.nan
    restart_semantics: str = field(default="environment-reset")

    def to_dict(self):
        return {
            "t_c": self.t_c,
            "S": self.S,
            "argmax_T": self.argmax_T,
            "argmax_n0": [float(x) for x in self.argmax_n0],
            "outer_evaluations": self.outer_evaluations,
            "inner_solver": self.inner_solver,
            "t_max": self.t_max,
            "restart_semantics": self.restart_semantics,
        }


def default_t_max(family, t_c):
    if family.period is not None:
        return min(t_c + family.period, family.t_max)
    if math.isfinite(family.t_max):
        return family.t_max
    raise ConfigError(f"family {family.name!r} has no natural period; t_max must be given")


def singularity_measure(family, t_c, cfg=None):
    """Maximum trace distance between the original and restarted trajectories.

    Qubit families only: the maximisation runs over the full Bloch ball.
    """
    cfg = cfg or MeasureConfig()
    if family.d != 2:
        raise ConfigError("the singularity measure is implemented for qubits (d = 2) only")
    if cfg.outer_grid < 2:
        raise ConfigError("outer_grid must be at least 2")
    t_max = cfg.t_max if cfg.t_max is not None else default_t_max(family, t_c)
    if not t_max > t_c:
        raise ConfigError(f"t_max={t_max!r} must exceed t_c={t_c!r}")
    if t_max > family.t_max or t_c <= family.t_min:
        raise DomainError(f"[{t_c}, {t_max}] is outside the domain of {family.name}")

    evaluations = 0

    def inner(T):
        nonlocal evaluations
        evaluations += 1
        M, b = deviation_affine(family, t_c, T)
        return max_norm_affine_over_ball(M, b, cfg.ball_solver_tol)

    Ts = np.linspace(t_c, t_max, cfg.outer_grid)
    vals = np.array([0.5 * inner(T).value for T in Ts])
    top = vals.max()
    i = int(np.flatnonzero(vals >= top - 1e-12 * max(1.0, top))[0])
    lo, hi = Ts[max(i - 1, 0)], Ts[min(i + 1, len(Ts) - 1)]
    T_best, val_best, _ = golden_section_max(lambda T: 0.5 * inner(T).value, lo, hi, cfg.refine_tol)
    if vals[i] >= val_best:
        T_best = float(Ts[i])
    final = inner(T_best)
    return MeasureResult(
        t_c=float(t_c),
        S=0.5 * final.value,
        argmax_T=float(T_best),
        argmax_n0=final.argmax,
        outer_evaluations=evaluations,
        inner_solver=final.solver,
        t_max=float(t_max),
    )


def non_markovianity(family, horizon, grid_points=2000, rank_tol=RANK_TOL,
                     outer_grid=400, refine_tol=1e-8):
    """N_M = sum of S(tc) over the confirmed singular points in (0, horizon]."""
    if horizon > family.t_max:
        raise DomainError(f"horizon {horizon} exceeds the domain of {family.name}")
    points = find_singular_points(family, horizon, grid_points, rank_tol)
    cfg = MeasureConfig(t_max=horizon, outer_grid=outer_grid, refine_tol=refine_tol)
    breakdown = [singularity_measure(family, p.t_c, cfg)
                 for p in points if p.confirmed and p.t_c < horizon]
    return float(sum(r.S for r in breakdown)), breakdown
