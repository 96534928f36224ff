"""Existence of intermediate maps and detection of singular times.

A family t -> (D(t), f(t)) admits a decomposition
Lambda(t, 0) = Lambda(t, tc) Lambda(tc, 0) iff there is S with
D(t) = S @ D(tc), which holds iff the right null space of D(tc) is contained
in that of D(t). In rank terms: stacking the rows of D(t) under those of
D(tc) must not raise the rank.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from dmsing.bloch import AffineMap
from dmsing.errors import ConfigError, DimensionError, DomainError, NumericalFailure
from dmsing.search import golden_section_min

RANK_TOL = 1e-8
TIME_TOL = 1e-10
N_PROBES = 8


def numeric_rank(M, rel_tol=RANK_TOL, scale=None):
    """Number of singular values above ``rel_tol * scale``.

    ``scale`` defaults to the largest singular value of ``M``; pass an
    external scale when ``M`` itself may be uniformly tiny.
    """
    sv = np.linalg.svd(np.atleast_2d(np.asarray(M, dtype=float)), compute_uv=False)
    if sv.size == 0:
        return 0
    ref = sv[0] if scale is None else float(scale)
    if ref == 0:
        return 0
    return int(np.sum(sv > rel_tol * ref))


def null_space(M, rel_tol=RANK_TOL, scale=None):
    """Orthonormal basis (as columns) of the right null space of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    _, _, vh = np.linalg.svd(M)
    rank = numeric_rank(M, rel_tol, scale)
    return vh[rank:].T.copy()


def _check_pair(Dc, Dt):
    Dc = np.asarray(Dc, dtype=float)
    Dt = np.asarray(Dt, dtype=float)
    if Dc.shape != Dt.shape or Dc.ndim != 2 or Dc.shape[0] != Dc.shape[1]:
        raise DimensionError(f"need two square matrices of equal shape, got {Dc.shape} and {Dt.shape}")
    return Dc, Dt


def decomposition_exists(Dc, Dt, rel_tol=RANK_TOL, scale=None):
    """Test whether D(t) = S @ D(tc) is solvable.

    Returns ``(exists, rank_c, rank_aug)`` where ``rank_aug`` is the rank of
    ``vstack([Dc, Dt])``. Equal ranks mean every row of Dt lies in the row
    space of Dc, i.e. null(Dc) is a subspace of null(Dt).
    """
    Dc, Dt = _check_pair(Dc, Dt)
    if scale is None:
        # one common scale for both ranks, so rank_aug >= rank_c always
        scale = max(np.linalg.norm(Dc, 2), np.linalg.norm(Dt, 2))
    rank_c = numeric_rank(Dc, rel_tol, scale)
    rank_aug = numeric_rank(np.vstack([Dc, Dt]), rel_tol, scale)
    return rank_aug == rank_c, rank_c, rank_aug


@dataclass
class DecompositionResult:
    status: str  # "Exists" | "NotExists"
    S: Optional[np.ndarray]
    r: Optional[np.ndarray]
    unique: bool
    residual: Optional[float]
    rank_c: int
    rank_aug: int

    @property
    def exists(self):
        return self.status == "Exists"

    @property
    def intermediate(self):
        """The intermediate map as an AffineMap (only when it exists)."""
        if not self.exists:
            return None
        return AffineMap(self.S, self.r)

    def to_dict(self):
        return {
            "status": self.status,
            "S": None if self.S is None else self.S.tolist(),
            "r": None if self.r is None else self.r.tolist(),
            "unique": self.unique,
            "residual": self.residual,
            "rank_c": self.rank_c,
            "rank_aug": self.rank_aug,
        }


def solve_decomposition(map_c, map_t, rel_tol=RANK_TOL):
    """Solve Lambda(t, 0) = Lambda(t, tc) Lambda(tc, 0) for the middle map.

    ``S = D(t) @ pinv(D(tc))`` is the minimum-Frobenius-norm solution; it is
    the only one when D(tc) has full rank. The translation follows from the
    maximally mixed input: ``r = f(t) - S @ f(tc)``.
    """
    if map_c.n != map_t.n:
        raise DimensionError("maps act on different dimensions")
    exists, rank_c, rank_aug = decomposition_exists(map_c.D, map_t.D, rel_tol)
    if not exists:
        return DecompositionResult("NotExists", None, None, False, None, rank_c, rank_aug)
    S = map_t.D @ np.linalg.pinv(map_c.D, rcond=rel_tol)
    r = map_t.f - S @ map_c.f
    residual = float(np.linalg.norm(S @ map_c.D - map_t.D))
    return DecompositionResult("Exists", S, r, rank_c == map_c.n, residual, rank_c, rank_aug)


@dataclass
class SingularPoint:
    t_c: float
    sigma_min: float
    rank_deficit: int
    confirmed: bool
    refine_iterations: int
    probe_t: Optional[float] = None  # first probe whose augmented rank jumped

    def to_dict(self):
        return {
            "t_c": self.t_c,
            "sigma_min": self.sigma_min,
            "rank_deficit": self.rank_deficit,
            "confirmed": self.confirmed,
        }


@dataclass
class GridScan:
    """Per-node singular-value data of a uniform scan over (0, t_max]."""

    t: np.ndarray
    sigma_min: np.ndarray
    sigma_max: np.ndarray
    det: np.ndarray
    rank: np.ndarray
    scale: float
    rank_tol: float
    points: list = field(default_factory=list)


def _sigma_min(family, t):
    return float(np.linalg.svd(family(t).D, compute_uv=False)[-1])


def scan_grid(family, t_max, grid_points=2000, rank_tol=RANK_TOL):
    """Evaluate singular values of D(t) on t_i = t_max * i / grid_points."""
    if not t_max > 0:
        raise ConfigError("t_max must be positive")
    if grid_points < 100:
        raise ConfigError("grid_points must be at least 100")
    ts = t_max * np.arange(1, grid_points + 1) / grid_points
    sv = np.empty((grid_points, family.n))
    det = np.empty(grid_points)
    for i, t in enumerate(ts):
        try:
            D = family(t).D
        except DomainError:
            raise
        except Exception as exc:
            raise NumericalFailure(f"model evaluation failed at t={t!r}: {exc}") from exc
        sv[i] = np.linalg.svd(D, compute_uv=False)
        det[i] = np.linalg.det(D)
    # identity at t = 0 has unit singular values; never let the scale drop below it
    scale = max(1.0, float(sv[:, 0].max()))
    rank = np.sum(sv > rank_tol * scale, axis=1)
    return GridScan(ts, sv[:, -1].copy(), sv[:, 0].copy(), det, rank, scale, rank_tol)


def find_singular_points(family, t_max, grid_points=2000, rank_tol=RANK_TOL,
                         time_tol=TIME_TOL, scan=None):
    """Locate times where D(t) loses rank.

    Local minima of sigma_min(D(t)) on the grid (three-point stencil) are
    refined by golden-section search and kept when the refined sigma_min is
    below ``rank_tol`` times the family scale. Minimum-based detection also
    catches even-order zeros, where det D never changes sign.

    A point is ``confirmed`` when stacking D(t_p) under D(tc) raises the rank
    for one of the probes t_p (the next few grid nodes, then t_max), i.e. no
    intermediate map Lambda(t_p, tc) exists.
    """
    if scan is None:
        scan = scan_grid(family, t_max, grid_points, rank_tol)
    ts, smin, scale = scan.t, scan.sigma_min, scan.scale
    threshold = rank_tol * scale
    h = ts[1] - ts[0]
    found = []
    for i in range(1, len(ts) - 1):
        if not (smin[i] <= smin[i - 1] and smin[i] < smin[i + 1]):
            continue
        lo, hi = ts[i - 1], ts[i + 1]
        t_c, s_c, iters = golden_section_min(lambda t: _sigma_min(family, t), lo, hi, time_tol)
        if smin[i] < s_c:
            t_c, s_c = ts[i], smin[i]
        if s_c > threshold:
            continue
        if found and abs(t_c - found[-1].t_c) < 10 * time_tol:
            continue
        Dc = family(t_c).D
        rank_c = numeric_rank(Dc, rank_tol, scale)
        probes = [tp for tp in ts[i + 1 : i + 1 + N_PROBES] if tp > t_c + h / 4]
        probes.append(ts[-1])
        probe_t = None
        for tp in probes:
            aug = np.vstack([Dc, family(tp).D])
            if numeric_rank(aug, rank_tol, scale) > rank_c:
                probe_t = float(tp)
                break
        found.append(SingularPoint(
            t_c=float(t_c),
            sigma_min=float(s_c),
            rank_deficit=family.n - rank_c,
            confirmed=probe_t is not None,
            refine_iterations=iters,
            probe_t=probe_t,
        ))
    found.sort(key=lambda p: p.t_c)
    scan.points = found
    return found
