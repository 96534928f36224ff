"""Coherence-vector representation of states and affine maps.

States of a d-level system are written as rho = (I + n . lambda) / d, where
``lambda`` is a set of d**2 - 1 traceless Hermitian matrices normalised to
Tr(lambda_mu lambda_nu) = d delta_mu_nu. A trace-preserving linear map then
acts on coherence vectors as n -> D @ n + f (column convention).

The Choi and positivity helpers are qubit-only.
"""
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from dmsing.errors import ConfigError, DimensionError, NotAStateError

HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-10
IMAG_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Ordered traceless Hermitian basis with Tr(l_mu l_nu) = d delta_mu_nu."""

    d: int
    elements: np.ndarray  # shape (d**2 - 1, d, d)

    @property
    def n(self):
        return self.d * self.d - 1

    def __len__(self):
        return self.n

    def __getitem__(self, mu):
        return self.elements[mu]

    @cached_property
    def flat(self):
        """Elements reshaped to (d**2 - 1, d*d) for matrix-vector products."""
        return np.ascontiguousarray(self.elements.reshape(self.n, -1))


@dataclass(frozen=True, eq=False)
class AffineMap:
    """Action n -> D @ n + f of a trace-preserving map on coherence vectors."""

    D: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        D = np.array(self.D, dtype=float)
        f = np.array(self.f, dtype=float).reshape(-1)
        if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] != f.size:
            raise DimensionError(f"incompatible shapes D{D.shape}, f{f.shape}")
        if not (np.all(np.isfinite(D)) and np.all(np.isfinite(f))):
            raise ValueError("affine map entries must be finite")
        d = int(round(np.sqrt(f.size + 1)))
        if d * d - 1 != f.size:
            raise DimensionError(f"vector length {f.size} is not d**2 - 1")
        D.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "f", f)

    @property
    def n(self):
        return self.f.size

    @property
    def d(self):
        return int(round(np.sqrt(self.n + 1)))

    @classmethod
    def identity(cls, d):
        n = d * d - 1
        return cls(np.eye(n), np.zeros(n))

    def __call__(self, vec):
        return self.D @ np.asarray(vec, dtype=float) + self.f

    def compose(self, first):
        """Return the map ``self o first`` (apply ``first``, then ``self``)."""
        return AffineMap(self.D @ first.D, self.D @ first.f + self.f)


@lru_cache(maxsize=None)
def _gell_mann(d):
    mats = []
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1
            mats.append(m)
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j
            m[k, j] = 1j
            mats.append(m)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        mats.append(np.sqrt(2.0 / (l * (l + 1))) * np.diag(diag).astype(complex))
    out = np.sqrt(d / 2.0) * np.stack(mats)
    out.setflags(write=False)
    return out


def make_basis(d):
    """Generalised Gell-Mann basis rescaled to Tr(l_mu l_nu) = d delta_mu_nu.

    Ordering: symmetric off-diagonal pairs, antisymmetric pairs, then the
    diagonal elements. For d = 2 this gives (sigma_x, sigma_y, sigma_z).
    """
    if int(d) != d or d < 2:
        raise DimensionError(f"dimension must be an integer >= 2, got {d!r}")
    return _cached_basis(int(d))


@lru_cache(maxsize=None)
def _cached_basis(d):
    return OperatorBasis(d, _gell_mann(d))


def _check_square(rho, d):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise DimensionError(f"expected a {d}x{d} matrix, got shape {rho.shape}")
    return rho


def state_to_bloch(rho, basis):
    """Coherence vector n_mu = Tr(rho lambda_mu)."""
    rho = _check_square(rho, basis.d)
    vals = basis.flat @ rho.T.reshape(-1)
    if np.max(np.abs(vals.imag), initial=0.0) > IMAG_TOL:
        raise NotAStateError("coherence vector has an imaginary part; rho is not Hermitian")
    return vals.real.copy()


def _vector_to_matrix(vec, basis):
    vec = np.asarray(vec, dtype=float).reshape(-1)
    if vec.size != basis.n:
        raise DimensionError(f"expected a coherence vector of length {basis.n}, got {vec.size}")
    rho = (vec @ basis.flat).reshape(basis.d, basis.d)
    rho[np.diag_indices(basis.d)] += 1
    return rho / basis.d


def bloch_to_state(vec, basis):
    """Density matrix (I + n . lambda) / d; raises NotAStateError if not positive."""
    rho = _vector_to_matrix(vec, basis)
    if basis.d == 2:
        # qubit spectrum is (1 +- |n|) / 2
        lowest = 0.5 * (1 - math.sqrt(float(np.dot(vec, vec))))
    else:
        lowest = np.linalg.eigvalsh(rho)[0]
    if lowest < -POSITIVITY_TOL:
        raise NotAStateError(f"coherence vector gives eigenvalue {lowest:.3g} < 0")
    return rho


def is_state(rho, tol=POSITIVITY_TOL):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if not np.allclose(rho, rho.conj().T, atol=HERMITIAN_TOL, rtol=0):
        return False
    if abs(np.trace(rho) - 1) > HERMITIAN_TOL:
        return False
    return np.linalg.eigvalsh(rho)[0] >= -tol


def trace_distance(rho1, rho2):
    """Half the trace norm of rho1 - rho2."""
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    if rho1.shape != rho2.shape:
        raise DimensionError(f"shape mismatch {rho1.shape} vs {rho2.shape}")
    diff = rho1 - rho2
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


def apply_map(m, rho, basis):
    """Apply the affine map ``m`` to the density matrix ``rho``."""
    if m.n != basis.n:
        raise DimensionError(f"map acts on length-{m.n} vectors, basis has {basis.n}")
    return bloch_to_state(m(state_to_bloch(rho, basis)), basis)


# -- qubit channel checks -------------------------------------------------


def choi_from_affine(V, s):
    """Choi operator of the qubit map n -> V @ n + s on |00> + |11>.

    Unnormalised, so the trace is 2 and a positive spectrum certifies
    complete positivity.
    """
    V = np.asarray(V, dtype=float)
    s = np.asarray(s, dtype=float).reshape(-1)
    if V.shape != (3, 3) or s.shape != (3,):
        raise DimensionError("qubit Choi construction needs V of shape (3, 3) and s of length 3")
    eye = np.eye(2)
    M = np.kron(eye, eye).astype(complex)
    for mu in range(3):
        M += s[mu] * np.kron(PAULIS[mu], eye)
        for nu in range(3):
            M += V[mu, nu] * np.kron(PAULIS[mu], PAULIS[nu].T)
    return M / 2


def is_completely_positive(choi, tol=POSITIVITY_TOL):
    choi = np.asarray(choi, dtype=complex)
    return bool(np.linalg.eigvalsh((choi + choi.conj().T) / 2)[0] >= -tol)


def fibonacci_sphere(n_points):
    """Quasi-uniform unit vectors on the 2-sphere (golden-angle spiral)."""
    i = np.arange(n_points) + 0.5
    z = 1 - 2 * i / n_points
    r = np.sqrt(1 - z * z)
    phi = np.pi * (3 - np.sqrt(5)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _polish_sphere_max(fun, grad, x0, steps=200, step=0.1):
    # projected gradient ascent on the unit sphere with backtracking
    x = x0 / np.linalg.norm(x0)
    fx = fun(x)
    for _ in range(steps):
        g = grad(x)
        g_tan = g - (g @ x) * x
        if np.linalg.norm(g_tan) < 1e-14:
            break
        h = step
        while h > 1e-14:
            y = x + h * g_tan
            y /= np.linalg.norm(y)
            fy = fun(y)
            if fy > fx:
                x, fx = y, fy
                break
            h /= 2
        else:
            break
    return x, fx


def is_positive_map(V, s, n_samples=2000, tol=POSITIVITY_TOL, seed=42):
    """Sampled check that the qubit map n -> V @ n + s sends states to states.

    The lowest output eigenvalue for a pure input with Bloch vector n is
    (1 - |V n + s|) / 2. It is minimised over a Fibonacci grid of pure states
    and then polished locally from the best grid points and a few seeded
    random starts. One-sided: a map that fails only between sample points
    after polishing is accepted.
    """
    if n_samples < 10:
        raise ConfigError("n_samples must be at least 10")
    V = np.asarray(V, dtype=float)
    s = np.asarray(s, dtype=float).reshape(-1)
    if V.shape != (3, 3) or s.shape != (3,):
        raise DimensionError("qubit positivity check needs V of shape (3, 3) and s of length 3")

    def sq_norm(x):
        y = V @ x + s
        return float(y @ y)

    def sq_grad(x):
        return 2 * V.T @ (V @ x + s)

    pts = fibonacci_sphere(n_samples)
    norms = np.sum((pts @ V.T + s) ** 2, axis=1)
    starts = list(pts[np.argsort(norms)[-4:]])
    rng = np.random.default_rng(seed)
    starts += list(rng.normal(size=(4, 3)))
    best = float(norms.max())
    for x0 in starts:
        best = max(best, _polish_sphere_max(sq_norm, sq_grad, x0)[1])
    lowest = 0.5 * (1 - np.sqrt(best))
    return bool(lowest >= -tol)


# -- Haar-average utilities -----------------------------------------------


def swap_operator(d):
    """Swap of two d-level systems, sum_ij |i,j><j,i|."""
    V = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            V[i * d + j, j * d + i] = 1
    return V


def haar_average_projector(d, K, seed=None, states=None, chunk=50_000):
    """Monte-Carlo average of |psi><psi| (x) |psi><psi| over pure states.

    States are drawn Haar-uniformly from normalised complex Gaussian vectors,
    unless an explicit ``states`` array of shape (K, d) is given. The exact
    average is (I + swap) / (d (d + 1)).
    """
    if K < 1:
        raise ConfigError("K must be at least 1")
    acc = np.zeros((d * d, d * d), dtype=complex)
    if states is not None:
        states = np.asarray(states, dtype=complex).reshape(-1, d)
        states = states / np.linalg.norm(states, axis=1, keepdims=True)
        batches = [states]
        K = len(states)
    else:
        rng = np.random.default_rng(seed)
        batches = (
            _haar_states(rng, min(chunk, K - start), d) for start in range(0, K, chunk)
        )
    for psi in batches:
        pair = (psi[:, :, None] * psi[:, None, :]).reshape(len(psi), d * d)
        acc += pair.T @ pair.conj()
    return acc / K


def _haar_states(rng, k, d):
    z = rng.normal(size=(k, d)) + 1j * rng.normal(size=(k, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)
