"""Map families t -> AffineMap: closed-form models and file-backed data.

Built-in families:

* spin-bath dephasing, coherence multiplier C(t) = cos(2 A t / sqrt(N))**N;
* damped Jaynes-Cummings at zero temperature with a Lorentzian spectral
  density, amplitude c(t) (c(0) = 1) in its over-, critically or
  underdamped form;
* constant-rate dephasing semigroup, the divisible reference case.

Users can also supply tabulated (D, f) samples or per-time Kraus sets as JSON.
"""
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import jsonschema
import numpy as np

from dmsing.bloch import AffineMap, make_basis
from dmsing.errors import DomainError, PoleError, SchemaError

POLE_TOL = 1e-12
CRITICAL_TOL = 1e-12
IDENTITY_TOL = 1e-10
KRAUS_TP_TOL = 1e-8


@dataclass(frozen=True)
class MapFamily:
    """A dynamical map t -> (D(t), f(t)) on the domain [t_min, t_max]."""

    d: int
    evaluator: Callable[[float], AffineMap]
    name: str
    params: dict = field(default_factory=dict)
    t_min: float = 0.0
    t_max: float = math.inf
    closed_form_singular_points: Optional[Callable[[int], float]] = None
    period: Optional[float] = None

    @property
    def n(self):
        return self.d * self.d - 1

    def __call__(self, t):
        t = float(t)
        if not (self.t_min <= t <= self.t_max):
            raise DomainError(f"t={t!r} outside [{self.t_min}, {self.t_max}] for {self.name}")
        return self.evaluator(t)


# -- spin-bath dephasing ---------------------------------------------------


@dataclass(frozen=True)
class DephasingParams:
    A: float
    N: int

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("coupling A must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("bath size N must be an integer >= 1")
        object.__setattr__(self, "N", int(self.N))


def dephasing_coherence(p, t):
    return math.cos(2 * p.A * t / math.sqrt(p.N)) ** p.N


def dephasing_family(p):
    def evaluate(t):
        c = dephasing_coherence(p, t)
        return AffineMap(np.diag([c, c, 1.0]), np.zeros(3))

    def t_c(n):
        return math.sqrt(p.N) * (2 * n + 1) * math.pi / (4 * p.A)

    return MapFamily(
        d=2,
        evaluator=evaluate,
        name="dephasing",
        params={"A": p.A, "N": p.N},
        closed_form_singular_points=t_c,
        period=math.sqrt(p.N) * math.pi / p.A,
    )


def dephasing_gamma(p, t):
    """Rate gamma(t) = A sqrt(N) tan(2 A t / sqrt(N))."""
    x = 2 * p.A * t / math.sqrt(p.N)
    if abs(math.cos(x)) < POLE_TOL:
        raise PoleError(f"dephasing rate has a pole at t={t!r}")
    return p.A * math.sqrt(p.N) * math.tan(x)


def semigroup_family(rate=1.0):
    """Markovian dephasing with constant rate: D(t) = diag(e^-2rt, e^-2rt, 1)."""
    def evaluate(t):
        c = math.exp(-2 * rate * t)
        return AffineMap(np.diag([c, c, 1.0]), np.zeros(3))

    return MapFamily(d=2, evaluator=evaluate, name="semigroup", params={"rate": rate})


# -- damped Jaynes-Cummings ------------------------------------------------


@dataclass(frozen=True)
class JCParams:
    gamma0: float
    lam: float

    def __post_init__(self):
        if not (self.gamma0 > 0 and self.lam > 0):
            raise ValueError("gamma0 and lambda must be positive")

    @property
    def disc(self):
        """lambda**2 - 2 gamma0 lambda; its sign selects the regime."""
        return self.lam * self.lam - 2 * self.gamma0 * self.lam

    @property
    def regime(self):
        if abs(self.disc) < CRITICAL_TOL:
            return "critical"
        return "overdamped" if self.disc > 0 else "underdamped"

    @property
    def d0(self):
        return math.sqrt(abs(self.disc))


def jc_c(p, t):
    """Excited-state amplitude c(t) with c(0) = 1."""
    lam = p.lam
    regime = p.regime
    damp = math.exp(-lam * t / 2)
    if regime == "critical":
        return damp * (1 + lam * t / 2)
    d = p.d0
    if regime == "overdamped":
        return damp * (math.cosh(d * t / 2) + lam / d * math.sinh(d * t / 2))
    return damp * (math.cos(d * t / 2) + lam / d * math.sin(d * t / 2))


def jc_gamma(p, t):
    """Decay rate gamma(t) = -2 c'(t) / c(t)."""
    lam, g0 = p.lam, p.gamma0
    regime = p.regime
    if regime == "critical":
        num, den = g0 * lam * t, 1 + lam * t / 2
    else:
        d = p.d0
        x = d * t / 2
        if regime == "overdamped":
            num, den = 2 * g0 * lam * math.sinh(x), d * math.cosh(x) + lam * math.sinh(x)
        else:
            num, den = 2 * g0 * lam * math.sin(x), d * math.cos(x) + lam * math.sin(x)
    if abs(den) < POLE_TOL:
        raise PoleError(f"JC decay rate has a pole at t={t!r}")
    return num / den


def jc_singular_time(p, n):
    """n-th zero of c(t) (underdamped only); arccot taken in (0, pi)."""
    x = -1 / math.sqrt(2 * p.gamma0 / p.lam - 1)
    arccot = math.pi / 2 - math.atan(x)
    return 2 / p.d0 * (arccot + n * math.pi)


def jc_family(p):
    """D = diag(c, c, c**2), f = (0, 0, c**2 - 1).

    c(t) is the signed closed form, which stays valid past the zeros of c
    where the integral of gamma diverges.
    """
    def evaluate(t):
        c = jc_c(p, t)
        c2 = c * c
        return AffineMap(np.diag([c, c, c2]), np.array([0.0, 0.0, c2 - 1.0]))

    underdamped = p.regime == "underdamped"
    return MapFamily(
        d=2,
        evaluator=evaluate,
        name="jc",
        params={"gamma0": p.gamma0, "lambda": p.lam},
        closed_form_singular_points=(lambda n: jc_singular_time(p, n)) if underdamped else None,
        period=4 * math.pi / p.d0 if underdamped else None,
    )


# -- file-backed families --------------------------------------------------

_NUMBER = {"type": "number"}
_TABULATED_SCHEMA = {
    "type": "object",
    "required": ["d", "samples"],
    "properties": {
        "d": {"type": "integer", "minimum": 2},
        "samples": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["t", "D", "f"],
                "properties": {
                    "t": _NUMBER,
                    "D": {"type": "array", "items": _NUMBER},
                    "f": {"type": "array", "items": _NUMBER},
                },
            },
        },
    },
}
_KRAUS_SCHEMA = {
    "type": "object",
    "required": ["d", "samples"],
    "properties": {
        "d": {"type": "integer", "minimum": 2},
        "samples": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["t", "kraus"],
                "properties": {
                    "t": _NUMBER,
                    "kraus": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "array",
                            "items": {
                                "type": "array",
                                "items": {
                                    "type": "array",
                                    "items": _NUMBER,
                                    "minItems": 2,
                                    "maxItems": 2,
                                },
                            },
                        },
                    },
                },
            },
        },
    },
}


def _read_json(path, schema):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{path}: {exc.message}") from exc
    return data


def tabulated_family(d, times, maps, name="tabulated"):
    """Family interpolating linearly (entrywise) between sampled maps."""
    times = np.asarray(times, dtype=float)
    if times.size == 0 or times[0] != 0:
        raise SchemaError("sample times must start at t = 0")
    if np.any(np.diff(times) <= 0):
        raise SchemaError("sample times must be strictly increasing")
    first = maps[0]
    n = d * d - 1
    if any(m.n != n for m in maps):
        raise SchemaError(f"every sample must act on length-{n} vectors for d={d}")
    if not (np.allclose(first.D, np.eye(n), atol=IDENTITY_TOL, rtol=0)
            and np.allclose(first.f, 0, atol=IDENTITY_TOL)):
        raise SchemaError("the sample at t = 0 must be the identity map")
    Ds = np.stack([m.D for m in maps])
    fs = np.stack([m.f for m in maps])

    def evaluate(t):
        if len(times) == 1:
            return maps[0]
        k = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
        w = (t - times[k]) / (times[k + 1] - times[k])
        return AffineMap((1 - w) * Ds[k] + w * Ds[k + 1], (1 - w) * fs[k] + w * fs[k + 1])

    return MapFamily(d=d, evaluator=evaluate, name=name, t_min=0.0, t_max=float(times[-1]))


def load_tabulated_family(path):
    data = _read_json(path, _TABULATED_SCHEMA)
    d = data["d"]
    n = d * d - 1
    times, maps = [], []
    for i, s in enumerate(data["samples"]):
        if len(s["D"]) != n * n or len(s["f"]) != n:
            raise SchemaError(f"{path}: sample {i} needs {n * n} D entries and {n} f entries")
        times.append(s["t"])
        maps.append(AffineMap(np.reshape(s["D"], (n, n)), s["f"]))
    return tabulated_family(d, times, maps, name=f"file:{path}")


def export_tabulated(family, times, path):
    """Write ``family`` sampled at ``times`` in the tabulated JSON layout."""
    samples = []
    for t in times:
        m = family(t)
        samples.append({"t": float(t), "D": m.D.reshape(-1).tolist(), "f": m.f.tolist()})
    with open(path, "w") as fh:
        json.dump({"d": family.d, "samples": samples}, fh)


def affine_from_kraus(kraus, basis):
    """Affine coherence-vector action of the channel rho -> sum K rho K^dag."""
    kraus = np.asarray(kraus, dtype=complex)
    d = basis.d
    tp = sum(K.conj().T @ K for K in kraus)
    if not np.allclose(tp, np.eye(d), atol=KRAUS_TP_TOL, rtol=0):
        raise SchemaError("Kraus operators are not trace preserving (sum K^dag K != I)")

    def channel(X):
        return sum(K @ X @ K.conj().T for K in kraus)

    lam = basis.elements
    out_lam = np.stack([channel(l) for l in lam])
    D = np.einsum("mij,nji->mn", lam, out_lam).real / d
    f = np.einsum("mij,ji->m", lam, channel(np.eye(d))).real / d
    return AffineMap(D, f)


def family_from_kraus(path):
    data = _read_json(path, _KRAUS_SCHEMA)
    d = data["d"]
    basis = make_basis(d)
    times, maps = [], []
    for i, s in enumerate(data["samples"]):
        try:
            kraus = np.array(s["kraus"], dtype=float)
        except ValueError as exc:
            raise SchemaError(f"{path}: sample {i} has ragged Kraus data") from exc
        if kraus.ndim != 4 or kraus.shape[1:] != (d, d, 2):
            raise SchemaError(f"{path}: sample {i} Kraus operators must be {d}x{d} [re, im] arrays")
        times.append(s["t"])
        maps.append(affine_from_kraus(kraus[..., 0] + 1j * kraus[..., 1], basis))
    return tabulated_family(d, times, maps, name=f"kraus:{path}")


def write_kraus_family(path, d, times, kraus_sets):
    """Serialize per-time Kraus sets in the JSON layout read by family_from_kraus."""
    samples = []
    for t, ks in zip(times, kraus_sets):
        ks = np.asarray(ks, dtype=complex)
        samples.append({
            "t": float(t),
            "kraus": np.stack([ks.real, ks.imag], axis=-1).tolist(),
        })
    with open(path, "w") as fh:
        json.dump({"d": d, "samples": samples}, fh)
