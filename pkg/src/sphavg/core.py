"""Shared domain types: closed-form test functions, exponent tuples, grids, seeds.

Two concrete function families are supported everywhere: Gaussians
``amplitude * exp(-a*|x-c|^2)`` and polynomial bumps
``amplitude * (1 - |x-c|^2/s^2)_+^k``.  Both have analytic Lp norms and
known support radii, which turns operator-bound checks into
exact-constant tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TestFunction",
    "ConstantOne",
    "FunctionTuple",
    "ExponentTuple",
    "GridFunction",
    "Seed",
    "as_seed",
    "evaluate",
    "sample_grid",
    "gaussian",
    "bump",
]


@dataclass(frozen=True)
class Seed:
    """Root of a reproducible random stream.

    Equal seeds yield identical sample streams from every sampler in this
    package.  ``spawn`` derives independent substreams so that work split
    across tasks stays deterministic regardless of scheduling.
    """

    value: int

    def __post_init__(self):
        if not (0 <= int(self.value) < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.value)

    def spawn(self, index: int) -> "Seed":
        """Deterministic substream seed for task `index`."""
        mix = np.random.SeedSequence(entropy=self.value, spawn_key=(index,))
        return Seed(int(mix.generate_state(1, np.uint64)[0]))


def as_seed(seed) -> Seed:
    if isinstance(seed, Seed):
        return seed
    return Seed(int(seed))


@dataclass(frozen=True)
class TestFunction:
    """Closed-form nonnegative function on R^d.

    kind is "gaussian" (params: a > 0, the decay rate) or "bump"
    (params: s > 0 support radius, k >= 1 smoothness power).
    """

    kind: str
    params: dict
    center: np.ndarray
    amplitude: float
    d: int

    def __post_init__(self):
        if self.kind not in ("gaussian", "bump"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.d < 2:
            raise ValueError("dimension must be >= 2")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        c = np.asarray(self.center, dtype=float)
        if c.shape != (self.d,):
            raise ValueError("center must be a point in R^d")
        object.__setattr__(self, "center", c)
        if self.kind == "gaussian":
            if self.params.get("a", 0.0) <= 0:
                raise ValueError("gaussian decay rate a must be positive")
        else:
            if self.params.get("s", 0.0) <= 0:
                raise ValueError("bump radius s must be positive")
            if self.params.get("k", 0) < 1:
                raise ValueError("bump power k must be >= 1")

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points of shape (..., d)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"points have dimension {x.shape[-1]}, expected {self.d}")
        r2 = np.sum((x - self.center) ** 2, axis=-1)
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-self.params["a"] * r2)
        s, k = self.params["s"], self.params["k"]
        core = 1.0 - r2 / s**2
        return self.amplitude * np.where(core > 0.0, core, 0.0) ** k

    @property
    def support_radius(self) -> float:
        """Radius of the support ball (inf for gaussians)."""
        return self.params["s"] if self.kind == "bump" else math.inf

    def effective_radius(self, tail: float = 1e-8) -> float:
        """Radius beyond which values fall below `tail` * amplitude."""
        if self.kind == "bump":
            return self.params["s"]
        return math.sqrt(math.log(1.0 / tail) / self.params["a"])

    def translate(self, shift) -> "TestFunction":
        shift = np.asarray(shift, dtype=float)
        return TestFunction(self.kind, dict(self.params), self.center + shift,
                            self.amplitude, self.d)

    def dilate(self, t: float) -> "TestFunction":
        """Return f(t * .) as a TestFunction of the same family."""
        if t <= 0:
            raise ValueError("dilation factor must be positive")
        if self.kind == "gaussian":
            params = {"a": self.params["a"] * t**2}
        else:
            params = {"s": self.params["s"] / t, "k": self.params["k"]}
        return TestFunction(self.kind, params, self.center / t, self.amplitude, self.d)

    def scale_amplitude(self, c: float) -> "TestFunction":
        return TestFunction(self.kind, dict(self.params), self.center,
                            self.amplitude * c, self.d)

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {k: float(v) for k, v in self.params.items()},
            "center": [float(c) for c in self.center],
            "amplitude": float(self.amplitude),
            "d": int(self.d),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "TestFunction":
        return cls(obj["kind"], dict(obj["params"]),
                   np.asarray(obj["center"], dtype=float),
                   float(obj["amplitude"]), int(obj["d"]))


def gaussian(a: float, center, amplitude: float = 1.0, d: int | None = None) -> TestFunction:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    return TestFunction("gaussian", {"a": float(a)}, center, amplitude,
                        d if d is not None else center.size)


def bump(s: float, center, k: int = 2, amplitude: float = 1.0,
         d: int | None = None) -> TestFunction:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    return TestFunction("bump", {"s": float(s), "k": int(k)}, center, amplitude,
                        d if d is not None else center.size)


class ConstantOne:
    """Constant-1 input, a test mode for total-measure identities only.

    Constants are not Schwartz, so this is deliberately not a TestFunction
    and has no JSON encoding.
    """

    def __init__(self, d: int):
        self.d = int(d)
        self.support_radius = math.inf

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"points have dimension {x.shape[-1]}, expected {self.d}")
        return np.ones(x.shape[:-1])

    def effective_radius(self, tail: float = 1e-8) -> float:
        return math.inf


class FunctionTuple:
    """Ordered tuple of n functions on a common R^d.

    Entries are callables with a `.d` attribute (TestFunction, ConstantOne,
    or grid interpolants); all must share the same dimension.
    """

    def __init__(self, entries):
        entries = tuple(entries)
        if len(entries) < 1:
            raise ValueError("need at least one function")
        d = entries[0].d
        for f in entries:
            if f.d != d:
                raise ValueError("all entries must share the same dimension")
        self.entries = entries
        self.n = len(entries)
        self.d = d

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.entries[i]

    def to_json_dict(self) -> dict:
        return {"functions": [f.to_json_dict() for f in self.entries]}

    @classmethod
    def from_json_dict(cls, obj) -> "FunctionTuple":
        funcs = obj["functions"] if isinstance(obj, dict) else obj
        return cls([TestFunction.from_json_dict(o) for o in funcs])

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


@dataclass(frozen=True)
class ExponentTuple:
    """Lebesgue exponents (p_1, ..., p_n; r) tied by 1/r = sum_i 1/p_i.

    Entries live in [1, inf] with the convention 1/inf = 0.  r < 1 is
    allowed; the target quasi-norm is computed literally as
    (integral |.|^r)^(1/r) downstream.
    """

    p: tuple
    r: float

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        object.__setattr__(self, "p", p)
        for v in p:
            if v < 1:
                raise ValueError("every p_i must be >= 1 (inf allowed)")
        want = sum(0.0 if math.isinf(v) else 1.0 / v for v in p)
        have = 0.0 if math.isinf(self.r) else 1.0 / self.r
        if abs(want - have) > 1e-9:
            raise ValueError(f"Hoelder relation violated: sum 1/p_i = {want}, 1/r = {have}")

    @classmethod
    def from_p(cls, p) -> "ExponentTuple":
        p = tuple(float(v) for v in p)
        s = sum(0.0 if math.isinf(v) else 1.0 / v for v in p)
        return cls(p, math.inf if s == 0.0 else 1.0 / s)

    @property
    def reciprocals(self) -> tuple:
        return tuple(0.0 if math.isinf(v) else 1.0 / v for v in self.p)


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on the cell-center lattice of [-L, L)^d.

    values[j1, ..., jd] is the sample at x_i = -L + (j_i + 1/2) * h with
    h = 2L / resolution.  Cell centers avoid privileging the origin.
    """

    L: float
    resolution: int
    values: np.ndarray
    d: int = field(init=False)

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("half-width L must be positive")
        if self.resolution < 8 or self.resolution & (self.resolution - 1):
            raise ValueError("resolution must be a power of two >= 8")
        v = np.asarray(self.values)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "d", v.ndim)
        if any(s != self.resolution for s in v.shape):
            raise ValueError("values must be a resolution^d array")

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / self.resolution

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d

    def axis(self) -> np.ndarray:
        h = self.spacing
        return -self.L + (np.arange(self.resolution) + 0.5) * h

    def integral(self) -> float:
        """Midpoint-rule integral over the box."""
        return float(np.sum(self.values)) * self.cell_volume

    def lp_norm(self, p: float) -> float:
        if math.isinf(p):
            return float(np.max(np.abs(self.values)))
        if p < 1 and p <= 0:
            raise ValueError("p must be positive")
        return float(np.sum(np.abs(self.values) ** p) * self.cell_volume) ** (1.0 / p)


def evaluate(f, x) -> np.ndarray:
    """Evaluate a test function at points x of shape (..., d)."""
    return f(np.asarray(x, dtype=float))


def sample_grid(f, L: float, resolution: int) -> GridFunction:
    """Sample f on the cell-center lattice of [-L, L)^d.

    Deterministic; raises for nonpositive L or a resolution that is not a
    power of two >= 8.
    """
    if L <= 0:
        raise ValueError("half-width L must be positive")
    if resolution < 8 or resolution & (resolution - 1):
        raise ValueError("resolution must be a power of two >= 8")
    h = 2.0 * L / resolution
    ax = -L + (np.arange(resolution) + 0.5) * h
    grids = np.meshgrid(*([ax] * f.d), indexing="ij")
    pts = np.stack(grids, axis=-1)
    return GridFunction(L, resolution, f(pts))
