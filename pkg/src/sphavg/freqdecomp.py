"""Dyadic frequency decomposition and frequency-localized average pieces.

The filter bank realizes a radial profile phi_hat with phi_hat = 1 on
{|xi| <= 1} and 0 on {|xi| >= 2}, built from the standard smooth step
s(u) = g(u)/(g(u)+g(1-u)), g(u) = exp(-1/u) 1_{u>0}, as
phi_hat(xi) = s(2 - |xi|).  The band profile psi_hat = phi_hat -
phi_hat(2 .) is supported in {1/2 < |xi| < 2} and the dyadic dilates
telescope into a partition of unity.

All frequency operations live on the periodized torus [-L, L)^d sampled
at cell centers; inputs are expected to decay below ~1e-8 at the
boundary so periodization error is negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates, spline_filter
from scipy.special import jv

from .core import FunctionTuple, GridFunction
from .averages import average_sliced
from .spherequad import surface_area

__all__ = [
    "FilterBank",
    "BPattern",
    "GridInterpolant",
    "DecayProbe",
    "DominationReport",
    "smooth_step",
    "build_filterbank",
    "apply_filter",
    "partition_defect",
    "sphere_multiplier",
    "grid_single_average",
    "localized_average",
    "b_piece_average",
    "linear_decay_probe",
    "hl_maximal",
    "b_piece_domination",
]


def smooth_step(u) -> np.ndarray:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, strictly rising between."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        g0 = np.where(u > 0.0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        g1 = np.where(1.0 - u > 0.0,
                      np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    return g0 / (g0 + g1)


def _lowpass_profile(rho) -> np.ndarray:
    """phi_hat as a function of |xi|: 1 on [0,1], 0 on [2,inf)."""
    return smooth_step(2.0 - np.asarray(rho, dtype=float))


def _band_profile(rho) -> np.ndarray:
    """psi_hat(|xi|) = phi_hat(|xi|) - phi_hat(2|xi|)."""
    rho = np.asarray(rho, dtype=float)
    return _lowpass_profile(rho) - _lowpass_profile(2.0 * rho)


@dataclass
class FilterBank:
    """Radial filter profiles realized on the frequency lattice of a torus.

    Levels: "lowpass" applies phi_hat(|xi|); level j >= 1 applies
    psi_hat(2^{-j} |xi|), supported in 2^{j-1} < |xi| < 2^{j+1}.
    """

    d: int
    L: float
    resolution: int
    J: int
    freq_radius: np.ndarray = field(repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def nyquist(self) -> float:
        return self.resolution / (4.0 * self.L)

    def multiplier(self, level) -> np.ndarray:
        if level in self._cache:
            return self._cache[level]
        if level == "lowpass" or level == 0:
            m = _lowpass_profile(self.freq_radius)
        else:
            j = int(level)
            if j < 1 or j > self.J:
                raise ValueError(f"band level must be in 1..{self.J}, got {level}")
            m = _band_profile(self.freq_radius / 2.0**j)
        self._cache[level] = m
        return m

    def matches(self, f: GridFunction) -> bool:
        return (f.d == self.d and f.resolution == self.resolution
                and math.isclose(f.L, self.L))


def build_filterbank(J: int, L: float, resolution: int, d: int = 2) -> FilterBank:
    """Filter bank on the frequency lattice of [-L, L)^d at `resolution`.

    Requires 2^J at or below the lattice Nyquist frequency
    resolution/(4L) so the top band is representable.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    if resolution < 8 or resolution & (resolution - 1):
        raise ValueError("resolution must be a power of two >= 8")
    nyq = resolution / (4.0 * L)
    if 2.0**J > nyq:
        raise ValueError(f"J={J} exceeds Nyquist capacity (2^J > {nyq:g})")
    h = 2.0 * L / resolution
    freqs = np.fft.fftfreq(resolution, d=h)
    grids = np.meshgrid(*([freqs] * d), indexing="ij")
    radius = np.sqrt(sum(g**2 for g in grids))
    return FilterBank(d, L, resolution, J, radius)


def partition_defect(bank: FilterBank) -> float:
    """Max deviation of phi_hat + sum_j psi_hat(2^-j .) from 1.

    Measured over lattice frequencies with |xi| <= 2^(J-1), where the
    truncated sum must telescope to exactly 1.
    """
    total = bank.multiplier("lowpass").copy()
    for j in range(1, bank.J + 1):
        total = total + bank.multiplier(j)
    mask = bank.freq_radius <= 2.0 ** (bank.J - 1)
    return float(np.max(np.abs(total[mask] - 1.0)))


def apply_filter(f: GridFunction, bank: FilterBank, level) -> GridFunction:
    """Fourier-multiplier application of the lowpass or a band profile."""
    if not bank.matches(f):
        raise ValueError("grid and filter bank discretizations differ")
    spec = np.fft.fftn(f.values)
    out = np.fft.ifftn(spec * bank.multiplier(level)).real
    return GridFunction(f.L, f.resolution, out)


def highpass(f: GridFunction, bank: FilterBank) -> GridFunction:
    """f minus its lowpass part: the multiplier 1 - phi_hat."""
    low = apply_filter(f, bank, "lowpass")
    return GridFunction(f.L, f.resolution, f.values - low.values)


class GridInterpolant:
    """Cubic-spline evaluation of a GridFunction at arbitrary points.

    mode "zero" treats the function as 0 outside the box (right for
    compactly supported data); mode "wrap" extends periodically (the
    torus semantics of the frequency operations).
    """

    def __init__(self, gf: GridFunction, mode: str = "zero"):
        self.d = gf.d
        self.L = gf.L
        self.h = gf.spacing
        if mode == "zero":
            self._mode = "constant"
        elif mode == "wrap":
            self._mode = "grid-wrap"
        else:
            raise ValueError(f"unknown mode {mode!r}")
        self._coef = spline_filter(gf.values, order=3, mode=self._mode)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"points have dimension {x.shape[-1]}, expected {self.d}")
        idx = (x + self.L - 0.5 * self.h) / self.h
        coords = np.moveaxis(idx, -1, 0).reshape(self.d, -1)
        out = map_coordinates(self._coef, coords, order=3, prefilter=False,
                              mode=self._mode, cval=0.0)
        return out.reshape(x.shape[:-1])


def sphere_multiplier(d: int, rho) -> np.ndarray:
    """Fourier transform of the surface measure of S^{d-1} at radius rho.

    sigma_hat(xi) = 2 pi |xi|^{-(d-2)/2} J_{(d-2)/2}(2 pi |xi|), with
    value surface_area(d) at xi = 0.
    """
    rho = np.asarray(rho, dtype=float)
    nu = (d - 2) / 2.0
    out = np.full(rho.shape, surface_area(d))
    big = rho > 1e-12
    r = rho[big]
    out[big] = 2.0 * math.pi * r ** (-nu) * jv(nu, 2.0 * math.pi * r)
    return out


def grid_single_average(f: GridFunction, t: float) -> GridFunction:
    """Single-function sphere average A^1_t on the torus, via the multiplier.

    Exact for band-limited grid data; the real-space quadrature in
    :mod:`sphavg.averages` provides the independent route.
    """
    if t <= 0:
        raise ValueError("scale t must be positive")
    h = f.spacing
    freqs = np.fft.fftfreq(f.resolution, d=h)
    grids = np.meshgrid(*([freqs] * f.d), indexing="ij")
    radius = np.sqrt(sum(g**2 for g in grids))
    spec = np.fft.fftn(f.values) * sphere_multiplier(f.d, t * radius)
    return GridFunction(f.L, f.resolution, np.fft.ifftn(spec).real)


def localized_average(grids, bank: FilterBank, levels, t, x,
                      lambda_order: int = 32, base_order: int = 128):
    """Average of band-filtered inputs: A_t applied to psi_{i_k} * f_k.

    `levels` gives one band index >= 1 per input; the filtered grids are
    signed, so the output may be negative.
    """
    grids = list(grids)
    levels = tuple(int(i) for i in levels)
    if len(levels) != len(grids):
        raise ValueError("need one level per input")
    for i in levels:
        if i < 1:
            raise ValueError("localized pieces need band levels >= 1")
    filtered = [GridInterpolant(apply_filter(g, bank, i))
                for g, i in zip(grids, levels)]
    return average_sliced(FunctionTuple(filtered), x, t,
                          lambda_order=lambda_order, base_order=base_order)


@dataclass(frozen=True)
class BPattern:
    """Low/high filter flags, one per input slot."""

    flags: tuple

    def __post_init__(self):
        flags = tuple(self.flags)
        object.__setattr__(self, "flags", flags)
        for fl in flags:
            if fl not in ("low", "high"):
                raise ValueError("pattern flags must be 'low' or 'high'")

    @property
    def n(self) -> int:
        return len(self.flags)


def b_piece_average(grids, bank: FilterBank, pattern: BPattern, t, x,
                    lambda_order: int = 32, base_order: int = 128):
    """Average with each input lowpassed or highpassed per the pattern."""
    grids = list(grids)
    if pattern.n != len(grids):
        raise ValueError("pattern length must equal the number of inputs")
    parts = []
    for g, fl in zip(grids, pattern.flags):
        gf = apply_filter(g, bank, "lowpass") if fl == "low" else highpass(g, bank)
        parts.append(GridInterpolant(gf))
    return average_sliced(FunctionTuple(parts), x, t,
                          lambda_order=lambda_order, base_order=base_order)


@dataclass(frozen=True)
class DecayProbe:
    """Measured L^2 decay of single-function band-localized averages."""

    d: int
    levels: tuple
    log2_ratios: tuple
    slope: float
    fit_levels: tuple


_DECAY_DEFAULTS = {2: dict(resolution=512, L=0.25, a=20000.0),
                   3: dict(resolution=128, L=0.0625, a=20000.0)}


def linear_decay_probe(d: int, levels=tuple(range(1, 9)), lam: float = 1.0,
                       resolution: int | None = None, L: float | None = None,
                       a: float | None = None, band: str = "psi",
                       fit_range=(3, 8)) -> DecayProbe:
    """Measure the L^2 decay rate of band-localized sphere averages.

    For each level i, a Gaussian sampled on the grid is band-filtered at
    level i and averaged over the sphere of radius lam; the probe
    reports log2 of ||A^1_lam(psi_i * f)||_2 / ||psi_i * f||_2 and the
    least-squares slope over the fit window.  The expected slope is
    -(d-1)/2.  With band="lowpass" the same low-frequency piece is used
    at every level, so the ratio is level-independent.
    """
    if d not in (2, 3):
        raise ValueError("decay probe supports d in {2, 3}")
    cfg = _DECAY_DEFAULTS[d]
    resolution = resolution or cfg["resolution"]
    L = L or cfg["L"]
    a = a or cfg["a"]
    min_res = 512 if d == 2 else 128
    if resolution < min_res:
        raise ValueError(f"resolution must be >= {min_res} for d={d}")
    levels = tuple(int(i) for i in levels)
    imax = max(levels)
    nyq = resolution / (4.0 * L)
    if 2.0 ** (imax + 1) > nyq:
        raise ValueError(
            f"resolution too coarse: need Nyquist >= 2^{imax + 1}, have {nyq:g}")

    h = 2.0 * L / resolution
    ax = -L + (np.arange(resolution) + 0.5) * h
    pts = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1)
    f = np.exp(-a * np.sum(pts**2, axis=-1))
    spec = np.fft.fftn(f)

    freqs = np.fft.fftfreq(resolution, d=h)
    grids = np.meshgrid(*([freqs] * d), indexing="ij")
    radius = np.sqrt(sum(g**2 for g in grids))
    sigma = sphere_multiplier(d, lam * radius)

    ratios = []
    for i in levels:
        mult = (_band_profile(radius / 2.0**i) if band == "psi"
                else _lowpass_profile(radius))
        piece = spec * mult
        peak = np.max(np.abs(piece))
        if peak == 0.0:
            raise ValueError(f"no spectral content at level {i}")
        piece = piece / peak
        num = np.linalg.norm(piece * sigma)
        den = np.linalg.norm(piece)
        ratios.append(math.log2(num / den))
    lo, hi = fit_range
    sel = [(i, r) for i, r in zip(levels, ratios) if lo <= i <= hi]
    xs = np.array([i for i, _ in sel], dtype=float)
    ys = np.array([r for _, r in sel])
    slope = float(np.polyfit(xs, ys, 1)[0])
    return DecayProbe(d, levels, tuple(ratios), slope,
                      tuple(int(i) for i in xs))


def hl_maximal(f: GridFunction, x) -> float:
    """Discrete Hardy–Littlewood maximal value at x.

    Max over dyadic radii r = 2^{-m} L, 0 <= m <= log2(resolution), of
    the mean of f over grid cells with center inside B(x, r); an empty
    ball falls back to the nearest cell.  Requires nonnegative samples.
    """
    if np.min(f.values) < 0:
        raise ValueError("hl_maximal requires nonnegative input values")
    x = np.asarray(x, dtype=float)
    ax = f.axis()
    grids = np.meshgrid(*([ax] * f.d), indexing="ij")
    d2 = sum((g - xi) ** 2 for g, xi in zip(grids, x)).reshape(-1)
    vals = f.values.reshape(-1)
    order = np.argsort(d2)
    d2s = d2[order]
    csum = np.cumsum(vals[order])
    best = 0.0
    for m in range(int(math.log2(f.resolution)) + 1):
        r = f.L * 2.0**-m
        k = int(np.searchsorted(d2s, r * r, side="right"))
        mean = csum[k - 1] / k if k > 0 else vals[order[0]]
        best = max(best, float(mean))
    return best


@dataclass(frozen=True)
class DominationReport:
    """Ratios of the lacunary B-piece maximal to the HL maximal product."""

    pattern: BPattern
    probes: np.ndarray
    numerators: np.ndarray
    denominators: np.ndarray
    ratios: np.ndarray
    max_ratio: float


def b_piece_domination(functions, pattern: BPattern, probes,
                       N: int = 4, L: float = 8.0, resolution: int = 512,
                       lambda_order: int = 32, base_order: int = 128,
                       J: int = 4) -> DominationReport:
    """Compare sup_{|l|<=N} |A^B_{2^-l}| with the product of HL maximals.

    The inputs are sampled on a torus wide enough that evaluations at
    the largest dyadic scale stay honest (out-of-box points read as 0).
    Ratios with zero numerator are reported as 0.
    """
    funcs = functions if isinstance(functions, FunctionTuple) \
        else FunctionTuple(functions)
    if pattern.n != funcs.n:
        raise ValueError("pattern length must equal the tuple arity")
    from .core import sample_grid

    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    bank = build_filterbank(J, L, resolution, d=funcs.d)
    grids = [sample_grid(f, L, resolution) for f in funcs]
    for g in grids:
        if np.min(g.values) < 0:
            raise ValueError("b_piece_domination requires nonnegative inputs")

    parts = []
    for g, fl in zip(grids, pattern.flags):
        gf = apply_filter(g, bank, "lowpass") if fl == "low" else highpass(g, bank)
        parts.append(GridInterpolant(gf))
    piece = FunctionTuple(parts)

    num = np.zeros(probes.shape[0])
    for l in range(-N, N + 1):
        vals = np.abs(average_sliced(piece, probes, 2.0**-l,
                                     lambda_order=lambda_order,
                                     base_order=base_order))
        num = np.maximum(num, np.asarray(vals, dtype=float))

    den = np.ones(probes.shape[0])
    for g in grids:
        den *= np.array([hl_maximal(g, p) for p in probes])

    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(num == 0.0, 0.0, num / den)
    return DominationReport(pattern, probes, num, den, ratios,
                            float(np.max(ratios)))
