"""Distributions of spectral quantities: empirical, torus-averaged and recursive.

Along the spectrum the bond phases ``x_i = Omega_i n mod 2 pi`` fill the
subset of the bond torus where ``sum x_i`` is ``0`` or ``pi`` (the bond
frequencies sum to ``pi``).  Quantities written as orbit series are sampled
there: ``N_B - 1`` free angles plus a parity bit.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.stats import qmc

from .hierarchy import LevelSequence
from .orbits import Harmonics, expansion_coefficients

NEGATIVE_DENSITY_FLAG = -1e-3


# ---------------------------------------------------------------------------
# series on the torus


@dataclass(frozen=True)
class CharFnSeries:
    """``z(x) = shift - Re sum_p a_p exp(i <m_p, x>)``, ``a_p = c_p exp(i phi_p)``."""

    shift: float
    amplitudes: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        if self.m.ndim != 2 or self.m.shape[0] != self.amplitudes.shape[0]:
            raise ValueError("one frequency vector per term required")
        if self.amplitudes.size and np.any(~self.m.any(axis=1)):
            raise ValueError("frequency vectors must be nonzero")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ValueError("coefficients must be finite")

    @property
    def coefficients(self) -> np.ndarray:
        return np.abs(self.amplitudes)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.amplitudes)

    @property
    def n_bonds(self) -> int:
        return self.m.shape[1]

    @property
    def radius(self) -> float:
        return float(np.sum(np.abs(self.amplitudes)))

    def scaled(self, factor: float) -> "CharFnSeries":
        return CharFnSeries(self.shift * factor, self.amplitudes * factor, self.m)

    def reduced(self):
        """Exact merge of terms that coincide on the sampling torus.

        Returns ``(m_free, a_even, a_odd)``: frequency vectors on the free
        angles and the amplitudes for parity bit 0 and 1.
        """
        if self.amplitudes.size == 0:
            return np.zeros((0, max(self.n_bonds - 1, 0)), dtype=np.int64), \
                np.zeros(0, complex), np.zeros(0, complex)
        last = self.m[:, -1]
        free = self.m[:, :-1] - last[:, None]
        keys, inv = np.unique(free, axis=0, return_inverse=True)
        inv = inv.ravel()
        sign = np.where(last % 2 == 0, 1.0, -1.0)
        a0 = np.zeros(len(keys), complex)
        a1 = np.zeros(len(keys), complex)
        np.add.at(a0, inv, self.amplitudes)
        np.add.at(a1, inv, self.amplitudes * sign)
        return keys, a0, a1

    def evaluate(self, free: np.ndarray, parity: np.ndarray) -> np.ndarray:
        """Values at torus points given by free angles ``(S, N_B-1)`` and parity bits."""
        keys, a0, a1 = self.reduced()
        out = np.full(free.shape[0], self.shift, dtype=float)
        if keys.shape[0] == 0:
            return out
        for i in range(0, free.shape[0], 8192):
            sl = slice(i, i + 8192)
            E = np.exp(1j * (free[sl] @ keys.T))
            val = np.where(parity[sl] == 0, np.real(E @ a0), np.real(E @ a1))
            out[sl] -= val
        return out


def _weyl_shift(weyl_offset: float) -> float:
    return weyl_offset - 0.5


def delta_series(h: Harmonics, weyl_offset: float = 0.5) -> CharFnSeries:
    """Regular-level fluctuation ``delta_n`` (periodic separators at 1/2)."""
    C = expansion_coefficients(h, "C")
    return CharFnSeries(_weyl_shift(weyl_offset), -1j * C, h.m.copy())


def spacing_series(h: Harmonics, m: int = 1) -> CharFnSeries:
    """``s_{n,m}`` in units of the mean spacing."""
    if m < 1:
        raise ValueError("m must be >= 1")
    C = expansion_coefficients(h, "C")
    w = h.omegas
    return CharFnSeries(float(m), 2 * C * np.sin(w * m / 2) * np.exp(0.5j * w * m), h.m.copy())


def ximean_series(h: Harmonics, weyl_offset: float = 0.5) -> CharFnSeries:
    """``xi_n = (delta_n + delta_{n-1})/2``."""
    E = expansion_coefficients(h, "E")
    return CharFnSeries(_weyl_shift(weyl_offset), -1j * E * np.exp(-0.5j * h.omegas), h.m.copy())


def series_for(kind: str, h: Harmonics, m: int = 1, weyl_offset: float = 0.5) -> CharFnSeries:
    if kind == "delta":
        return delta_series(h, weyl_offset)
    if kind == "spacing":
        return spacing_series(h, m)
    if kind == "ximean":
        return ximean_series(h, weyl_offset)
    raise ValueError(f"unknown series kind {kind!r}")


@dataclass(frozen=True)
class TorusSampler:
    """Scrambled Sobol points on the spectral torus, in independent replicates."""

    n_samples: int = 100_000
    seed: int = 0
    replicates: int = 16

    def __post_init__(self):
        if self.n_samples < 1000:
            raise ValueError("at least 1000 torus samples are required")
        if self.replicates < 2:
            raise ValueError("need >= 2 replicates for error estimates")

    @property
    def per_replicate(self) -> int:
        return 1 << int(np.ceil(np.log2(self.n_samples / self.replicates)))

    def points(self, n_bonds: int):
        """Yield ``(free angles, parity)`` for each replicate."""
        rng = np.random.default_rng(self.seed)
        m = int(np.log2(self.per_replicate))
        for _ in range(self.replicates):
            eng = qmc.Sobol(d=n_bonds, scramble=True, seed=rng)
            u = eng.random_base2(m)
            yield 2 * np.pi * u[:, :n_bonds - 1], (u[:, -1] >= 0.5).astype(np.int8)

    def samples(self, series: CharFnSeries) -> list[np.ndarray]:
        return [series.evaluate(f, p) for f, p in self.points(series.n_bonds)]


def char_function(series: CharFnSeries, t, sampler: TorusSampler):
    """Torus average of ``exp(i t z)`` and its standard error (per ``t``)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    reps = sampler.samples(series)
    return _charfn_from_samples(reps, t)


def _charfn_from_samples(reps: list[np.ndarray], t: np.ndarray):
    means = np.empty((len(reps), t.size), dtype=complex)
    for r, z in enumerate(reps):
        for i in range(0, t.size, 64):
            means[r, i:i + 64] = np.mean(np.exp(1j * np.outer(z, t[i:i + 64])), axis=0)
    F = means.mean(axis=0)
    se = np.std(means, axis=0, ddof=1) / np.sqrt(len(reps))
    F[t == 0] = 1.0
    se[t == 0] = 0.0
    return F, se


# ---------------------------------------------------------------------------
# distributions


@dataclass
class DistributionEstimate:
    edges: np.ndarray
    density: np.ndarray
    n_samples: int
    mean: float
    variance: float
    max: float
    min: float
    source: str
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if np.any(self.density < 0):
            raise ValueError("densities must be non-negative")

    @property
    def centres(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def total(self) -> float:
        return float(np.sum(self.density * self.widths))

    def cdf(self, z) -> np.ndarray:
        cum = np.concatenate([[0.0], np.cumsum(self.density * self.widths)])
        return np.interp(z, self.edges, cum, left=0.0, right=1.0)

    def ks(self, samples) -> float:
        return float(stats.kstest(np.asarray(samples, dtype=float), self.cdf).statistic)

    def ks_to(self, other: "DistributionEstimate", n_grid: int = 20_001) -> float:
        lo = min(self.edges[0], other.edges[0])
        hi = max(self.edges[-1], other.edges[-1])
        z = np.linspace(lo, hi, n_grid)
        z = np.union1d(z, np.union1d(self.edges, other.edges))
        return float(np.max(np.abs(self.cdf(z) - other.cdf(z))))

    def bin_average(self, edges) -> np.ndarray:
        edges = np.asarray(edges, dtype=float)
        return np.diff(self.cdf(edges)) / np.diff(edges)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF draws (uniform within bins)."""
        cum = np.concatenate([[0.0], np.cumsum(self.density * self.widths)])
        cum /= cum[-1]
        return np.interp(rng.random(size), cum, self.edges)

    def to_csv(self, path, header_note: str | None = None) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            if header_note:
                fh.write(f"# {header_note}\n")
            w = csv.writer(fh)
            w.writerow(["bin_lo", "bin_hi", "density"])
            for a, b, d in zip(self.edges[:-1], self.edges[1:], self.density):
                w.writerow([format(float(a), ".17g"), format(float(b), ".17g"), format(float(d), ".17g")])
        return path


def point_mass(value: float, width: float = 1e-9) -> DistributionEstimate:
    edges = np.array([value - width / 2, value + width / 2])
    return DistributionEstimate(edges, np.array([1.0 / width]), 1, value, 0.0, value, value,
                                "point")


def histogram(samples, bins="fd", source: str = "empirical", range_=None) -> DistributionEstimate:
    """Density histogram, Freedman-Diaconis bins by default."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    if np.ptp(x) == 0:
        return point_mass(float(x[0]))
    edges = np.histogram_bin_edges(x, bins=bins, range=range_)
    dens, edges = np.histogram(x, bins=edges, density=True)
    return DistributionEstimate(edges, dens, x.size, float(x.mean()), float(x.var()),
                                float(x.max()), float(x.min()), source)


def empirical_samples(seq: LevelSequence, kind: str, m: int = 1) -> np.ndarray:
    if len(seq) == 0:
        raise ValueError("empty level sequence")
    if kind == "delta":
        return seq.delta
    if kind == "spacing":
        return seq.spacing(m)
    if kind == "ximean":
        if len(seq) < 2:
            raise ValueError("need two levels for neighbour means")
        return seq.ximean
    raise ValueError(f"unknown sample kind {kind!r}")


def _grid_for(lo: float, hi: float, n_bins: int) -> np.ndarray:
    pad = 0.02 * (hi - lo) + 1e-9
    return np.linspace(lo - pad, hi + pad, n_bins + 1)


def invert_samples(reps: list[np.ndarray], edges=None, n_bins: int = 400,
                   sigma: float | None = None, source: str = "charfn") -> DistributionEstimate:
    """Bin-averaged density from torus samples by tapered Fourier inversion.

    Samples are linearly binned on a uniform grid of step ``sigma/4``; the
    characteristic function of the binned measure is taken on the matching
    uniform frequency grid (FFT), multiplied by the taper
    ``exp(-sigma^2 t^2 / 2)`` and transformed back.  The resulting density
    is integrated over the output bins.
    """
    z_all = np.concatenate(reps)
    lo, hi = float(z_all.min()), float(z_all.max())
    flags = []
    if hi - lo < 1e-14:
        edges = _grid_for(lo - 0.5, hi + 0.5, 1) if edges is None else np.asarray(edges, float)
        dens = np.zeros(len(edges) - 1)
        i = min(max(np.searchsorted(edges, lo, "right") - 1, 0), len(dens) - 1)
        dens[i] = 1.0 / (edges[i + 1] - edges[i])
        return DistributionEstimate(edges, dens, z_all.size, lo, 0.0, hi, lo, source, flags)
    edges = _grid_for(lo, hi, n_bins) if edges is None else np.asarray(edges, dtype=float)
    if sigma is None:
        sigma = min(0.5 * float(np.min(np.diff(edges))), (hi - lo) / 2000)
    a = lo - 10 * sigma
    b = hi + 10 * sigma
    step = sigma / 4
    n_grid = int(2 ** np.ceil(np.log2((b - a) / step + 2)))
    if n_grid > 1 << 22:
        raise ValueError("smoothing width too small for the sample range")
    step = (b - a) / (n_grid - 1)
    pos = (z_all - a) / step
    i0 = np.floor(pos).astype(np.int64)
    frac = pos - i0
    weights = np.bincount(i0, 1 - frac, n_grid) + np.bincount(i0 + 1, frac, n_grid)[:n_grid]
    weights /= z_all.size
    t = 2 * np.pi * np.fft.rfftfreq(n_grid, d=step)
    F = np.fft.rfft(weights)  # conj of the characteristic function on the grid
    smooth = np.fft.irfft(F * np.exp(-0.5 * (sigma * t) ** 2), n_grid) / step
    tail = float(np.abs(F[np.searchsorted(t, 6 / sigma) - 1]))
    grid = a + step * np.arange(n_grid)
    if smooth.min() < NEGATIVE_DENSITY_FLAG * smooth.max():
        flags.append(f"negative density {smooth.min():.3g} from inversion")
    smooth = np.clip(smooth, 0.0, None)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (smooth[1:] + smooth[:-1]) * step)])
    cum /= cum[-1]
    dens = np.diff(np.interp(edges, grid, cum, left=0.0, right=1.0)) / np.diff(edges)
    outside = 1.0 - float(np.sum(dens * np.diff(edges)))
    if outside > 1e-9:
        flags.append(f"mass {outside:.3g} outside the requested bins")
    if tail > 1e-4:
        flags.append(f"|F(6/sigma)| = {tail:.2g}: taper-limited resolution sigma = {sigma:.3g}")
    return DistributionEstimate(edges, dens, z_all.size, float(z_all.mean()), float(z_all.var()),
                                hi, lo, source, flags)


def invert_charfn(series: CharFnSeries, sampler: TorusSampler, edges=None, n_bins: int = 400,
                  sigma: float | None = None) -> DistributionEstimate:
    """Density of ``z`` on the torus from its characteristic function."""
    if series.amplitudes.size == 0:
        return invert_samples([np.full(2, series.shift)], edges, n_bins, sigma)
    return invert_samples(sampler.samples(series), edges, n_bins, sigma)


# ---------------------------------------------------------------------------
# equidistribution


@dataclass(frozen=True)
class EquidistributionResult:
    statistics: np.ndarray
    pvalues: np.ndarray
    n: int
    bins: int
    warnings: tuple[str, ...]

    def passed(self, level: float = 0.01) -> bool:
        return bool(np.all(self.pvalues > level))


def equidistribution_test(lengths, N: int = 100_000, bins: int = 64) -> EquidistributionResult:
    """Chi-square test of ``[Omega_i n] mod 2 pi`` over ``n = 1..N`` for each bond."""
    if N < 10_000:
        raise ValueError("N must be >= 10^4")
    lengths = np.asarray(lengths, dtype=float)
    L0 = lengths.sum()
    n = np.arange(1, N + 1)
    chi, p, notes = [], [], []
    for i, l in enumerate(lengths):
        frac = Fraction(l / L0).limit_denominator(10_000)
        if abs(float(frac) - l / L0) < 1e-12:
            msg = f"bond {i}: l/L0 = {frac} is rational; phases take finitely many values"
            warnings.warn(msg)
            notes.append(msg)
        # fraction of a full turn of Omega_i n, Omega_i = pi l_i / L0
        x = np.mod(n * (l / L0), 2.0) / 2.0
        counts, _ = np.histogram(x, bins=bins, range=(0.0, 1.0))
        res = stats.chisquare(counts)
        chi.append(res.statistic)
        p.append(res.pvalue)
    return EquidistributionResult(np.array(chi), np.array(p), N, bins, tuple(notes))


# ---------------------------------------------------------------------------
# two-point functions


@dataclass(frozen=True)
class FormFactor:
    tau: np.ndarray
    value: np.ndarray  # complex
    se: np.ndarray
    route: str
    n_neighbours: int

    def rows(self):
        for t, v, s in zip(self.tau, self.value, self.se):
            yield [format(float(x), ".17g") for x in (t, v.real, v.imag, s)]


def form_factor_direct(seq: LevelSequence, tau, n_neighbours: int, window: int = 10_000) -> FormFactor:
    """Window averages of ``sum_{m<=M} exp(-i (k_{n+m} - k_n) tau)`` with batch-mean errors."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if tau.size == 0:
        raise ValueError("empty tau grid")
    if n_neighbours < 1:
        raise ValueError("need at least one neighbour")
    k = seq.k
    n_use = len(k) - n_neighbours
    if n_use < window:
        raise ValueError("sequence shorter than one averaging window")
    n_win = n_use // window
    vals = np.zeros((n_win, tau.size), dtype=complex)
    for m in range(1, n_neighbours + 1):
        d = (k[m:m + n_win * window] - k[:n_win * window]).reshape(n_win, window)
        for j, t in enumerate(tau):
            vals[:, j] += np.mean(np.exp(-1j * t * d), axis=1)
    mean = vals.mean(axis=0)
    se = np.abs(np.std(vals.real, axis=0, ddof=1) + 1j * np.std(vals.imag, axis=0, ddof=1)) \
        / np.sqrt(n_win) if n_win > 1 else np.full(tau.size, np.nan)
    return FormFactor(tau, mean, se, "direct", n_neighbours)


def form_factor_orbit(h: Harmonics, tau, n_neighbours: int, sampler: TorusSampler) -> FormFactor:
    """Same quantity as a torus average of the spacing series."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if tau.size == 0:
        raise ValueError("empty tau grid")
    if n_neighbours < 1:
        raise ValueError("need at least one neighbour")
    per_rep = None
    scale = np.pi / h.L0
    for m in range(1, n_neighbours + 1):
        reps = sampler.samples(spacing_series(h, m))
        block = np.array([[np.mean(np.exp(-1j * t * scale * z)) for t in tau] for z in reps])
        per_rep = block if per_rep is None else per_rep + block
    mean = per_rep.mean(axis=0)
    se = np.abs(np.std(per_rep.real, axis=0, ddof=1) + 1j * np.std(per_rep.imag, axis=0, ddof=1)) \
        / np.sqrt(per_rep.shape[0])
    return FormFactor(tau, mean, se, "orbit", n_neighbours)


@dataclass(frozen=True)
class PairCorrelation:
    edges: np.ndarray
    value: np.ndarray
    n_neighbours: int
    reliable_below: float
    source: str


def autocorrelation(dists: list[DistributionEstimate], edges,
                    next_dist: DistributionEstimate | None = None) -> PairCorrelation:
    """``R_2`` on bins from the m-neighbour spacing densities, m = 1..len(dists).

    Units are the mean spacing; ``x < 0`` is identically zero.  The result is
    exact below the smallest spacing of order ``len(dists) + 1``, which is
    reported as ``reliable_below``.
    """
    edges = np.asarray(edges, dtype=float)
    total = np.zeros(len(edges) - 1)
    for d in dists:
        total += d.bin_average(edges)
    total[edges[1:] <= 0] = 0.0
    M = len(dists)
    reliable = next_dist.min if next_dist is not None else float(M + 1) - 0.5
    return PairCorrelation(edges, total, M, reliable, "distributions")


def pair_counts(seq: LevelSequence, edges, n_neighbours: int) -> PairCorrelation:
    """Direct ``R_2``: pair separations (units of mean spacing) per level, binned."""
    edges = np.asarray(edges, dtype=float)
    counts = np.zeros(len(edges) - 1)
    N = len(seq) - n_neighbours
    for m in range(1, n_neighbours + 1):
        s = seq.spacing(m)[:N]
        counts += np.histogram(s, bins=edges)[0]
    return PairCorrelation(edges, counts / (N * np.diff(edges)), n_neighbours, float("nan"),
                           "pair counts")


# ---------------------------------------------------------------------------
# hierarchy recursion in the independence approximation


def _delta_at(h: Harmonics, phase: np.ndarray, d1: np.ndarray, d2: np.ndarray,
              weyl_offset: float) -> np.ndarray:
    """Level ``j-1`` fluctuation for torus phases ``<m_p, x>`` (S, P) and separators."""
    c = weyl_offset
    w = h.omegas[None, :]
    A = np.abs(h.weights)[None, :]
    psi = np.angle(h.weights)[None, :]
    dd = (d1 - d2)[:, None]
    coef = 2 / np.pi * A / w * np.sin(w * (1 + dd) / 2)
    arg = phase + w * ((d1 + d2)[:, None] - 1) / 2 + psi
    shift = (c - 0.5) + c * (d1 - d2) - 0.5 * (d1 ** 2 - d2 ** 2)
    return shift - np.sum(coef * np.sin(arg), axis=1)


def distribution_recursion(upper: DistributionEstimate, h: Harmonics, kind: str = "delta",
                           n_samples: int = 100_000, seed: int = 0, weyl_offset: float = 0.5,
                           m: int = 1, edges=None, n_bins: int = 400,
                           replicates: int = 16) -> DistributionEstimate:
    """Level ``j-1`` distribution with separator fluctuations drawn independently from ``upper``."""
    if n_samples < 1000:
        raise ValueError("insufficient samples")
    if abs(upper.total() - 1) > 1e-6:
        raise ValueError("input distribution is not normalized")
    if kind not in ("delta", "spacing", "ximean"):
        raise ValueError(f"unknown recursion kind {kind!r}")
    sampler = TorusSampler(n_samples, seed, replicates)
    rng = np.random.default_rng([seed, 1])
    w = h.omegas[None, :]
    reps = []
    for free, parity in sampler.points(h.m.shape[1]):
        phase = _full_torus(free, parity) @ h.m.T
        S = phase.shape[0]
        if kind == "delta":
            d = upper.sample(2 * S, rng).reshape(2, S)  # delta_{n-1}, delta_n at level j
            z = _delta_at(h, phase, d[1], d[0], weyl_offset)
        elif kind == "spacing":
            d = upper.sample((m + 2) * S, rng).reshape(m + 2, S)  # delta_{n-1} .. delta_{n+m}
            a = _delta_at(h, phase, d[1], d[0], weyl_offset)
            b = _delta_at(h, phase + w * m, d[m + 1], d[m], weyl_offset)
            z = m + b - a
        else:
            d = upper.sample(3 * S, rng).reshape(3, S)  # delta_{n-2}, delta_{n-1}, delta_n
            a = _delta_at(h, phase, d[2], d[1], weyl_offset)
            b = _delta_at(h, phase - w, d[1], d[0], weyl_offset)
            z = 0.5 * (a + b)
        reps.append(z)
    return invert_samples(reps, edges, n_bins, source=f"recursion:{kind}")


def _full_torus(free: np.ndarray, parity: np.ndarray) -> np.ndarray:
    last = (np.pi * parity - free.sum(axis=1)) % (2 * np.pi)
    return np.column_stack([free, last])


# ---------------------------------------------------------------------------
# universality diagnostics


def wigner_cdf(s):
    s = np.asarray(s, dtype=float)
    return np.where(s > 0, 1 - np.exp(-np.pi * s ** 2 / 4), 0.0)


def wigner_pdf(s):
    s = np.asarray(s, dtype=float)
    return np.where(s > 0, np.pi / 2 * s * np.exp(-np.pi * s ** 2 / 4), 0.0)


def staircase_samples(seq: LevelSequence, n_points: int = 100_000, weyl_offset: float | None = None):
    """``N(k) - Nbar(k)`` on a uniform k grid inside the sequence's range."""
    k = np.linspace(seq.k[0], seq.k[-1], n_points, endpoint=False)
    N = seq.n[0] - 1 + np.searchsorted(seq.k, k, "right")
    c = float(np.mean(seq.delta)) + 0.5 if weyl_offset is None else weyl_offset
    return N - (seq.L0 * k / np.pi - c)


def lacunarity_profile(h: Harmonics, n_max: int = 200) -> dict:
    w = np.unique(np.round(h.omegas, 12))
    w = w[w > 0][:n_max + 1]
    ratio = w[1:] / w[:-1]
    kk = np.arange(1, len(ratio) + 1)
    return {"frequencies": w.tolist(), "ratios": ratio.tolist(),
            "alpha": (np.sqrt(kk) * (ratio - 1)).tolist()}


def universality_checks(seq: LevelSequence, h: Harmonics | None = None,
                        n_points: int = 100_000, weyl_offset: float | None = None) -> dict:
    """Gaussian check on the staircase, lacunarity profile and Wigner distance."""
    if len(seq) < 10_000:
        raise ValueError("need at least 10^4 levels")
    dN = staircase_samples(seq, n_points, weyl_offset)
    var = float(np.var(dN))
    gauss = stats.kstest(dN, "norm", args=(float(np.mean(dN)), float(np.std(dN))))
    s = seq.spacing(1)
    wig = stats.kstest(s, wigner_cdf)
    report = {
        "n_levels": len(seq),
        "staircase": {"mean": float(np.mean(dN)), "variance": var,
                      "gaussian_ks": float(gauss.statistic)},
        "spacing": {"mean": float(np.mean(s)), "variance": float(np.var(s)),
                    "max": float(np.max(s)), "wigner_ks": float(wig.statistic)},
    }
    if h is not None:
        sq = float(np.sum(np.abs(h.weights) ** 2))
        delta_inf = 0.5 * sq
        as_var = var / delta_inf if delta_inf else float("nan")
        as_sd = var / delta_inf ** 2 if delta_inf else float("nan")
        report["staircase"].update({
            "delta_inf": delta_inf,
            "ratio_var_over_delta_inf": as_var,
            "ratio_var_over_delta_inf_sq": as_sd,
            "predicted_variance": delta_inf / np.pi ** 2,
            "ratio_var_over_predicted": var / (delta_inf / np.pi ** 2) if delta_inf else float("nan"),
            "closer_reading": "variance" if abs(np.log(as_var)) < abs(np.log(as_sd)) else "std",
            "orbit_order": int(h.order.max()) if len(h) else 0,
        })
        report["lacunarity"] = lacunarity_profile(h)
    return report
