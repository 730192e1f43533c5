"""Prime periodic orbits on the directed-bond graph and their series weights.

The counting function has the exact expansion

    N(k) = Nbar(k) + (1/pi) Im sum_{p, nu} (A_p^nu / nu) exp(i nu L_p k),

where ``A_p`` is the product of ``T`` entries along the prime cycle ``p``.
Orbits sharing a bond-multiplicity vector share a frequency, so most series
only need the weights summed per vector ("harmonics").  Those sums are also
the coefficients of ``-log det(1 - T Z)`` as a power series in the bond
phases, which gives an enumeration-free route used for cross-checks.
"""

from __future__ import annotations

import warnings
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import sympy

from .graph import BondScatteringMatrix


@dataclass(frozen=True)
class PeriodicOrbit:
    code: tuple[int, ...]
    m: tuple[int, ...]
    length: float
    amplitude: complex
    omega: float

    @property
    def scatterings(self) -> int:
        return len(self.code)

    def code_string(self) -> str:
        return "-".join(map(str, self.code))


@dataclass(frozen=True)
class Harmonics:
    """Series weights summed per bond-multiplicity vector.

    ``weights[i]`` multiplies ``exp(i lengths[i] k)`` in the staircase series;
    ``omegas = pi * lengths / L0``.
    """

    m: np.ndarray
    lengths: np.ndarray
    weights: np.ndarray
    L0: float

    @property
    def omegas(self) -> np.ndarray:
        return np.pi * self.lengths / self.L0

    @property
    def order(self) -> np.ndarray:
        return self.m.sum(axis=1)

    def truncate(self, m_max: int) -> "Harmonics":
        keep = self.order <= m_max
        return Harmonics(self.m[keep], self.lengths[keep], self.weights[keep], self.L0)

    def truncate_length(self, length_max: float) -> "Harmonics":
        keep = self.lengths <= length_max
        return Harmonics(self.m[keep], self.lengths[keep], self.weights[keep], self.L0)

    def __len__(self) -> int:
        return len(self.lengths)


@dataclass(frozen=True)
class OrbitEnsemble:
    orbits: tuple[PeriodicOrbit, ...]
    m_max: int
    bond_lengths: np.ndarray
    truncated: bool = False
    tail_estimate: float = float("nan")
    census: dict = field(default_factory=dict)

    @property
    def L0(self) -> float:
        return float(self.bond_lengths.sum())

    def __len__(self) -> int:
        return len(self.orbits)

    def repetitions(self, m_max: int | None = None):
        """Yield (m vector, length, weight A^nu / nu, nu, prime orbit)."""
        m_max = self.m_max if m_max is None else m_max
        for p in self.orbits:
            nu = 1
            while nu * p.scatterings <= m_max:
                yield (tuple(nu * x for x in p.m), nu * p.length,
                       p.amplitude ** nu / nu, nu, p)
                nu += 1

    def harmonics(self, m_max: int | None = None, drop: float = 0.0) -> Harmonics:
        acc: dict[tuple, complex] = defaultdict(complex)
        for mv, _L, w, _nu, _p in self.repetitions(m_max):
            acc[mv] += w
        return _harmonics_from_dict(acc, self.bond_lengths, drop)

    def table(self) -> list[dict]:
        return [{"code": p.code_string(), "m": list(p.m), "length": p.length,
                 "re_A": p.amplitude.real, "im_A": p.amplitude.imag,
                 "omega": p.omega, "scatterings": p.scatterings} for p in self.orbits]


def _harmonics_from_dict(acc, bond_lengths, drop=0.0) -> Harmonics:
    items = [(mv, w) for mv, w in acc.items() if abs(w) > drop and any(mv)]
    items.sort(key=lambda kv: (sum(kv[0]), kv[0]))
    nb = len(bond_lengths)
    if not items:
        return Harmonics(np.zeros((0, nb), dtype=np.int64), np.zeros(0), np.zeros(0, complex),
                         float(np.sum(bond_lengths)))
    m = np.array([kv[0] for kv in items], dtype=np.int64)
    w = np.array([kv[1] for kv in items], dtype=complex)
    return Harmonics(m, m @ bond_lengths, w, float(np.sum(bond_lengths)))


def _canonical(code: tuple[int, ...]) -> tuple[int, ...]:
    n = len(code)
    return min(code[i:] + code[:i] for i in range(n))


def _is_primitive(code: tuple[int, ...]) -> bool:
    n = len(code)
    for d in range(1, n):
        if n % d == 0 and code == code[d:] + code[:d]:
            return False
    return True


def enumerate_prime_orbits(S: BondScatteringMatrix, m_max: int, tol: float = 1e-14,
                           budget: int = 2_000_000) -> OrbitEnsemble:
    """All prime cycles with at most ``m_max`` scatterings, one canonical rotation each.

    Depth-first search from every directed bond ``s`` through bonds ``>= s``;
    a closed walk is kept when it is the minimal rotation of itself and not a
    power of a shorter cycle.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    n = S.size
    succ = [[(i, a) for i, a in S.successors(b, tol)] for b in range(n)]
    L0 = S.total_length
    orbits = []
    truncated = False
    for s in range(n):
        stack = [(s, (s,), 1.0 + 0j)]
        while stack:
            b, path, amp = stack.pop()
            for nxt, a in succ[b]:
                if nxt == s:
                    code = path
                    if code == _canonical(code) and _is_primitive(code):
                        orbits.append(_make_orbit(code, amp * a, S, L0))
                        if len(orbits) >= budget:
                            truncated = True
                            break
                if nxt >= s and len(path) < m_max:
                    stack.append((nxt, path + (nxt,), amp * a))
            if truncated:
                break
        if truncated:
            warnings.warn(f"orbit budget {budget} reached; ensemble truncated")
            break
    orbits.sort(key=lambda p: (p.scatterings, p.code))
    return OrbitEnsemble(tuple(orbits), m_max, S.bond_lengths.copy(), truncated,
                         census=prime_cycle_census(S, m_max, tol))


def _make_orbit(code, amp, S: BondScatteringMatrix, L0: float) -> PeriodicOrbit:
    m = np.zeros(S.n_bonds, dtype=np.int64)
    for b in code:
        m[S.bond_of[b]] += 1
    length = float(m @ S.bond_lengths)
    return PeriodicOrbit(tuple(code), tuple(int(x) for x in m), length, complex(amp),
                         np.pi * length / L0)


def prime_cycle_census(S: BondScatteringMatrix, m_max: int, tol: float = 1e-14) -> dict[int, int]:
    """Number of prime cycles of each length from traces of the adjacency powers."""
    adj = (np.abs(S.T) > tol).astype(object)
    traces = {}
    power = np.identity(S.size, dtype=object)
    for m in range(1, m_max + 1):
        power = power.dot(adj)
        traces[m] = int(np.trace(power))
    out = {}
    for m in range(1, m_max + 1):
        total = sum(int(sympy.mobius(d)) * traces[m // d] for d in sympy.divisors(m))
        out[m] = total // m
    return out


def orbit_amplitude(p: PeriodicOrbit, S: BondScatteringMatrix) -> complex:
    amp = 1.0 + 0j
    code = p.code
    for i, b in enumerate(code):
        nxt = code[(i + 1) % len(code)]
        a = S.T[nxt, b]
        if a == 0:
            raise KeyError(f"orbit {p.code_string()} uses a missing transition {b}->{nxt}")
        amp *= a
    return complex(amp)


# ---------------------------------------------------------------------------
# enumeration-free route


def logdet_harmonics(raw, bond_lengths, m_max: int, drop: float = 0.0) -> Harmonics:
    """Per-vector weights as the coefficients of ``-log Delta(z)`` up to total degree m_max.

    ``raw`` is the expanded determinant (an ExponentialSum with exponent
    vectors).  Uses ``d f_d = d g_d - sum_{k<d} k f_k g_{d-k}`` for
    ``f = log g`` graded by total degree.
    """
    if raw.exponents is None:
        raise ValueError("determinant terms lack exponent vectors")
    c0 = raw.amplitudes[0]
    g: dict[int, dict[tuple, complex]] = defaultdict(dict)
    for mv, c in zip(map(tuple, raw.exponents), raw.amplitudes):
        g[sum(mv)][mv] = g[sum(mv)].get(mv, 0) + c / c0
    f: dict[int, dict[tuple, complex]] = {}
    for d in range(1, m_max + 1):
        acc: dict[tuple, complex] = defaultdict(complex)
        for mv, c in g.get(d, {}).items():
            acc[mv] += d * c
        for k in range(1, d):
            gk = g.get(d - k)
            if not gk:
                continue
            for m1, c1 in f[k].items():
                for m2, c2 in gk.items():
                    acc[tuple(a + b for a, b in zip(m1, m2))] -= k * c1 * c2
        f[d] = {mv: c / d for mv, c in acc.items() if c != 0}
    weights: dict[tuple, complex] = {}
    for d in f:
        for mv, c in f[d].items():
            weights[mv] = -c
    return _harmonics_from_dict(weights, np.asarray(bond_lengths, dtype=float), drop)


# ---------------------------------------------------------------------------
# series built on the weights


def expansion_coefficients(h: Harmonics, kind: str, m: int = 1) -> np.ndarray:
    """Per-harmonic coefficients of the regular-level series.

    kind ``"C"``: fluctuation delta_n; ``"D"``: m-neighbour separation;
    ``"E"``: neighbour mean xi_n; ``"H"``: energy fluctuation.
    """
    A, w, L0 = h.weights, h.omegas, h.L0
    if np.any(w <= 0):
        raise ValueError("orbit frequencies must be positive")
    if kind == "C":
        return 2 / np.pi * A / w * np.sin(w / 2)
    if kind == "D":
        if m < 1:
            raise ValueError("D coefficients need m >= 1")
        return 4 / L0 * A / w * np.sin(w / 2) * np.sin(w * m / 2)
    if kind == "E":
        return 1 / np.pi * A / w * np.sin(w)
    if kind == "H":
        return 2 * np.pi / L0 ** 2 * A / w * (2 / w * np.sin(w / 2) - np.cos(w / 2))
    raise ValueError(f"unknown coefficient kind {kind!r}")


ENERGY_SHIFT = lambda L0: np.pi ** 2 / (12 * L0 ** 2)  # noqa: E731


def delta_fluctuation(h: Harmonics, n, d_prev=0.5, d_prevm1=0.5, weyl_offset: float = 0.5):
    """delta_n at level j-1 from the separator fluctuations at level j.

    ``d_prev`` and ``d_prevm1`` are delta_n and delta_{n-1} of the separators
    (scalars or arrays aligned with ``n``).  ``weyl_offset`` is the constant
    ``c`` of ``Nbar(k) = L0 k / pi - c`` for the staircase being integrated;
    ``c = 1/2`` recovers the plain Dirichlet-staircase form.
    """
    n = np.asarray(n, dtype=float)
    d1 = np.broadcast_to(np.asarray(d_prev, dtype=float), n.shape)
    d2 = np.broadcast_to(np.asarray(d_prevm1, dtype=float), n.shape)
    c = weyl_offset
    shift = (c - 0.5) + c * (d1 - d2) - 0.5 * (d1 ** 2 - d2 ** 2)
    w = h.omegas
    amp = np.abs(h.weights)
    arg = np.angle(h.weights)
    total = np.zeros(n.shape)
    for i0 in range(0, n.size, 2048):
        sl = slice(i0, i0 + 2048)
        nn, a1, a2 = n.ravel()[sl], d1.ravel()[sl], d2.ravel()[sl]
        coef = 2 / np.pi * amp[None, :] / w[None, :] * np.sin(w[None, :] * (1 + a1 - a2)[:, None] / 2)
        phase = w[None, :] * nn[:, None] + w[None, :] * (a1 + a2 - 1)[:, None] / 2 + arg[None, :]
        total.ravel()[sl] = np.sum(coef * np.sin(phase), axis=1)
    return shift - total


class IrregularGraphError(ValueError):
    pass


def eigenvalue_series(h: Harmonics, n, separator_offset: float = 0.5,
                      weyl_offset: float = 0.5, degree: int = 0,
                      allow_irregular: bool = False):
    """(k_n, delta_n) of a regular graph from the orbit series.

    With periodic separators ``(pi/L0)(n + separator_offset)`` and the
    default offsets this is ``k_n = pi n / L0 - (2/L0) sum A/w sin(w/2) sin(w n)``.
    For ``degree > 0`` the periodic cells do not isolate single levels and
    the series is only an approximation.
    """
    if degree > 0:
        if not allow_irregular:
            raise IrregularGraphError(f"graph has regularity degree {degree}; "
                                      "pass allow_irregular=True to evaluate anyway")
        warnings.warn("orbit series evaluated on an irregular graph")
    n = np.asarray(n, dtype=float)
    delta = delta_fluctuation(h, n, separator_offset, separator_offset, weyl_offset)
    return np.pi / h.L0 * (n + delta), delta


def staircase_fluctuation(h: Harmonics, k):
    """Truncated (delta N(k), rho(k)) from the orbit weights."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    E = np.exp(1j * np.outer(k, h.lengths))
    dN = np.imag(E @ h.weights) / np.pi
    rho = h.L0 / np.pi + np.real(E @ (h.lengths * h.weights)) / np.pi
    return dN, rho


def series_tail_bound(h_full: Harmonics, m_cut: int) -> float:
    """``sum_{m_cut < |m|} (2/L0) |A/w|`` over the harmonics available in ``h_full``."""
    keep = h_full.order > m_cut
    return float(2 / h_full.L0 * np.sum(np.abs(h_full.weights[keep]) / h_full.omegas[keep]))
