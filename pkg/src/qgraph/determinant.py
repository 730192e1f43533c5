"""Spectral determinant det(1 - S(k)) as a finite exponential sum.

For a scaling graph ``det(1 - T D(k))`` is a polynomial in the bond phases
``z_e = exp(i l_e k)`` with every exponent in {0, 1, 2}.  The coefficient of
each monomial is a signed sum of principal minors of ``T``, which gives the
exact expansion without symbolic algebra.

Unitarity of ``S`` implies ``Delta = det(-S) * conj(Delta)``, so the rotated
function ``F(k) = exp(-i (L0 k - pi gamma0)) Delta(k)`` is real for real
``k``.  ``F`` and its derivatives are the functions whose roots build the
spectral hierarchy; derivatives are always taken of ``F``, never of the
complex ``Delta``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import BondScatteringMatrix

MAX_SYMBOLIC_SIZE = 16
LENGTH_MERGE_TOL = 1e-12
_CHUNK = 4096


class DeterminantError(ValueError):
    pass


class DegenerateRootWarning(UserWarning):
    pass


class RootFindingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExponentialSum:
    """``f(k) = sum_j c_j exp(i L_j k)`` with strictly increasing ``L_j``.

    ``exponents`` optionally records the integer bond-multiplicity vector
    behind every length (``None`` once lengths have been merged across
    different vectors).
    """

    amplitudes: np.ndarray
    lengths: np.ndarray
    exponents: np.ndarray | None = None

    def __post_init__(self):
        if np.any(np.diff(self.lengths) <= 0):
            raise ValueError("lengths must be strictly increasing")

    @property
    def n_terms(self) -> int:
        return len(self.lengths)

    def __call__(self, k) -> np.ndarray:
        return evaluate(self, k)

    def derivative(self, j: int = 1) -> "ExponentialSum":
        return differentiate(self, j)

    def lipschitz(self, order: int = 1) -> float:
        """Upper bound of ``|f^(order)|`` on the real line."""
        return float(np.sum(np.abs(self.amplitudes) * np.abs(self.lengths) ** order))

    def to_json(self) -> list[dict]:
        return [{"re": float(c.real), "im": float(c.imag), "length": float(L)}
                for c, L in zip(self.amplitudes, self.lengths)]


def make_sum(amplitudes, lengths, exponents=None, tol: float = LENGTH_MERGE_TOL,
             drop: float = 0.0) -> ExponentialSum:
    """Sort by length, merge duplicate lengths and drop negligible terms."""
    amplitudes = np.asarray(amplitudes, dtype=complex)
    lengths = np.asarray(lengths, dtype=float)
    order = np.argsort(lengths, kind="stable")
    amplitudes, lengths = amplitudes[order], lengths[order]
    if exponents is not None:
        exponents = np.asarray(exponents)[order]
    groups = np.concatenate([[0], np.flatnonzero(np.diff(lengths) > tol) + 1])
    merged = len(groups) < len(lengths)
    amps = np.add.reduceat(amplitudes, groups) if len(lengths) else amplitudes
    lens = lengths[groups] if len(lengths) else lengths
    exps = None
    if exponents is not None and not merged:
        exps = exponents
    elif exponents is not None:
        bounds = np.append(groups, len(lengths))
        same = all(np.all(exponents[a:b] == exponents[a]) for a, b in zip(bounds[:-1], bounds[1:]))
        if same:
            exps = exponents[groups]
    keep = np.abs(amps) > drop
    return ExponentialSum(amps[keep], lens[keep], None if exps is None else exps[keep])


def evaluate(s: ExponentialSum, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    flat = k.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for i in range(0, flat.size, _CHUNK):
        kk = flat[i:i + _CHUNK]
        out[i:i + _CHUNK] = _expi(kk, s.lengths) @ s.amplitudes
    return out.reshape(k.shape)


def differentiate(s: ExponentialSum, j: int = 1, scale: float = 1.0) -> ExponentialSum:
    """j-th derivative, optionally divided by ``scale**j`` to keep magnitudes O(1)."""
    if j < 0:
        raise ValueError("derivative order must be non-negative")
    if j == 0:
        return s
    factor = (1j * s.lengths / scale) ** j
    amps = s.amplitudes * factor
    keep = s.lengths != 0
    exps = None if s.exponents is None else s.exponents[keep]
    return ExponentialSum(amps[keep], s.lengths[keep], exps)


# ---------------------------------------------------------------------------
# expansion


@dataclass(frozen=True)
class SpectralDeterminant:
    """Expanded ``Delta(k) = det(1 - S(k))`` with its canonical metadata.

    ``raw`` holds Delta itself (lengths in [0, 2 L0]).  In the canonical
    form ``Delta = prefactor * (1 + exp(2i(L0 k - pi gamma0)) - sum_i a_i
    exp(2i(L_i k - pi gamma_i)))`` the arrays ``a``, ``half_lengths`` and
    ``gammas`` hold the interior terms.  ``secular`` is the real rotated
    function centred on zero frequency.
    """

    raw: ExponentialSum
    L0: float
    gamma0: float
    prefactor: complex
    a: np.ndarray
    half_lengths: np.ndarray
    gammas: np.ndarray
    secular: ExponentialSum
    bond_lengths: np.ndarray = field(repr=False)

    @property
    def n_terms(self) -> int:
        return self.raw.n_terms

    def level(self, j: int) -> ExponentialSum:
        """``F^(j) / L0**j``: the scaled j-th derivative of the real secular function."""
        return differentiate(self.secular, j, scale=self.L0)

    def level_phase(self, j: int) -> float:
        """gamma of the leading harmonic of ``F^(j)``: ``2|c| cos(L0 k - pi gamma_j)``."""
        return (self.gamma0 - 0.5 * j) % 2.0


def _principal_minor_coefficients(T: np.ndarray, bond_of: np.ndarray, n_bonds: int):
    n = T.shape[0]
    coeffs: dict[tuple, complex] = {(0,) * n_bonds: 1.0 + 0j}
    for size in range(1, n + 1):
        subsets = np.array(list(itertools.combinations(range(n), size)), dtype=np.intp)
        blocks = T[subsets[:, :, None], subsets[:, None, :]]
        dets = np.linalg.det(blocks) * (-1) ** size
        mult = np.zeros((len(subsets), n_bonds), dtype=np.int64)
        for col in range(size):
            np.add.at(mult, (np.arange(len(subsets)), bond_of[subsets[:, col]]), 1)
        for m, d in zip(map(tuple, mult), dets):
            coeffs[m] = coeffs.get(m, 0.0) + d
    return coeffs


def expand_determinant(S: BondScatteringMatrix, tol: float = 1e-13) -> SpectralDeterminant:
    if S.size > MAX_SYMBOLIC_SIZE:
        raise DeterminantError(
            f"{S.size} directed bonds exceed the expansion limit {MAX_SYMBOLIC_SIZE}; "
            "use numeric_secular for evaluation-only work")
    if S.unitarity_defect() > 1e-10:
        raise DeterminantError("T is not unitary")
    coeffs = _principal_minor_coefficients(S.T, S.bond_of, S.n_bonds)
    exps = np.array(list(coeffs.keys()), dtype=np.int64)
    amps = np.array(list(coeffs.values()), dtype=complex)
    keep = np.abs(amps) > tol
    exps, amps = exps[keep], amps[keep]
    lens = exps @ S.bond_lengths
    raw = make_sum(amps, lens, exps)
    L0 = S.total_length
    c0 = raw.amplitudes[0]
    top = raw.amplitudes[-1]
    if abs(raw.lengths[0]) > 1e-12 or abs(raw.lengths[-1] - 2 * L0) > 1e-9 * L0:
        raise DeterminantError("expansion does not span [0, 2 L0]")
    if abs(abs(c0) - abs(top)) > 1e-9:
        raise DeterminantError("canonicalization failed: |leading| != |trailing|")
    ratio = top / c0
    gamma0 = float((-np.angle(ratio) / (2 * np.pi)) % 1.0)
    interior = slice(1, raw.n_terms - 1)
    ci = raw.amplitudes[interior] / c0
    a = np.abs(ci)
    gammas = (-np.angle(-ci) / (2 * np.pi)) % 1.0
    half = raw.lengths[interior] / 2.0
    secular = _centre(raw, L0, gamma0)
    return SpectralDeterminant(raw, L0, gamma0, complex(c0), a, half, gammas, secular,
                               S.bond_lengths.copy())


def _centre(raw: ExponentialSum, L0: float, gamma0: float) -> ExponentialSum:
    """Rotate by exp(-i(L0 k - pi gamma0)) and enforce exact conjugate symmetry."""
    amps = raw.amplitudes / raw.amplitudes[0] * np.exp(1j * np.pi * gamma0)
    lens = raw.lengths - L0
    # pair lambda with -lambda (the list is symmetric up to rounding)
    rev_amps = np.conj(amps[::-1])
    if np.max(np.abs(lens + lens[::-1])) > 1e-9 * max(L0, 1.0):
        raise DeterminantError("secular function is not conjugate-symmetric")
    sym = 0.5 * (amps + rev_amps)
    defect = np.max(np.abs(amps - rev_amps))
    if defect > 1e-8:
        warnings.warn(f"rotated determinant deviates from a real function by {defect:.2e}")
    lens = 0.5 * (lens - lens[::-1])
    exps = raw.exponents
    return ExponentialSum(sym, lens, exps)


def real_secular(det: SpectralDeterminant, k, j: int = 0) -> np.ndarray:
    """Real value of ``F^(j)(k) / L0**j``; same real zeros as Delta for j = 0."""
    return np.real(evaluate(det.level(j), k))


def numeric_secular(S: BondScatteringMatrix, k, gamma0: float | None = None) -> np.ndarray:
    """Dense-determinant evaluation of ``F(k)``; usable for any graph size."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if gamma0 is None:
        gamma0 = float((-np.angle(np.linalg.det(S.T)) / (2 * np.pi)) % 1.0)
    n = S.size
    L0 = S.total_length
    mats = np.eye(n)[None] - S.T[None] * _expi(k, S.lengths)[:, None, :]
    d = np.linalg.det(mats)
    return np.real(d * np.exp(-1j * (L0 * k - np.pi * gamma0)))


# ---------------------------------------------------------------------------
# regularity


@dataclass(frozen=True)
class RegularityReport:
    degree: int
    sigmas: list[float]

    def as_dict(self) -> dict:
        return {"degree": self.degree, "sigmas": self.sigmas}


def regularity_degree(det: SpectralDeterminant, max_degree: int = 10_000) -> RegularityReport:
    """Minimal r with ``sum_i |a_i (L_i / L0)^r| < 1``."""
    ratio = det.half_lengths / det.L0
    if np.any(ratio >= 1) or np.any(ratio < 0):
        raise DeterminantError("interior lengths must satisfy 0 <= L_i < L0")
    sigmas = []
    for r in range(max_degree + 1):
        s = float(np.sum(np.abs(det.a * ratio ** r)))
        sigmas.append(s)
        if s < 1.0:
            return RegularityReport(r, sigmas)
    raise DeterminantError("regularity criterion did not terminate")


# ---------------------------------------------------------------------------
# roots


_SPLIT = 134217729.0  # 2^27 + 1


def _expi(k: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """``exp(i outer(k, lam))`` with the product rounding error put back.

    At large ``k`` the rounding of ``lam * k`` dominates the evaluation
    error; an error-free two-product recovers it to first order.
    """
    a = k[:, None]
    b = lam[None, :]
    p = a * b
    ca, cb = _SPLIT * a, _SPLIT * b
    ah = ca - (ca - a)
    al = a - ah
    bh = cb - (cb - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return np.exp(1j * p) * (1.0 + 1j * err)


@dataclass(frozen=True)
class _Real:
    """Real-valued view of a conjugate-symmetric exponential sum on lambda >= 0."""

    b: np.ndarray
    lam: np.ndarray

    @classmethod
    def from_sum(cls, s: ExponentialSum) -> "_Real":
        pos = s.lengths > 0
        zero = np.isclose(s.lengths, 0.0, atol=1e-14)
        b = np.concatenate([[np.sum(s.amplitudes[zero]).real], 2 * s.amplitudes[pos]])
        lam = np.concatenate([[0.0], s.lengths[pos]])
        return cls(b, lam)

    def eval(self, k: np.ndarray, order: int = 0) -> np.ndarray:
        coef = self.b * (1j * self.lam) ** order
        out = np.empty(k.shape, dtype=float)
        for i in range(0, k.size, _CHUNK):
            kk = k[i:i + _CHUNK]
            out[i:i + _CHUNK] = np.real(_expi(kk, self.lam) @ coef)
        return out

    def eval2(self, k: np.ndarray):
        c0, c1 = self.b, self.b * (1j * self.lam)
        f = np.empty(k.shape, dtype=float)
        g = np.empty(k.shape, dtype=float)
        for i in range(0, k.size, _CHUNK):
            E = _expi(k[i:i + _CHUNK], self.lam)
            f[i:i + _CHUNK] = np.real(E @ c0)
            g[i:i + _CHUNK] = np.real(E @ c1)
        return f, g

    def derivs(self, k: np.ndarray, order: int) -> np.ndarray:
        """Rows F, F', ..., F^(order) at ``k``."""
        coef = self.b[None, :] * (1j * self.lam[None, :]) ** np.arange(order + 1)[:, None]
        out = np.empty((order + 1, k.size), dtype=float)
        for i in range(0, k.size, _CHUNK):
            E = _expi(k[i:i + _CHUNK], self.lam)
            out[:, i:i + _CHUNK] = np.real(E @ coef.T).T
        return out

    def bound(self, order: int) -> float:
        return float(np.sum(np.abs(self.b) * self.lam ** order))


def _as_real(s) -> _Real:
    return s if isinstance(s, _Real) else _Real.from_sum(s)


def isolate_roots(s, k_min: float, k_max: float, step: float | None = None,
                  max_depth: int = 60, taylor_order: int = 4):
    """Certified bracketing of the real zeros of a real exponential sum.

    Each cell is tested with a Taylor expansion about its midpoint whose
    remainder is bounded by the global derivative bound ``sum |b| lam^P``.
    A cell is dropped when ``|F|`` cannot reach zero, accepted when ``F'``
    cannot vanish and ``F`` changes sign, and halved otherwise.

    Both tests carry a rounding allowance, so a cell where ``F`` is at the
    evaluation noise floor throughout is never accepted.  Returns
    ``(lo, hi, degenerate)``: brackets holding exactly one simple zero each,
    plus midpoints of unresolved cells (multiple-zero candidates), i.e. cells
    shrunk to relative width 1e-12 or indistinguishable from zero.
    """
    if not k_min < k_max:
        raise ValueError("need k_min < k_max")
    f = _as_real(s)
    P = taylor_order
    lam_max = float(np.max(f.lam)) if f.lam.size else 1.0
    if step is None:
        step = np.pi / (4 * 2 * lam_max)
    mP = f.bound(P)
    noise = 16 * np.finfo(float).eps * np.array([f.bound(q) for q in range(P)])
    fact = np.array([math.factorial(q) for q in range(P + 1)], dtype=float)
    n = max(1, int(np.ceil((k_max - k_min) / step)))
    grid = np.linspace(k_min, k_max, n + 1)
    fg = f.eval(grid)
    lo, hi, flo, fhi = grid[:-1], grid[1:], fg[:-1], fg[1:]
    out_lo, out_hi, degenerate = [], [], []
    for _depth in range(max_depth):
        if lo.size == 0:
            break
        mid = 0.5 * (lo + hi)
        rho = 0.5 * (hi - lo)
        der = f.derivs(mid, P - 1)  # shape (P, n)
        powers = rho[None, :] ** np.arange(P)[:, None] / fact[:P, None]
        tail_f = np.sum(np.abs(der[1:]) * powers[1:], axis=0) + mP * rho ** P / fact[P]
        tail_g = np.sum(np.abs(der[2:]) * powers[1:P - 1], axis=0) + \
            mP * rho ** (P - 1) / fact[P - 1]
        excluded = np.abs(der[0]) > tail_f + noise[0]
        monotone = np.abs(der[1]) > tail_g + noise[1]
        flat = np.abs(der[0]) + tail_f <= noise[0]
        change = np.sign(flo) * np.sign(fhi) < 0
        zero_hi = fhi == 0.0
        one = ~excluded & monotone & (change | zero_hi)
        none = excluded | (monotone & ~change & ~zero_hi)
        out_lo.append(lo[one])
        out_hi.append(hi[one])
        rest = ~(one | none)
        tiny = rest & ((rho < 1e-12 * np.maximum(1.0, np.abs(mid))) | flat)
        degenerate.extend(mid[tiny])
        rest &= ~tiny
        lo, hi, flo, fhi, mid, fm = lo[rest], hi[rest], flo[rest], fhi[rest], mid[rest], der[0][rest]
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        flo, fhi = np.concatenate([flo, fm]), np.concatenate([fm, fhi])
    else:
        if lo.size:
            raise RootFindingError("root isolation exceeded its subdivision budget")
    lo = np.concatenate(out_lo) if out_lo else np.empty(0)
    hi = np.concatenate(out_hi) if out_hi else np.empty(0)
    order = np.argsort(lo)
    return lo[order], hi[order], np.array(sorted(degenerate))


def refine_roots(s, lo, hi, xtol: float = 1e-15, max_iter: int = 100) -> np.ndarray:
    """Vectorized safeguarded Newton inside brackets that each hold one sign change."""
    f = _as_real(s)
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if lo.size == 0:
        return lo
    flo = f.eval(lo)
    fhi = f.eval(hi)
    x = 0.5 * (lo + hi)
    done = np.zeros(lo.shape, dtype=bool)
    done |= flo == 0
    x[flo == 0] = lo[flo == 0]
    hit = (fhi == 0) & ~done
    x[hit] = hi[hit]
    done |= hit
    sgn_lo = np.sign(flo)
    for _ in range(max_iter):
        act = ~done
        if not act.any():
            break
        xa = x[act]
        fx, gx = f.eval2(xa)
        a, b = lo[act], hi[act]
        left = np.sign(fx) == sgn_lo[act]
        a = np.where(left, xa, a)
        b = np.where(left, b, xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xa - fx / gx
        bad = ~np.isfinite(xn) | (xn <= a) | (xn >= b)
        xn = np.where(bad, 0.5 * (a + b), xn)
        conv = (fx == 0) | (np.abs(xn - xa) <= xtol * np.maximum(1.0, np.abs(xa))) | \
            (b - a <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(xa)))
        lo[act], hi[act] = a, b
        x[act] = np.where(fx == 0, xa, xn)
        idx = np.flatnonzero(act)
        done[idx[conv]] = True
    return x


def origin_noise_radius(s, max_order: int = 64) -> float:
    """Radius around ``k = 0`` where a multiple zero at the origin drowns in rounding noise.

    With ``F(k) ~ F^(p)(0) k^p / p!`` the function stays below the
    evaluation noise floor for ``|k|`` under the returned radius; zero when
    ``F(0)`` is clearly nonzero.
    """
    f = _as_real(s)
    eps = 16 * np.finfo(float).eps
    for q in range(max_order + 1):
        d = abs(float(f.derivs(np.array([0.0]), q)[q, 0]))
        if d > 1e3 * eps * f.bound(q):
            if q == 0:
                return 0.0
            return 2.0 * (math.factorial(q) * eps * f.bound(0) / d) ** (1.0 / q)
    raise RootFindingError("function vanishes identically near k = 0")


def find_roots(s, k_min: float, k_max: float, step: float | None = None,
               dedup_tol: float = 1e-9) -> np.ndarray:
    """Sorted real zeros of a real exponential sum in ``(k_min, k_max]``.

    Degenerate (multiplicity >= 2) zeros are reported twice with a warning.
    Unresolved cells inside ``origin_noise_radius`` belong to a multiple zero
    at ``k = 0`` and are discarded.
    """
    lo, hi, degenerate = isolate_roots(s, k_min, k_max, step=step)
    roots = refine_roots(s, lo, hi)
    if degenerate.size and degenerate[0] < 1.0:
        radius = origin_noise_radius(s)
        degenerate = degenerate[degenerate >= radius]
    if degenerate.size:
        warnings.warn(f"{degenerate.size} unresolved cells treated as double roots",
                      DegenerateRootWarning)
        clusters = _cluster(degenerate, 1e-7)
        roots = np.sort(np.concatenate([roots, np.repeat(clusters, 2)]))
    roots = roots[(roots > k_min) & (roots <= k_max)]
    if roots.size > 1:
        gaps = np.diff(roots)
        dup = np.concatenate([[False], gaps < dedup_tol])
        # repeated double roots are intentional; collapse only near-coincident simple roots
        if degenerate.size == 0:
            roots = roots[~dup]
    return roots


def _cluster(points: np.ndarray, tol: float) -> np.ndarray:
    if points.size == 0:
        return points
    groups = np.split(points, np.flatnonzero(np.diff(points) > tol) + 1)
    return np.array([g.mean() for g in groups])


# ---------------------------------------------------------------------------
# staircase


class BoundaryWarning(UserWarning):
    pass


def _phase_sum(S: BondScatteringMatrix, k: np.ndarray):
    mats = S.T[None] * np.exp(1j * np.outer(k, S.lengths))[:, None, :]
    ev = np.linalg.eigvals(mats)
    ph = np.angle(ev) % (2 * np.pi)
    near = np.minimum(ph, 2 * np.pi - ph)
    return ph, near


def staircase_count(S: BondScatteringMatrix, k, boundary_tol: float = 1e-12):
    """Number of eigenvalues in ``(0, k]`` from the winding of the eigenphases of S.

    Eigenphases of ``S(k')`` increase monotonically with ``k'`` and the sum of
    the unwrapped phases equals ``arg det T + 2 L0 k``; subtracting the
    principal phases at ``k`` leaves ``2 pi`` times the number of crossings
    of phase zero, i.e. the number of roots of det(1 - S).
    """
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(k_arr <= 0):
        raise ValueError("staircase_count needs k > 0")
    ph0, near0 = _phase_sum(S, np.array([0.0]))
    ph0 = np.where(near0 < 1e-9, 0.0, ph0)
    base = ph0.sum()
    out = np.empty(k_arr.shape, dtype=np.int64)
    L0 = S.total_length
    for i in range(0, k_arr.size, 512):
        kk = k_arr[i:i + 512]
        ph, near = _phase_sum(S, kk)
        if np.any(near < boundary_tol):
            warnings.warn("k within tolerance of an eigenvalue; returning the upper count",
                          BoundaryWarning)
        ph = np.where(near < boundary_tol, 0.0, ph)
        w = (base + 2 * L0 * kk - ph.sum(axis=1)) / (2 * np.pi)
        out[i:i + 512] = np.rint(w).astype(np.int64)
    return int(out[0]) if np.ndim(k) == 0 else out


def find_roots_numeric(S: BondScatteringMatrix, k_min: float, k_max: float,
                       step: float | None = None) -> np.ndarray:
    """Evaluation-only root finder: staircase counts isolate, dense determinants refine."""
    from scipy.optimize import brentq

    L0 = S.total_length
    gamma0 = float((-np.angle(np.linalg.det(S.T)) / (2 * np.pi)) % 1.0)
    step = step or np.pi / (8 * L0)
    grid = np.linspace(k_min, k_max, max(2, int(np.ceil((k_max - k_min) / step))) + 1)
    counts = staircase_count(S, grid)
    cells = [(grid[i], grid[i + 1], counts[i + 1] - counts[i]) for i in range(len(grid) - 1)]
    roots = []
    F = lambda x: float(numeric_secular(S, x, gamma0)[0])
    while cells:
        a, b, c = cells.pop()
        if c == 0:
            continue
        if c == 1:
            fa, fb = F(a), F(b)
            if fb == 0:
                roots.append(b)
            elif fa * fb < 0:
                roots.append(brentq(F, a, b, xtol=1e-15, rtol=1e-15))
                continue
            else:
                raise RootFindingError(f"no sign change in counted cell ({a}, {b})")
            continue
        if b - a < 1e-10:
            roots.extend([0.5 * (a + b)] * c)
            continue
        m = 0.5 * (a + b)
        cm = staircase_count(S, m)
        ca = staircase_count(S, a)
        cells.append((a, m, cm - ca))
        cells.append((m, b, c - (cm - ca)))
    return np.sort(np.array(roots))
