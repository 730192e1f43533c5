"""The separator hierarchy: from a periodic base sequence down to the spectrum.

Level ``j`` holds the zeros of the ``j``-th derivative of the real secular
function.  Zeros of consecutive levels interlace, and at the regularity
degree ``r`` the periodic sequence ``(pi/L0)(n + beta)`` interlaces level
``r``.  Each level is then found one cell at a time.

Indices follow the physical staircase: the level-0 zero with index ``n`` is
the ``n``-th positive eigenvalue.  Each level shifts the mean fluctuation by
exactly ``-1/2``, so the Weyl constant of level ``j`` is
``c_j = beta - (r - j)/2`` (mean fluctuation ``c_j - 1/2``).
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .determinant import (DegenerateRootWarning, ExponentialSum, SpectralDeterminant,
                          expand_determinant, find_roots, refine_roots, regularity_degree,
                          staircase_count, _as_real)
from .graph import GraphSpec, BondScatteringMatrix, assemble_bond_scattering, two_bond
from .orbits import Harmonics, delta_fluctuation, logdet_harmonics

MAX_ESCALATION = 5


class HierarchyError(RuntimeError):
    pass


@dataclass(frozen=True)
class LevelSequence:
    """Zeros ``k`` of one level with their staircase indices ``n``."""

    level: int
    n: np.ndarray
    k: np.ndarray
    L0: float

    def __post_init__(self):
        if self.n.shape != self.k.shape:
            raise ValueError("index and root arrays differ in shape")
        if self.k.size > 1 and np.any(np.diff(self.k) <= 0):
            raise ValueError("level roots must be strictly increasing")
        if self.n.size > 1 and np.any(np.diff(self.n) != 1):
            raise ValueError("level indices must be consecutive")

    def __len__(self) -> int:
        return self.k.size

    @property
    def delta(self) -> np.ndarray:
        return self.L0 * self.k / np.pi - self.n

    def spacing(self, m: int = 1) -> np.ndarray:
        """``s_{n,m}`` in units of the mean spacing ``pi/L0``."""
        if m < 1 or len(self) <= m:
            raise ValueError(f"need 1 <= m < {len(self)}")
        return self.L0 / np.pi * (self.k[m:] - self.k[:-m])

    @property
    def ximean(self) -> np.ndarray:
        d = self.delta
        return 0.5 * (d[1:] + d[:-1])

    def trim(self, start: int = 0, stop: int | None = None) -> "LevelSequence":
        sl = slice(start, stop)
        return LevelSequence(self.level, self.n[sl], self.k[sl], self.L0)

    def shifted(self, offset: int) -> "LevelSequence":
        return LevelSequence(self.level, self.n + offset, self.k, self.L0)


def base_separators(n_max: int, L0: float, offset: float = 0.5, n_min: int = 1,
                    level: int = 1) -> LevelSequence:
    """Periodic sequence ``(pi/L0)(n + offset)`` for ``n = n_min..n_max``."""
    if n_max < n_min:
        raise ValueError("n_max must be >= n_min")
    n = np.arange(n_min, n_max + 1, dtype=np.int64)
    return LevelSequence(level, n, np.pi / L0 * (n + offset), L0)


@dataclass(frozen=True)
class Violation:
    level: int
    cell: int  # index n of the cell (k_{n-1}, k_n] of the separators
    count: int  # zeros found in the cell (-1: no sign change)


def bootstrap_level(s: ExponentialSum, seps: LevelSequence,
                    direct: np.ndarray | None = None):
    """Zeros of ``s`` in the separator cells ``(k_{n-1}, k_n)``.

    Returns ``(LevelSequence, violations)``.  Without ``direct`` a cell is
    accepted on a sign change.  With certified zeros ``direct`` it must hold
    exactly one of them.
    """
    if len(seps) < 2:
        raise ValueError("need at least two separators")
    f = _as_real(s)
    lo, hi = seps.k[:-1], seps.k[1:]
    cells = seps.n[1:]
    vals = f.eval(seps.k)
    ok = np.sign(vals[:-1]) * np.sign(vals[1:]) < 0
    counts = np.where(ok, 1, -1)
    if direct is not None:
        c = np.searchsorted(direct, hi, "left") - np.searchsorted(direct, lo, "right")
        counts = np.where(ok | (c != 1), c, counts)
        ok &= c == 1
    bad = [Violation(seps.level - 1, int(n), int(c)) for n, c in zip(cells[~ok], counts[~ok])]
    roots = refine_roots(f, lo[ok], hi[ok])
    if bad:
        return None, bad
    return LevelSequence(seps.level - 1, cells.copy(), roots, seps.L0), bad


def verify_interlacing(upper: LevelSequence, lower: LevelSequence) -> list[int]:
    """Indices ``n`` where ``upper.k[n-1] < lower.k[n] < upper.k[n]`` fails."""
    n_lo = max(upper.n[0] + 1, lower.n[0]) if len(upper) and len(lower) else 0
    n_hi = min(upper.n[-1], lower.n[-1]) if len(upper) and len(lower) else -1
    if n_hi < n_lo:
        return []
    idx = np.arange(n_lo, n_hi + 1)
    u_prev = upper.k[idx - 1 - upper.n[0]]
    u_here = upper.k[idx - upper.n[0]]
    x = lower.k[idx - lower.n[0]]
    bad = ~((u_prev < x) & (x < u_here))
    if len(lower) > 1:
        bad |= np.concatenate([[False], np.diff(lower.k[idx - lower.n[0]]) <= 0])
    return [int(n) for n in idx[bad]]


@dataclass
class HierarchyRun:
    spec: GraphSpec | None
    degree: int
    criterion_degree: int
    beta: float
    levels: dict[int, LevelSequence]
    weyl_offsets: dict[int, float]
    violations: list[Violation] = field(default_factory=list)
    attempts: list[dict] = field(default_factory=list)
    staircase_offsets: dict[int, list[int]] = field(default_factory=dict)
    direct_max_error: float = float("nan")

    @property
    def spreads(self) -> dict[int, float]:
        return {j: float(np.std(lv.delta)) for j, lv in self.levels.items() if len(lv) > 1}

    @property
    def max_abs(self) -> dict[int, float]:
        return {j: float(np.max(np.abs(lv.delta - np.mean(lv.delta))))
                for j, lv in self.levels.items() if len(lv)}

    def spreads_monotone(self) -> bool:
        sp = self.spreads
        js = sorted(sp)
        return all(sp[a] <= sp[b] + 1e-12 for a, b in zip(js[1:], js[:-1]))

    def summary(self) -> dict:
        return {
            "graph": self.spec.name if self.spec else None,
            "degree": self.degree,
            "criterion_degree": self.criterion_degree,
            "beta": self.beta,
            "weyl_offsets": {str(j): c for j, c in self.weyl_offsets.items()},
            "violations": len(self.violations),
            "spreads": {str(j): v for j, v in self.spreads.items()},
            "levels": {str(j): len(lv) for j, lv in self.levels.items()},
            "attempts": self.attempts,
            "direct_max_error": self.direct_max_error,
        }

    def export(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for j, lv in sorted(self.levels.items()):
            p = out / f"level_{j}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["n", "k", "delta"])
                for n, k, d in zip(lv.n, lv.k, lv.delta):
                    w.writerow([int(n), format(float(k), ".17g"), format(float(d), ".17g")])
            paths.append(p)
        p = out / "hierarchy.json"
        p.write_text(json.dumps(self.summary(), indent=2, sort_keys=True))
        paths.append(p)
        return paths


def base_offset(gamma0: float, r: int) -> float:
    """Offset ``beta`` of the base sequence for degree ``r``.

    The base points sit where the leading harmonic of level ``r`` peaks:
    ``beta = gamma0 - r/2`` modulo 1, taken in ``(r/2, r/2 + 1]``.
    """
    g = (gamma0 - r / 2) % 1.0
    beta = g + np.floor(r / 2)
    while beta <= r / 2 + 1e-12:
        beta += 1.0
    while beta > r / 2 + 1 + 1e-12:
        beta -= 1.0
    return float(beta)


def _level_sums(det: SpectralDeterminant, r: int) -> dict[int, ExponentialSum]:
    return {j: det.level(j) for j in range(r + 1)}


def run_hierarchy(spec: GraphSpec, n_max: int, *, det: SpectralDeterminant | None = None,
                  S: BondScatteringMatrix | None = None, audit: bool = True,
                  max_escalation: int = MAX_ESCALATION) -> HierarchyRun:
    """Bootstrap levels ``r+1 -> 0`` covering about ``n_max`` eigenvalues.

    Each level is audited against certified zeros of its own function; if a
    cell away from ``k = 0`` fails, the degree is raised and the run
    repeated.  Cells failing next to ``k = 0`` (where zeros of several
    levels coincide) are trimmed instead.
    """
    S = S if S is not None else assemble_bond_scattering(spec)
    det = det if det is not None else expand_determinant(S)
    L0, gamma0 = det.L0, det.gamma0
    r0 = regularity_degree(det).degree
    attempts = []
    last_bad: list[Violation] = []
    for r in range(r0, r0 + max_escalation + 1):
        beta = base_offset(gamma0, r)
        n_top = n_max + r + 3
        base = base_separators(n_top, L0, beta, n_min=0, level=r + 1)
        k_top = base.k[-1]
        k_floor = 1e-6 * np.pi / L0
        sums = _level_sums(det, r)
        levels = {r + 1: base}
        direct_roots: dict[int, np.ndarray] = {}
        ok = True
        seps = base
        for j in range(r + 1, 0, -1):
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DegenerateRootWarning)
                direct = find_roots(sums[j - 1], k_floor, k_top)
            degenerate = any(issubclass(w.category, DegenerateRootWarning) for w in caught)
            if degenerate and j == 1:
                raise HierarchyError("degenerate eigenvalue detected; hierarchy refused")
            direct_roots[j - 1] = direct
            lvl, bad = bootstrap_level(sums[j - 1], seps, direct if audit else None)
            if bad:
                # drop failing cells that sit in an initial run next to k = 0
                first_good = _initial_trim(seps, bad)
                if first_good is None:
                    last_bad = bad
                    ok = False
                    break
                seps = seps.trim(first_good)
                lvl, bad = bootstrap_level(sums[j - 1], seps, direct if audit else None)
                if bad:
                    last_bad = bad
                    ok = False
                    break
                levels[j] = seps
            levels[j - 1] = lvl
            seps = lvl
        attempts.append({"degree": r, "beta": beta, "ok": ok,
                         "violations": len(last_bad) if not ok else 0})
        if ok:
            break
    else:
        raise HierarchyError(f"interlacing failed up to degree {r0 + max_escalation}: "
                             f"first bad cells {[v.cell for v in last_bad[:5]]}")
    # relabel so level-0 indices count positive eigenvalues
    counts0 = np.searchsorted(direct_roots[0], levels[1].k, "right")
    offs = counts0 - levels[1].n
    if offs.size and np.any(offs != offs[0]):
        raise HierarchyError("staircase offsets not constant across separators")
    shift = int(offs[0]) if offs.size else 0
    levels = {j: lv.shifted(shift) for j, lv in levels.items()}
    beta -= shift
    weyl = {j: beta - (r - j) / 2 for j in range(r + 2)}
    run = HierarchyRun(spec, r, r0, beta, levels, weyl, [], attempts)
    for j in range(r + 1, 0, -1):
        lower = direct_roots[j - 1]
        cnt = np.searchsorted(lower, levels[j].k, "right")
        run.staircase_offsets[j - 1] = sorted(set((cnt - levels[j].n).tolist()))
    lvl0 = levels[0]
    sel = (direct_roots[0] > levels[1].k[0]) & (direct_roots[0] < levels[1].k[-1])
    ref = direct_roots[0][sel]
    if ref.size != len(lvl0):
        raise HierarchyError("level-0 count disagrees with direct root isolation")
    run.direct_max_error = float(np.max(np.abs(ref - lvl0.k))) if ref.size else 0.0
    return run


def _initial_trim(seps: LevelSequence, bad: list[Violation]) -> int | None:
    """Position after the last bad cell if every bad cell lies within 2 mean cells of 0."""
    limit = 2 * np.pi / seps.L0
    pos = np.searchsorted(seps.n, [v.cell for v in bad])
    if np.all(seps.k[pos] <= limit + seps.k[0]):
        return int(pos.max())
    return None


def check_staircase(S: BondScatteringMatrix, seps: LevelSequence) -> np.ndarray:
    """``N(k_n) - n`` at separator points, from eigenphase winding."""
    return staircase_count(S, seps.k) - seps.n


# ---------------------------------------------------------------------------
# closed-form recursions


def recursion_step(kind: str, upper: LevelSequence, h: Harmonics, weyl_offset: float,
                   m: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Level ``j-1`` samples from level-``j`` fluctuations and level-``(j-1)`` weights.

    ``kind`` is ``"delta"``, ``"spacing"`` (with ``m``) or ``"ximean"``.
    Returns ``(n, values)`` with ``n`` the level ``j-1`` indices.
    """
    d = upper.delta
    n = upper.n[1:]
    delta = delta_fluctuation(h, n, d[1:], d[:-1], weyl_offset)
    if kind == "delta":
        return n, delta
    if kind == "spacing":
        if m < 1 or delta.size <= m:
            raise ValueError("bad neighbour order")
        return n[:-m], m + delta[m:] - delta[:-m]
    if kind == "ximean":
        return n[1:], 0.5 * (delta[1:] + delta[:-1])
    raise ValueError(f"unknown recursion kind {kind!r}")


def deformed_two_bond_S(spec: GraphSpec, j: int) -> BondScatteringMatrix:
    """Bond scattering matrix whose spectral determinant vanishes with level ``j``.

    Reflectivity becomes ``omega^j r`` with ``omega = (l1 - l2)/L0``; for odd
    ``j`` the legs on the first bond pick up a quarter-period phase.
    """
    if spec.name != "two_bond" or spec.n_bonds != 2:
        raise ValueError("deformation is defined for the two-bond family only")
    if j < 0:
        raise ValueError("j must be >= 0")
    l1, l2 = spec.lengths
    r = float(spec.vertices[1].scattering)
    omega = (l1 - l2) / (l1 + l2)
    S = assemble_bond_scattering(two_bond(l1, l2, omega ** j * r))
    if j % 2:
        T = S.T.copy()
        T[:, 0:2] *= 1j
        S = BondScatteringMatrix(T, S.lengths, S.bond_of, S.n_bonds, S.bond_lengths)
    return S


def level_harmonics(spec: GraphSpec, j: int, m_max: int) -> Harmonics:
    """Per-vector weights of the deformed two-bond determinant for level ``j``."""
    S = deformed_two_bond_S(spec, j)
    det = expand_determinant(S)
    return logdet_harmonics(det.raw, S.bond_lengths, m_max)
