"""Scaling quantum graphs and their directed-bond scattering matrices.

A graph is a list of bonds (edges with metric lengths) and a scattering rule
per vertex.  Directed bond ``2*e`` runs ``a -> b`` along bond ``e`` and
``2*e + 1`` runs ``b -> a``.  The bond scattering matrix is ``S(k) = T D(k)``
with ``D(k) = diag(exp(i l_b k))``, so ``T[i, j]`` is the amplitude for a wave
that has just traversed directed bond ``j`` to continue on directed bond ``i``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Union

import numpy as np

UNITARITY_TOL = 1e-12

Scattering = Union[str, float, np.ndarray]


class GraphSpecError(ValueError):
    """Raised when a graph specification violates its invariants."""


@dataclass(frozen=True)
class Bond:
    a: Any
    b: Any
    length: float


@dataclass(frozen=True)
class Vertex:
    """A vertex and its scattering rule.

    ``scattering`` is ``"kirchhoff"``, ``"dirichlet"``, ``"neumann"``, a float
    reflectivity ``r`` (valence-2 vertices only) or an explicit complex
    matrix indexed by the incident bond ends in bond-list order.
    """

    id: Any
    scattering: Scattering = "kirchhoff"


@dataclass(frozen=True)
class GraphSpec:
    bonds: tuple[Bond, ...]
    vertices: tuple[Vertex, ...]
    name: str = ""

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([b.length for b in self.bonds], dtype=float)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.lengths))

    @property
    def bond_frequencies(self) -> np.ndarray:
        """Omega_i = pi l_i / L0; these sum to pi."""
        return np.pi * self.lengths / self.total_length

    def vertex(self, vid) -> Vertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise KeyError(vid)

    def incidence(self) -> dict[Any, list[tuple[int, int]]]:
        """Map vertex id -> list of (bond index, end) with end 0 at ``a``, 1 at ``b``."""
        inc: dict[Any, list[tuple[int, int]]] = {v.id: [] for v in self.vertices}
        for e, bond in enumerate(self.bonds):
            inc.setdefault(bond.a, []).append((e, 0))
            inc.setdefault(bond.b, []).append((e, 1))
        return inc

    def to_dict(self) -> dict:
        verts = []
        for v in self.vertices:
            s = v.scattering
            if isinstance(s, str):
                rule: Any = s
            elif isinstance(s, np.ndarray):
                rule = {"matrix": [[[float(z.real), float(z.imag)] for z in row] for row in s]}
            else:
                rule = {"r": float(s)}
            verts.append({"id": v.id, "scattering": rule})
        return {
            "name": self.name,
            "bonds": [{"a": b.a, "b": b.b, "length": b.length} for b in self.bonds],
            "vertices": verts,
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text


def _parse_scattering(rule) -> Scattering:
    if isinstance(rule, str):
        if rule not in ("kirchhoff", "dirichlet", "neumann"):
            raise GraphSpecError(f"unknown scattering rule {rule!r}")
        return rule
    if isinstance(rule, dict):
        if "r" in rule:
            return float(rule["r"])
        if "matrix" in rule:
            m = np.array(rule["matrix"], dtype=float)
            if m.ndim != 3 or m.shape[2] != 2:
                raise GraphSpecError("matrix entries must be [re, im] pairs")
            return m[..., 0] + 1j * m[..., 1]
    raise GraphSpecError(f"cannot parse scattering rule {rule!r}")


def spec_from_dict(data: dict) -> GraphSpec:
    try:
        bonds = tuple(Bond(b["a"], b["b"], float(b["length"])) for b in data["bonds"])
    except (KeyError, TypeError) as exc:
        raise GraphSpecError(f"malformed bond list: {exc}") from exc
    declared = {v["id"]: _parse_scattering(v.get("scattering", "kirchhoff"))
                for v in data.get("vertices", [])}
    ids: list = []
    for b in bonds:
        for vid in (b.a, b.b):
            if vid not in ids:
                ids.append(vid)
    for vid in declared:
        if vid not in ids:
            ids.append(vid)
    vertices = tuple(Vertex(vid, declared.get(vid, "kirchhoff")) for vid in ids)
    return GraphSpec(bonds, vertices, name=str(data.get("name", "")))


def load_spec(path: str | Path) -> GraphSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# vertex scattering matrices


def reflectivity_matrix(r: float) -> np.ndarray:
    """Valence-2 scatterer: ``r`` back into the first bond, ``-r`` into the second."""
    t = np.sqrt(max(0.0, 1.0 - r * r))
    return np.array([[r, t], [t, -r]], dtype=complex)


def kirchhoff_matrix(valence: int) -> np.ndarray:
    return 2.0 / valence * np.ones((valence, valence)) - np.eye(valence)


def vertex_matrix(vertex: Vertex, valence: int) -> np.ndarray:
    s = vertex.scattering
    if isinstance(s, str):
        if s == "kirchhoff":
            return kirchhoff_matrix(valence).astype(complex)
        if s == "neumann":
            if valence != 1:
                raise GraphSpecError(f"neumann rule needs valence 1 at vertex {vertex.id!r}")
            return np.ones((1, 1), dtype=complex)
        if valence != 1:
            raise GraphSpecError(f"dirichlet rule needs valence 1 at vertex {vertex.id!r}")
        return -np.ones((1, 1), dtype=complex)
    if isinstance(s, np.ndarray):
        if s.shape != (valence, valence):
            raise GraphSpecError(
                f"vertex {vertex.id!r}: matrix shape {s.shape} does not match valence {valence}")
        return s.astype(complex)
    if valence != 2:
        raise GraphSpecError(f"reflectivity rule needs valence 2 at vertex {vertex.id!r}")
    if abs(s) > 1:
        raise GraphSpecError(f"vertex {vertex.id!r}: |r| = {abs(s)} > 1")
    return reflectivity_matrix(s)


# ---------------------------------------------------------------------------
# validation


def _is_connected(spec: GraphSpec) -> bool:
    ids = [v.id for v in spec.vertices]
    if not ids:
        return False
    adj: dict[Any, set] = {vid: set() for vid in ids}
    for b in spec.bonds:
        adj.setdefault(b.a, set()).add(b.b)
        adj.setdefault(b.b, set()).add(b.a)
    seen = {ids[0]}
    stack = [ids[0]]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(adj)


def validate_spec(spec: GraphSpec) -> list[str]:
    """Return the list of violated invariants; empty when the spec is valid."""
    problems = []
    if not spec.bonds:
        problems.append("graph has no bonds")
    for e, b in enumerate(spec.bonds):
        if not np.isfinite(b.length) or b.length <= 0:
            problems.append(f"bond {e}: non-positive length {b.length}")
    if spec.bonds and spec.total_length > 0:
        if abs(spec.bond_frequencies.sum() - np.pi) > 1e-12:
            problems.append("bond frequencies do not sum to pi")
    if not _is_connected(spec):
        problems.append("graph is not connected")
    inc = spec.incidence()
    for v in spec.vertices:
        valence = len(inc.get(v.id, []))
        if valence == 0:
            problems.append(f"vertex {v.id!r} has no incident bonds")
            continue
        s = v.scattering
        if isinstance(s, float) and abs(s) > 1:
            problems.append(f"vertex {v.id!r}: flux conservation t^2 + r^2 = 1 violated (r = {s})")
            continue
        try:
            sigma = vertex_matrix(v, valence)
        except GraphSpecError as exc:
            problems.append(str(exc))
            continue
        dev = np.max(np.abs(sigma.conj().T @ sigma - np.eye(valence)))
        if dev > UNITARITY_TOL:
            problems.append(f"vertex {v.id!r}: scattering matrix not unitary (deviation {dev:.3g})")
    return problems


def rational_length_warnings(spec: GraphSpec, max_denominator: int = 50,
                             tol: float = 1e-9) -> list[str]:
    """Flag l_i / L0 ratios that sit on a small-denominator rational."""
    out = []
    L0 = spec.total_length
    for e, b in enumerate(spec.bonds):
        x = b.length / L0
        frac = Fraction(x).limit_denominator(max_denominator)
        if abs(float(frac) - x) < tol:
            out.append(f"bond {e}: l/L0 = {frac} is rational; equidistribution of "
                       "bond phases fails")
    return out


def check_spec(spec: GraphSpec) -> GraphSpec:
    problems = validate_spec(spec)
    if problems:
        raise GraphSpecError("; ".join(problems))
    for msg in rational_length_warnings(spec):
        warnings.warn(msg, stacklevel=2)
    return spec


# ---------------------------------------------------------------------------
# directed-bond scattering


@dataclass(frozen=True)
class BondScatteringMatrix:
    """``S(k) = T @ diag(exp(1j * lengths * k))`` on directed bonds."""

    T: np.ndarray
    lengths: np.ndarray
    bond_of: np.ndarray  # undirected bond index of each directed bond
    n_bonds: int
    bond_lengths: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.T.shape[0]

    @property
    def total_length(self) -> float:
        return float(self.bond_lengths.sum())

    def __call__(self, k: float) -> np.ndarray:
        return self.T * np.exp(1j * self.lengths * k)[None, :]

    def reverse(self, b: int) -> int:
        return b ^ 1

    def successors(self, b: int, tol: float = 0.0) -> list[tuple[int, complex]]:
        col = self.T[:, b]
        return [(int(i), complex(col[i])) for i in np.flatnonzero(np.abs(col) > tol)]

    def unitarity_defect(self) -> float:
        n = self.size
        return float(np.max(np.abs(self.T.conj().T @ self.T - np.eye(n))))


def assemble_bond_scattering(spec: GraphSpec) -> BondScatteringMatrix:
    check_spec(spec)
    nb = spec.n_bonds
    T = np.zeros((2 * nb, 2 * nb), dtype=complex)
    inc = spec.incidence()
    for v in spec.vertices:
        ends = inc[v.id]
        sigma = vertex_matrix(v, len(ends))
        # a directed bond arrives at v through an end and leaves through an end;
        # end (e, 0) sits at a: arriving bond is b->a (2e+1), leaving is a->b (2e)
        arriving = [2 * e + 1 if end == 0 else 2 * e for e, end in ends]
        leaving = [2 * e if end == 0 else 2 * e + 1 for e, end in ends]
        for i, out_b in enumerate(leaving):
            for j, in_b in enumerate(arriving):
                T[out_b, in_b] = sigma[i, j]
    lengths = np.repeat(spec.lengths, 2)
    T = _clean(T)
    bsm = BondScatteringMatrix(T, lengths, np.repeat(np.arange(nb), 2), nb, spec.lengths)
    if bsm.unitarity_defect() > UNITARITY_TOL:
        raise GraphSpecError(f"bond scattering matrix not unitary "
                             f"(deviation {bsm.unitarity_defect():.3g})")
    return bsm


def _clean(T: np.ndarray) -> np.ndarray:
    T = T.copy()
    T.real[np.abs(T.real) < 1e-15] = 0.0
    T.imag[np.abs(T.imag) < 1e-15] = 0.0
    return T


# ---------------------------------------------------------------------------
# named families


def two_bond(l1: float, l2: float, r: float) -> GraphSpec:
    """Two bonds with Dirichlet ends and a reflectivity-``r`` vertex between them."""
    _check_lengths([l1, l2])
    _check_reflectivity(r)
    return GraphSpec(
        (Bond("L", "M", float(l1)), Bond("M", "R", float(l2))),
        (Vertex("L", "dirichlet"), Vertex("M", float(r)), Vertex("R", "dirichlet")),
        name="two_bond",
    )


def linear_chain(lengths, reflectivities=None, ends: str = "dirichlet") -> GraphSpec:
    """Chain of bonds; interior vertices are dressed valence-2 scatterers."""
    _check_lengths(lengths)
    n = len(lengths)
    if reflectivities is None:
        reflectivities = [0.5] * (n - 1)
    if len(reflectivities) != n - 1:
        raise GraphSpecError("linear chain needs one reflectivity per interior vertex")
    for r in reflectivities:
        _check_reflectivity(r)
    bonds = tuple(Bond(i, i + 1, float(l)) for i, l in enumerate(lengths))
    verts = [Vertex(0, ends)]
    verts += [Vertex(i + 1, float(r)) for i, r in enumerate(reflectivities)]
    verts.append(Vertex(n, ends))
    return GraphSpec(bonds, tuple(verts), name="linear_chain")


def star(lengths, ends: str = "neumann") -> GraphSpec:
    _check_lengths(lengths)
    bonds = tuple(Bond(0, i + 1, float(l)) for i, l in enumerate(lengths))
    verts = (Vertex(0, "kirchhoff"),) + tuple(Vertex(i + 1, ends) for i in range(len(lengths)))
    return GraphSpec(bonds, verts, name="star")


def complete(n_vertices: int, lengths) -> GraphSpec:
    """Fully connected graph with Kirchhoff vertices; bonds in (i, j), i < j order."""
    pairs = [(i, j) for i in range(n_vertices) for j in range(i + 1, n_vertices)]
    if len(lengths) != len(pairs):
        raise GraphSpecError(f"complete graph on {n_vertices} vertices needs {len(pairs)} lengths")
    _check_lengths(lengths)
    bonds = tuple(Bond(i, j, float(l)) for (i, j), l in zip(pairs, lengths))
    verts = tuple(Vertex(i, "kirchhoff") for i in range(n_vertices))
    return GraphSpec(bonds, verts, name="complete")


def build_named_spec(name: str, **params) -> GraphSpec:
    builders = {"two_bond": two_bond, "linear_chain": linear_chain,
                "star": star, "complete": complete}
    if name not in builders:
        raise GraphSpecError(f"unknown graph family {name!r}")
    return check_spec(builders[name](**params))


def builtin_names() -> list[str]:
    """Names of the example graphs shipped with the package."""
    root = resources.files("qgraph") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_builtin(name: str) -> GraphSpec:
    path = resources.files("qgraph") / "data" / f"{name}.json"
    if not path.is_file():
        raise GraphSpecError(f"unknown built-in graph {name!r}; choose from {builtin_names()}")
    return spec_from_dict(json.loads(path.read_text()))


def _check_lengths(lengths) -> None:
    for l in lengths:
        if not l > 0:
            raise GraphSpecError(f"bond lengths must be positive, got {l}")


def _check_reflectivity(r) -> None:
    if not -1.0 <= r <= 1.0:
        raise GraphSpecError(f"reflectivity must satisfy |r| <= 1, got {r}")
