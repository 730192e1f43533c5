import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from qgraph.determinant import expand_determinant, find_roots, staircase_count
from qgraph.graph import assemble_bond_scattering, load_builtin, star, two_bond
from qgraph.orbits import (Harmonics, IrregularGraphError, eigenvalue_series,
                           enumerate_prime_orbits, expansion_coefficients, logdet_harmonics,
                           orbit_amplitude, prime_cycle_census, series_tail_bound,
                           staircase_fluctuation)

L1, L2 = 0.618034, 0.381966


@pytest.fixture(scope="module")
def tb04():
    S = assemble_bond_scattering(two_bond(L1, L2, 0.4))
    return S, expand_determinant(S)


def _brute_force_prime_cycles(S, m):
    """Canonical primitive closed walks of exactly m steps, by exhaustive search."""
    nz = np.abs(S.T) > 1e-14
    found = set()
    for walk in itertools.product(range(S.size), repeat=m):
        if all(nz[walk[(i + 1) % m], walk[i]] for i in range(m)):
            rots = [walk[i:] + walk[:i] for i in range(m)]
            if len(set(rots)) == m:
                found.add(min(rots))
    return found


def test_two_bond_short_orbits():
    r, t = 0.4, np.sqrt(1 - 0.16)
    ens = enumerate_prime_orbits(assemble_bond_scattering(two_bond(L1, L2, r)), 4)
    by_m = {p.m: p for p in ens.orbits}
    assert {(2, 0), (0, 2), (2, 2)} <= set(by_m)
    assert [p.m for p in ens.orbits if p.scatterings == 2] == [(2, 0), (0, 2)]
    assert np.isclose(by_m[(2, 0)].amplitude, -r)
    assert np.isclose(by_m[(0, 2)].amplitude, r)
    # full traversal: two transmissions and two end bounces
    full = [p for p in ens.orbits if p.m == (2, 2)]
    assert any(np.isclose(p.amplitude, t * t) for p in full)
    assert np.isclose(by_m[(2, 0)].length, 2 * L1)
    assert np.isclose(by_m[(2, 0)].omega, np.pi * 2 * L1)


def test_reflection_free_middle_kills_bounces():
    ens = enumerate_prime_orbits(assemble_bond_scattering(two_bond(L1, L2, 0.0)), 8)
    assert all(p.m[0] == p.m[1] for p in ens.orbits)
    assert all(abs(p.amplitude) == pytest.approx(1.0) for p in ens.orbits)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_quadrangle_dfs_matches_brute_force(m):
    S = assemble_bond_scattering(load_builtin("quadrangle"))
    codes = {p.code for p in enumerate_prime_orbits(S, m).orbits if p.scatterings == m}
    assert codes == _brute_force_prime_cycles(S, m)


def test_quadrangle_census_to_six():
    S = assemble_bond_scattering(load_builtin("quadrangle"))
    ens = enumerate_prime_orbits(S, 6)
    counts = {m: sum(p.scatterings == m for p in ens.orbits) for m in range(1, 7)}
    assert counts == prime_cycle_census(S, 6)
    # Moebius inversion of tr(Adj^m) = 0, 12, 24, 84, 240, 732 done by hand
    assert counts == {1: 0, 2: 6, 3: 8, 4: 18, 5: 48, 6: 116}


def test_amplitudes_follow_transitions():
    S = assemble_bond_scattering(load_builtin("quadrangle"))
    for p in enumerate_prime_orbits(S, 5).orbits:
        assert np.isclose(orbit_amplitude(p, S), p.amplitude)


@settings(max_examples=20, deadline=None)
@given(r=st.floats(-0.95, 0.95), l1=st.floats(0.2, 1.5), l2=st.floats(0.2, 1.5),
       n=st.integers(1, 8))
def test_orbit_amplitudes_sum_to_markov_trace(r, l1, l2, n):
    S = assemble_bond_scattering(two_bond(l1, l2, r))
    P = np.abs(S.T) ** 2
    trace = np.trace(np.linalg.matrix_power(P, n))
    ens = enumerate_prime_orbits(S, n)
    total = sum(p.scatterings * abs(p.amplitude) ** (2 * n // p.scatterings)
                for p in ens.orbits if n % p.scatterings == 0)
    assert total == pytest.approx(trace, rel=1e-10, abs=1e-12)
    assert total <= S.size + 1e-9


@settings(max_examples=10, deadline=None)
@given(ls=st.lists(st.floats(0.2, 1.5), min_size=3, max_size=4))
def test_logdet_matches_enumeration(ls):
    S = assemble_bond_scattering(star(ls, ends="dirichlet"))
    det = expand_determinant(S)
    assume(det.raw.exponents is not None)  # coinciding lengths merge terms
    M = 6
    a = enumerate_prime_orbits(S, M).harmonics()
    b = logdet_harmonics(det.raw, S.bond_lengths, M)
    wa = {tuple(m): w for m, w in zip(a.m, a.weights)}
    wb = {tuple(m): w for m, w in zip(b.m, b.weights)}
    for key in set(wa) | set(wb):
        assert abs(wa.get(key, 0) - wb.get(key, 0)) < 1e-12


def test_logdet_two_bond_to_twelve(tb04):
    S, det = tb04
    a = enumerate_prime_orbits(S, 12).harmonics()
    b = logdet_harmonics(det.raw, S.bond_lengths, 12)
    assert len(a) == len(b)
    assert np.allclose(a.weights, b.weights, atol=1e-15)


def test_harmonic_nodes_vanish():
    h = Harmonics(np.array([[2, 0]]), np.array([2.0]), np.array([0.3 + 0.1j]), 1.0)
    assert abs(expansion_coefficients(h, "C")[0]) < 1e-15
    h = Harmonics(np.array([[1, 0]]), np.array([0.5]), np.array([0.3]), 1.0)
    # omega = pi / 2, so omega * m / 2 = pi at m = 4
    assert abs(expansion_coefficients(h, "D", m=4)[0]) < 1e-15


def test_free_graph_series_is_exact():
    S = assemble_bond_scattering(two_bond(L1, L2, 0.0))
    det = expand_determinant(S)
    h = logdet_harmonics(det.raw, S.bond_lengths, 24)
    n = np.arange(1, 200)
    k, delta = eigenvalue_series(h, n)
    assert np.max(np.abs(delta)) < 1e-12
    assert np.allclose(k, np.pi * n / S.total_length, atol=1e-12)


def test_free_graph_staircase_is_a_sawtooth():
    S = assemble_bond_scattering(two_bond(L1, L2, 0.0))
    det = expand_determinant(S)
    h = logdet_harmonics(det.raw, S.bond_lengths, 400)
    cell = np.pi / S.total_length
    n = np.arange(1, 40)
    dN, _ = staircase_fluctuation(h, cell * (n + 0.5))
    assert np.max(np.abs(dN)) < 1e-10
    dN, _ = staircase_fluctuation(h, cell * (n + 0.25))
    assert np.allclose(dN, 0.25, atol=0.01)


def test_staircase_series_tracks_counting(tb04):
    S, det = tb04
    h = logdet_harmonics(det.raw, S.bond_lengths, 200)
    k = np.random.default_rng(8).uniform(5, 200, 300)
    exact = staircase_count(S, k) - (S.total_length * k / np.pi - 0.5)
    dN, _ = staircase_fluctuation(h, k)
    clear = np.abs(exact) > 0.1
    assert np.all(np.sign(dN[clear]) == np.sign(exact[clear]))
    assert np.median(np.abs(dN - exact)) < 0.02


def test_series_first_root_within_tail(tb04):
    S, det = tb04
    h = enumerate_prime_orbits(S, 12).harmonics()
    k1, _ = eigenvalue_series(h, [1])
    oracle = find_roots(det.secular, 0.1, 4.0)[0]
    tail = series_tail_bound(logdet_harmonics(det.raw, S.bond_lengths, 96), 12)
    assert abs(k1[0] - oracle) < tail


def test_series_errors_decrease(tb04):
    S, det = tb04
    oracle = find_roots(det.secular, 1e-6, 502 * np.pi)[:500]
    n = np.arange(1, 501)
    errs = [np.max(np.abs(eigenvalue_series(enumerate_prime_orbits(S, M).harmonics(), n)[0]
                          - oracle)) for M in (4, 8, 12)]
    assert errs[0] >= errs[1] >= errs[2]


def test_fluctuations_have_zero_mean(tb04):
    S, det = tb04
    h = logdet_harmonics(det.raw, S.bond_lengths, 40)
    _, delta = eigenvalue_series(h, np.arange(1, 10_001))
    assert abs(np.mean(delta)) < 1e-3


def test_density_integrates_to_one_per_cell(tb04):
    S, det = tb04
    h = logdet_harmonics(det.raw, S.bond_lengths, 96)
    cell = np.pi / S.total_length
    a = 100.3
    k = np.linspace(a, a + cell, 4001)
    _, rho = staircase_fluctuation(h, k)
    total = np.trapezoid(rho, k)
    counted = staircase_count(S, a + cell) - staircase_count(S, a)
    # the mean over a cell is 1; actual count is 0, 1 or 2 and the series tracks it
    assert abs(total - counted) < series_tail_bound(h, 24) * 2 + 0.2


def test_irregular_graph_refused():
    S = assemble_bond_scattering(two_bond(L1, L2, 0.8))
    h = logdet_harmonics(expand_determinant(S).raw, S.bond_lengths, 8)
    with pytest.raises(IrregularGraphError):
        eigenvalue_series(h, [1, 2, 3], degree=1)
    with pytest.warns(UserWarning):
        eigenvalue_series(h, [1, 2, 3], degree=1, allow_irregular=True)


def test_budget_truncates():
    S = assemble_bond_scattering(load_builtin("quadrangle"))
    with pytest.warns(UserWarning, match="budget"):
        ens = enumerate_prime_orbits(S, 8, budget=50)
    assert ens.truncated and len(ens) == 50
