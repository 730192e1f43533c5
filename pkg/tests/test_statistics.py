import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import j0

from qgraph import statistics as qs
from qgraph.determinant import expand_determinant
from qgraph.graph import assemble_bond_scattering, two_bond
from qgraph.hierarchy import LevelSequence, run_hierarchy
from qgraph.orbits import Harmonics, expansion_coefficients, logdet_harmonics

L1, L2 = 0.618034, 0.381966


@pytest.fixture(scope="module")
def tb04():
    spec = two_bond(L1, L2, 0.4)
    S = assemble_bond_scattering(spec)
    det = expand_determinant(S)
    run = run_hierarchy(spec, 24_000, det=det, S=S)
    h = logdet_harmonics(det.raw, S.bond_lengths, 120)
    return run.levels[0].trim(0, 24_000), h


@pytest.fixture(scope="module")
def sampler():
    return qs.TorusSampler(32_768, seed=11)


def _single_term(c, phase=0.0):
    return qs.CharFnSeries(0.0, np.array([c * np.exp(1j * phase)]), np.array([[1, 0]]))


def test_charfn_at_zero_is_one(tb04, sampler):
    _, h = tb04
    F, se = qs.char_function(qs.delta_series(h), [0.0], sampler)
    assert F[0] == pytest.approx(1.0 + 0j, abs=1e-15)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.01, 3.0), t=st.floats(-40, 40))
def test_charfn_single_term_is_bessel(c, t):
    F, se = qs.char_function(_single_term(c), [t], qs.TorusSampler(16_384, seed=1))
    assert abs(F[0]) <= 1 + 1e-12
    assert abs(F[0] - j0(c * t)) < 4 * se[0] + 1e-5


def test_bessel_by_quadrature():
    c, t = 0.7, 3.1
    val = quad(lambda th: np.cos(t * c * np.cos(th)), 0, 2 * np.pi)[0] / (2 * np.pi)
    F, _ = qs.char_function(_single_term(c, 0.4), [t], qs.TorusSampler(8192, seed=2))
    assert F[0].real == pytest.approx(val, abs=1e-4)


def test_charfn_matches_empirical(tb04, sampler):
    seq, h = tb04
    F, se = qs.char_function(qs.delta_series(h), [1.0], sampler)
    e = np.exp(1j * seq.delta)
    emp = e.mean()
    emp_se = np.hypot(e.real.std(), e.imag.std()) / np.sqrt(e.size)
    assert abs(F[0] - emp) < 3 * np.hypot(se[0], emp_se)


def test_zero_series_gives_point_mass(sampler):
    series = qs.CharFnSeries(0.25, np.zeros(0, complex), np.zeros((0, 2), dtype=int))
    est = qs.invert_charfn(series, sampler, edges=np.linspace(0, 1, 11))
    assert np.count_nonzero(est.density) == 1
    assert est.total() == pytest.approx(1.0)
    assert est.cdf(0.2) == 0 and est.cdf(0.3) == pytest.approx(1.0)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000))
def test_inverted_density_is_normalized(seed):
    rng = np.random.default_rng(seed)
    m = rng.integers(0, 4, size=(5, 3))
    m[m.sum(axis=1) == 0, 0] = 1
    series = qs.CharFnSeries(0.1, rng.normal(size=5) * 0.2 + 0j, m)
    est = qs.invert_charfn(series, qs.TorusSampler(4096, seed=seed))
    assert est.total() == pytest.approx(1.0, abs=1e-9)
    assert np.all(est.density >= 0)


def test_regular_delta_distribution(tb04, sampler):
    seq, h = tb04
    est = qs.invert_charfn(qs.delta_series(h), sampler, n_bins=600)
    assert est.ks(seq.delta) < 0.03


def test_spacing_support_bound(tb04, sampler):
    seq, h = tb04
    D = expansion_coefficients(h, "D", 1)
    bound = 1 + 2 * np.sum(np.abs(D)) * h.L0 / (2 * np.pi)
    series = qs.spacing_series(h, 1)
    assert series.radius <= bound + 1e-12
    est = qs.invert_charfn(series, sampler)
    assert est.max <= bound
    assert seq.spacing(1).max() <= bound + 0.05
    assert seq.spacing(1).min() > 0


def test_mean_spacing_is_one(tb04):
    seq, _ = tb04
    assert abs(np.mean(seq.spacing(1)[:10_000]) - 1) < 1e-3


def test_free_graph_statistics():
    L0 = 1.0
    n = np.arange(1, 3001)
    seq = LevelSequence(0, n, np.pi * n / L0, L0)
    assert np.allclose(seq.delta, 0) and np.allclose(seq.spacing(1), 1)
    edges = np.linspace(-1, 6, 141)
    pc = qs.pair_counts(seq, edges, 5)
    assert np.all(pc.value[edges[1:] <= 0] == 0)
    hits = pc.value > 0
    centres = 0.5 * (edges[1:] + edges[:-1])
    assert np.allclose(centres[hits], np.round(centres[hits]), atol=0.05)
    tau = np.array([0.7, 2 * L0, 4 * L0])
    ff = qs.form_factor_direct(seq, tau, 5, window=1000)
    assert np.allclose(ff.value[1:], 5.0)
    assert abs(ff.value[0]) < 5


def test_form_factor_normalization(tb04, sampler):
    seq, h = tb04
    direct = qs.form_factor_direct(seq, [0.0], 20)
    orbit = qs.form_factor_orbit(h, [0.0], 20, sampler)
    assert direct.value[0] == pytest.approx(20.0)
    assert orbit.value[0] == pytest.approx(20.0)


def test_form_factor_routes_agree(tb04, sampler):
    seq, h = tb04
    tau = np.linspace(0.1, 20, 12)
    a = qs.form_factor_direct(seq, tau, 5)
    b = qs.form_factor_orbit(h, tau, 5, sampler)
    assert np.max(np.abs(a.value - b.value)) < 0.05


def test_pair_correlation_routes(tb04, sampler):
    seq, h = tb04
    edges = np.linspace(0, 6, 61)
    dists = [qs.invert_charfn(qs.spacing_series(h, m), sampler, edges) for m in range(1, 7)]
    r2 = qs.autocorrelation(dists, edges)
    pc = qs.pair_counts(seq, edges, 6)
    sel = edges[1:] <= r2.reliable_below
    assert np.max(np.abs(r2.value[sel] - pc.value[sel])) < 0.1


def test_recursion_base_case(tb04):
    _, h = tb04
    regular = qs.invert_charfn(qs.delta_series(h), qs.TorusSampler(32_768, seed=3))
    rec = qs.distribution_recursion(qs.point_mass(0.5), h, "delta", 32_768, seed=4)
    assert rec.ks_to(regular) < 0.02


def test_recursion_degree_one_reports_distance():
    spec = two_bond(L1, L2, 0.8)
    S = assemble_bond_scattering(spec)
    det = expand_determinant(S)
    run = run_hierarchy(spec, 10_000, det=det, S=S)
    h = logdet_harmonics(det.raw, S.bond_lengths, 60)
    upper = qs.histogram(run.levels[1].delta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rec = qs.distribution_recursion(upper, h, "delta", 32_768, seed=5,
                                        weyl_offset=run.weyl_offsets[0])
    ks = rec.ks(run.levels[0].delta)
    assert 0 <= ks < 0.5


def test_recursion_rejects_unnormalized(tb04):
    _, h = tb04
    bad = qs.DistributionEstimate(np.array([0.0, 1.0]), np.array([0.5]), 1, 0.5, 0, 1, 0, "x")
    with pytest.raises(ValueError):
        qs.distribution_recursion(bad, h)


def test_equidistribution():
    alpha = np.sqrt(2)
    assert np.allclose(np.mod(alpha * np.arange(1, 4), 1), [0.41421, 0.82843, 0.24264], atol=1e-5)
    good = qs.equidistribution_test([L1, L2])
    assert good.passed()
    with pytest.warns(UserWarning, match="rational"):
        bad = qs.equidistribution_test([0.5, 0.25])
    assert not bad.passed()


def test_wigner_surmise():
    assert quad(qs.wigner_pdf, 0, np.inf)[0] == pytest.approx(1.0)
    assert quad(lambda s: s * qs.wigner_pdf(s), 0, np.inf)[0] == pytest.approx(1.0)
    assert qs.wigner_cdf(1.3) == pytest.approx(quad(qs.wigner_pdf, 0, 1.3)[0])


def test_histogram_density():
    x = np.random.default_rng(0).normal(size=5000)
    d = qs.histogram(x)
    assert d.total() == pytest.approx(1.0)
    assert d.ks(x) < 0.02
    with pytest.raises(ValueError):
        qs.DistributionEstimate(np.array([0.0, 1.0]), np.array([-1.0]), 1, 0, 0, 0, 0, "x")


def test_torus_sampler_is_deterministic():
    s = qs.TorusSampler(4096, seed=9)
    a = [f.copy() for f, _ in s.points(3)]
    b = [f.copy() for f, _ in s.points(3)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    with pytest.raises(ValueError):
        qs.TorusSampler(10)


def test_torus_merge_is_exact():
    h = Harmonics(np.array([[1, 0], [2, 1], [0, 3]]), np.array([0.5, 1.7, 1.2]),
                  np.array([0.2 + 0.1j, -0.1j, 0.05]), 1.0)
    series = qs.delta_series(h)
    rng = np.random.default_rng(1)
    free = rng.uniform(0, 2 * np.pi, (50, 1))
    parity = rng.integers(0, 2, 50)
    last = (np.pi * parity - free[:, 0]) % (2 * np.pi)
    x = np.column_stack([free, last])
    direct = series.shift - np.real(np.exp(1j * x @ series.m.T) @ series.amplitudes)
    assert np.allclose(series.evaluate(free, parity), direct, atol=1e-13)


def test_universality_needs_many_levels(tb04):
    seq, h = tb04
    with pytest.raises(ValueError):
        qs.universality_checks(seq.trim(0, 500))
    rep = qs.universality_checks(seq, h)
    assert 0 <= rep["staircase"]["gaussian_ks"] <= 1
    assert rep["spacing"]["mean"] == pytest.approx(1.0, abs=1e-3)
