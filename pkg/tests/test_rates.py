import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import comb

from toruscoal.rates import LambdaMeasure, RateTable, parse_mechanism, sample_merge


def quad_rate(density, b, k):
    """Independent quadrature oracle for the density part of lam(b, k)."""
    val, _ = integrate.quad(
        lambda z: z ** (k - 2) * (1 - z) ** (b - k) * density(z), 0, 1, epsabs=1e-12
    )
    return val


def test_kingman_rates():
    m = LambdaMeasure.kingman()
    for b in range(2, 10):
        assert m.merge_rate(b, 2) == 1.0
        for k in range(3, b + 1):
            assert m.merge_rate(b, k) == 0.0
    assert m.total_merge_rate(4) == pytest.approx(6.0)  # C(4,2) pairs
    assert m.total_merge_rate(1) == 0.0
    assert m.total_merge_rate(0) == 0.0


def test_uniform_rates_against_quadrature():
    m = LambdaMeasure.uniform(1.0)
    assert m.merge_rate(2, 2) == pytest.approx(1.0)
    # lam(3,3) = int z dz = 1/2, lam(3,2) = int (1-z) dz = 1/2
    assert m.merge_rate(3, 3) == pytest.approx(quad_rate(lambda z: 1.0, 3, 3))
    assert m.merge_rate(3, 3) == pytest.approx(0.5)
    assert m.merge_rate(3, 2) == pytest.approx(0.5)
    for b in range(2, 12):
        for k in range(2, b + 1):
            assert m.merge_rate(b, k) == pytest.approx(
                quad_rate(lambda z: 1.0, b, k), abs=1e-10
            )
    assert m.total_merge_rate(3) == pytest.approx(2.0)


def test_beta_rates_against_quadrature():
    a, bb = 2.0, 3.5
    m = LambdaMeasure.beta(a, bb, mass=1.7)
    from scipy.stats import beta as beta_dist

    density = lambda z: 1.7 * beta_dist.pdf(z, a, bb)
    for b in range(2, 10):
        for k in range(2, b + 1):
            assert m.merge_rate(b, k) == pytest.approx(quad_rate(density, b, k), abs=1e-9)


def test_point_mass_at_one():
    m = LambdaMeasure.point_mass(1.0)
    for b in range(2, 8):
        for k in range(2, b + 1):
            assert m.merge_rate(b, k) == (1.0 if k == b else 0.0)


def test_tabulated_matches_closed_form():
    m_quad = LambdaMeasure.tabulated(lambda z: 1.0, mass=1.0)
    m_closed = LambdaMeasure.uniform(1.0)
    for b in range(2, 9):
        for k in range(2, b + 1):
            assert m_quad.merge_rate(b, k) == pytest.approx(
                m_closed.merge_rate(b, k), abs=1e-9
            )


def test_atom_plus_density():
    m = LambdaMeasure(atom_at_zero=0.5, density=("uniform", 2.0))
    assert m.merge_rate(2, 2) == pytest.approx(0.5 + 2.0)
    assert m.merge_rate(3, 3) == pytest.approx(2.0 * 0.5)
    assert m.total_mass == pytest.approx(2.5)


@pytest.mark.parametrize("measure", [
    LambdaMeasure.kingman(),
    LambdaMeasure.uniform(1.0),
    LambdaMeasure.beta(2.0, 3.0),
    LambdaMeasure.point_mass(0.5, mass=1.3),
    LambdaMeasure.tabulated(lambda z: 2 * z, mass=1.0),
])
def test_consistency_recursion(measure):
    # lam(b, k) = lam(b+1, k) + lam(b+1, k+1)
    for b in range(2, 21):
        for k in range(2, b + 1):
            lhs = measure.merge_rate(b, k)
            rhs = measure.merge_rate(b + 1, k) + measure.merge_rate(b + 1, k + 1)
            assert lhs == pytest.approx(rhs, abs=1e-8)


def test_scaling_linearity():
    base = LambdaMeasure.beta(1.5, 2.5)
    scaled = base.scaled(3.0)
    for b in range(2, 10):
        for k in range(2, b + 1):
            assert scaled.merge_rate(b, k) == pytest.approx(3.0 * base.merge_rate(b, k))


def test_rate_table_matches_measure():
    m = LambdaMeasure.uniform(1.0)
    table = RateTable(m, 9)
    for b in range(2, 10):
        assert table.totals[b] == pytest.approx(m.total_merge_rate(b))
        for k in range(2, b + 1):
            assert table.lam[b, k] == pytest.approx(m.merge_rate(b, k))


def test_sample_merge_b2():
    rng = np.random.default_rng(0)
    k, idx = sample_merge(LambdaMeasure.kingman(), 2, rng)
    assert k == 2 and idx == (0, 1)


def test_sample_merge_kingman_pairs_uniform():
    # b=5 Kingman: always k=2, each of the 10 pairs equally likely
    rng = np.random.default_rng(1)
    m = LambdaMeasure.kingman()
    counts = {}
    draws = 1_000_000
    for _ in range(draws):
        k, idx = sample_merge(m, 5, rng)
        assert k == 2
        counts[idx] = counts.get(idx, 0) + 1
    assert len(counts) == 10
    p = 0.1
    sigma = math.sqrt(p * (1 - p) / draws)
    for pair, c in counts.items():
        assert abs(c / draws - p) <= 4 * sigma, pair


def test_sample_merge_k_law_uniform_measure():
    # uniform measure, b=3: P(k=3) = (1/2) / 2 = 1/4
    rng = np.random.default_rng(2)
    m = LambdaMeasure.uniform(1.0)
    draws = 200_000
    triples = sum(sample_merge(m, 3, rng)[0] == 3 for _ in range(draws))
    p = 0.25
    sigma = math.sqrt(p * (1 - p) / draws)
    assert abs(triples / draws - p) <= 4 * sigma


def test_sample_merge_matches_subset_rates():
    # empirical frequency of each k over bs, b=6, vs C(b,k) lam(b,k) / total
    rng = np.random.default_rng(3)
    m = LambdaMeasure.uniform(1.0)
    b = 6
    total = m.total_merge_rate(b)
    draws = 300_000
    counts = np.zeros(b + 1)
    for _ in range(draws):
        k, idx = sample_merge(m, b, rng)
        assert len(set(idx)) == k and all(0 <= i < b for i in idx)
        counts[k] += 1
    for k in range(2, b + 1):
        p = comb(b, k, exact=True) * m.merge_rate(b, k) / total
        sigma = math.sqrt(p * (1 - p) / draws)
        assert abs(counts[k] / draws - p) <= 4 * sigma, k


def test_sampler_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_merge(LambdaMeasure.kingman(), 1, rng)
    with pytest.raises(ValueError):
        LambdaMeasure.kingman().merge_rate(3, 1)
    with pytest.raises(ValueError):
        LambdaMeasure.kingman().merge_rate(3, 4)


def test_measure_validation():
    with pytest.raises(ValueError):
        LambdaMeasure(atom_at_zero=0.0)  # zero total mass
    with pytest.raises(ValueError):
        LambdaMeasure.beta(-1.0, 2.0)
    with pytest.raises(ValueError):
        LambdaMeasure.point_mass(0.0)
    with pytest.raises(ValueError):
        LambdaMeasure.point_mass(1.5)


def test_mechanism_strings():
    assert parse_mechanism("kingman").measure.atom == 1.0
    bs = parse_mechanism("bs")
    assert bs.measure.merge_rate(2, 2) == pytest.approx(1.0)
    assert not bs.instantaneous
    crw = parse_mechanism("crw")
    assert crw.instantaneous and crw.measure is None
    beta = parse_mechanism("beta:2:3:1.5")
    assert beta.measure.density_mass == pytest.approx(1.5)
    pm = parse_mechanism("pointmass:0.5")
    assert pm.measure.merge_rate(2, 2) == pytest.approx(1.0)
    for bad in ("foo", "beta:2", "pointmass:2.0", "beta:a:b"):
        with pytest.raises(ValueError):
            parse_mechanism(bad)
