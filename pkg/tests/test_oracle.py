from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from permconc import montecarlo as mc
from permconc.errors import InvalidParameterError, SizeLimitError
from permconc.families import ExplicitMatrices, ExplicitVectors, FromVectors, SingletonMatrix, center_matrix
from permconc.oracle import (
    all_permutations,
    check_entropy_inequality,
    enumerate_distribution,
    fixed_point_pmf,
    fixed_point_tail,
)
from permconc.sampling import SeedSpec, permutation_from
from permconc.scenarios import fixed_point_matrix, random_matrix, random_matrix_family


def _brute_law(R):
    """Dictionary value -> probability by looping over itertools.permutations."""
    mats = R.dense() if isinstance(R, FromVectors) else R.matrices
    n = mats.shape[1]
    vals = []
    for p in permutations(range(n)):
        vals.append(round(max(sum(m[k, p[k]] for k in range(n)) for m in mats), 9))
    u, c = np.unique(vals, return_counts=True)
    return dict(zip(u.tolist(), (c / len(vals)).tolist()))


class TestEnumeration:
    def test_identity_four(self):
        d = enumerate_distribution(fixed_point_matrix(4))
        assert d.support.tolist() == [0, 1, 2, 4]
        assert np.allclose(d.probs, [9 / 24, 8 / 24, 6 / 24, 1 / 24], atol=1e-15)
        assert d.mean == pytest.approx(1.0, abs=1e-14)

    def test_zero_matrix(self):
        d = enumerate_distribution(SingletonMatrix(np.zeros((5, 5))))
        assert d.support.tolist() == [0.0] and d.probs.tolist() == [1.0]

    def test_size_limit(self):
        with pytest.raises(SizeLimitError):
            enumerate_distribution(fixed_point_matrix(9))

    def test_permutation_table(self):
        p = all_permutations(4)
        assert p.shape == (24, 4)
        assert len({tuple(r) for r in p}) == 24

    @pytest.mark.parametrize("n", range(2, 7))
    def test_variance_matches_centering(self, n):
        R = random_matrix(n, SeedSpec(n))
        d = enumerate_distribution(R)
        assert d.variance == pytest.approx(center_matrix(R.a).variance, abs=1e-12)
        assert d.mean == pytest.approx(R.a.sum() / n, abs=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(n=st.integers(2, 5), size=st.integers(1, 3), seed=st.integers(0, 2**32))
    def test_matches_brute_force(self, n, size, seed):
        R = random_matrix_family(n, size, SeedSpec(seed))
        d = enumerate_distribution(R, decimals=9)
        assert dict(zip(d.support.tolist(), d.probs.tolist())) == pytest.approx(_brute_law(R))

    def test_vector_embedding(self):
        X = SeedSpec(2).generator().uniform(-1, 1, (3, 5))
        R = FromVectors(ExplicitVectors(X), 2)
        law = enumerate_distribution(R)
        # Z over the first 2 positions of a uniform permutation
        brute = [round(max(X[:, p[0]] + X[:, p[1]]), 12) for p in permutations(range(5))]
        u, c = np.unique(brute, return_counts=True)
        assert np.allclose(law.support, u) and np.allclose(law.probs, c / 120)

    def test_csv(self):
        text = enumerate_distribution(fixed_point_matrix(3)).to_csv().splitlines()
        assert text[0] == "value,prob"
        assert len(text) == 4  # values 0, 1, 3


class TestFixedPoints:
    def test_examples(self):
        assert fixed_point_tail(4, 2) == pytest.approx(7 / 24, abs=1e-15)
        assert fixed_point_tail(4, 0) == 1.0
        assert fixed_point_tail(4, 4) == pytest.approx(1 / 24, abs=1e-15)

    def test_errors(self):
        with pytest.raises(InvalidParameterError):
            fixed_point_tail(4, 5)
        with pytest.raises(InvalidParameterError):
            fixed_point_tail(4, -1)

    def test_pmf_exact(self):
        pmf = fixed_point_pmf(5)
        assert sum(pmf) == 1
        assert pmf[4] == 0
        assert pmf[0] == Fraction(44, 120)

    @pytest.mark.parametrize("n", range(1, 9))
    def test_agrees_with_enumeration(self, n):
        d = enumerate_distribution(fixed_point_matrix(n))
        pmf = fixed_point_pmf(n)
        for v, p in zip(d.support, d.probs):
            assert p == pytest.approx(float(pmf[int(v)]), abs=1e-15)
        for j in range(n + 1):
            assert fixed_point_tail(n, j) == pytest.approx(d.survival(j), abs=1e-14)


class TestEntropy:
    def test_lambda_zero(self):
        c = check_entropy_inequality(random_matrix(4, SeedSpec(0)), 0.0)
        assert c.lhs == pytest.approx(0.0, abs=1e-15) and c.rhs == 0.0 and c.passed

    def test_identity_three(self):
        c = check_entropy_inequality(fixed_point_matrix(3), 0.5)
        assert c.passed and c.lhs > 0

    def test_constant_statistic(self):
        c = check_entropy_inequality(SingletonMatrix(np.full((4, 4), 0.3)), 1.0)
        assert abs(c.lhs) < 1e-12 and c.passed

    def test_matches_direct_loop(self):
        R = random_matrix_family(3, 2, SeedSpec(4))
        lam = 0.7
        mats = R.matrices
        perms = list(permutations(range(3)))

        def S(p):
            return max(sum(m[k, p[k]] for k in range(3)) for m in mats)

        F = np.array([np.exp(lam * S(p)) for p in perms])
        lhs = np.mean(F * lam * np.array([S(p) for p in perms])) - F.mean() * np.log(F.mean())
        acc = 0.0
        for p, f in zip(perms, F):
            inner = 0.0
            for i in range(3):
                for j in range(3):
                    q = list(p)
                    q[i], q[j] = q[j], q[i]
                    d = max(S(p) - S(q), 0.0)
                    inner += (1 - np.exp(-lam * d)) * d
            acc += f * inner
        rhs = lam / 3 * acc / len(perms)
        c = check_entropy_inequality(R, lam)
        assert c.lhs == pytest.approx(lhs, rel=1e-12)
        assert c.rhs == pytest.approx(rhs, rel=1e-12)

    def test_limits(self):
        with pytest.raises(SizeLimitError):
            check_entropy_inequality(fixed_point_matrix(8), 0.1)
        with pytest.raises(InvalidParameterError):
            check_entropy_inequality(fixed_point_matrix(3), -0.1)


class FixedPointStat:
    def __init__(self, a):
        self.a = a

    def __call__(self, rng):
        n = self.a.shape[0]
        return float(self.a[np.arange(n), permutation_from(rng, n)].sum())


def test_monte_carlo_agrees_with_oracle():
    R = random_matrix(5, SeedSpec(11), box=(0.0, 1.0))
    law = enumerate_distribution(R)
    x = mc.simulate(FixedPointStat(np.asarray(R.a)), 50_000, SeedSpec(12))
    est = mc.EstimateWithError.from_samples(x)
    assert abs(est.mean - law.mean) < 4 * est.std_error
    N = x.size
    for t in np.linspace(0.1, 1.5, 8):
        p = law.survival(law.mean + t)
        emp = np.mean(x >= law.mean + t - 1e-12)
        assert abs(emp - p) <= 4 * np.sqrt(max(p * (1 - p), 1 / N) / N)


def test_exact_domination_positive_matrices():
    from permconc.bounds import bennett_positive_hoeffding, bernstein_hoeffding_suprema

    for s in range(5):
        R = random_matrix(6, SeedSpec(s), box=(0.0, 1.0))
        law = enumerate_distribution(R)
        ef = law.mean
        for v in law.support[law.support > ef + 1e-9]:
            # P(f >= v) is the limit of P(f > Ef + t) as t increases to v - Ef; the bound is continuous
            assert law.survival(v) <= bennett_positive_hoeffding(v - ef, ef) + 1e-12
        R2 = random_matrix_family(5, 3, SeedSpec(50 + s))
        law2 = enumerate_distribution(R2)
        es2 = float(np.mean([R2.sup_sq(p).value for p in all_permutations(5)]))
        for v in law2.support[law2.support > law2.mean]:
            assert law2.survival(v) <= bernstein_hoeffding_suprema(v - law2.mean, es2) + 1e-12


@pytest.mark.parametrize("n", range(1, 9))
def test_survival_is_a_probability(n):
    d = enumerate_distribution(fixed_point_matrix(n))
    assert d.survival(d.support[0]) == 1.0
    assert d.survival(-1.0) == 1.0
