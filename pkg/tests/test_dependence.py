import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from comoments.couplings import CouplingSpec, Direction
from comoments.dependence import PairedSample, centered_moment, rank_coefficient, rank_coefficient_model, rank_constant
from comoments.errors import DegenerateSample, DomainError
from comoments.marginals import Exponential, Normal
from comoments.mixture import MixtureParams, Parity

seeds = st.integers(0, 2**32 - 1)
orders = st.integers(1, 5)


def random_sample(seed, n=200):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = 0.5 * x1 + rng.standard_t(4, size=n)
    return PairedSample(x1, x2)


class TestRankConstant:
    def test_values(self):
        assert rank_constant(1) == 12
        assert rank_constant(2) == 48
        assert rank_constant(3) == 80

    @pytest.mark.parametrize("d", range(1, 7))
    def test_normalises_extremal_value(self, d):
        # The maximising arrangement of (U1 - 1/2) against (U2 - 1/2)^d has value 1/c_d.
        u = (np.arange(1_000_000) + 0.5) / 1_000_000
        a = np.sort(u - 0.5)
        b = np.sort((u - 0.5) ** d)
        assert rank_constant(d) * np.mean(a * b) == pytest.approx(1.0, abs=1e-6)


class TestRankCoefficient:
    def test_spearman_identity(self):
        s = random_sample(1, 500)
        rho = stats.spearmanr(s.x1, s.x2).statistic
        n = s.n
        assert rank_coefficient(s, 1) == pytest.approx(rho * (n - 1) / (n + 1), abs=1e-12)

    def test_comonotone_large(self):
        x = np.random.default_rng(0).normal(size=1_000_000)
        assert abs(rank_coefficient(PairedSample(x, np.exp(x)), 1) - 1) < 1e-3

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_independent(self, d):
        rng = np.random.default_rng(d)
        n = 200_000
        s = PairedSample(rng.normal(size=n), rng.normal(size=n))
        r = rank_coefficient(s, d)
        # sd of c (U1 - 1/2)(U2 - 1/2)^d under independence
        sd = rank_constant(d) * math.sqrt(1 / 12 * 1 / ((2 * d + 1) * 4**d)) / math.sqrt(n)
        assert abs(r) < 4 * sd

    @given(seed=seeds, d=orders)
    def test_invariant_under_increasing_maps(self, seed, d):
        s = random_sample(seed)
        t = PairedSample(np.exp(s.x1), s.x2**3 + 2 * s.x2 - 7)
        assert rank_coefficient(t, d) == rank_coefficient(s, d)

    @given(seed=seeds, d=orders, n=st.integers(3, 60))
    def test_range(self, seed, d, n):
        rng = np.random.default_rng(seed)
        s = PairedSample(rng.permutation(n).astype(float), rng.permutation(n).astype(float))
        assert -1 - 2 / n <= rank_coefficient(s, d) <= 1 + 2 / n

    @given(d=orders, n=st.integers(3, 200))
    def test_range_at_rearrangements(self, d, n):
        ranks = np.arange(1, n + 1) / (n + 1) - 0.5
        order = np.argsort(ranks**d, kind="stable")
        for x1 in (np.arange(n), -np.arange(n)):
            x2 = np.empty(n)
            x2[order] = np.arange(n)
            s = PairedSample(x1.astype(float), x2)
            assert -1 - 2 / n <= rank_coefficient(s, d) <= 1 + 2 / n

    def test_constant_column(self):
        with pytest.raises(DegenerateSample):
            rank_coefficient(PairedSample([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]), 2)

    def test_ties_use_midranks(self):
        s = PairedSample([1.0, 1.0, 2.0, 3.0], [4.0, 3.0, 2.0, 1.0])
        g1 = np.array([1.5, 1.5, 3, 4]) / 5 - 0.5
        g2 = np.array([4, 3, 2, 1]) / 5 - 0.5
        assert rank_coefficient(s, 1) == pytest.approx(12 * np.mean(g1 * g2))


class TestRankModel:
    @pytest.mark.parametrize("d", [2, 4])
    def test_even_max_min(self, d):
        hi = rank_coefficient_model(CouplingSpec(Normal(), d, Direction.MAX), d, 200_000, seed=42)
        lo = rank_coefficient_model(CouplingSpec(Normal(), d, Direction.MIN), d, 200_000, seed=42)
        assert abs(hi.value - 1) < 3 * hi.stderr + 1e-12
        assert abs(lo.value + 1) < 3 * lo.stderr + 1e-12

    @pytest.mark.parametrize("d", [1, 3])
    def test_mixture_midpoint_odd(self, d):
        e = rank_coefficient_model(MixtureParams(1.0, 1.0, 0.5, Parity.ODD), d, 400_000, seed=42)
        assert abs(e.value) < 3 * e.stderr

    def test_mixture_even_antimonotone(self):
        e = rank_coefficient_model(MixtureParams(1.0, 1.0, 0.0, Parity.EVEN), 2, 1_000_000, seed=42)
        assert e.value == pytest.approx(-0.92, abs=0.01)

    def test_threads(self):
        spec = CouplingSpec(Exponential(1.0, -1.0), 2)
        a = rank_coefficient_model(spec, 2, 300_000, seed=3, threads=1)
        b = rank_coefficient_model(spec, 2, 300_000, seed=3, threads=5)
        assert a == b


class TestCenteredMoment:
    @given(seed=seeds, d=orders, a=st.floats(-100, 100), b=st.floats(0.01, 100),
           c=st.floats(-100, 100), e=st.floats(0.01, 100))
    def test_affine_invariance(self, seed, d, a, b, c, e):
        s = random_sample(seed, 100)
        t = PairedSample(a + b * s.x1, c + e * s.x2)
        assert centered_moment(t, d) == pytest.approx(centered_moment(s, d), abs=1e-12 * max(1.0, 10.0**d))

    def test_comonotone(self):
        x = np.random.default_rng(2).exponential(size=1_000_000)
        assert centered_moment(PairedSample(x, x), 1) == pytest.approx(1.0, abs=1e-12)

    def test_matches_formula(self):
        s = random_sample(4, 50)
        z1 = (s.x1 - s.x1.mean()) / s.x1.std()
        z2 = (s.x2 - s.x2.mean()) / s.x2.std()
        assert centered_moment(s, 2) == pytest.approx(np.mean(z1 * z2**2), rel=1e-13)

    def test_errors(self):
        with pytest.raises(DomainError):
            centered_moment(PairedSample([1.0, 2.0], [3.0, 4.0]), 1)
        with pytest.raises(DegenerateSample):
            centered_moment(PairedSample([1.0, 2.0, 3.0], [1.0, 1.0, 1.0]), 1)


class TestPairedSample:
    def test_validation(self):
        with pytest.raises(DomainError):
            PairedSample([1.0, 2.0], [1.0])
        with pytest.raises(DomainError):
            PairedSample([1.0, np.nan], [1.0, 2.0])
        with pytest.raises(DomainError):
            PairedSample.from_rows(np.zeros((3, 3)))

    def test_from_rows(self):
        s = PairedSample.from_rows([[1, 2], [3, 4]])
        assert s.n == 2 and list(s.x2) == [2.0, 4.0]
