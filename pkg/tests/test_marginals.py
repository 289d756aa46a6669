import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from comoments.errors import DegenerateMarginal, DomainError, ParseError
from comoments.marginals import (
    Empirical,
    Exponential,
    Laplace,
    Normal,
    PowerLaw,
    StandardizedMarginal,
    StudentT,
    Uniform,
    parse_marginal,
)

CONTINUOUS = [
    Uniform(-1.0, 3.0),
    Exponential(1.5, -0.4),
    Normal(0.3, 2.0),
    StudentT(5.0),
    Laplace(0.2, 1.3),
]

SCIPY_TWINS = [
    (Uniform(-1.0, 3.0), stats.uniform(-1.0, 4.0)),
    (Exponential(1.5, -0.4), stats.expon(-0.4, 1 / 1.5)),
    (Normal(0.3, 2.0), stats.norm(0.3, 2.0)),
    (StudentT(5.0), stats.t(5.0)),
    (Laplace(0.2, 1.3), stats.laplace(0.2, 1.3)),
]


class TestCdf:
    def test_exponential_at_one(self):
        assert Exponential(1.0).cdf(1.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)

    def test_uniform_midpoint(self):
        assert Uniform(-1.0, 3.0).cdf(1.0) == 0.5

    def test_median_shifted_exponential(self):
        for rate in (0.5, 1.0, 3.0):
            assert Exponential(rate, -math.log(2) / rate).cdf(0.0) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("marginal,twin", SCIPY_TWINS)
    def test_against_scipy(self, marginal, twin):
        x = np.linspace(-6, 6, 101)
        np.testing.assert_allclose(marginal.cdf(x), twin.cdf(x), atol=1e-13)

    @pytest.mark.parametrize("marginal,twin", SCIPY_TWINS)
    def test_moments_against_scipy(self, marginal, twin):
        assert marginal.mean() == pytest.approx(twin.mean(), abs=1e-12)
        assert marginal.std() == pytest.approx(twin.std(), rel=1e-12)

    def test_scalar_in_scalar_out(self):
        assert isinstance(Normal().cdf(0.1), float)
        assert isinstance(Normal().quantile(0.1), float)


class TestQuantile:
    def test_exponential_inverts(self):
        assert Exponential(1.0).quantile(1 - math.exp(-1)) == pytest.approx(1.0, abs=1e-14)

    def test_normal_median(self):
        assert Normal(2.5, 3.0).quantile(0.5) == pytest.approx(2.5, abs=1e-15)

    def test_empirical_generalised_inverse(self):
        assert Empirical([1.0, 2.0, 3.0]).quantile(0.4) == 2.0

    def test_empirical_at_step(self):
        e = Empirical([3.0, 1.0, 2.0])
        assert e.quantile(1 / 3) == 1.0
        assert e.quantile(1.0) == 3.0
        assert e.quantile(0.0) == 1.0

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            Normal().quantile(1.2)

    def test_infinite_endpoint_rejected(self):
        with pytest.raises(DomainError):
            Normal().quantile(0.0)
        with pytest.raises(DomainError):
            Exponential(1.0).quantile(1.0)
        assert Exponential(1.0).quantile(0.0) == 0.0
        assert Uniform(0.0, 2.0).quantile(1.0) == 2.0

    @pytest.mark.parametrize("marginal", CONTINUOUS)
    @given(p=st.floats(1e-9, 1 - 1e-9))
    def test_round_trip(self, marginal, p):
        assert marginal.cdf(marginal.quantile(p)) == pytest.approx(p, abs=1e-9)

    @pytest.mark.parametrize("marginal", CONTINUOUS)
    @given(p=st.floats(1e-6, 1 - 1e-6), q=st.floats(1e-6, 1 - 1e-6))
    def test_monotone(self, marginal, p, q):
        lo, hi = sorted((p, q))
        assert marginal.quantile(lo) <= marginal.quantile(hi)


class TestEmpirical:
    @given(st.lists(st.integers(-5, 5).map(float), min_size=1, max_size=30),
           st.floats(0.0, 1.0))
    def test_galois_inequality(self, values, p):
        e = Empirical(values)
        x = e.quantile(p)
        assert e.cdf(x) >= p - 1e-12
        assert e.cdf_left(x) <= p + 1e-12

    def test_from_file(self, tmp_path):
        path = tmp_path / "v.csv"
        path.write_text("3\n1\n2\n")
        e = parse_marginal(f"empirical:file={path}")
        assert e.support == (1.0, 3.0)
        assert e.to_spec() == f"empirical:file={path}"
        assert not e.continuous

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            parse_marginal(f"empirical:file={tmp_path / 'nope.csv'}")

    def test_empty(self):
        with pytest.raises(DomainError):
            Empirical([])


class TestPowerLaw:
    def test_uniform_square(self):
        assert PowerLaw(Uniform(0.0, 1.0), 2).quantile(0.25) == pytest.approx(0.0625, abs=1e-15)

    def test_normal_square_is_chi2(self):
        pl = PowerLaw(Normal(), 2)
        assert pl.cdf(1.0) == pytest.approx(2 * stats.norm.cdf(1.0) - 1, abs=1e-14)
        assert pl.quantile(2 * stats.norm.cdf(1.0) - 1) == pytest.approx(1.0, abs=1e-12)
        p = np.linspace(0.01, 0.99, 21)
        np.testing.assert_allclose(pl.quantile(p), stats.chi2(1).ppf(p), rtol=1e-10)

    def test_two_sided_uniform(self):
        assert PowerLaw(Uniform(-1.0, 3.0), 2).quantile(0.5) == pytest.approx(1.0, abs=1e-10)

    def test_odd_power_is_signed(self):
        pl = PowerLaw(Normal(), 3)
        assert pl.quantile(0.975) == pytest.approx(stats.norm.ppf(0.975) ** 3, rel=1e-12)
        assert pl.quantile(0.025) == pytest.approx(-stats.norm.ppf(0.975) ** 3, rel=1e-12)

    def test_nonpositive_base(self):
        pl = PowerLaw(Uniform(-2.0, -1.0), 2)
        assert pl.support == (1.0, 4.0)
        assert pl.quantile(0.5) == pytest.approx(2.25, abs=1e-14)

    @pytest.mark.parametrize("base", [Uniform(-1.0, 3.0), Exponential(1.0, -1.0), Laplace(0.3, 1.0)])
    @pytest.mark.parametrize("d", [2, 4])
    def test_bisection_against_sampling(self, base, d):
        rng = np.random.default_rng(3)
        x = np.asarray(base.quantile(rng.uniform(size=200_000))) ** d
        p = np.array([0.1, 0.5, 0.9])
        q = PowerLaw(base, d).quantile(p)
        ecdf = np.searchsorted(np.sort(x), q) / x.size
        np.testing.assert_allclose(ecdf, p, atol=4e-3)

    @given(p=st.floats(1e-6, 1 - 1e-6))
    def test_asymmetric_round_trip(self, p):
        pl = PowerLaw(Exponential(1.0, -1.0), 2)
        assert pl.cdf(pl.quantile(p)) == pytest.approx(p, abs=1e-9)


class TestTransforms:
    @pytest.mark.parametrize("marginal", CONTINUOUS)
    def test_standardized(self, marginal):
        z = StandardizedMarginal(marginal)
        assert z.mean() == pytest.approx(0.0, abs=1e-12)
        assert z.std() == pytest.approx(1.0, rel=1e-12)
        assert z.quantile(0.3) == pytest.approx(
            (marginal.quantile(0.3) - marginal.mean()) / marginal.std(), rel=1e-12, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateMarginal):
            StandardizedMarginal(Uniform(2.0, 2.0))

    def test_affine_keeps_family(self):
        assert Uniform(0.0, 1.0).affine(1.0, 2.0).uniform_bounds() == (1.0, 3.0)
        assert Exponential(2.0).affine(-1.0, 2.0).shifted_exponential() == pytest.approx((1.0, -1.0))

    def test_affine_rejects_nonpositive_scale(self):
        with pytest.raises(DomainError):
            Normal().affine(0.0, -1.0)


class TestValidation:
    @pytest.mark.parametrize("build", [
        lambda: Uniform(3.0, 1.0),
        lambda: Exponential(0.0),
        lambda: Normal(0.0, -1.0),
        lambda: StudentT(2.0),
        lambda: Laplace(0.0, 0.0),
    ])
    def test_bad_parameters(self, build):
        with pytest.raises(DomainError):
            build()

    def test_t_tail_index(self):
        assert StudentT(5.0).tail_index == 5.0
        assert Normal().tail_index == math.inf


class TestParse:
    @pytest.mark.parametrize("text,expected", [
        ("expon:rate=1.5", Exponential(1.5)),
        ("expon:rate=1,shift=-0.693", Exponential(1.0, -0.693)),
        ("unif:a=-1,b=3", Uniform(-1.0, 3.0)),
        ("norm:mu=0,sigma=1", Normal(0.0, 1.0)),
        ("norm", Normal(0.0, 1.0)),
        ("t:nu=5", StudentT(5.0)),
        ("laplace:mu=0,b=1", Laplace(0.0, 1.0)),
    ])
    def test_grammar(self, text, expected):
        assert parse_marginal(text) == expected

    @pytest.mark.parametrize("marginal", CONTINUOUS)
    def test_round_trip(self, marginal):
        assert parse_marginal(marginal.to_spec()) == marginal

    @pytest.mark.parametrize("text,token", [
        ("gamma:k=1", "gamma"),
        ("norm:mu=zero", "zero"),
        ("norm:mu", "mu"),
        ("expon:lambda=1", "lambda"),
        ("t", "nu"),
    ])
    def test_errors_name_token(self, text, token):
        with pytest.raises(ParseError, match=token):
            parse_marginal(text)

    def test_domain_error_passes_through(self):
        with pytest.raises(DomainError):
            parse_marginal("unif:a=3,b=1")
