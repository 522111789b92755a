"""Tests for the nonlinearity families."""

import numpy as np
import pytest

from nvq.core.errors import ConstraintError, DegenerateIntervalError, DomainError, NoFitNeededError
from nvq.fastmath import nqt_logistic
from nvq.nonlinearity import (
    PARAM_FLOOR,
    check_feasible,
    forward,
    forward_core,
    initial_snes_state,
    inverse,
    inverse_core,
    kumaraswamy_cdf,
    kumaraswamy_icdf,
    logistic_scaled,
    logit_scaled,
    nqt_logistic_scaled,
    nqt_logit_scaled,
    project_params,
    search_offset,
    x0_domain,
)
from nvq.schemas import Interval, NonlinearityFamily, NonlinearityParams

KS = NonlinearityFamily.KUMARASWAMY
LOGLOG = NonlinearityFamily.LOGLOG
NQT = NonlinearityFamily.NQT
UNIFORM = NonlinearityFamily.UNIFORM


def random_params(rng, family, lo, hi, size):
    """Feasible parameter columns of shape (size, 1)."""
    if family is KS:
        return rng.uniform(0.5, 3.0, (size, 1)), rng.uniform(0.5, 3.0, (size, 1))
    if family is UNIFORM:
        return np.zeros((size, 1)), np.zeros((size, 1))
    x0_lo, x0_hi = lo / (hi - lo), hi / (hi - lo)
    return rng.uniform(0.5, 20.0, (size, 1)), rng.uniform(x0_lo, x0_hi, (size, 1))


class TestKumaraswamy:
    """Test the Kumaraswamy CDF and quantile function."""

    @pytest.mark.parametrize(
        "t, a, b, expected", [(0.5, 1.0, 1.0, 0.5), (0.5, 2.0, 2.0, 0.4375), (1.0, 3.7, 0.2, 1.0), (0.0, 2.0, 5.0, 0.0)]
    )
    def test_cdf_examples(self, t, a, b, expected):
        assert kumaraswamy_cdf(t, a, b) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("u, a, b, expected", [(0.4375, 2.0, 2.0, 0.5), (0.0, 2.0, 3.0, 0.0), (0.7, 1.0, 1.0, 0.7)])
    def test_icdf_examples(self, u, a, b, expected):
        assert kumaraswamy_icdf(u, a, b) == pytest.approx(expected, abs=1e-12)

    def test_cdf_monotone(self):
        t = np.linspace(0, 1, 1001)
        assert np.all(np.diff(kumaraswamy_cdf(t, 0.7, 2.5)) >= 0)

    @pytest.mark.parametrize("a, b", [(0.1, 10.0), (0.2, 6.0), (4.0, 0.3)])
    @pytest.mark.parametrize("beta", [4, 8])
    def test_codes_survive_extreme_shapes(self, a, b, beta):
        top = 2**beta - 1
        codes = np.arange(top + 1)
        t = kumaraswamy_icdf(codes / top, a, b)
        assert np.all(np.diff(t) > 0)
        u = kumaraswamy_cdf(t, a, b)
        assert np.abs(u - codes / top).max() < 1e-9
        assert np.array_equal(np.floor(top * u + 0.5).astype(int), codes)

    def test_fast_math_close(self):
        t = np.linspace(0, 1, 101)
        exact = kumaraswamy_cdf(t, 1.7, 2.3, fast_math=False)
        assert np.allclose(kumaraswamy_cdf(t, 1.7, 2.3, fast_math=True), exact, atol=1e-4)

    @pytest.mark.parametrize("bad", [-0.1, 1.5])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            kumaraswamy_cdf(bad, 1.0, 1.0)
        with pytest.raises(DomainError):
            kumaraswamy_icdf(bad, 1.0, 1.0)

    def test_non_positive_params(self):
        with pytest.raises(ConstraintError):
            kumaraswamy_cdf(0.5, 0.0, 1.0)


class TestScaledLogistic:
    """Test the scaled logistic/logit pairs."""

    iv = Interval(x_min=-0.3, x_max=0.5)

    @pytest.mark.parametrize("family, fwd", [(LOGLOG, logistic_scaled), (NQT, nqt_logistic_scaled)])
    def test_endpoints(self, family, fwd):
        params = NonlinearityParams(family=family, p1=7.0, p2=0.1)
        assert fwd(self.iv.x_min, params, self.iv) == 0.0
        assert fwd(self.iv.x_max, params, self.iv) == 1.0

    @pytest.mark.parametrize("family, inv", [(LOGLOG, logit_scaled), (NQT, nqt_logit_scaled)])
    def test_inverse_endpoints(self, family, inv):
        params = NonlinearityParams(family=family, p1=7.0, p2=0.1)
        assert inv(0.0, params, self.iv) == self.iv.x_min
        assert inv(1.0, params, self.iv) == self.iv.x_max

    def test_small_alpha_is_affine(self):
        iv = Interval(x_min=-1.0, x_max=1.0)
        params = NonlinearityParams(family=LOGLOG, p1=1e-6, p2=0.0)
        x = np.linspace(-1, 1, 21)
        assert np.allclose(logistic_scaled(x, params, iv), (x + 1) / 2, atol=1e-3)

    def test_strictly_increasing(self):
        params = NonlinearityParams(family=NQT, p1=12.0, p2=0.05)
        x = np.linspace(self.iv.x_min, self.iv.x_max, 2001)
        assert np.all(np.diff(nqt_logistic_scaled(x, params, self.iv)) > 0)

    def test_wrong_family(self):
        params = NonlinearityParams(family=NQT, p1=1.0, p2=0.0)
        with pytest.raises(ConstraintError):
            logistic_scaled(0.0, params, self.iv)

    def test_degenerate_interval(self):
        params = NonlinearityParams(family=LOGLOG, p1=1.0, p2=0.0)
        with pytest.raises(DegenerateIntervalError):
            logistic_scaled(0.2, params, Interval(x_min=0.2, x_max=0.2))


class TestForwardInverse:
    """Test family dispatch of h and its inverse."""

    def test_examples(self):
        assert forward(NonlinearityParams.uniform(), Interval(x_min=-1, x_max=1), 0.0) == 0.5
        ks = NonlinearityParams(family=KS, p1=1.0, p2=1.0)
        assert forward(ks, Interval(x_min=0, x_max=1), 0.3) == pytest.approx(0.3)
        loglog = NonlinearityParams(family=LOGLOG, p1=10.0, p2=0.0)
        assert forward(loglog, Interval(x_min=-1, x_max=1), 1.0) == 1.0

    def test_inverse_examples(self):
        assert inverse(NonlinearityParams.uniform(), Interval(x_min=-1, x_max=1), 0.5) == 0.0
        ks = NonlinearityParams(family=KS, p1=1.0, p2=1.0)
        assert inverse(ks, Interval(x_min=0, x_max=1), 0.3) == pytest.approx(0.3)
        loglog = NonlinearityParams(family=LOGLOG, p1=10.0, p2=0.0)
        assert inverse(loglog, Interval(x_min=-1, x_max=1), 1.0) == 1.0

    @pytest.mark.parametrize("family", [UNIFORM, KS, LOGLOG, NQT])
    def test_round_trip(self, rng, family):
        # 10 intervals x 100 parameter draws x 100 points
        for _ in range(10):
            lo = rng.uniform(-2, 0)
            hi = lo + rng.uniform(0.01, 3)
            p1, p2 = random_params(rng, family, lo, hi, 100)
            x = rng.uniform(lo, hi, (100, 100))
            u = forward_core(family, p1, p2, lo, hi, x)
            back = inverse_core(family, p1, p2, lo, hi, u)
            assert np.abs(back - x).max() <= 1e-4 * (hi - lo)

    @pytest.mark.parametrize("family", [UNIFORM, KS, LOGLOG, NQT])
    def test_monotone_with_exact_endpoints(self, rng, family):
        lo, hi = -0.7, 0.4
        p1, p2 = random_params(rng, family, lo, hi, 20)
        x = np.linspace(lo, hi, 501)
        u = forward_core(family, p1, p2, lo, hi, x)
        assert np.all(np.diff(u, axis=-1) >= 0)
        assert np.all(u[:, 0] == 0.0)
        assert np.all(u[:, -1] == 1.0)

    @pytest.mark.parametrize("fn", [forward_core, inverse_core])
    def test_uniform_takes_parameter_shape(self, fn):
        values = np.linspace(0.0, 1.0, 7)
        out = fn(UNIFORM, np.zeros((3, 1)), np.zeros((3, 1)), 0.0, 1.0, values)
        assert out.shape == (3, 7)
        assert np.allclose(out, np.tile(values, (3, 1)))

    def test_fast_math_runs_nqt_in_single_precision(self):
        lo, hi = -0.4, 0.6
        alpha, x0 = np.float32(6.0), np.float32(0.1)
        x = np.linspace(lo, hi, 4001)[1:-1]
        exact = forward_core(NQT, 6.0, 0.1, lo, hi, x, fast_math=False)
        fast = forward_core(NQT, 6.0, 0.1, lo, hi, x, fast_math=True)
        assert not np.array_equal(fast, exact)
        assert np.abs(fast - exact).max() < 1e-5

        ends = [nqt_logistic(np.float32(e), alpha, x0, dtype=np.float32) for e in (lo, hi)]
        value = nqt_logistic(x.astype(np.float32), alpha, x0, dtype=np.float32)
        single = (value - np.float32(ends[0])) / (np.float32(ends[1]) - np.float32(ends[0]))
        assert np.allclose(fast, single.astype(np.float64), rtol=1e-6, atol=1e-7)

        u = np.linspace(0.0, 1.0, 256)
        back = inverse_core(NQT, 6.0, 0.1, lo, hi, u, fast_math=True)
        assert back[0] == lo and back[-1] == hi
        assert np.abs(back - inverse_core(NQT, 6.0, 0.1, lo, hi, u, fast_math=False)).max() < 1e-5

    def test_out_of_interval(self):
        with pytest.raises(DomainError):
            forward(NonlinearityParams.uniform(), Interval(x_min=0, x_max=1), 1.5)
        with pytest.raises(DomainError):
            inverse(NonlinearityParams.uniform(), Interval(x_min=0, x_max=1), -0.5)

    def test_infeasible_params(self):
        with pytest.raises(ConstraintError):
            forward(NonlinearityParams(family=KS, p1=-1.0, p2=1.0), Interval(x_min=0, x_max=1), 0.5)


class TestProjection:
    """Test constraint projection and feasibility."""

    iv = Interval(x_min=-1.0, x_max=1.0)

    def test_x0_domain_is_scaled(self):
        assert x0_domain(self.iv) == (-0.5, 0.5)
        assert x0_domain(Interval(x_min=2.0, x_max=2.0)) == (0.0, 0.0)

    def test_search_offset(self):
        assert search_offset(LOGLOG, self.iv).tolist() == [0.0, -0.5]
        assert search_offset(NQT, self.iv).tolist() == [0.0, -0.5]
        assert search_offset(KS, self.iv).tolist() == [0.0, 0.0]

    def test_kumaraswamy_floor(self):
        projected = project_params(NonlinearityParams(family=KS, p1=-0.5, p2=2.0), self.iv)
        assert (projected.p1, projected.p2) == (PARAM_FLOOR, 2.0)

    def test_clamps_x0(self):
        projected = project_params(NonlinearityParams(family=LOGLOG, p1=5.0, p2=10.0), self.iv)
        assert (projected.p1, projected.p2) == (5.0, 0.5)

    def test_alpha_floor(self):
        projected = project_params(NonlinearityParams(family=NQT, p1=-3.0, p2=0.0), self.iv)
        assert projected.p1 == PARAM_FLOOR

    def test_feasible_unchanged(self):
        params = NonlinearityParams(family=LOGLOG, p1=3.0, p2=0.2)
        assert project_params(params, self.iv) is params

    def test_idempotent(self, rng):
        for family in (KS, LOGLOG, NQT):
            for p1, p2 in rng.normal(0, 5, (50, 2)):
                once = project_params(NonlinearityParams(family=family, p1=p1, p2=p2), self.iv)
                assert project_params(once, self.iv) == once
                check_feasible(once, self.iv)

    def test_check_feasible_rejects_x0(self):
        with pytest.raises(ConstraintError):
            check_feasible(NonlinearityParams(family=LOGLOG, p1=5.0, p2=0.9), self.iv)


class TestInitialState:
    """Test the published search initializations."""

    def test_kumaraswamy(self):
        mu, sigma = initial_snes_state(KS)
        assert mu.tolist() == [1.0, 1.0]
        assert sigma.tolist() == [1.0, 1.0]

    @pytest.mark.parametrize("family", [LOGLOG, NQT])
    def test_logistic_families(self, family):
        mu, sigma = initial_snes_state(family)
        assert mu.tolist() == [10.0, 0.0]
        assert sigma.tolist() == [2.0, 0.5]

    def test_uniform(self):
        with pytest.raises(NoFitNeededError):
            initial_snes_state(UNIFORM)


@pytest.mark.slow
class TestInversionAtScale:
    """Acceptance-scale inversion over wide intervals."""

    @pytest.mark.parametrize("family", [UNIFORM, KS, LOGLOG, NQT])
    def test_hundred_thousand_triples(self, rng, family):
        # 100 intervals x 10 parameter draws x 100 points
        for _ in range(100):
            lo = rng.uniform(-3, 3)
            hi = lo + rng.uniform(0.01, 5)
            p1, p2 = random_params(rng, family, lo, hi, 10)
            x = rng.uniform(lo, hi, (10, 100))
            back = inverse_core(family, p1, p2, lo, hi, forward_core(family, p1, p2, lo, hi, x))
            assert np.abs(back - x).max() <= 1e-4 * (hi - lo)
