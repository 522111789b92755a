"""Tests for the quantizer, losses and code packing."""

import numpy as np
import pytest
from pydantic import ValidationError

from nvq.core.errors import ConstraintError, DomainError
from nvq.quantizer import (
    dequantize,
    dequantize_core,
    dequantize_vector,
    levels,
    nvq_loss,
    objective_ratio,
    pack_codes,
    quantize,
    quantize_core,
    quantize_vector,
    uniform_loss,
    unpack_codes,
)
from nvq.schemas import CodeBlock, Interval, NonlinearityFamily, NonlinearityParams, QuantizerConfig

UNIT = Interval(x_min=0.0, x_max=1.0)
UNIFORM = NonlinearityParams.uniform()


def feasible_params(rng, family, lo, hi, size):
    if family is NonlinearityFamily.KUMARASWAMY:
        return rng.uniform(0.5, 3.0, (size, 1)), rng.uniform(0.5, 3.0, (size, 1))
    if family is NonlinearityFamily.UNIFORM:
        return np.zeros((size, 1)), np.zeros((size, 1))
    return rng.uniform(0.5, 20.0, (size, 1)), rng.uniform(lo / (hi - lo), hi / (hi - lo), (size, 1))


class TestQuantize:
    """Test the quantizer/dequantizer pair."""

    def test_examples(self):
        assert quantize(0.5, UNIFORM, UNIT, 8) == 128
        assert dequantize(128, UNIFORM, UNIT, 8) == pytest.approx(128 / 255)
        assert levels(8) == 255
        assert levels(4) == 15

    @pytest.mark.parametrize("family", list(NonlinearityFamily))
    @pytest.mark.parametrize("beta", [4, 8])
    def test_endpoints(self, family, beta):
        iv = Interval(x_min=-0.4, x_max=0.6)
        params = {
            NonlinearityFamily.UNIFORM: UNIFORM,
            NonlinearityFamily.KUMARASWAMY: NonlinearityParams(family=family, p1=1.5, p2=2.5),
            NonlinearityFamily.LOGLOG: NonlinearityParams(family=family, p1=8.0, p2=0.1),
            NonlinearityFamily.NQT: NonlinearityParams(family=family, p1=8.0, p2=0.1),
        }[family]
        assert quantize(iv.x_min, params, iv, beta) == 0
        assert quantize(iv.x_max, params, iv, beta) == 2**beta - 1
        assert dequantize(0, params, iv, beta) == iv.x_min
        assert dequantize(2**beta - 1, params, iv, beta) == iv.x_max

    @pytest.mark.parametrize("family", list(NonlinearityFamily))
    @pytest.mark.parametrize("beta", [4, 8])
    def test_fixed_point(self, rng, family, beta):
        codes = np.arange(2**beta)
        for _ in range(10):
            lo = rng.uniform(-1, 0)
            hi = lo + rng.uniform(0.05, 2)
            p1, p2 = feasible_params(rng, family, lo, hi, 100)
            values = dequantize_core(family, p1, p2, lo, hi, codes, beta, False)
            again = quantize_core(family, p1, p2, lo, hi, values, beta, False)
            assert np.array_equal(again, np.broadcast_to(codes, again.shape))

    def test_monotone(self):
        params = NonlinearityParams(family=NonlinearityFamily.LOGLOG, p1=9.0, p2=0.3)
        x = np.linspace(0, 1, 5001)
        assert np.all(np.diff(quantize(x, params, UNIT, 8)) >= 0)

    def test_uniform_error_bound(self, rng):
        iv = Interval(x_min=-2.0, x_max=3.0)
        x = rng.uniform(-2, 3, 10_000)
        for beta in (4, 8):
            back = dequantize(quantize(x, UNIFORM, iv, beta), UNIFORM, iv, beta)
            assert np.abs(back - x).max() <= iv.delta / (2 * (2**beta - 1)) * (1 + 1e-9)

    def test_degenerate_interval(self):
        iv = Interval(x_min=0.25, x_max=0.25)
        assert quantize_vector(np.full(5, 0.25), UNIFORM, iv, 8).tolist() == [0] * 5
        assert dequantize_vector(np.zeros(5, dtype=int), UNIFORM, iv, 8).tolist() == [0.25] * 5

    def test_errors(self):
        with pytest.raises(DomainError):
            quantize(0.5, UNIFORM, UNIT, 6)
        with pytest.raises(DomainError):
            quantize(1.5, UNIFORM, UNIT, 8)
        with pytest.raises(DomainError):
            dequantize(256, UNIFORM, UNIT, 8)
        with pytest.raises(ConstraintError):
            quantize(0.5, NonlinearityParams(family=NonlinearityFamily.KUMARASWAMY, p1=0.0, p2=1.0), UNIT, 8)

    def test_config_rejects_bits(self):
        assert QuantizerConfig(beta=4).beta == 4
        with pytest.raises(ValidationError):
            QuantizerConfig(beta=3)


class TestLosses:
    """Test reconstruction losses and the objective ratio."""

    def test_grid_vector_has_zero_loss(self):
        v = np.arange(256) / 255
        assert uniform_loss(v) == 0.0
        assert objective_ratio(v, NonlinearityParams(family=NonlinearityFamily.LOGLOG, p1=5.0, p2=0.0)) == 1.0

    def test_constant_vector(self):
        assert uniform_loss(np.full(10, -0.3)) == 0.0
        assert nvq_loss(np.array([0.7]), UNIFORM) == 0.0

    def test_uniform_matches_rounding(self, rng):
        v = rng.normal(size=768)
        lo, hi = v.min(), v.max()
        grid = np.floor((v - lo) / (hi - lo) * 255 + 0.5) / 255
        expected = np.sum((v - (lo * (1 - grid) + hi * grid)) ** 2)
        assert uniform_loss(v) == pytest.approx(expected, rel=1e-12)

    def test_identity_kumaraswamy_matches_uniform(self, rng):
        v = rng.normal(size=300)
        ks = NonlinearityParams(family=NonlinearityFamily.KUMARASWAMY, p1=1.0, p2=1.0)
        assert nvq_loss(v, ks, fast_math=False) == pytest.approx(uniform_loss(v), rel=1e-9)
        assert objective_ratio(v, ks, fast_math=False) == pytest.approx(1.0, rel=1e-9)

    def test_more_bits_lower_loss(self, rng):
        params = NonlinearityParams(family=NonlinearityFamily.LOGLOG, p1=6.0, p2=0.0)
        for _ in range(20):
            v = rng.standard_t(5, size=768)
            iv = Interval(x_min=v.min(), x_max=v.max())
            p = params if iv.x_min / iv.delta <= 0 <= iv.x_max / iv.delta else UNIFORM
            assert nvq_loss(v, p, iv, 8) <= nvq_loss(v, p, iv, 4)

    def test_ratio_consistency(self, bell_vector):
        params = NonlinearityParams(family=NonlinearityFamily.LOGLOG, p1=12.0, p2=0.0)
        iv = Interval(x_min=bell_vector.min(), x_max=bell_vector.max())
        lo, hi = iv.x_min / iv.delta, iv.x_max / iv.delta
        params = NonlinearityParams(family=params.family, p1=params.p1, p2=float(np.clip(0.0, lo, hi)))
        expected = uniform_loss(bell_vector, iv) / nvq_loss(bell_vector, params, iv)
        assert objective_ratio(bell_vector, params, iv) == pytest.approx(expected, rel=1e-12)

    def test_empty_vector(self):
        with pytest.raises(DomainError):
            nvq_loss(np.array([]), UNIFORM)


class TestPacking:
    """Test code packing."""

    def test_nibble_order(self):
        block = pack_codes([3, 10], 4)
        assert block.data == bytes([0xA3])
        assert unpack_codes(block).tolist() == [3, 10]

    def test_byte_layout(self):
        assert pack_codes([0, 7, 255], 8).data == bytes([0, 7, 255])

    def test_odd_length(self, rng):
        codes = rng.integers(0, 16, 101)
        block = pack_codes(codes, 4)
        assert len(block.data) == 51
        assert block.data[-1] >> 4 == 0
        assert unpack_codes(block).tolist() == codes.tolist()

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            pack_codes([16], 4)
        with pytest.raises(DomainError):
            pack_codes([-1], 8)

    def test_block_length_validated(self):
        with pytest.raises(ValidationError):
            CodeBlock(data=b"\x00", count=3, beta=4)


@pytest.mark.slow
class TestFixedPointAtScale:
    """Acceptance-scale fixed point over wide intervals."""

    @pytest.mark.parametrize("family", list(NonlinearityFamily))
    @pytest.mark.parametrize("beta", [4, 8])
    def test_thousand_draws(self, rng, family, beta):
        codes = np.arange(2**beta)
        # 50 intervals x 20 parameter draws
        for _ in range(50):
            lo = rng.uniform(-3, 3)
            hi = lo + rng.uniform(0.01, 5)
            p1, p2 = feasible_params(rng, family, lo, hi, 20)
            values = dequantize_core(family, p1, p2, lo, hi, codes, beta, False)
            again = quantize_core(family, p1, p2, lo, hi, values, beta, False)
            assert np.array_equal(again, np.broadcast_to(codes, again.shape))
