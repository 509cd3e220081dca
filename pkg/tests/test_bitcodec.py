import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relukit import RATIONAL, evaluate, size_report
from relukit.bitcodec import (
    BitStream,
    BlockCode,
    binary_digits,
    bit_decode_net,
    bit_sum_net,
    block_encode,
    digit_spec,
    prefix_spec,
    ternary_digits,
    ternary_encode,
)

bit_lists = st.lists(st.integers(0, 1), min_size=0, max_size=48)


class TestEncode:
    def test_known_values(self):
        assert ternary_encode((1, 0, 1)) == Fraction(10, 27)
        assert ternary_encode(()) == 0
        assert ternary_encode((1,) * 10) == Fraction(3**10 - 1, 2 * 3**10)

    def test_rejects_bad_digit(self):
        with pytest.raises(ValueError):
            ternary_encode((0, 2))
        with pytest.raises(ValueError):
            BitStream((0, 2))

    @given(bit_lists)
    def test_digit_oracle_round_trip(self, bits):
        x = ternary_encode(bits)
        assert ternary_digits(x, len(bits)) == tuple(bits)

    @given(bit_lists)
    def test_encoding_below_half_of_leading_digit(self, bits):
        # prefix classes stay separated because tails are small
        x = ternary_encode(bits)
        assert 0 <= x <= Fraction(1, 2)


class TestBinaryDigits:
    def test_known(self):
        assert binary_digits(Fraction(1, 2), 3) == (1, 0, 0)
        assert binary_digits(Fraction(5, 8), 3) == (1, 0, 1)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            binary_digits(Fraction(3, 2), 2)


class TestBlockEncode:
    def test_single_value(self):
        bc = block_encode([Fraction(1, 2)], c=2)
        assert bc == BlockCode(Fraction(1, 3), 2, 1)

    def test_two_values(self):
        bc = block_encode([Fraction(1, 2), Fraction(1, 4)], c=2)
        assert bc.value == Fraction(1, 3) + Fraction(1, 81) == Fraction(28, 81)

    def test_empty(self):
        assert block_encode([], c=3).value == 0

    def test_precision_check(self):
        block_encode([Fraction(3, 8)], c=3, precision=3)
        with pytest.raises(ValueError):
            block_encode([Fraction(1, 5)], c=3, precision=3)

    def test_decodes_digitwise(self, rng):
        c = 4
        vals = [Fraction(rng.randrange(16), 16) for _ in range(5)]
        bc = block_encode(vals, c=c)
        digits = ternary_digits(bc.value, c * len(vals))
        for j, v in enumerate(vals):
            assert digits[j * c:(j + 1) * c] == binary_digits(v, c)


class TestDigitSpecs:
    def test_digit_plateaus(self, rng):
        for j in (1, 2, 3):
            net_spec = digit_spec(j)
            for _ in range(50):
                bits = [rng.randint(0, 1) for _ in range(j + 4)]
                x = ternary_encode(bits)
                assert net_spec(x) == bits[j - 1]

    def test_prefix_plateaus(self, rng):
        for n in (1, 2, 3):
            net_spec = prefix_spec(n)
            for _ in range(50):
                bits = [rng.randint(0, 1) for _ in range(n + 4)]
                x = ternary_encode(bits)
                assert net_spec(x) == ternary_encode(bits[:n])


class TestBitSumNet:
    def test_spec_example(self):
        net = bit_sum_net(2)
        out = evaluate(net, [ternary_encode((1, 0, 1)), Fraction(2)])
        assert out == [1, Fraction(1, 3)]

    def test_zero_stream(self):
        net = bit_sum_net(3)
        assert evaluate(net, [Fraction(0), Fraction(3)]) == [0, 0]

    def test_i_zero(self):
        net = bit_sum_net(2)
        x = ternary_encode((1, 1, 1))
        out = evaluate(net, [x, Fraction(0)])
        assert out == [0, ternary_encode((1,))]

    def test_random_streams(self, rng):
        for n in (1, 2, 3):
            net = bit_sum_net(n)
            for _ in range(50):
                bits = [rng.randint(0, 1) for _ in range(n + 5)]
                i = rng.randint(0, n + 2)
                out = evaluate(net, [ternary_encode(bits), Fraction(i)])
                assert out[0] == sum(bits[: min(i, n)])
                assert out[1] == ternary_encode(bits[n:])

    def test_weight_budget(self):
        for n in (2, 4):
            rep = size_report(bit_sum_net(n))
            assert rep.depth == 2
            assert rep.max_magnitude <= 2 * 3**n


class TestBitDecodeNet:
    def test_two_leading_ones(self):
        net = bit_decode_net(2, 2)
        out = evaluate(net, [ternary_encode((1, 1))])
        assert out == [Fraction(3, 4), 0]

    def test_partial_decode(self):
        net = bit_decode_net(2, 2)
        out = evaluate(net, [ternary_encode((1, 0, 1, 1))])
        assert out == [Fraction(1, 2), ternary_encode((1, 1))]

    def test_depth_is_block_count(self):
        for n, ell in [(2, 2), (2, 7), (3, 9), (4, 5)]:
            rep = size_report(bit_decode_net(n, ell))
            assert rep.depth == -(-ell // n)

    def test_round_trip_random_streams(self, rng):
        # exact recovery of the binary value for streams up to length 48
        for _ in range(200):
            ell = rng.randint(1, 48)
            n = rng.randint(1, 4)
            bits = [rng.randint(0, 1) for _ in range(ell + rng.randint(0, 6))]
            net = bit_decode_net(n, ell)
            out = evaluate(net, [ternary_encode(bits)])
            want = sum(Fraction(b, 2**j) for j, b in enumerate(bits[:ell], start=1))
            assert out[0] == want
            assert out[1] == ternary_encode(bits[ell:])

    def test_tail_iteration_matches_induction(self, rng):
        # feeding the tail back through a fresh decoder yields the next digits
        n, ell = 2, 4
        bits = [rng.randint(0, 1) for _ in range(12)]
        net = bit_decode_net(n, ell)
        x = ternary_encode(bits)
        for k in range(3):
            out = evaluate(net, [x])
            want = sum(
                Fraction(b, 2**j)
                for j, b in enumerate(bits[k * ell:(k + 1) * ell], start=1)
            )
            assert out[0] == want
            x = out[1]
        assert x == ternary_encode(bits[3 * ell:])


@given(bit_lists.filter(lambda b: len(b) >= 1))
@settings(max_examples=60, deadline=None)
def test_decode_property(bits):
    net = bit_decode_net(3, len(bits))
    out = evaluate(net, [ternary_encode(bits)])
    assert out[0] == sum(Fraction(b, 2**j) for j, b in enumerate(bits, start=1))
    assert out[1] == 0
