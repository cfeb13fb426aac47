import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qobddlab.linalg import (
    DenseOp,
    DimensionError,
    PermutationOp,
    apply,
    basis_state,
    delta_close,
    embed_real,
    is_unitary,
    measure_qubit,
    random_state,
    random_unitary,
    sample_delta_close,
    sqr_map,
)
from reference import closeness_violations

NOT = PermutationOp([1, 0])


class TestApply:
    def test_identity_returns_input(self):
        rng = np.random.default_rng(1)
        v = random_state(8, rng)
        assert np.array_equal(apply(PermutationOp.identity(8), v), v)

    def test_not_gate(self):
        out = apply(NOT, np.array([1, 0]))
        assert np.array_equal(out, [0, 1])
        assert np.array_equal(NOT.to_dense(), [[0, 1], [1, 0]])

    def test_random_unitary_preserves_norm(self):
        rng = np.random.default_rng(2)
        u = random_unitary(8, rng)
        assert is_unitary(u)
        v = random_state(8, rng)
        assert abs(np.linalg.norm(apply(u, v)) - 1) < 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            apply(PermutationOp.identity(4), np.ones(8))
        with pytest.raises(DimensionError):
            apply(DenseOp(np.eye(2)), np.ones(3))

    def test_permutation_must_be_bijection(self):
        with pytest.raises(ValueError):
            PermutationOp([0, 0, 1])

    def test_phases_must_be_unit(self):
        with pytest.raises(ValueError):
            PermutationOp([0, 1], [1, 0.5])

    @pytest.mark.parametrize("m", range(1, 7))
    def test_fast_path_matches_dense_on_basis(self, m):
        rng = np.random.default_rng(m)
        dim = 1 << m
        op = PermutationOp(rng.permutation(dim), np.exp(1j * np.pi * rng.integers(0, 2, dim)))
        dense = op.to_dense()
        for i in range(dim):
            e = basis_state(dim, i)
            assert np.allclose(op.apply(e), dense @ e, atol=0)

    def test_compose_is_first_then_self(self):
        rng = np.random.default_rng(3)
        a = PermutationOp(rng.permutation(8), np.exp(2j * np.pi * rng.random(8)))
        b = PermutationOp(rng.permutation(8))
        v = random_state(8, rng)
        assert np.allclose(b.compose(a).apply(v), b.apply(a.apply(v)))


class TestMeasure:
    def test_bell_like_state(self):
        s = 1 / np.sqrt(2)
        pr1, p0, p1 = measure_qubit(np.array([s, 0, 0, s]), 0)
        assert pr1 == pytest.approx(0.5)
        assert np.allclose(p0, [s, 0, 0, 0])
        assert np.allclose(p1, [0, 0, 0, s])

    @pytest.mark.parametrize("i", range(3))
    def test_zero_state(self, i):
        assert measure_qubit(basis_state(8, 0), i)[0] == 0

    def test_qubit_zero_is_most_significant(self):
        assert measure_qubit(basis_state(4, 2), 0)[0] == 1
        assert measure_qubit(basis_state(4, 2), 1)[0] == 0

    def test_mass_split(self):
        rng = np.random.default_rng(4)
        v = random_state(8, rng) * 0.7
        pr1, p0, _ = measure_qubit(v, 1)
        direct = sum(abs(v[s]) ** 2 for s in range(8) if (s >> 1) & 1)
        assert pr1 == pytest.approx(direct, abs=1e-12)
        assert pr1 + np.vdot(p0, p0).real == pytest.approx(np.vdot(v, v).real, abs=1e-9)

    def test_bad_arguments(self):
        with pytest.raises(DimensionError):
            measure_qubit(np.ones(3), 0)
        with pytest.raises(IndexError):
            measure_qubit(np.ones(4), 2)


class TestSqr:
    def test_example(self):
        out = sqr_map([0.6 + 0.8j, 0, 1, 0.25])
        assert np.allclose(out, [1.0, 0, 1, 0.25])

    def test_zero(self):
        assert np.array_equal(sqr_map(np.zeros(6)), np.zeros(6))

    def test_tail_uses_magnitude(self):
        assert np.allclose(sqr_map([0, 0, -0.5, 0.3j]), [0, 0, 0.5, 0.3])

    def test_length_check(self):
        with pytest.raises(DimensionError):
            sqr_map(np.zeros(5))

    @given(st.integers(0, 3), st.integers(0, 2**32 - 1))
    def test_message_part_is_squared_magnitude(self, l, seed):
        rng = np.random.default_rng(seed)
        z = rng.uniform(-0.7, 0.7, 2**l + 2) + 1j * rng.uniform(-0.7, 0.7, 2**l + 2)
        out = sqr_map(z)
        for i in range(2**l):
            assert out[i] == pytest.approx(z[i].real * z[i].real + z[i].imag * z[i].imag)


class TestEmbed:
    def test_imaginary_unit(self):
        assert np.array_equal(embed_real([[1j]]), [[0, 1], [-1, 0]])

    def test_identity(self):
        assert np.array_equal(embed_real(np.eye(3)), np.eye(6))

    def test_homomorphism(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert np.allclose(embed_real(a) @ embed_real(b), embed_real(a @ b), atol=1e-9)

    @settings(max_examples=30)
    @given(st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_unitary_embeds_orthogonal(self, m, seed):
        u = random_unitary(1 << m, np.random.default_rng(seed)).matrix
        e = embed_real(u)
        assert np.allclose(e @ e.T, np.eye(e.shape[0]), atol=1e-9)
        assert np.all(np.abs(e) <= 1 + 1e-12)


class TestDeltaClose:
    def test_identical(self):
        a = np.array([[0.3, -1.0], [1.0, 0.0]])
        assert delta_close(a, a.copy(), 1e-12)

    def test_scalar_threshold(self):
        assert delta_close([0.5], [0.55], 0.06)
        assert not delta_close([0.5], [0.55], 0.05)

    def test_range_clause(self):
        assert not delta_close([1.5], [1.5], 10)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            delta_close(np.zeros(2), np.zeros(3), 0.1)

    def test_sampler_produces_close_pairs(self):
        rng = np.random.default_rng(6)
        a, b = sample_delta_close((5, 5), 0.01, rng)
        assert delta_close(a, b, 0.01)


class TestClosenessProperties:
    @pytest.mark.parametrize("prop", range(1, 7))
    @pytest.mark.parametrize("delta", [1e-3, 0.05, 0.3])
    def test_no_violations(self, prop, delta):
        rng = np.random.default_rng(100 * prop + int(delta * 1000))
        assert closeness_violations(prop, 10_000, delta, rng) == 0

    @pytest.mark.parametrize("r", [1, 2, 7])
    def test_vector_sizes(self, r):
        rng = np.random.default_rng(r)
        for prop in (3, 4, 5, 6):
            assert closeness_violations(prop, 2000, 0.02, rng, r=r) == 0

    def test_bound_is_not_vacuous(self):
        # the 2-delta bound on products is nearly attained by extreme values
        a, b, c, d = 1.0, 1.0 - 0.0999, 1.0, 1.0 - 0.0999
        assert abs(a - b) < 0.1 and abs(c - d) < 0.1
        assert abs(a * c - b * d) > 1.8 * 0.1
