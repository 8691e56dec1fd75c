import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qroute.qubo import (
    BinaryPolynomial,
    DegreeError,
    QuboCompiled,
    RegistryError,
    VariableRegistry,
    add_slack_binary,
    add_slack_unary,
    compile_qubo,
)

from oracles import enumerate_energies


def two_var_registry():
    reg = VariableRegistry()
    reg.register("x", [2])
    x0 = BinaryPolynomial.variable(reg, "x", 0)
    x1 = BinaryPolynomial.variable(reg, "x", 1)
    return reg, x0, x1


class TestRegistry:
    def test_row_major_indexing(self):
        reg = VariableRegistry().register("x", [2, 3])
        assert reg.total_count == 6
        assert reg.index("x", (1, 2)) == 5
        assert reg.index("x", (0, 0)) == 0

    def test_contiguous_offsets(self):
        reg = VariableRegistry().register("a", [2]).register("b", [3])
        assert [reg.index("b", i) for i in range(3)] == [2, 3, 4]
        assert reg.total_count == 5

    def test_duplicate_name_rejected(self):
        reg = VariableRegistry().register("x", [2])
        with pytest.raises(RegistryError):
            reg.register("x", [3])

    def test_bad_shapes_rejected(self):
        with pytest.raises(RegistryError):
            VariableRegistry().register("x", [])
        with pytest.raises(RegistryError):
            VariableRegistry().register("x", [0])

    def test_out_of_range(self):
        reg = VariableRegistry().register("x", [2, 2])
        with pytest.raises(RegistryError):
            reg.index("x", (2, 0))
        with pytest.raises(RegistryError):
            reg.label(4)

    @given(st.lists(st.lists(st.integers(1, 4), min_size=1, max_size=3), min_size=1, max_size=4))
    def test_label_round_trips(self, shapes):
        reg = VariableRegistry()
        for n, shape in enumerate(shapes):
            reg.register(f"v{n}", shape)
        for flat in range(reg.total_count):
            name, multi = reg.label(flat)
            assert reg.index(name, multi) == flat


class TestPolynomialAlgebra:
    def test_squared_linear_form(self):
        reg, x0, x1 = two_var_registry()
        p = (x0 + x1 - 1).square()
        assert p.terms == {(): 1.0, (0,): -1.0, (1,): -1.0, (0, 1): 2.0}

    def test_multiplicative_identity(self):
        reg, x0, x1 = two_var_registry()
        p = x0 * 3 + x1 - 2
        q = p * BinaryPolynomial.constant(reg, 1.0)
        assert q.terms == p.terms

    def test_binary_idempotence(self):
        reg, x0, _ = two_var_registry()
        assert x0.square().terms == {(0,): 1.0}
        assert (x0 * x0).terms == {(0,): 1.0}

    def test_registry_mismatch(self):
        _, x0, _ = two_var_registry()
        _, y0, _ = two_var_registry()
        with pytest.raises(RegistryError):
            x0 + y0
        with pytest.raises(RegistryError):
            x0 * y0

    def test_zero_coefficients_dropped(self):
        reg, x0, x1 = two_var_registry()
        p = x0 + x1 - x0 - x1
        assert p.terms == {}
        assert (x0 * 0).terms == {}

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_square_matches_squared_evaluation(self, data):
        nvar = data.draw(st.integers(1, 5))
        reg = VariableRegistry().register("v", [nvar])
        const = data.draw(st.integers(-4, 4))
        coefs = data.draw(st.lists(st.integers(-4, 4), min_size=nvar, max_size=nvar))
        form = BinaryPolynomial.linear_form(
            reg, float(const), {i: float(c) for i, c in enumerate(coefs)}
        )
        squared = form.square()
        for mask in range(1 << nvar):
            sample = [(mask >> i) & 1 for i in range(nvar)]
            assert squared.evaluate(sample) == pytest.approx(form.evaluate(sample) ** 2)


class TestCompileAndEnergy:
    def test_constraint_energies(self):
        reg, x0, x1 = two_var_registry()
        q = compile_qubo((x0 + x1 - 1).square())
        assert q.energy((0, 0)) == 1.0
        assert q.energy((1, 0)) == 0.0
        assert q.energy((0, 1)) == 0.0
        assert q.energy((1, 1)) == 1.0  # -1 - 1 + 2 + 1

    def test_zeros_gives_offset(self):
        reg, x0, x1 = two_var_registry()
        q = compile_qubo(x0 * x1 * 2 + 5)
        assert q.energy((0, 0)) == 5.0

    def test_single_bit_recovers_linear(self):
        reg = VariableRegistry().register("x", [3])
        p = BinaryPolynomial.linear_form(reg, 2.0, {0: 4.0, 1: -3.0, 2: 0.5})
        q = compile_qubo(p)
        for i, w in enumerate((4.0, -3.0, 0.5)):
            sample = [0, 0, 0]
            sample[i] = 1
            assert q.energy(sample) == 2.0 + w

    def test_degree_error_names_a_term(self):
        reg = VariableRegistry().register("x", [3])
        cube = (
            BinaryPolynomial.variable(reg, "x", 0)
            * BinaryPolynomial.variable(reg, "x", 1)
            * BinaryPolynomial.variable(reg, "x", 2)
        )
        with pytest.raises(DegreeError, match="degree 3"):
            compile_qubo(cube)

    def test_length_mismatch(self):
        reg, x0, x1 = two_var_registry()
        q = compile_qubo(x0 + x1)
        with pytest.raises(ValueError):
            q.energy((1, 0, 1))

    def test_variable_count_spans_registry(self):
        reg = VariableRegistry().register("x", [4])
        q = compile_qubo(BinaryPolynomial.variable(reg, "x", 1))
        assert q.variable_count == 4

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_compiled_energy_equals_direct_evaluation(self, seed):
        # random degree <= 2 polynomial over <= 6 vars, exhaustively checked
        rng = np.random.default_rng(seed)
        nvar = int(rng.integers(1, 7))
        reg = VariableRegistry().register("v", [nvar])
        terms = {(): float(rng.integers(-8, 9))}
        for i in range(nvar):
            terms[(i,)] = float(rng.integers(-8, 9))
            for j in range(i + 1, nvar):
                if rng.random() < 0.5:
                    terms[(i, j)] = float(rng.integers(-8, 9))
        p = BinaryPolynomial(reg, terms)
        q = compile_qubo(p)
        bits, energies = enumerate_energies(q.linear, q.quadratic, q.offset, nvar)
        for row, e in zip(bits, energies):
            assert p.evaluate(row) == e


class TestSlackEncodings:
    def test_unary_cmt_capacity(self):
        # capacity 160, minimum demand 3 -> 53 bits weighted 3, 6, ..., 159
        reg = VariableRegistry()
        reg, form = add_slack_unary(reg, "s", 159, 3)
        weights = sorted(form.terms.values())
        assert reg.total_count == 53
        assert weights[0] == 3.0 and weights[-1] == 159.0
        assert weights == [3.0 * (l + 1) for l in range(53)]

    def test_unary_single_bit(self):
        reg, form = add_slack_unary(VariableRegistry(), "s", 1, 1)
        assert sorted(form.terms.values()) == [1.0]

    def test_unary_ceil(self):
        reg, form = add_slack_unary(VariableRegistry(), "s", 5, 2)
        assert sorted(form.terms.values()) == [2.0, 4.0, 6.0]

    def test_unary_validation(self):
        with pytest.raises(ValueError):
            add_slack_unary(VariableRegistry(), "s", 0, 1)
        with pytest.raises(ValueError):
            add_slack_unary(VariableRegistry(), "s", 5, 0)
        with pytest.raises(ValueError):
            add_slack_unary(VariableRegistry(), "s", 1, 2)

    @pytest.mark.parametrize(
        "upper,expected", [(10, [1, 2, 4, 3]), (1, [1]), (7, [1, 2, 4])]
    )
    def test_binary_weights(self, upper, expected):
        reg, form = add_slack_binary(VariableRegistry(), "s", upper)
        weights = [form.terms[(i,)] for i in range(reg.total_count)]
        assert weights == [float(w) for w in expected]

    def test_binary_range_exact(self):
        for upper in range(1, 40):
            _, form = add_slack_binary(VariableRegistry(), "s", upper)
            weights = list(form.terms.values())
            reachable = {0}
            for w in weights:
                reachable |= {r + w for r in reachable}
            assert reachable == set(range(upper + 1))

    @given(st.integers(1, 20), st.integers(1, 6))
    @settings(max_examples=40, deadline=None)
    def test_unary_represents_every_step_multiple(self, steps, step):
        upper = steps * step
        _, form = add_slack_unary(VariableRegistry(), "s", upper, step)
        weights = list(form.terms.values())
        reachable = {0.0}
        for w in weights:
            reachable |= {r + w for r in reachable}
        for target in range(0, upper + 1, step):
            assert float(target) in reachable
