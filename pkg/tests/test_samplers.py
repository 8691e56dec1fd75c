import math

import numpy as np
import pytest

from qroute.kernels import available_backends, get_backend
from qroute.qubo import BinaryPolynomial, QuboCompiled, VariableRegistry, compile_qubo
from qroute.samplers import (
    AnnealParams,
    EmptyQuboError,
    SampleSet,
    clamp_subqubo,
    decompose_solve,
    default_beta_range,
    simulated_annealing,
    tabu_search,
)

from oracles import exhaustive_qubo_min


def one_hot_pair():
    reg = VariableRegistry().register("x", [2])
    x0 = BinaryPolynomial.variable(reg, "x", 0)
    x1 = BinaryPolynomial.variable(reg, "x", 1)
    return compile_qubo((x0 + x1 - 1).square())


def random_qubo(seed, nvar=12, density=0.6):
    rng = np.random.default_rng(seed)
    linear = rng.integers(-10, 11, nvar).astype(float)
    quadratic = {}
    for i in range(nvar):
        for j in range(i + 1, nvar):
            if rng.random() < density:
                w = int(rng.integers(-10, 11))
                if w:
                    quadratic[(i, j)] = float(w)
    return QuboCompiled(nvar, linear, quadratic, float(rng.integers(-5, 6)))


class TestSimulatedAnnealing:
    def test_two_ground_states(self):
        q = one_hot_pair()
        result = simulated_annealing(q, AnnealParams(num_reads=100, sweeps=50, seed=3))
        assert result.first.energy == 0.0
        assert result.first.sample in ((1, 0), (0, 1))

    def test_matches_exhaustive_minimum(self):
        hits = 0
        for seed in range(5):
            q = random_qubo(seed)
            expected, _ = exhaustive_qubo_min(q.linear, q.quadratic, q.offset, q.variable_count)
            result = simulated_annealing(q, AnnealParams(num_reads=200, sweeps=500, seed=seed))
            hits += result.first.energy == expected
        assert hits >= 4

    def test_deterministic(self):
        q = random_qubo(7)
        params = AnnealParams(num_reads=50, sweeps=100, seed=123)
        a = simulated_annealing(q, params)
        b = simulated_annealing(q, params)
        assert [(r.sample, r.energy, r.occurrences) for r in a] == [
            (r.sample, r.energy, r.occurrences) for r in b
        ]

    def test_aggregation_preserves_mass(self):
        q = one_hot_pair()
        result = simulated_annealing(q, AnnealParams(num_reads=77, sweeps=20, seed=0))
        assert result.total_occurrences == 77

    def test_records_sorted_and_recomputed(self):
        q = random_qubo(11, nvar=8)
        result = simulated_annealing(q, AnnealParams(num_reads=60, sweeps=50, seed=5))
        energies = [r.energy for r in result]
        assert energies == sorted(energies)
        for r in result:
            assert r.energy == q.energy(r.sample)
        keys = [(r.energy, r.sample) for r in result]
        assert keys == sorted(keys)

    def test_empty_qubo_rejected(self):
        q = QuboCompiled(0, np.zeros(0), {}, 0.0)
        with pytest.raises(EmptyQuboError):
            simulated_annealing(q, AnnealParams(num_reads=1, sweeps=1))

    def test_param_validation(self):
        with pytest.raises(ValueError):
            AnnealParams(num_reads=0)
        with pytest.raises(ValueError):
            AnnealParams(beta_hot=2.0, beta_cold=1.0)
        with pytest.raises(ValueError):
            AnnealParams(beta_hot=1.0)


class TestBetaRange:
    def test_single_variable(self):
        reg = VariableRegistry().register("x", [1])
        q = compile_qubo(BinaryPolynomial.variable(reg, "x", 0) * 4)
        hot, cold = default_beta_range(q)
        assert hot == pytest.approx(math.log(2) / 4)
        assert cold == pytest.approx(math.log(100) / 4)

    def test_ordering(self):
        q = random_qubo(1)
        hot, cold = default_beta_range(q)
        assert 0 < hot < cold

    def test_zero_qubo_rejected(self):
        q = QuboCompiled(3, np.zeros(3), {}, 1.0)
        with pytest.raises(EmptyQuboError):
            default_beta_range(q)


class TestTabu:
    def test_solves_pair(self):
        result = tabu_search(one_hot_pair(), iters=50, tenure=2, seed=0)
        assert result.first.energy == 0.0

    def test_matches_exhaustive(self):
        hits = 0
        for seed in range(5):
            q = random_qubo(seed + 100)
            expected, _ = exhaustive_qubo_min(q.linear, q.quadratic, q.offset, q.variable_count)
            result = tabu_search(q, iters=2000, tenure=5, seed=seed)
            hits += result.first.energy == expected
        assert hits >= 4

    def test_huge_tenure_terminates(self):
        q = random_qubo(3, nvar=6)
        result = tabu_search(q, iters=200, tenure=50, seed=2)
        assert len(result.first.sample) == 6

    def test_deterministic(self):
        q = random_qubo(9)
        a = tabu_search(q, iters=300, tenure=4, seed=42)
        b = tabu_search(q, iters=300, tenure=4, seed=42)
        assert [(r.sample, r.energy) for r in a] == [(r.sample, r.energy) for r in b]


class TestDecompose:
    def test_clamp_energy_identity(self):
        q = random_qubo(21, nvar=10)
        rng = np.random.default_rng(0)
        for _ in range(20):
            sample = rng.integers(0, 2, 10)
            free = sorted(rng.choice(10, size=4, replace=False).tolist())
            sub, free_out = clamp_subqubo(q, free, sample)
            sub_bits = rng.integers(0, 2, 4)
            merged = sample.copy()
            for pos, var in enumerate(free_out):
                merged[var] = sub_bits[pos]
            assert sub.energy(sub_bits) == pytest.approx(q.energy(merged), rel=1e-12)

    def test_full_subsize_equals_inner_solve(self):
        q = random_qubo(5, nvar=10)
        expected, _ = exhaustive_qubo_min(q.linear, q.quadratic, q.offset, 10)
        result = decompose_solve(q, subsize=10, rounds=3, inner="sa", seed=8)
        assert result.first.energy == expected

    def test_monotone_incumbent(self):
        q = random_qubo(33, nvar=40, density=0.3)
        seen = []
        decompose_solve(
            q, subsize=15, rounds=20, inner="sa", seed=1,
            observer=lambda r, e: seen.append(e),
        )
        assert len(seen) == 20
        assert all(b <= a for a, b in zip(seen, seen[1:]))

    def test_final_not_worse_than_initial(self):
        from qroute._pykernels import Xoshiro256

        q = random_qubo(33, nvar=40, density=0.3)
        rng = Xoshiro256(1)
        initial = [rng.next64() >> 63 for _ in range(40)]
        initial_energy = q.energy(initial)
        result = decompose_solve(q, subsize=15, rounds=20, inner="sa", seed=1)
        assert result.first.energy <= initial_energy

    def test_validation(self):
        q = random_qubo(2, nvar=6)
        with pytest.raises(ValueError):
            decompose_solve(q, subsize=0, rounds=1)
        with pytest.raises(ValueError):
            decompose_solve(q, subsize=7, rounds=1)

    def test_deterministic(self):
        q = random_qubo(13, nvar=20, density=0.4)
        a = decompose_solve(q, subsize=8, rounds=10, seed=3)
        b = decompose_solve(q, subsize=8, rounds=10, seed=3)
        assert [(r.sample, r.energy) for r in a] == [(r.sample, r.energy) for r in b]


@pytest.mark.skipif(len(available_backends()) < 2, reason="compiled backend not built")
class TestBackendEquivalence:
    def test_sa_bit_identical(self):
        q = random_qubo(17, nvar=10)
        ptr, idx, wgt = q.adjacency()
        betas = np.geomspace(0.1, 5.0, 80)
        nat = get_backend("native").sa_sample(q.linear, ptr, idx, wgt, betas, 99, 25)
        pyk = get_backend("python").sa_sample(q.linear, ptr, idx, wgt, betas, 99, 25)
        assert np.array_equal(nat, pyk)

    def test_tabu_bit_identical(self):
        q = random_qubo(18, nvar=9)
        ptr, idx, wgt = q.adjacency()
        nat = get_backend("native").tabu_run(q.linear, ptr, idx, wgt, q.offset, 150, 4, 5)
        pyk = get_backend("python").tabu_run(q.linear, ptr, idx, wgt, q.offset, 150, 4, 5)
        assert np.array_equal(nat[0], pyk[0])
        assert np.array_equal(nat[1], pyk[1])
        assert nat[2] == pyk[2]

    def test_dip_bit_identical(self):
        rng = np.random.default_rng(6)
        for _ in range(4):
            values, counts = np.unique(
                np.round(rng.normal(size=1500), 2), return_counts=True
            )
            nat = get_backend("native").dip_statistic(values, counts.astype(float))
            pyk = get_backend("python").dip_statistic(values, counts.astype(float))
            assert nat == pyk
