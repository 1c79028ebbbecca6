import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build
from dairyplan.case_study import case_study
from dairyplan.errors import ValidationError
from dairyplan.ga import (Chromosome, GAConfig, crossover, init_population, invariant_violations,
                          mutate, select_parents, stages)
from dairyplan.ga.chromosome import mutate_production
from dairyplan.ga.engine import roulette_weights
from dairyplan.generator import GenSpec, generate, tiny

# routing rows of the three-truck, ten-DC example string
FIG4 = np.array([[5, 9, 10, 8, 2, 7, 4, 3, 1, 6],
                 [10, 1, 7, 5, 4, 3, 9, 2, 6, 8],
                 [5, 9, 10, 1, 8, 4, 3, 6, 7, 2]])


def test_population_meets_invariants():
    inst = generate(GenSpec("small", 3))
    pop = init_population(inst, 100, np.random.default_rng(0))
    assert len(pop) == 100
    for c in pop:
        assert invariant_violations(inst, c) == []
        assert c.production.shape[1] == 3 * inst.num_production_days


def test_population_is_seeded():
    inst = generate(GenSpec("small", 3))
    a = init_population(inst, 30, np.random.default_rng(9))
    b = init_population(inst, 30, np.random.default_rng(9))
    assert a == b
    assert a != init_population(inst, 30, np.random.default_rng(10))


def prep_plus_processing(inst, f, j):
    # cheapest batch recipe of the family per day, averaged; plus minimum lots at VarCost
    p = inst.params
    recipes = [r for r in range(inst.num_recipes) if inst.family_recipes[f, r]]
    prep = np.mean([min(p.Bpc[r, i] for r in recipes) for i in range(inst.num_production_days)])
    proc = 0.0
    for q in range(inst.num_products):
        if inst.family_of_product[q] == f and inst.product_lines[q, j]:
            proc += p.VarCost[q] * p.MinLots[q]
    return prep + proc


@pytest.mark.parametrize("seed", range(8))
def test_seed_chromosome_starts_with_cheapest_family(seed):
    inst = generate(GenSpec("medium", seed))
    first = init_population(inst, 2, np.random.default_rng(0))[0]
    for j in range(inst.num_lines):
        fams = [f for f in range(inst.num_families) if inst.family_lines[f, j]]
        if not fams:
            continue
        costs = {f: prep_plus_processing(inst, f, j) for f in fams}
        cheapest = min(costs.values())
        for i in range(inst.num_production_days):
            assert costs[int(first.production[j, 3 * i])] == pytest.approx(cheapest, rel=1e-12)


def test_heuristic_block_perturbs_the_seed():
    inst = generate(GenSpec("small", 1))
    pop = init_population(inst, 100, np.random.default_rng(2), heuristic=50)
    seed = pop[0].production
    for c in pop[1:50]:
        # a segment swap keeps each column's multiset of families
        assert np.array_equal(np.sort(c.production, axis=0), np.sort(seed, axis=0))


# ------------------------------------------------------------------ crossover

def case_chromosomes():
    inst = case_study()
    rng = np.random.default_rng(4)
    a, b = init_population(inst, 2, rng)
    return inst, a.copy_with(routing=FIG4), b.copy_with(routing=FIG4[[1, 2, 0]])


def test_crossover_at_zero_swaps_parents():
    inst, a, b = case_chromosomes()
    c1, c2 = crossover(a, b, "both", np.random.default_rng(0), points=(0, 0))
    assert c1 == b and c2 == a


def test_example_routing_rows_cross_to_permutations():
    inst, a, b = case_chromosomes()
    c1, c2 = crossover(a, b, "routing", np.random.default_rng(0), points=(0, 4))
    # head 5 9 10 8 of row one, then the other parent's order without repeats
    assert c1.routing[0].tolist() == [5, 9, 10, 8, 1, 7, 4, 3, 2, 6]
    assert c2.routing[0].tolist() == [10, 1, 7, 5, 9, 8, 2, 4, 3, 6]
    for c in (c1, c2):
        assert invariant_violations(inst, c) == []
    assert np.array_equal(c1.production, a.production)


def test_production_cut_is_shared_by_all_lines():
    inst = generate(GenSpec("small", 0))
    a, b = init_population(inst, 2, np.random.default_rng(1), heuristic=0)
    c1, _ = crossover(a, b, "production", np.random.default_rng(0), points=(2, None))
    assert np.array_equal(c1.production[:, :2], a.production[:, :2])
    assert np.array_equal(c1.production[:, 2:], b.production[:, 2:])
    assert np.array_equal(c1.routing, a.routing)


# ------------------------------------------------------------------ mutation

def test_mutation_swaps_two_different_families():
    prod = np.array([[0, 0, 1], [0, 0, 0]])
    rng = np.random.default_rng(3)
    swapped = 0
    for _ in range(200):
        out = mutate_production(prod, rng)
        diff = np.argwhere(out != prod)
        if not len(diff):
            continue  # ten draws all landed on equal families
        swapped += 1
        assert len(diff) == 2
        (j1, k1), (j2, k2) = diff
        assert j1 != j2
        assert {out[j1, k1], out[j2, k2]} == {0, 1}
    # one 1 among six genes: a cross-line draw differs with probability 1/3
    assert 150 < swapped < 200


def test_mutation_gives_up_on_single_family():
    prod = np.zeros((2, 6), dtype=int)
    assert np.array_equal(mutate_production(prod, np.random.default_rng(0)), prod)


def test_routing_mutation_keeps_permutation():
    inst, a, _ = case_chromosomes()
    rng = np.random.default_rng(5)
    c = a
    for _ in range(100):
        c = mutate(c, "routing", rng)
        assert invariant_violations(inst, c) == []
    assert np.array_equal(c.production, a.production)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31), size=st.sampled_from(["small", "medium"]))
def test_operators_are_closed(seed, size):
    inst = generate(GenSpec(size, seed % 50))
    rng = np.random.default_rng(seed)
    pop = init_population(inst, 6, rng, heuristic=3)
    for _ in range(20):
        a, b = (pop[k] for k in rng.choice(len(pop), 2, replace=False))
        stage = ("both", "production", "routing")[int(rng.integers(3))]
        for c in crossover(a, b, stage, rng):
            c = mutate(c, stage, rng)
            assert invariant_violations(inst, c) == []
            pop[int(rng.integers(len(pop)))] = c


def test_invariant_checker_flags_damage():
    inst = tiny(0)
    c = init_population(inst, 2, np.random.default_rng(0))[0]
    bad = c.copy_with(routing=np.zeros_like(c.routing))
    assert any("permutation" in m for m in invariant_violations(inst, bad))
    short = c.copy_with(production=c.production[:, :-1])
    assert any("shape" in m for m in invariant_violations(inst, short))


# ------------------------------------------------------------------ selection

def test_uniform_fitness_selects_uniformly():
    rng = np.random.default_rng(0)
    pop = list(range(4))
    counts = np.zeros(4)
    for _ in range(10000):
        a, b = select_parents(pop, [7.0] * 4, rng)
        counts[a] += 1
        counts[b] += 1
    assert np.allclose(counts / counts.sum(), 0.25, atol=0.015)


def test_degenerate_weights_are_positive():
    w = roulette_weights([0.0, 0.0])
    assert np.all(w > 0) and w[0] == w[1]


def test_better_chromosome_wins_more_often():
    rng = np.random.default_rng(1)
    hits = sum(select_parents([0, 1], [10.0, 12.0], rng)[0] == 0 for _ in range(10000))
    assert hits / 10000 > 0.5


# ------------------------------------------------------------------ config and schedule

@pytest.mark.parametrize("kw", [dict(p_cross=1.2), dict(p_mut=-0.1), dict(population_size=1),
                                dict(decoder_mode="xyz"), dict(operator_schedule="other")])
def test_config_rejects_bad_values(kw):
    with pytest.raises(ValidationError):
        GAConfig(**kw)


def test_schedule_thresholds():
    got = [stages(g, 300) for g in (0, 98, 99, 197, 198, 239, 240, 299)]
    assert got == [("both", "both"), ("both", "both"), ("production", "both"),
                   ("production", "both"), ("routing", "both"), ("routing", "both"),
                   ("routing", "production"), ("routing", "production")]
    assert [stages(g, 300, "section519")[0] for g in (0, 100, 200)] == ["production", "routing", "both"]


def test_chromosome_is_immutable():
    c = Chromosome(np.zeros((1, 3)), np.array([[1, 2]]))
    with pytest.raises(ValueError):
        c.routing[0, 0] = 5
    assert build(A=3).num_dcs == c.routing.shape[1] + 1
