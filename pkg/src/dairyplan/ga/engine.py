"""Generational loop: roulette selection, staged operators, elitist merge."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ValidationError
from .chromosome import crossover, init_population, mutate
from .decode import DECODERS

DECODER_MODES = {"both": ("PBD", "PBA"), "pbd": ("PBD",), "pba": ("PBA",)}
SCHEDULES = ("figure2", "section519")


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 100
    p_cross: float = 0.8
    p_mut: float = 0.2
    max_generations: int = 300
    no_improve_limit: int = 100
    seed: int = 0
    decoder_mode: str = "both"
    operator_schedule: str = "figure2"
    heuristic_count: int = 50

    def __post_init__(self):
        for name in ("p_cross", "p_mut"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}", field=name)
        if self.population_size < 2:
            raise ValidationError("population_size must be at least 2", field="population_size")
        if self.decoder_mode.lower() not in DECODER_MODES:
            raise ValidationError(f"unknown decoder_mode {self.decoder_mode!r}", field="decoder_mode")
        if self.operator_schedule not in SCHEDULES:
            raise ValidationError(f"unknown operator_schedule {self.operator_schedule!r}",
                                  field="operator_schedule")
        if self.max_generations < 0 or self.no_improve_limit < 1:
            raise ValidationError("generation limits must be positive", field="max_generations")

    @property
    def decoders(self):
        return DECODER_MODES[self.decoder_mode.lower()]

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class GAResult:
    best_chromosome: object
    best_solution: object
    best_value: float
    decoder_used: str
    generation_log: list = field(default_factory=list)
    generations: int = 0
    evaluations: int = 0
    wall_time: float = 0.0

    def log_lines(self):
        """Generation log as line-delimited JSON records."""
        return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in self.generation_log)


def stages(iteration, max_iter, schedule="figure2"):
    """``(crossover stage, mutation stage)`` for a generation index."""
    frac = iteration / max(1, max_iter)
    if schedule == "figure2":
        if frac < 0.33:
            cross = "both"
        elif frac < 0.66:
            cross = "production"
        else:
            cross = "routing"
        return cross, ("both" if frac < 0.8 else "production")
    if frac < 1 / 3:
        return "production", "routing"
    if frac < 2 / 3:
        return "routing", "production"
    return "both", "both"


class Evaluator:
    """Fitness with a cache keyed by the chromosome bytes."""

    def __init__(self, instance, config, robust=None):
        self.instance = instance
        self.config = config
        self.robust = robust
        self.cache = {}
        self.evaluations = 0

    def decode_all(self, chromosome):
        return {name: DECODERS[name](self.instance, chromosome, self.robust, seed=self.config.seed)
                for name in self.config.decoders}

    def __call__(self, chromosome):
        key = chromosome.key()
        hit = self.cache.get(key)
        if hit is None:
            self.evaluations += 1
            sols = self.decode_all(chromosome)
            name = min(sols, key=lambda n: (sols[n].Z, n != "PBD"))
            hit = (float(sols[name].Z), name)
            self.cache[key] = hit
        return hit


def fitness(instance, chromosome, config=GAConfig(), robust=None):
    """Lowest total cost over the enabled decoders."""
    return Evaluator(instance, config, robust)(chromosome)[0]


def roulette_weights(fitnesses):
    f = np.asarray(fitnesses, dtype=float)
    worst = float(f.max())
    return (worst - f) + 1e-9 * max(1.0, abs(worst))


def select_parents(population, fitnesses, rng):
    """Two indices drawn by roulette wheel on cost-inverted weights."""
    w = roulette_weights(fitnesses)
    idx = rng.choice(len(population), size=2, p=w / w.sum())
    return int(idx[0]), int(idx[1])


def run(instance, config=GAConfig(), robust=None, progress=None):
    """Evolve a population and return the best plan found."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    ev = Evaluator(instance, config, robust)
    pop = init_population(instance, config.population_size, rng, config.heuristic_count)
    fit = [ev(c) for c in pop]

    def ranked(chroms, scores):
        order = sorted(range(len(chroms)), key=lambda k: (scores[k][0], k))
        return [chroms[k] for k in order], [scores[k] for k in order]

    pop, fit = ranked(pop, fit)
    best_value, best_decoder, best = fit[0][0], fit[0][1], pop[0]
    log = []
    stale = 0
    n = config.population_size
    n_pairs = int(round(config.p_cross * n / 2))
    n_mut = int(round(config.p_mut * n))
    gen = 0
    for gen in range(config.max_generations):
        cross_stage, mut_stage = stages(gen, config.max_generations, config.operator_schedule)
        values = [v for v, _ in fit]
        children = []
        for _ in range(n_pairs):
            a, b = select_parents(pop, values, rng)
            children.extend(crossover(pop[a], pop[b], cross_stage, rng))
        for _ in range(n_mut):
            k = int(rng.integers(0, n))
            children.append(mutate(pop[k], mut_stage, rng))
        merged = pop + children
        scores = fit + [ev(c) for c in children]
        pop, fit = ranked(merged, scores)
        pop, fit = pop[:n], fit[:n]
        if fit[0][0] < best_value - 1e-9 * max(1.0, abs(best_value)):
            best_value, best_decoder, best = fit[0][0], fit[0][1], pop[0]
            stale = 0
        else:
            stale += 1
        rec = {"generation": gen, "best": best_value, "mean": float(np.mean([v for v, _ in fit])),
               "decoder_used": best_decoder}
        log.append(rec)
        if progress is not None:
            progress(rec)
        if stale >= config.no_improve_limit:
            break
    solution = DECODERS[best_decoder](instance, best, robust, seed=config.seed)
    return GAResult(best_chromosome=best, best_solution=solution, best_value=float(solution.Z),
                    decoder_used=best_decoder, generation_log=log, generations=len(log),
                    evaluations=ev.evaluations, wall_time=time.perf_counter() - t0)
