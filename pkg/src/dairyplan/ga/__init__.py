"""Genetic algorithm with a production string per line and a routing string per truck."""

from .chromosome import Chromosome, crossover, init_population, invariant_violations, mutate
from .decode import decode_PBA, decode_PBD
from .engine import GAConfig, GAResult, fitness, run, select_parents, stages

__all__ = ["Chromosome", "GAConfig", "GAResult", "crossover", "decode_PBA", "decode_PBD", "fitness",
           "init_population", "invariant_violations", "mutate", "run", "select_parents", "stages"]
