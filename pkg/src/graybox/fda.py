"""Fixed-structure factorized distribution algorithm.

The factorization is an input, never learned: each generation evaluates the
population, selects, fits factor conditionals by smoothed counting, and
ancestral-samples the next population. All randomness flows from one seeded
generator, so a run is reproducible from its config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adf import AdfInstance, Bits, bits_to_string
from .errors import ConfigError, StructuralError
from .graphs import Factorization

__all__ = [
    "TruncationSelection",
    "BoltzmannSelection",
    "Population",
    "FactorParams",
    "FdaConfig",
    "GenerationStats",
    "FdaResult",
    "select",
    "selection_probabilities",
    "estimate",
    "sample",
    "model_probability",
    "model_entropy",
    "run_fda",
    "result_to_json",
]


@dataclass(frozen=True)
class TruncationSelection:
    """Keep the ceil(tau * N) best solutions, ties broken by stable order."""

    tau: float = 0.3

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ConfigError(f"truncation fraction must be in (0, 1], got {self.tau}")


@dataclass(frozen=True)
class BoltzmannSelection:
    """Resample N solutions with probability proportional to exp(beta * fitness)."""

    beta: float = 1.0

    def __post_init__(self):
        if self.beta < 0:
            raise ConfigError(f"selection beta must be nonnegative, got {self.beta}")


SelectionMethod = TruncationSelection | BoltzmannSelection


@dataclass
class Population:
    """Solutions as a (N, n) 0/1 matrix; fitnesses filled in once evaluated."""

    solutions: np.ndarray
    fitnesses: np.ndarray | None = None
    generation: int = 0

    def __post_init__(self):
        self.solutions = np.asarray(self.solutions, dtype=np.uint8)
        if self.solutions.ndim != 2 or self.solutions.shape[0] < 1:
            raise StructuralError("population needs a nonempty (N, n) solution matrix")
        if self.fitnesses is not None:
            self.fitnesses = np.asarray(self.fitnesses, dtype=float)
            if self.fitnesses.shape != (self.solutions.shape[0],):
                raise StructuralError("fitness list length must match the population")

    @property
    def size(self) -> int:
        return self.solutions.shape[0]


@dataclass(frozen=True)
class FactorParams:
    """Per-factor conditional probability tables, shaped (2^|cond|, 2^|new|)."""

    tables: tuple[np.ndarray, ...]
    smoothing: float


@dataclass(frozen=True)
class FdaConfig:
    population_size: int = 500
    selection: SelectionMethod = field(default_factory=TruncationSelection)
    smoothing: float = 1.0
    max_generations: int = 30
    seed: int = 0
    elitism: int = 1
    target_fitness: float | None = None

    def __post_init__(self):
        if self.population_size < 1:
            raise ConfigError("population size must be at least 1")
        if self.smoothing < 0:
            raise ConfigError("smoothing must be nonnegative")
        if self.max_generations < 0:
            raise ConfigError("max generations must be nonnegative")
        if not 0 <= self.elitism <= self.population_size:
            raise ConfigError("elitism must be between 0 and the population size")


def _truncation_indices(fitnesses: np.ndarray, tau: float) -> np.ndarray:
    k = max(1, math.ceil(tau * len(fitnesses)))
    return np.argsort(-fitnesses, kind="stable")[:k]


def _boltzmann_weights(fitnesses: np.ndarray, beta: float) -> np.ndarray:
    w = np.exp(beta * (fitnesses - fitnesses.max()))
    return w / w.sum()


def select(
    population: Population,
    method: SelectionMethod,
    rng: np.random.Generator | None = None,
) -> Population:
    """Selection step; Boltzmann selection resamples N solutions with replacement."""
    if population.fitnesses is None:
        raise StructuralError("population must be evaluated before selection")
    if isinstance(method, TruncationSelection):
        idx = _truncation_indices(population.fitnesses, method.tau)
    elif isinstance(method, BoltzmannSelection):
        if rng is None:
            raise ConfigError("Boltzmann selection needs a random generator")
        w = _boltzmann_weights(population.fitnesses, method.beta)
        idx = rng.choice(population.size, size=population.size, replace=True, p=w)
    else:
        raise ConfigError(f"unknown selection method {method!r}")
    return Population(
        solutions=population.solutions[idx],
        fitnesses=population.fitnesses[idx],
        generation=population.generation,
    )


def selection_probabilities(population: Population, method: SelectionMethod) -> np.ndarray:
    """Per-solution selection probability: indicator/K for truncation,
    softmax weights for Boltzmann."""
    if population.fitnesses is None:
        raise StructuralError("population must be evaluated first")
    if isinstance(method, TruncationSelection):
        idx = _truncation_indices(population.fitnesses, method.tau)
        probs = np.zeros(population.size)
        probs[idx] = 1.0 / len(idx)
        return probs
    if isinstance(method, BoltzmannSelection):
        return _boltzmann_weights(population.fitnesses, method.beta)
    raise ConfigError(f"unknown selection method {method!r}")


def _factor_indices(factorization: Factorization):
    """Precomputed (cond array, cond powers, new array, new powers) per factor."""
    out = []
    for f in factorization.factors:
        cond = np.array(f.cond, dtype=np.int64)
        new = np.array(f.new, dtype=np.int64)
        cp = 1 << np.arange(len(f.cond) - 1, -1, -1) if f.cond else np.zeros(0, dtype=np.int64)
        np_ = 1 << np.arange(len(f.new) - 1, -1, -1)
        out.append((cond, cp, new, np_))
    return out


def estimate(
    factorization: Factorization, selected: Population, smoothing: float = 1.0
) -> FactorParams:
    """Maximum-likelihood counts with additive smoothing per configuration.

    Conditioning contexts with no mass (possible only at smoothing 0) fall
    back to the uniform distribution.
    """
    if smoothing < 0:
        raise ConfigError("smoothing must be nonnegative")
    bits = selected.solutions
    tables = []
    for (cond, cp, new, np_), f in zip(_factor_indices(factorization), factorization.factors):
        rows, cols = 1 << len(f.cond), 1 << len(f.new)
        counts = np.zeros((rows, cols))
        cond_idx = bits[:, cond] @ cp if len(f.cond) else np.zeros(bits.shape[0], dtype=np.int64)
        new_idx = bits[:, new] @ np_
        np.add.at(counts, (cond_idx, new_idx), 1.0)
        counts += smoothing
        totals = counts.sum(axis=1, keepdims=True)
        empty = totals[:, 0] == 0
        counts[empty] = 1.0
        totals[empty] = cols
        tables.append(counts / totals)
    return FactorParams(tables=tuple(tables), smoothing=smoothing)


def _check_params(factorization: Factorization, params: FactorParams) -> None:
    if len(params.tables) != len(factorization.factors):
        raise StructuralError("factor parameter count does not match the factorization")
    for f, table in zip(factorization.factors, params.tables):
        expected = (1 << len(f.cond), 1 << len(f.new))
        if table.shape != expected:
            raise StructuralError(
                f"factor table shape {table.shape} does not match scope sizes {expected}"
            )


def sample(
    factorization: Factorization,
    params: FactorParams,
    count: int,
    rng: np.random.Generator,
) -> Population:
    """Ancestral sampling in factorization order; the result is unevaluated."""
    if count < 1:
        raise ConfigError("sample count must be at least 1")
    _check_params(factorization, params)
    n = factorization.n
    bits = np.full((count, n), -1, dtype=np.int8)
    for (cond, cp, new, np_), f, table in zip(
        _factor_indices(factorization), factorization.factors, params.tables
    ):
        if len(f.cond):
            cond_bits = bits[:, cond]
            if (cond_bits < 0).any():
                raise StructuralError(
                    f"conditioning variables {f.cond} sampled before assignment"
                )
            cond_idx = cond_bits.astype(np.int64) @ cp
        else:
            cond_idx = np.zeros(count, dtype=np.int64)
        cdf = np.cumsum(table, axis=1)[cond_idx]
        u = rng.random(count)
        new_idx = np.minimum((cdf < u[:, None]).sum(axis=1), (1 << len(f.new)) - 1)
        for j, v in enumerate(f.new):
            bits[:, v] = (new_idx >> (len(f.new) - 1 - j)) & 1
    return Population(solutions=bits.astype(np.uint8))


def model_probability(
    factorization: Factorization, params: FactorParams, solution: Bits
) -> float:
    """Probability the factorized model assigns to one solution."""
    _check_params(factorization, params)
    if len(solution) != factorization.n:
        raise StructuralError(
            f"solution has {len(solution)} bits, expected {factorization.n}"
        )
    p = 1.0
    for f, table in zip(factorization.factors, params.tables):
        cond_idx = 0
        for v in f.cond:
            cond_idx = (cond_idx << 1) | (1 if solution[v] else 0)
        new_idx = 0
        for v in f.new:
            new_idx = (new_idx << 1) | (1 if solution[v] else 0)
        p *= float(table[cond_idx, new_idx])
    return p


def _collapse(values: np.ndarray, src: tuple[int, ...], dst: tuple[int, ...]) -> np.ndarray:
    """Marginalize a flat table over ordered variables src onto ordered dst."""
    positions = [src.index(v) for v in dst]
    out = np.zeros(1 << len(dst))
    width = len(src)
    for cfg in range(len(values)):
        sub = 0
        for p in positions:
            sub = (sub << 1) | ((cfg >> (width - 1 - p)) & 1)
        out[sub] += values[cfg]
    return out


def _row_entropy(row: np.ndarray) -> float:
    nz = row[row > 0]
    return float(-(nz * np.log2(nz)).sum())


def model_entropy(factorization: Factorization, params: FactorParams) -> float:
    """Exact entropy of the factorized distribution, in bits.

    Uses the chain rule over factors, propagating each factor's joint down
    the ordering. Needs every conditioning set to be covered by one earlier
    factor's full scope (true for junction-tree factorizations and for the
    univariate model); raises StructuralError otherwise.
    """
    _check_params(factorization, params)
    entropy = 0.0
    scopes: list[tuple[int, ...]] = []  # variable order of each stored joint
    joints: list[np.ndarray] = []
    for i, (f, table) in enumerate(zip(factorization.factors, params.tables)):
        if not f.cond:
            weights = np.ones(1)
        else:
            cover = next(
                (j for j in range(i) if set(f.cond) <= set(scopes[j])), None
            )
            if cover is None:
                raise StructuralError(
                    f"factor {i} conditioning set {f.cond} spans multiple factors; "
                    "entropy needs junction-tree-shaped factorizations"
                )
            weights = _collapse(joints[cover], scopes[cover], f.cond)
        entropy += float(sum(w * _row_entropy(table[c]) for c, w in enumerate(weights) if w > 0))
        joint = (weights[:, None] * table).reshape(-1)
        scopes.append(f.cond + f.new)
        joints.append(joint)
    return entropy


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best: float
    mean: float
    model_entropy: float | None


@dataclass(frozen=True)
class FdaResult:
    best_solution: tuple[int, ...]
    best_fitness: float
    history: tuple[GenerationStats, ...]
    generations: int
    success: bool | None
    config: FdaConfig


def run_fda(instance: AdfInstance, factorization: Factorization, config: FdaConfig) -> FdaResult:
    """Evaluate / select / estimate / sample loop with elitism.

    Stops after max_generations model updates or as soon as target_fitness
    is reached. Identical config and seed give identical results.
    """
    if factorization.n != instance.n:
        raise StructuralError(
            f"factorization covers {factorization.n} variables, instance has {instance.n}"
        )
    rng = np.random.default_rng(config.seed)
    n, size = instance.n, config.population_size
    bits = rng.integers(0, 2, size=(size, n), dtype=np.uint8)
    fitness = instance.evaluate_batch(bits)

    best_fit = -math.inf
    best_sol: tuple[int, ...] = ()
    history: list[GenerationStats] = []
    generations = 0
    for t in range(config.max_generations + 1):
        top = int(np.argmax(fitness))
        if fitness[top] > best_fit:
            best_fit = float(fitness[top])
            best_sol = tuple(int(b) for b in bits[top])
        reached = config.target_fitness is not None and best_fit >= config.target_fitness
        if reached or t == config.max_generations:
            history.append(GenerationStats(t, float(fitness.max()), float(fitness.mean()), None))
            break

        population = Population(bits, fitness, generation=t)
        selected = select(population, config.selection, rng)
        params = estimate(factorization, selected, config.smoothing)
        try:
            entropy = model_entropy(factorization, params)
        except StructuralError:
            entropy = None
        history.append(GenerationStats(t, float(fitness.max()), float(fitness.mean()), entropy))

        fresh = sample(factorization, params, size - config.elitism, rng) \
            if config.elitism < size else None
        if config.elitism:
            keep = np.argsort(-fitness, kind="stable")[: config.elitism]
            elite_bits, elite_fit = bits[keep], fitness[keep]
        if fresh is None:
            bits, fitness = elite_bits, elite_fit
        else:
            fresh_fit = instance.evaluate_batch(fresh.solutions)
            if config.elitism:
                bits = np.vstack([fresh.solutions, elite_bits])
                fitness = np.concatenate([fresh_fit, elite_fit])
            else:
                bits, fitness = fresh.solutions, fresh_fit
        generations = t + 1

    success = None
    if config.target_fitness is not None:
        success = best_fit >= config.target_fitness
    return FdaResult(
        best_solution=best_sol,
        best_fitness=best_fit,
        history=tuple(history),
        generations=generations,
        success=success,
        config=config,
    )


def result_to_json(result: FdaResult) -> dict:
    cfg = result.config
    if isinstance(cfg.selection, TruncationSelection):
        selection = {"method": "truncation", "tau": cfg.selection.tau}
    else:
        selection = {"method": "boltzmann", "beta": cfg.selection.beta}
    return {
        "best": bits_to_string(result.best_solution),
        "fitness": result.best_fitness,
        "generations": result.generations,
        "success": result.success,
        "config": {
            "population_size": cfg.population_size,
            "selection": selection,
            "smoothing": cfg.smoothing,
            "max_generations": cfg.max_generations,
            "seed": cfg.seed,
            "elitism": cfg.elitism,
            "target_fitness": cfg.target_fitness,
        },
        "history": [
            {
                "generation": h.generation,
                "best": h.best,
                "mean": h.mean,
                "model_entropy": h.model_entropy,
            }
            for h in result.history
        ],
    }
