"""Exhaustive-enumeration statistics over small search spaces.

Factor/hyperplane marginal tables, full Boltzmann distributions, and the
deception diagnostic: a factor is deceptive when no best-statistic
configuration matches the projection of a reference optimum. Everything here
enumerates all 2^n solutions, so operations refuse above a configurable
variable limit instead of subsampling.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .adf import AdfInstance, Bits, config_string, project
from .errors import CapacityError, StructuralError

STAT_SUM = "sum"
STAT_MEAN = "mean"
STAT_BOLTZMANN = "boltzmann"

DEFAULT_ENUM_LIMIT = 25
ENUM_LIMIT_ENV = "GRAYBOX_MAX_ENUM_VARS"

_CHUNK_BITS = 16


def enumeration_limit(limit: int | None = None) -> int:
    if limit is not None:
        return limit
    return int(os.environ.get(ENUM_LIMIT_ENV, DEFAULT_ENUM_LIMIT))


def _check_capacity(n: int, limit: int | None) -> None:
    cap = enumeration_limit(limit)
    if n > cap:
        raise CapacityError(f"exhaustive enumeration refused: n={n} exceeds limit {cap}")


def _check_scope(instance: AdfInstance, scope: Sequence[int]) -> tuple[int, ...]:
    scope = tuple(int(v) for v in scope)
    if not scope:
        raise StructuralError("scope must be nonempty")
    if len(set(scope)) != len(scope):
        raise StructuralError(f"duplicate variable in scope {scope}")
    for v in scope:
        if not 0 <= v < instance.n:
            raise StructuralError(f"scope index {v} out of range for n={instance.n}")
    return scope


def _fitness_chunks(instance: AdfInstance) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (bit matrix, fitness vector) over all 2^n solutions, in id order.

    Solution id s has x_0 as its most significant bit, matching project().
    """
    n = instance.n
    total = 1 << n
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    step = min(total, 1 << _CHUNK_BITS)
    for start in range(0, total, step):
        ids = np.arange(start, min(start + step, total), dtype=np.int64)
        bits = (ids[:, None] >> shifts) & 1
        yield bits, instance.evaluate_batch(bits)


@dataclass(frozen=True)
class MarginalTable:
    """Per-configuration statistic over a scope; indexing matches codomains."""

    scope: tuple[int, ...]
    kind: str
    values: tuple[float, ...]
    n: int
    beta: float | None = None

    @property
    def order(self) -> int:
        return len(self.scope)


@dataclass(frozen=True)
class BoltzmannDistribution:
    """p(x) proportional to exp(beta * fitness(x)), over all 2^n solutions."""

    n: int
    beta: float
    probabilities: np.ndarray

    def probability(self, solution: Bits) -> float:
        return float(self.probabilities[project(solution, range(self.n))])


def enumerate_marginal(
    instance: AdfInstance,
    scope: Sequence[int],
    kind: str = STAT_SUM,
    beta: float | None = None,
    limit: int | None = None,
) -> MarginalTable:
    """Full-enumeration marginal statistic for one scope.

    STAT_SUM adds the fitness of every solution sharing each configuration;
    STAT_MEAN divides those sums by 2^(n-j); STAT_BOLTZMANN marginalizes the
    Boltzmann distribution at the given beta (guarded against overflow).
    """
    _check_capacity(instance.n, limit)
    scope = _check_scope(instance, scope)
    if kind not in (STAT_SUM, STAT_MEAN, STAT_BOLTZMANN):
        raise StructuralError(f"unknown statistic kind {kind!r}")
    if kind == STAT_BOLTZMANN:
        if beta is None or beta < 0:
            raise StructuralError("boltzmann statistic needs beta >= 0")
    j = len(scope)
    powers = 1 << np.arange(j - 1, -1, -1)
    scope_arr = np.array(scope)
    acc = np.zeros(1 << j)

    if kind == STAT_BOLTZMANN:
        fmax = -math.inf
        for _, fitness in _fitness_chunks(instance):
            fmax = max(fmax, float(fitness.max()))
        total = 0.0
        for bits, fitness in _fitness_chunks(instance):
            weights = np.exp(beta * (fitness - fmax))
            np.add.at(acc, bits[:, scope_arr] @ powers, weights)
            total += float(weights.sum())
        values = acc / total
        return MarginalTable(scope=scope, kind=kind, values=tuple(values), n=instance.n, beta=beta)

    for bits, fitness in _fitness_chunks(instance):
        np.add.at(acc, bits[:, scope_arr] @ powers, fitness)
    if kind == STAT_MEAN:
        acc /= 1 << (instance.n - j)
    return MarginalTable(scope=scope, kind=kind, values=tuple(acc), n=instance.n)


def boltzmann(instance: AdfInstance, beta: float, limit: int | None = None) -> BoltzmannDistribution:
    """Exact Boltzmann distribution; normalization subtracts the max fitness first."""
    if beta < 0:
        raise StructuralError("beta must be nonnegative")
    _check_capacity(instance.n, limit)
    fmax = -math.inf
    for _, fitness in _fitness_chunks(instance):
        fmax = max(fmax, float(fitness.max()))
    probs = np.empty(1 << instance.n)
    pos = 0
    for _, fitness in _fitness_chunks(instance):
        w = np.exp(beta * (fitness - fmax))
        probs[pos : pos + len(w)] = w
        pos += len(w)
    probs /= probs.sum()
    return BoltzmannDistribution(n=instance.n, beta=beta, probabilities=probs)


def max_configs(table: MarginalTable) -> tuple[int, ...]:
    """All configurations attaining the maximum value (ties kept)."""
    values = table.values
    if not values:
        raise StructuralError("empty marginal table")
    best = max(values)
    return tuple(i for i, v in enumerate(values) if v == best)


def marginalize_table(table: MarginalTable, subscope: Sequence[int]) -> MarginalTable:
    """Collapse an additive (sum/boltzmann) table onto a subset of its scope."""
    if table.kind == STAT_MEAN:
        raise StructuralError("mean tables do not marginalize additively")
    subscope = tuple(int(v) for v in subscope)
    positions = []
    for v in subscope:
        if v not in table.scope:
            raise StructuralError(f"variable {v} not in table scope {table.scope}")
        positions.append(table.scope.index(v))
    j, js = len(table.scope), len(subscope)
    out = [0.0] * (1 << js)
    for cfg, value in enumerate(table.values):
        sub_cfg = 0
        for p in positions:
            sub_cfg = (sub_cfg << 1) | ((cfg >> (j - 1 - p)) & 1)
        out[sub_cfg] += value
    return MarginalTable(scope=subscope, kind=table.kind, values=tuple(out), n=table.n, beta=table.beta)


@dataclass(frozen=True)
class FactorDeception:
    """Argmax diagnostics for one factor scope against a reference optimum."""

    factor_id: int  # 1-based position in the scope list
    scope: tuple[int, ...]
    best_configs: tuple[int, ...]
    optimum_config: int
    deceptive: bool


@dataclass(frozen=True)
class DeceptionReport:
    entries: tuple[FactorDeception, ...]

    @property
    def deceptive_ids(self) -> frozenset[int]:
        return frozenset(e.factor_id for e in self.entries if e.deceptive)


def deception_report(
    instance: AdfInstance,
    scopes: Sequence[Sequence[int]],
    reference_optimum: Bits,
    kind: str = STAT_SUM,
    beta: float | None = None,
    limit: int | None = None,
) -> DeceptionReport:
    """Flag each scope whose best-statistic configurations all disagree with
    the reference optimum's projection. Factor ids are 1-based so they line
    up with published table columns."""
    if len(reference_optimum) != instance.n:
        raise StructuralError(
            f"reference optimum has {len(reference_optimum)} bits, expected {instance.n}"
        )
    entries = []
    for i, scope in enumerate(scopes, start=1):
        table = enumerate_marginal(instance, scope, kind=kind, beta=beta, limit=limit)
        best = max_configs(table)
        opt_cfg = project(reference_optimum, table.scope)
        entries.append(
            FactorDeception(
                factor_id=i,
                scope=table.scope,
                best_configs=best,
                optimum_config=opt_cfg,
                deceptive=opt_cfg not in best,
            )
        )
    return DeceptionReport(entries=tuple(entries))


def exhaustive_optimum(
    instance: AdfInstance, limit: int | None = None
) -> tuple[tuple[tuple[int, ...], ...], float]:
    """All global maxima and their fitness, by brute force."""
    _check_capacity(instance.n, limit)
    best = -math.inf
    best_ids: list[int] = []
    offset = 0
    for _, fitness in _fitness_chunks(instance):
        chunk_best = float(fitness.max())
        if chunk_best > best:
            best = chunk_best
            best_ids = []
        if chunk_best == best:
            best_ids.extend(int(i) + offset for i in np.flatnonzero(fitness == best))
        offset += len(fitness)
    n = instance.n
    solutions = tuple(tuple((s >> (n - 1 - j)) & 1 for j in range(n)) for s in best_ids)
    return solutions, best


# ---------------------------------------------------------------------------
# Table output
# ---------------------------------------------------------------------------


def _format_value(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def tables_to_tsv(tables: Sequence[MarginalTable]) -> str:
    """One column group per scope; tables of different orders become separate
    blocks. Rows are configurations as bit strings, ascending."""
    blocks = []
    remaining = list(tables)
    while remaining:
        order = remaining[0].order
        group = [t for t in remaining if t.order == order]
        remaining = [t for t in remaining if t.order != order]
        header = "config\t" + "\t".join(",".join(str(v) for v in t.scope) for t in group)
        lines = [header]
        for cfg in range(1 << order):
            row = [config_string(cfg, order)]
            row.extend(_format_value(t.values[cfg]) for t in group)
            lines.append("\t".join(row))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def tables_to_json(tables: Sequence[MarginalTable]) -> list[dict]:
    out = []
    for t in tables:
        entry = {
            "scope": list(t.scope),
            "kind": t.kind,
            "values": {config_string(c, t.order): t.values[c] for c in range(1 << t.order)},
        }
        if t.beta is not None:
            entry["beta"] = t.beta
        out.append(entry)
    return out


def deception_to_json(report: DeceptionReport) -> dict:
    return {
        "factors": [
            {
                "factor": e.factor_id,
                "scope": list(e.scope),
                "best_configs": [config_string(c, len(e.scope)) for c in e.best_configs],
                "optimum_config": config_string(e.optimum_config, len(e.scope)),
                "deceptive": e.deceptive,
            }
            for e in report.entries
        ],
        "deceptive_factors": sorted(report.deceptive_ids),
    }
