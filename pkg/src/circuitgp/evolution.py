"""Mutation-only evolution of circuit trees.

The loop follows the classic EP recipe: a random initial population, five
mutation operators (OneNode, AllNodes, Swap, Grow, Trunc) drawn by weight,
tournament scoring against ten random opponents, survival of the better
half by wins, and termination as soon as a retained individual matches the
whole truth table.

Randomness is hierarchical: the run-level generator spawns one child stream
per generation, which spawns one stream per offspring, so results are
reproducible bit for bit no matter how fitness evaluation is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .evaluator import Fitness, batch_mismatch_counts
from .functions import FunctionDef, lookup_function
from .table import TruthTable
from .tree import (
    CircuitTree,
    Gate,
    Node,
    Terminal,
    replace_node_at,
    validate_tree,
)
from .verifier import verify_circuit

OPERATORS = ("OneNode", "AllNodes", "Swap", "Grow", "Trunc")

DEFAULT_FUNCTIONS = ("AND", "OR", "NOT", "HA", "FA")


def _default_weights():
    return {op: 100 for op in OPERATORS}


@dataclass(frozen=True)
class EvolutionConfig:
    """Control parameters; defaults follow the standard parameter set."""

    population_size: int = 1000
    max_generations: int = 1000
    max_nodes: int = 50
    init_depth: int = 10
    tournament_size: int = 10
    mutation_probability: float = 1.0
    operator_weights: dict = field(default_factory=_default_weights)
    function_names: tuple = DEFAULT_FUNCTIONS
    max_trials: int = 10
    seed: Optional[int] = None

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ConfigError("population_size must be even and >= 2")
        if self.max_generations < 0:
            raise ConfigError("max_generations must be >= 0")
        if self.max_nodes < 1:
            raise ConfigError("max_nodes must be >= 1")
        if self.init_depth < 1:
            raise ConfigError("init_depth must be >= 1")
        if self.tournament_size < 1:
            raise ConfigError("tournament_size must be >= 1")
        if not 0.0 <= self.mutation_probability <= 1.0:
            raise ConfigError("mutation_probability must be in [0, 1]")
        if self.max_trials < 1:
            raise ConfigError("max_trials must be >= 1")
        weights = dict(self.operator_weights)
        for op, w in weights.items():
            if op not in OPERATORS:
                raise ConfigError(f"unknown mutation operator {op!r}")
            if not isinstance(w, int) or w < 0:
                raise ConfigError(f"weight of {op} must be a non-negative integer")
        if sum(weights.values()) <= 0:
            raise ConfigError("at least one operator weight must be positive")
        object.__setattr__(self, "operator_weights", weights)
        names = tuple(self.function_names)
        if not names:
            raise ConfigError("function set must not be empty")
        for name in names:
            lookup_function(name)
        object.__setattr__(self, "function_names", names)


@dataclass
class Individual:
    tree: CircuitTree
    fitness: Fitness
    wins: int = 0


@dataclass(frozen=True)
class GenerationStats:
    """Population summary for one generation (generation 1 = initial)."""

    generation: int
    best_mismatches: int
    mean_mismatches: float
    best_error_pct: float
    mean_error_pct: float


@dataclass(frozen=True)
class RunResult:
    """Outcome of one evolution trial (or the best of several)."""

    champion: Optional[CircuitTree]
    champion_fitness: Optional[Fitness]
    solved: bool
    generations_used: int
    trial_index: int
    history: tuple


def _as_generator(rng, config: Optional[EvolutionConfig] = None):
    if rng is None and config is not None:
        rng = config.seed
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@lru_cache(maxsize=32)
def _function_defs(function_names: tuple) -> tuple:
    return tuple(lookup_function(nm) for nm in function_names)


@lru_cache(maxsize=32)
def _arity_groups(function_names: tuple) -> dict:
    groups: dict[int, list[FunctionDef]] = {}
    for fn in _function_defs(function_names):
        groups.setdefault(fn.arity, []).append(fn)
    return {k: tuple(v) for k, v in groups.items()}


def random_tree(
    rng,
    n_inputs: int,
    function_names: Sequence[str],
    max_depth: int,
    node_budget: int,
) -> CircuitTree:
    """Grow-style random tree within a depth limit and a node budget.

    Each position becomes a function node with probability 0.5 unless the
    depth limit is reached or no function's minimal subtree still fits the
    remaining budget, in which case a terminal is forced.
    """
    if node_budget < 1 or max_depth < 1:
        raise ValueError("node_budget and max_depth must be >= 1")
    fns = _function_defs(tuple(function_names))

    def build(depth: int, budget: int) -> tuple[Node, int]:
        fits = (
            [f for f in fns if budget >= 1 + f.arity]
            if depth < max_depth
            else []
        )
        if not fits or rng.random() < 0.5:
            return Terminal(int(rng.integers(n_inputs))), 1
        fn = fits[int(rng.integers(len(fits)))]
        consumed = 1
        children = []
        for i in range(fn.arity):
            pending = fn.arity - i - 1  # later siblings each need >= 1 node
            child, used = build(depth + 1, budget - consumed - pending)
            children.append(child)
            consumed += used
        return Gate(fn, tuple(children)), consumed

    root, _ = build(1, node_budget)
    return CircuitTree(root, n_inputs)


def _nodes_with_depth(root: Node) -> list:
    out = []
    stack = [(root, 1)]
    while stack:
        node, d = stack.pop()
        out.append((node, d))
        if isinstance(node, Gate):
            for child in reversed(node.children):
                stack.append((child, d + 1))
    return out


def _draw_terminal(rng, n_inputs: int) -> Terminal:
    return Terminal(int(rng.integers(n_inputs)))


def _draw_same_arity(rng, node: Gate, groups: dict) -> Gate:
    group = groups.get(node.fn.arity)
    if not group:
        return node
    fn = group[int(rng.integers(len(group)))]
    if fn is node.fn:
        return node
    return Gate(fn, node.children)


def _mutate_one_node(tree, rng, config, groups):
    idx = int(rng.integers(tree.node_count))
    nodes = _nodes_with_depth(tree.root)
    node = nodes[idx][0]
    if isinstance(node, Terminal):
        replacement: Node = _draw_terminal(rng, tree.n_inputs)
    else:
        replacement = _draw_same_arity(rng, node, groups)
    if replacement is node:
        return tree
    return CircuitTree(replace_node_at(tree.root, idx, replacement), tree.n_inputs)


def _mutate_all_nodes(tree, rng, config, groups):
    def rebuild(node: Node) -> Node:
        if isinstance(node, Terminal):
            return _draw_terminal(rng, tree.n_inputs)
        fn = node.fn
        group = groups.get(fn.arity)
        if group:
            fn = group[int(rng.integers(len(group)))]
        return Gate(fn, tuple(rebuild(c) for c in node.children))

    return CircuitTree(rebuild(tree.root), tree.n_inputs)


def _mutate_swap(tree, rng, config, groups):
    nodes = _nodes_with_depth(tree.root)
    spots = [
        i for i, (node, _) in enumerate(nodes)
        if isinstance(node, Gate) and node.fn.arity >= 2
    ]
    if not spots:
        return tree
    idx = spots[int(rng.integers(len(spots)))]
    node = nodes[idx][0]
    perm = rng.permutation(node.fn.arity)
    shuffled = Gate(node.fn, tuple(node.children[int(j)] for j in perm))
    return CircuitTree(replace_node_at(tree.root, idx, shuffled), tree.n_inputs)


def _mutate_grow(tree, rng, config, groups):
    budget = config.max_nodes - tree.node_count + 1
    if budget < 2:
        return _mutate_one_node(tree, rng, config, groups)
    nodes = _nodes_with_depth(tree.root)
    spots = [i for i, (node, _) in enumerate(nodes) if isinstance(node, Terminal)]
    idx = spots[int(rng.integers(len(spots)))]
    depth = nodes[idx][1]
    headroom = max(1, config.init_depth - depth + 1)
    subtree = random_tree(
        rng, tree.n_inputs, config.function_names, headroom, budget
    )
    return CircuitTree(
        replace_node_at(tree.root, idx, subtree.root), tree.n_inputs
    )


def _mutate_trunc(tree, rng, config, groups):
    nodes = _nodes_with_depth(tree.root)
    spots = [i for i, (node, _) in enumerate(nodes) if isinstance(node, Gate)]
    if not spots:
        return tree
    idx = spots[int(rng.integers(len(spots)))]
    return CircuitTree(
        replace_node_at(tree.root, idx, _draw_terminal(rng, tree.n_inputs)),
        tree.n_inputs,
    )


_MUTATORS = {
    "OneNode": _mutate_one_node,
    "AllNodes": _mutate_all_nodes,
    "Swap": _mutate_swap,
    "Grow": _mutate_grow,
    "Trunc": _mutate_trunc,
}


def mutate(tree: CircuitTree, operator: str, rng, config: EvolutionConfig):
    """Apply one named mutation operator; always returns a valid tree."""
    try:
        op = _MUTATORS[operator]
    except KeyError:
        raise ConfigError(f"unknown mutation operator {operator!r}") from None
    groups = _arity_groups(config.function_names)
    return op(tree, rng, config, groups)


def select_operator(weights: dict, rng) -> str:
    """Draw an operator name with probability weight/total."""
    total = sum(weights.get(op, 0) for op in OPERATORS)
    if total <= 0:
        raise ConfigError("operator weights sum to zero")
    draw = int(rng.integers(total))
    acc = 0
    for op in OPERATORS:
        acc += weights.get(op, 0)
        if draw < acc:
            return op
    raise AssertionError("unreachable")  # pragma: no cover


def tournament_wins(population, rng, tournament_size: int) -> np.ndarray:
    """Score every individual against random opponents.

    Opponents are drawn uniformly with replacement from the whole population
    (self-comparison allowed); a win is a mismatch count better than or
    equal to the opponent's.  Win counts are stored on the individuals and
    returned as an array.
    """
    n = len(population)
    mis = np.fromiter(
        (ind.fitness.mismatches for ind in population), np.int64, n
    )
    opponents = rng.integers(0, n, size=(n, tournament_size))
    wins = (mis[:, None] <= mis[opponents]).sum(axis=1)
    for ind, w in zip(population, wins):
        ind.wins = int(w)
    return wins


def _evaluate(trees, table, output_index, config):
    counts = batch_mismatch_counts(trees, table, output_index)
    if __debug__:
        for tree in trees:
            problems = validate_tree(tree, config.max_nodes, table.n_inputs)
            assert not problems, problems
    return [
        Individual(tree, Fitness(int(c), table.n_rows))
        for tree, c in zip(trees, counts)
    ]


def next_generation(population, rng, config, table, output_index):
    """One selection + reproduction step; population size is preserved.

    The better half by (wins, fewer mismatches, insertion order) survives as
    parents; the fitness tie-break guarantees a best-fitness individual is
    retained, so the best mismatch count never worsens.  Each parent yields
    exactly one mutated offspring.
    """
    n = len(population)
    wins = tournament_wins(population, rng, config.tournament_size)
    mis = np.fromiter((ind.fitness.mismatches for ind in population), np.int64, n)
    order = np.lexsort((np.arange(n), mis, -wins))
    parents = [population[i] for i in order[: n // 2]]

    offspring_trees = []
    for parent, child_rng in zip(parents, rng.spawn(len(parents))):
        apply_op = (
            config.mutation_probability >= 1.0
            or child_rng.random() < config.mutation_probability
        )
        if apply_op:
            op = select_operator(config.operator_weights, child_rng)
            offspring_trees.append(mutate(parent.tree, op, child_rng, config))
        else:
            offspring_trees.append(parent.tree)
    offspring = _evaluate(offspring_trees, table, output_index, config)
    return parents + offspring


def _population_stats(population, generation, total_rows):
    mis = np.fromiter(
        (ind.fitness.mismatches for ind in population), np.int64, len(population)
    )
    best = int(mis.min())
    mean = float(mis.mean())
    return GenerationStats(
        generation=generation,
        best_mismatches=best,
        mean_mismatches=mean,
        best_error_pct=100.0 * best / total_rows,
        mean_error_pct=100.0 * mean / total_rows,
    )


def _pick_champion(population):
    """(individual, solved): smallest zero-mismatch tree, else best fitness."""
    zero = [ind for ind in population if ind.fitness.mismatches == 0]
    if zero:
        return min(zero, key=lambda ind: ind.tree.node_count), True
    return (
        min(population, key=lambda ind: (ind.fitness.mismatches, ind.tree.node_count)),
        False,
    )


def run_evolution(
    table: TruthTable,
    output_index: int,
    config: EvolutionConfig,
    rng=None,
    trial_index: int = 1,
) -> RunResult:
    """One full evolution trial against one output column.

    Stops as soon as the population contains a perfect individual (the
    initial population counts as generation 1) or when ``max_generations``
    reproduction steps have run.
    """
    rng = _as_generator(rng, config)
    trees = [
        random_tree(
            child, table.n_inputs, config.function_names,
            config.init_depth, config.max_nodes,
        )
        for child in rng.spawn(config.population_size)
    ]
    population = _evaluate(trees, table, output_index, config)

    history = [_population_stats(population, 1, table.n_rows)]
    while history[-1].best_mismatches > 0 and len(history) <= config.max_generations:
        gen_rng = rng.spawn(1)[0]
        population = next_generation(population, gen_rng, config, table, output_index)
        history.append(
            _population_stats(population, len(history) + 1, table.n_rows)
        )

    champion, solved = _pick_champion(population)
    return RunResult(
        champion=champion.tree,
        champion_fitness=champion.fitness,
        solved=solved,
        generations_used=len(history),
        trial_index=trial_index,
        history=tuple(history),
    )


def run_trials(table: TruthTable, config: EvolutionConfig, rng=None) -> list:
    """Evolve every output column independently, retrying up to max_trials.

    A trial is accepted only when its champion both scores zero mismatches
    and passes independent verification; a verification failure (unreachable
    with a correct evaluator) falls through to a fresh trial.  If no trial
    solves, the best champion across trials is reported with solved=False.
    """
    rng = _as_generator(rng, config)
    results = []
    for output_index in range(table.n_outputs):
        best = None
        for trial in range(1, config.max_trials + 1):
            trial_rng = rng.spawn(1)[0]
            result = run_evolution(
                table, output_index, config, trial_rng, trial_index=trial
            )
            if result.solved:
                verdict = verify_circuit(result.champion, table, output_index)
                if verdict.is_correct:
                    best = result
                    break
                result = replace(result, solved=False)
            if best is None or (
                result.champion_fitness.mismatches
                < best.champion_fitness.mismatches
            ):
                best = result
        results.append(best)
    return results
