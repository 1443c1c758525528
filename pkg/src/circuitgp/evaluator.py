"""Circuit scoring against truth tables.

Combinational trees are evaluated bit-parallel: every node computes a whole
packed column with word-wide Boolean operations, so all ``2**n`` rows are
processed 64 per machine word.  Trees containing flip-flops are evaluated
row by row in table order, one clock step per row, with every flip-flop
starting at state 0.

Fitness is the number of rows where the evaluated output differs from the
target column; a circuit is correct when that count is zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import SequentialNotAllowedError
from .table import PackedColumn, TruthTable
from .tree import CircuitTree, Gate, Node, Terminal


@dataclass(frozen=True)
class Fitness:
    """Mismatch count over all table rows; 0 means the circuit is correct."""

    mismatches: int
    total_rows: int

    def __post_init__(self):
        if not 0 <= self.mismatches <= self.total_rows:
            raise ValueError(
                f"mismatches {self.mismatches} outside [0, {self.total_rows}]"
            )

    @property
    def is_correct(self) -> bool:
        return self.mismatches == 0


def error_percent(f: Fitness) -> float:
    """The paper-style error measure: 100 * mismatches / total rows."""
    return 100.0 * f.mismatches / f.total_rows


@dataclass
class SequentialFrame:
    """Per-flip-flop state bits for one evaluation pass.

    Keys identify flip-flop node instances within the tree being evaluated;
    missing entries read as 0.  A frame never outlives one evaluation.
    """

    states: dict = field(default_factory=dict)

    def get(self, key) -> int:
        return self.states.get(key, 0)

    def set(self, key, value: int) -> None:
        self.states[key] = value


def compile_program(tree: CircuitTree) -> np.ndarray:
    """Flatten a tree to its postfix opcode program (children first)."""
    prog = np.empty(tree.node_count, dtype=np.int64)
    pos = tree.node_count

    # Emit in reverse: walking pre-order right-to-left and filling the
    # program back to front yields postfix order without recursion.
    stack: list[Node] = [tree.root]
    while stack:
        node = stack.pop()
        pos -= 1
        if isinstance(node, Terminal):
            prog[pos] = -(node.index + 1)
        else:
            prog[pos] = _kernels.OPCODES[node.fn.name]
            stack.extend(node.children)
    return prog


def _check_inputs(tree: CircuitTree, table: TruthTable) -> None:
    if tree.n_inputs != table.n_inputs:
        raise ValueError(
            f"tree has {tree.n_inputs} inputs, table has {table.n_inputs}"
        )


def eval_packed_words(
    tree: CircuitTree, terminal_words: np.ndarray, mask: np.ndarray
) -> np.ndarray:
    """Bit-parallel evaluation against raw packed input columns."""
    if tree.contains_sequential:
        raise SequentialNotAllowedError(
            "packed evaluation requires a combinational tree"
        )
    return _kernels.eval_words(compile_program(tree), terminal_words, mask)


def eval_packed(tree: CircuitTree, table: TruthTable) -> PackedColumn:
    """Evaluate a combinational tree on every table row at once."""
    _check_inputs(tree, table)
    words = eval_packed_words(tree, table.packed_terminal_words, table.mask)
    return PackedColumn(words, table.n_rows)


def eval_sequential(tree: CircuitTree, table: TruthTable) -> PackedColumn:
    """Evaluate rows in table order as consecutive clock steps.

    Works for any tree; for combinational trees the result equals
    :func:`eval_packed` bit for bit.
    """
    _check_inputs(tree, table)
    words = _kernels.eval_seq_words(
        compile_program(tree), table.packed_terminal_words, table.n_rows
    )
    return PackedColumn(words, table.n_rows)


def fitness(tree: CircuitTree, table: TruthTable, output_index: int) -> Fitness:
    """Hamming distance between the tree's output column and the target."""
    _check_inputs(tree, table)
    if not 0 <= output_index < table.n_outputs:
        raise IndexError(f"output index {output_index} out of range")
    prog = compile_program(tree)
    progs = np.ascontiguousarray(prog)
    starts = np.zeros(1, dtype=np.int64)
    lens = np.array([prog.shape[0]], dtype=np.int64)
    target = table.packed_output_words[output_index]
    if tree.contains_sequential:
        counts = _kernels.batch_mismatches_seq(
            progs, starts, lens, table.packed_terminal_words,
            target, table.mask, table.n_rows,
        )
    else:
        counts = _kernels.batch_mismatches(
            progs, starts, lens, table.packed_terminal_words,
            target, table.mask,
        )
    return Fitness(int(counts[0]), table.n_rows)


def batch_mismatch_counts(
    trees, table: TruthTable, output_index: int
) -> np.ndarray:
    """Mismatch counts for many trees at once (the evolution hot path).

    Combinational and sequential trees may be mixed; each group is handed
    to its kernel in one call.
    """
    target = table.packed_output_words[output_index]
    counts = np.empty(len(trees), dtype=np.int64)
    comb_idx = [i for i, t in enumerate(trees) if not t.contains_sequential]
    seq_idx = [i for i, t in enumerate(trees) if t.contains_sequential]
    for idx, seq in ((comb_idx, False), (seq_idx, True)):
        if not idx:
            continue
        progs = [compile_program(trees[i]) for i in idx]
        lens = np.array([p.shape[0] for p in progs], dtype=np.int64)
        starts = np.zeros(len(progs), dtype=np.int64)
        if len(progs) > 1:
            starts[1:] = np.cumsum(lens[:-1])
        blob = np.concatenate(progs)
        if seq:
            got = _kernels.batch_mismatches_seq(
                blob, starts, lens, table.packed_terminal_words,
                target, table.mask, table.n_rows,
            )
        else:
            got = _kernels.batch_mismatches(
                blob, starts, lens, table.packed_terminal_words,
                target, table.mask,
            )
        counts[idx] = got
    return counts
