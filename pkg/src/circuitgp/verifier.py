"""Independent circuit verification by exhaustive per-row interpretation.

This module is the acceptance oracle for champions found by evolution.  It
deliberately shares no evaluation machinery with :mod:`circuitgp.evaluator`:
instead of compiled postfix programs and packed words, it interprets the
tree directly, one row at a time, reading terminal values straight from the
input assignment.  Agreement between the two paths is what certifies a
circuit (and guards against evaluator bugs).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .evaluator import SequentialFrame
from .functions import apply_combinational, flipflop_step
from .table import TruthTable
from .tree import CircuitTree, Gate, Node

CORRECT = "Correct"
WRONG = "Wrong"


@dataclass(frozen=True)
class Verdict:
    """Outcome of exhaustive verification.

    ``first_failing_combination`` holds the input bits (in table header
    order) of the earliest failing row, present only for Wrong verdicts.
    """

    status: str
    first_failing_combination: Optional[tuple] = None

    @property
    def is_correct(self) -> bool:
        return self.status == CORRECT


def naive_eval_row(
    tree: CircuitTree, assignment: Sequence[int], frame: SequentialFrame
) -> int:
    """Directly interpret the tree on one input assignment.

    ``assignment[k]`` is the value of terminal ``k``.  Flip-flop nodes read
    their state from ``frame``, step, and write the new state back, so
    calling this row after row with one frame realizes the clock sequence.
    """
    if len(assignment) != tree.n_inputs:
        raise ValueError(
            f"assignment has {len(assignment)} bits, tree expects {tree.n_inputs}"
        )

    def walk(node: Node, path: tuple) -> int:
        if not isinstance(node, Gate):
            return int(assignment[node.index])
        values = [walk(c, path + (i,)) for i, c in enumerate(node.children)]
        if node.fn.is_sequential:
            new_state = flipflop_step(node.fn, frame.get(path), values)
            frame.set(path, new_state)
            return new_state
        return apply_combinational(node.fn, values)

    return walk(tree.root, ())


def verify_circuit(
    tree: CircuitTree, table: TruthTable, output_index: int
) -> Verdict:
    """Check the tree against every table row, in row order.

    Returns Correct iff measured equals desired on all ``2**n`` combinations;
    otherwise Wrong with the first failing combination.
    """
    frame = SequentialFrame()
    for row in range(table.n_rows):
        measured = naive_eval_row(tree, table.terminal_assignment(row), frame)
        desired = int(table.output_rows[row, output_index])
        if measured != desired:
            return Verdict(WRONG, tuple(int(b) for b in table.input_rows[row]))
    return Verdict(CORRECT)
