"""Truth-table ingestion, validation, and bit-packing.

File format::

    # comment
    inputs: A2 A1 A0
    outputs: F
    000 0
    001 0
    ...

The leftmost input name is the most significant bit of a row's input
combination.  A table over ``n`` inputs must list all ``2**n`` combinations
exactly once; the row order of the file is preserved because it defines the
clock sequence for sequential circuits.

Internally every column is bit-packed: bit ``i`` of a packed column is that
column's value in row ``i``.  Terminal index ``k`` of a circuit corresponds
to header column ``n-1-k`` counted from the left, i.e. the rightmost input
column is terminal 0 — this matches the canonical ``A2 A1 A0`` layout where
the row bits read as a binary number whose bit ``k`` is ``A_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateCombinationError,
    MissingCombinationError,
    SequentialNotAllowedError,
    TableSyntaxError,
    TooManyInputsError,
    WidthMismatchError,
)
from .tree import CircuitTree, default_name

DEFAULT_MAX_INPUTS = 20

WORD_BITS = 64


def _n_words(rows: int) -> int:
    return (rows + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 vector into uint64 words, bit i = element i."""
    rows = bits.shape[0]
    padded = np.zeros(_n_words(rows) * WORD_BITS, dtype=np.uint64)
    padded[:rows] = bits
    shifts = np.arange(WORD_BITS, dtype=np.uint64)
    return np.bitwise_or.reduce(
        padded.reshape(-1, WORD_BITS) << shifts, axis=1
    )


def row_mask(rows: int) -> np.ndarray:
    """All-ones mask over ``rows`` bits, packed; trailing bits are zero."""
    return pack_bits(np.ones(rows, dtype=np.uint64))


@dataclass(frozen=True)
class PackedColumn:
    """One bit-packed table column."""

    words: np.ndarray
    length: int

    def bit(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return int(self.words[i // WORD_BITS] >> np.uint64(i % WORD_BITS)) & 1

    def to_bits(self) -> np.ndarray:
        shifts = np.arange(WORD_BITS, dtype=np.uint64)
        expanded = (self.words[:, None] >> shifts) & np.uint64(1)
        return expanded.reshape(-1)[: self.length].astype(np.uint8)


class TruthTable:
    """A complete input-output mapping over all ``2**n`` combinations.

    ``input_rows`` / ``output_rows`` hold the rows in file order with columns
    in header order; ``packed_terminal_words`` holds one packed row-column
    per *terminal index* (rightmost header column first) for the evaluator.
    """

    def __init__(self, input_names, output_names, input_rows, output_rows):
        input_names = tuple(input_names)
        output_names = tuple(output_names)
        n = len(input_names)
        m = len(output_names)
        if len(set(input_names)) != n or len(set(output_names)) != m:
            raise TableSyntaxError("duplicate column names")
        input_rows = np.ascontiguousarray(input_rows, dtype=np.uint8)
        output_rows = np.ascontiguousarray(output_rows, dtype=np.uint8)
        if input_rows.ndim != 2 or input_rows.shape[1] != n:
            raise WidthMismatchError("input rows do not match header width")
        if output_rows.ndim != 2 or output_rows.shape[1] != m:
            raise WidthMismatchError("output rows do not match header width")
        rows = input_rows.shape[0]
        if output_rows.shape[0] != rows:
            raise WidthMismatchError("input and output row counts differ")
        if rows != 1 << n:
            raise MissingCombinationError(
                f"expected {1 << n} rows for {n} inputs, got {rows}"
            )

        # Row bits as integers, leftmost header column most significant.
        weights = (1 << np.arange(n - 1, -1, -1)).astype(np.int64)
        keys = input_rows.astype(np.int64) @ weights
        seen = np.zeros(1 << n, dtype=bool)
        for key in keys:
            if seen[key]:
                raise DuplicateCombinationError(
                    f"combination {key:0{n}b} appears more than once"
                )
            seen[key] = True
        # A full, duplicate-free table of 2**n rows covers every combination,
        # but report the first gap explicitly if row count lied upstream.
        if not seen.all():  # pragma: no cover - unreachable given count check
            missing = int(np.flatnonzero(~seen)[0])
            raise MissingCombinationError(f"combination {missing:0{n}b} missing")

        self.input_names = input_names
        self.output_names = output_names
        self.input_rows = input_rows
        self.output_rows = output_rows
        self.n_inputs = n
        self.n_outputs = m
        self.n_rows = rows
        self.mask = row_mask(rows)
        # Terminal k = header column n-1-k.
        self.packed_terminal_words = np.ascontiguousarray(
            np.stack(
                [pack_bits(input_rows[:, n - 1 - k]) for k in range(n)]
            )
        )
        self.packed_output_words = np.ascontiguousarray(
            np.stack([pack_bits(output_rows[:, j]) for j in range(m)])
        )
        for arr in (
            self.input_rows,
            self.output_rows,
            self.mask,
            self.packed_terminal_words,
            self.packed_output_words,
        ):
            arr.flags.writeable = False

    @property
    def terminal_names(self) -> tuple:
        """Input names by terminal index (reverse header order)."""
        return tuple(reversed(self.input_names))

    def terminal_assignment(self, row: int) -> tuple:
        """Input bits of ``row`` indexed by terminal index."""
        bits = self.input_rows[row]
        n = self.n_inputs
        return tuple(int(bits[n - 1 - k]) for k in range(n))

    def input_column(self, k: int) -> PackedColumn:
        """Packed column for terminal index ``k``."""
        return PackedColumn(self.packed_terminal_words[k], self.n_rows)

    def output_column(self, j: int) -> PackedColumn:
        """Packed column for output ``j`` in header order."""
        return PackedColumn(self.packed_output_words[j], self.n_rows)

    def output_index(self, name: str) -> int:
        try:
            return self.output_names.index(name)
        except ValueError:
            raise KeyError(f"no output named {name!r}") from None

    def __eq__(self, other):
        if not isinstance(other, TruthTable):
            return NotImplemented
        return (
            self.input_names == other.input_names
            and self.output_names == other.output_names
            and np.array_equal(self.input_rows, other.input_rows)
            and np.array_equal(self.output_rows, other.output_rows)
        )

    def __repr__(self):
        return (
            f"TruthTable(inputs={list(self.input_names)}, "
            f"outputs={list(self.output_names)}, rows={self.n_rows})"
        )


def pack_columns(table: TruthTable) -> tuple:
    """(input columns by terminal index, output columns) as PackedColumns."""
    inputs = tuple(table.input_column(k) for k in range(table.n_inputs))
    outputs = tuple(table.output_column(j) for j in range(table.n_outputs))
    return inputs, outputs


def _header_names(line: str, prefix: str, filename, lineno) -> list[str]:
    body = line[len(prefix):].strip()
    names = body.split()
    if not names:
        raise TableSyntaxError(f"empty {prefix} list", filename, lineno)
    return names


def parse_table(
    text: str,
    max_inputs: int = DEFAULT_MAX_INPUTS,
    filename: str | None = None,
) -> TruthTable:
    """Parse truth-table text; see the module docstring for the format."""
    input_names = None
    output_names = None
    row_inputs: list[list[int]] = []
    row_outputs: list[list[int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if input_names is None:
            if not line.startswith("inputs:"):
                raise TableSyntaxError(
                    "expected 'inputs:' header", filename, lineno
                )
            input_names = _header_names(line, "inputs:", filename, lineno)
            if len(input_names) > max_inputs:
                raise TooManyInputsError(
                    f"{len(input_names)} inputs exceeds the limit of {max_inputs}"
                )
            continue
        if output_names is None:
            if not line.startswith("outputs:"):
                raise TableSyntaxError(
                    "expected 'outputs:' header", filename, lineno
                )
            output_names = _header_names(line, "outputs:", filename, lineno)
            continue
        fields = line.split()
        if len(fields) != 2:
            raise TableSyntaxError(
                "expected '<input bits> <output bits>'", filename, lineno
            )
        in_bits, out_bits = fields
        if not set(in_bits) <= {"0", "1"} or not set(out_bits) <= {"0", "1"}:
            raise TableSyntaxError("rows must be 0/1 bits", filename, lineno)
        if len(in_bits) != len(input_names):
            raise WidthMismatchError(
                f"line {lineno}: {len(in_bits)} input bits for "
                f"{len(input_names)} inputs"
            )
        if len(out_bits) != len(output_names):
            raise WidthMismatchError(
                f"line {lineno}: {len(out_bits)} output bits for "
                f"{len(output_names)} outputs"
            )
        row_inputs.append([int(b) for b in in_bits])
        row_outputs.append([int(b) for b in out_bits])

    if input_names is None or output_names is None:
        raise TableSyntaxError("missing header lines", filename)
    if not row_inputs:
        raise MissingCombinationError("table has no rows")
    return TruthTable(
        input_names,
        output_names,
        np.array(row_inputs, dtype=np.uint8),
        np.array(row_outputs, dtype=np.uint8),
    )


def serialize_table(table: TruthTable) -> str:
    """Inverse of parse_table; row order is preserved."""
    lines = [
        "inputs: " + " ".join(table.input_names),
        "outputs: " + " ".join(table.output_names),
    ]
    for i in range(table.n_rows):
        in_bits = "".join(str(b) for b in table.input_rows[i])
        out_bits = "".join(str(b) for b in table.output_rows[i])
        lines.append(f"{in_bits} {out_bits}")
    return "\n".join(lines) + "\n"


def load_table(path, max_inputs: int = DEFAULT_MAX_INPUTS) -> TruthTable:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_table(fh.read(), max_inputs=max_inputs, filename=str(path))


def canonical_input_rows(n_inputs: int) -> np.ndarray:
    """All combinations in ascending binary order, header order A_{n-1}..A_0."""
    rows = 1 << n_inputs
    idx = np.arange(rows, dtype=np.int64)
    cols = [(idx >> k) & 1 for k in range(n_inputs - 1, -1, -1)]
    return np.stack(cols, axis=1).astype(np.uint8)


def table_from_expression(tree: CircuitTree, n_inputs: int) -> TruthTable:
    """Exhaustively evaluate a combinational tree into a canonical table.

    Used to manufacture solvable benchmark targets.
    """
    from .evaluator import eval_packed_words  # deferred: avoids import cycle

    if tree.contains_sequential:
        raise SequentialNotAllowedError(
            "table_from_expression requires a combinational tree"
        )
    if tree.n_inputs != n_inputs:
        raise WidthMismatchError(
            f"tree expects {tree.n_inputs} inputs, table will have {n_inputs}"
        )
    rows = 1 << n_inputs
    input_rows = canonical_input_rows(n_inputs)
    terminal_words = np.stack(
        [pack_bits(input_rows[:, n_inputs - 1 - k]) for k in range(n_inputs)]
    )
    out_words = eval_packed_words(tree, terminal_words, row_mask(rows))
    out_bits = PackedColumn(out_words, rows).to_bits()
    input_names = [default_name(k) for k in range(n_inputs - 1, -1, -1)]
    return TruthTable(
        input_names, ["F"], input_rows, out_bits.reshape(-1, 1)
    )
