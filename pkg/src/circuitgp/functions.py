"""The circuit function set: basic gates, adder sum bits, and flip-flops.

Combinational elements are ordinary Boolean functions of their inputs.
The adders HA and FA emit only the modulo-2 sum bit; the carry is not
part of the function set (every element here is single-output).

Flip-flops are clocked memory elements evaluated one step at a time via
their characteristic equations.  Child order follows the letters in the
element name: JKFF takes (J, K), RSFF takes (R, S).  An RS flip-flop
driven with R = S = 1 resolves set-dominant to 1 so the step function is
total.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import UnknownFunctionError

COMBINATIONAL = "combinational"
SEQUENTIAL = "sequential"


@dataclass(frozen=True)
class FunctionDef:
    """One gate or memory element of the function set."""

    name: str
    arity: int
    kind: str

    @property
    def is_sequential(self) -> bool:
        return self.kind == SEQUENTIAL


FUNCTIONS: dict[str, FunctionDef] = {
    f.name: f
    for f in (
        FunctionDef("OR", 2, COMBINATIONAL),
        FunctionDef("AND", 2, COMBINATIONAL),
        FunctionDef("NOT", 1, COMBINATIONAL),
        FunctionDef("NAND", 2, COMBINATIONAL),
        FunctionDef("NOR", 2, COMBINATIONAL),
        FunctionDef("HA", 2, COMBINATIONAL),
        FunctionDef("FA", 3, COMBINATIONAL),
        FunctionDef("JKFF", 2, SEQUENTIAL),
        FunctionDef("RSFF", 2, SEQUENTIAL),
        FunctionDef("TFF", 1, SEQUENTIAL),
        FunctionDef("DFF", 1, SEQUENTIAL),
    )
}

FUNCTION_NAMES = tuple(FUNCTIONS)


def lookup_function(name: str) -> FunctionDef:
    """Return the definition for ``name`` or raise UnknownFunctionError."""
    try:
        return FUNCTIONS[name]
    except KeyError:
        raise UnknownFunctionError(
            f"unknown function {name!r}; choose from {', '.join(FUNCTIONS)}"
        ) from None


def apply_combinational(fn: FunctionDef, args: Sequence[int]) -> int:
    """Evaluate a combinational element on single bits."""
    if fn.kind != COMBINATIONAL:
        raise ValueError(f"{fn.name} is not combinational")
    if len(args) != fn.arity:
        raise ValueError(f"{fn.name} expects {fn.arity} args, got {len(args)}")
    name = fn.name
    if name == "OR":
        return args[0] | args[1]
    if name == "AND":
        return args[0] & args[1]
    if name == "NOT":
        return args[0] ^ 1
    if name == "NAND":
        return (args[0] & args[1]) ^ 1
    if name == "NOR":
        return (args[0] | args[1]) ^ 1
    if name == "HA":
        return (args[0] + args[1]) % 2
    if name == "FA":
        return (args[0] + args[1] + args[2]) % 2
    raise UnknownFunctionError(name)


def flipflop_step(fn: FunctionDef, state: int, inputs: Sequence[int]) -> int:
    """One clock step of a flip-flop: returns the post-edge state Q'.

    The node output for the step equals the new state.
    """
    if fn.kind != SEQUENTIAL:
        raise ValueError(f"{fn.name} is not sequential")
    if len(inputs) != fn.arity:
        raise ValueError(f"{fn.name} expects {fn.arity} inputs, got {len(inputs)}")
    q = state & 1
    name = fn.name
    if name == "JKFF":
        j, k = inputs
        return (j & (q ^ 1)) | ((k ^ 1) & q)
    if name == "RSFF":
        r, s = inputs
        return s | ((r ^ 1) & q)
    if name == "TFF":
        return inputs[0] ^ q
    if name == "DFF":
        return inputs[0]
    raise UnknownFunctionError(name)
