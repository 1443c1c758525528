"""Circuit parse trees: genome representation, validation, and prefix notation.

A tree is either a ``Terminal`` (a reference to one input variable) or a
``Gate`` (one element of the function set applied to child subtrees).  Trees
are immutable; mutation operators build new trees that share unchanged
subtrees with their parents.

The canonical text form is parenthesized prefix notation, e.g.
``(AND (OR A0 A2) (OR A2 A1))``.  Terminal index ``k`` renders as ``A{k}``
unless explicit variable names are supplied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

from .errors import (
    ArityError,
    PrefixSyntaxError,
    UnknownVariableError,
)
from .functions import FunctionDef, lookup_function


@dataclass(frozen=True)
class Terminal:
    """Leaf node: a reference to input variable ``A{index}``."""

    index: int


@dataclass(frozen=True)
class Gate:
    """Internal node: a function-set element applied to child subtrees."""

    fn: FunctionDef
    children: tuple["Node", ...]


Node = Union[Terminal, Gate]


def default_name(index: int) -> str:
    return f"A{index}"


def _scan(node: Node) -> tuple[int, int, bool]:
    """(node_count, depth, contains_sequential) of a subtree, iteratively."""
    count = 0
    max_depth = 0
    has_seq = False
    stack = [(node, 1)]
    while stack:
        cur, d = stack.pop()
        count += 1
        if d > max_depth:
            max_depth = d
        if isinstance(cur, Gate):
            if cur.fn.is_sequential:
                has_seq = True
            for child in cur.children:
                stack.append((child, d + 1))
    return count, max_depth, has_seq


@dataclass(frozen=True)
class CircuitTree:
    """A one-output circuit genome over ``n_inputs`` input variables.

    Size, depth, and the sequential flag are computed once at construction.
    """

    root: Node
    n_inputs: int
    node_count: int = field(init=False)
    depth: int = field(init=False)
    contains_sequential: bool = field(init=False)

    def __post_init__(self):
        count, depth, has_seq = _scan(self.root)
        object.__setattr__(self, "node_count", count)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "contains_sequential", has_seq)

    def __str__(self) -> str:
        return to_prefix(self)


@dataclass(frozen=True)
class TreeMetrics:
    node_count: int
    depth: int
    contains_sequential: bool


def tree_metrics(tree: CircuitTree) -> TreeMetrics:
    """Node count, depth (a lone terminal has depth 1), and flip-flop flag."""
    return TreeMetrics(tree.node_count, tree.depth, tree.contains_sequential)


def iter_preorder(node: Node) -> Iterator[Node]:
    """Yield the subtree's nodes in pre-order (node before its children)."""
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, Gate):
            stack.extend(reversed(cur.children))


def validate_tree(tree: CircuitTree, max_nodes: int, n_inputs: int) -> list[str]:
    """Structural check; returns a list of violations (empty when ok).

    Reports every arity mismatch, node-budget overflow, and out-of-range
    terminal it finds.
    """
    violations = []
    count = 0
    for node in iter_preorder(tree.root):
        count += 1
        if isinstance(node, Terminal):
            if not 0 <= node.index < n_inputs:
                violations.append(
                    f"terminal index {node.index} out of range for {n_inputs} inputs"
                )
        else:
            if len(node.children) != node.fn.arity:
                violations.append(
                    f"{node.fn.name} node has {len(node.children)} children, "
                    f"expected {node.fn.arity}"
                )
    if count > max_nodes:
        violations.append(f"tree has {count} nodes, budget is {max_nodes}")
    return violations


def to_prefix(tree: CircuitTree, input_names: Sequence[str] | None = None) -> str:
    """Render the tree in parenthesized prefix notation."""

    def render(node: Node) -> str:
        if isinstance(node, Terminal):
            if input_names is not None:
                return input_names[node.index]
            return default_name(node.index)
        inner = " ".join(render(c) for c in node.children)
        return f"({node.fn.name} {inner})"

    return render(tree.root)


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def parse_prefix(
    text: str, n_inputs: int, input_names: Sequence[str] | None = None
) -> CircuitTree:
    """Parse prefix notation back into a tree.

    Terminals are matched against ``input_names`` when given, otherwise
    against the default names ``A0 .. A{n_inputs-1}``.
    """
    if input_names is not None:
        name_to_index = {name: i for i, name in enumerate(input_names)}
    else:
        name_to_index = {default_name(i): i for i in range(n_inputs)}

    tokens = _tokenize(text)
    if not tokens:
        raise PrefixSyntaxError("empty circuit text")
    pos = 0

    def parse_expr() -> Node:
        nonlocal pos
        if pos >= len(tokens):
            raise PrefixSyntaxError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == ")":
            raise PrefixSyntaxError("unexpected ')'")
        if tok != "(":
            if tok in name_to_index:
                return Terminal(name_to_index[tok])
            raise UnknownVariableError(
                f"unknown variable {tok!r} for {n_inputs} inputs"
            )
        if pos >= len(tokens) or tokens[pos] in "()":
            raise PrefixSyntaxError("expected function name after '('")
        fn = lookup_function(tokens[pos])
        pos += 1
        children = []
        while pos < len(tokens) and tokens[pos] != ")":
            children.append(parse_expr())
        if pos >= len(tokens):
            raise PrefixSyntaxError(f"missing ')' for {fn.name}")
        pos += 1  # consume ')'
        if len(children) != fn.arity:
            raise ArityError(
                f"{fn.name} takes {fn.arity} children, got {len(children)}"
            )
        return Gate(fn, tuple(children))

    root = parse_expr()
    if pos != len(tokens):
        raise PrefixSyntaxError(f"trailing text after circuit: {tokens[pos]!r}")
    return CircuitTree(root, n_inputs)


def replace_node_at(root: Node, target: int, replacement: Node) -> Node:
    """Return a copy of ``root`` with the ``target``-th pre-order node replaced.

    Untouched subtrees are shared with the original.  Once the target is
    found the counter no longer matters, so the old subtree is not walked.
    """
    counter = [0]

    def rebuild(node: Node) -> Node:
        i = counter[0]
        counter[0] += 1
        if i == target:
            return replacement
        if isinstance(node, Terminal) or counter[0] > target:
            return node
        new_children = tuple(rebuild(c) for c in node.children)
        if all(nc is oc for nc, oc in zip(new_children, node.children)):
            return node
        return Gate(node.fn, new_children)

    return rebuild(root)
