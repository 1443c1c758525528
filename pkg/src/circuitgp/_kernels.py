"""Bit-parallel evaluation kernels: numba-jitted with a pure-numpy fallback.

Trees are compiled (in :mod:`circuitgp.evaluator`) to postfix programs:
one int64 per node, children before parents.  Opcode ``>= 0`` selects a
function-set element; ``-(k+1)`` pushes the packed column of terminal ``k``.

Backend selection: ``CIRCUITGP_BACKEND=numpy`` forces the numpy fallback,
``CIRCUITGP_BACKEND=numba`` requires numba (import failure is an error),
unset picks numba when available.  Both backends are bit-exact; the
``bench`` CLI subcommand compares their throughput.
"""

from __future__ import annotations

import os

import numpy as np

OP_OR = 0
OP_AND = 1
OP_NOT = 2
OP_NAND = 3
OP_NOR = 4
OP_HA = 5
OP_FA = 6
OP_JKFF = 7
OP_RSFF = 8
OP_TFF = 9
OP_DFF = 10

OPCODES = {
    "OR": OP_OR,
    "AND": OP_AND,
    "NOT": OP_NOT,
    "NAND": OP_NAND,
    "NOR": OP_NOR,
    "HA": OP_HA,
    "FA": OP_FA,
    "JKFF": OP_JKFF,
    "RSFF": OP_RSFF,
    "TFF": OP_TFF,
    "DFF": OP_DFF,
}

_ENV_BACKEND = os.environ.get("CIRCUITGP_BACKEND", "").strip().lower()
if _ENV_BACKEND not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"CIRCUITGP_BACKEND must be 'numba' or 'numpy', not {_ENV_BACKEND!r}"
    )

HAS_NUMBA = False
if _ENV_BACKEND != "numpy":
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        if _ENV_BACKEND == "numba":
            raise RuntimeError(
                "CIRCUITGP_BACKEND=numba but numba failed to import"
            )

if not HAS_NUMBA:

    def njit(*args, **kwargs):  # no-op decorator, keeps definitions importable
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


BACKEND = "numba" if HAS_NUMBA else "numpy"

_U1 = np.uint64(1)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


# ---------------------------------------------------------------------------
# numba kernels (word loops; compiled when numba is active)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _popcount64(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return np.int64((x * _H01) >> np.uint64(56))


@njit(cache=True)
def _eval_words_nb(prog, in_words, mask, stack):
    """Run one postfix program over packed columns; result in stack[0]."""
    sp = 0
    n_words = in_words.shape[1]
    for k in range(prog.shape[0]):
        code = prog[k]
        if code < 0:
            t = -code - 1
            for w in range(n_words):
                stack[sp, w] = in_words[t, w]
            sp += 1
        elif code == OP_OR:
            for w in range(n_words):
                stack[sp - 2, w] |= stack[sp - 1, w]
            sp -= 1
        elif code == OP_AND:
            for w in range(n_words):
                stack[sp - 2, w] &= stack[sp - 1, w]
            sp -= 1
        elif code == OP_NOT:
            for w in range(n_words):
                stack[sp - 1, w] = ~stack[sp - 1, w] & mask[w]
        elif code == OP_NAND:
            for w in range(n_words):
                stack[sp - 2, w] = ~(stack[sp - 2, w] & stack[sp - 1, w]) & mask[w]
            sp -= 1
        elif code == OP_NOR:
            for w in range(n_words):
                stack[sp - 2, w] = ~(stack[sp - 2, w] | stack[sp - 1, w]) & mask[w]
            sp -= 1
        elif code == OP_HA:
            for w in range(n_words):
                stack[sp - 2, w] ^= stack[sp - 1, w]
            sp -= 1
        else:  # OP_FA: sum bit of three addends
            for w in range(n_words):
                stack[sp - 3, w] ^= stack[sp - 2, w] ^ stack[sp - 1, w]
            sp -= 2


@njit(cache=True)
def _batch_mismatches_nb(progs, starts, lens, in_words, target, mask):
    n_trees = starts.shape[0]
    n_words = in_words.shape[1]
    max_len = 0
    for t in range(n_trees):
        if lens[t] > max_len:
            max_len = lens[t]
    stack = np.empty((max_len + 1, n_words), dtype=np.uint64)
    out = np.empty(n_trees, dtype=np.int64)
    for t in range(n_trees):
        prog = progs[starts[t]:starts[t] + lens[t]]
        _eval_words_nb(prog, in_words, mask, stack)
        count = np.int64(0)
        for w in range(n_words):
            count += _popcount64((stack[0, w] ^ target[w]) & mask[w])
        out[t] = count
    return out


@njit(cache=True)
def _eval_seq_words_nb(prog, in_words, n_rows, state, stack):
    """Row-sequential evaluation; flip-flop state is per program position."""
    n_instr = prog.shape[0]
    for k in range(n_instr):
        state[k] = np.uint64(0)
    out = np.zeros((n_rows + 63) // 64, dtype=np.uint64)
    for r in range(n_rows):
        wi = r >> 6
        bi = np.uint64(r & 63)
        sp = 0
        for k in range(n_instr):
            code = prog[k]
            if code < 0:
                stack[sp] = (in_words[-code - 1, wi] >> bi) & _U1
                sp += 1
            elif code == OP_OR:
                stack[sp - 2] |= stack[sp - 1]
                sp -= 1
            elif code == OP_AND:
                stack[sp - 2] &= stack[sp - 1]
                sp -= 1
            elif code == OP_NOT:
                stack[sp - 1] ^= _U1
            elif code == OP_NAND:
                stack[sp - 2] = (stack[sp - 2] & stack[sp - 1]) ^ _U1
                sp -= 1
            elif code == OP_NOR:
                stack[sp - 2] = (stack[sp - 2] | stack[sp - 1]) ^ _U1
                sp -= 1
            elif code == OP_HA:
                stack[sp - 2] ^= stack[sp - 1]
                sp -= 1
            elif code == OP_FA:
                stack[sp - 3] ^= stack[sp - 2] ^ stack[sp - 1]
                sp -= 2
            elif code == OP_JKFF:
                j = stack[sp - 2]
                kk = stack[sp - 1]
                q = state[k]
                nxt = (j & (q ^ _U1)) | ((kk ^ _U1) & q)
                state[k] = nxt
                stack[sp - 2] = nxt
                sp -= 1
            elif code == OP_RSFF:
                rr = stack[sp - 2]
                s = stack[sp - 1]
                q = state[k]
                nxt = s | ((rr ^ _U1) & q)
                state[k] = nxt
                stack[sp - 2] = nxt
                sp -= 1
            elif code == OP_TFF:
                nxt = stack[sp - 1] ^ state[k]
                state[k] = nxt
                stack[sp - 1] = nxt
            else:  # OP_DFF
                nxt = stack[sp - 1]
                state[k] = nxt
                stack[sp - 1] = nxt
        out[wi] |= stack[0] << bi
    return out


@njit(cache=True)
def _batch_mismatches_seq_nb(progs, starts, lens, in_words, target, mask, n_rows):
    n_trees = starts.shape[0]
    max_len = 0
    for t in range(n_trees):
        if lens[t] > max_len:
            max_len = lens[t]
    state = np.empty(max_len + 1, dtype=np.uint64)
    stack = np.empty(max_len + 1, dtype=np.uint64)
    out = np.empty(n_trees, dtype=np.int64)
    for t in range(n_trees):
        prog = progs[starts[t]:starts[t] + lens[t]]
        words = _eval_seq_words_nb(prog, in_words, n_rows, state, stack)
        count = np.int64(0)
        for w in range(words.shape[0]):
            count += _popcount64((words[w] ^ target[w]) & mask[w])
        out[t] = count
    return out


# ---------------------------------------------------------------------------
# numpy fallback (vectorized over words; python loop over instructions/rows)
# ---------------------------------------------------------------------------

def _eval_words_np(prog, in_words, mask):
    stack = []
    for code in prog:
        if code < 0:
            stack.append(in_words[-code - 1].copy())
        elif code == OP_OR:
            b = stack.pop()
            stack[-1] |= b
        elif code == OP_AND:
            b = stack.pop()
            stack[-1] &= b
        elif code == OP_NOT:
            np.bitwise_xor(stack[-1], mask, out=stack[-1])
        elif code == OP_NAND:
            b = stack.pop()
            stack[-1] &= b
            np.bitwise_xor(stack[-1], mask, out=stack[-1])
        elif code == OP_NOR:
            b = stack.pop()
            stack[-1] |= b
            np.bitwise_xor(stack[-1], mask, out=stack[-1])
        elif code == OP_HA:
            b = stack.pop()
            stack[-1] ^= b
        else:  # OP_FA
            c = stack.pop()
            b = stack.pop()
            stack[-1] ^= b
            stack[-1] ^= c
    return stack[0]


def _batch_mismatches_np(progs, starts, lens, in_words, target, mask):
    out = np.empty(starts.shape[0], dtype=np.int64)
    for t in range(starts.shape[0]):
        prog = progs[starts[t]:starts[t] + lens[t]]
        words = _eval_words_np(prog, in_words, mask)
        out[t] = int(np.bitwise_count((words ^ target) & mask).sum())
    return out


def _eval_seq_words_np(prog, in_words, n_rows):
    n_instr = prog.shape[0]
    state = [0] * n_instr
    out = np.zeros((n_rows + 63) // 64, dtype=np.uint64)
    words = [[int(w) for w in in_words[t]] for t in range(in_words.shape[0])]
    stack = [0] * (n_instr + 1)
    for r in range(n_rows):
        wi = r >> 6
        bi = r & 63
        sp = 0
        for k in range(n_instr):
            code = prog[k]
            if code < 0:
                stack[sp] = (words[-code - 1][wi] >> bi) & 1
                sp += 1
            elif code == OP_OR:
                stack[sp - 2] |= stack[sp - 1]
                sp -= 1
            elif code == OP_AND:
                stack[sp - 2] &= stack[sp - 1]
                sp -= 1
            elif code == OP_NOT:
                stack[sp - 1] ^= 1
            elif code == OP_NAND:
                stack[sp - 2] = (stack[sp - 2] & stack[sp - 1]) ^ 1
                sp -= 1
            elif code == OP_NOR:
                stack[sp - 2] = (stack[sp - 2] | stack[sp - 1]) ^ 1
                sp -= 1
            elif code == OP_HA:
                stack[sp - 2] ^= stack[sp - 1]
                sp -= 1
            elif code == OP_FA:
                stack[sp - 3] ^= stack[sp - 2] ^ stack[sp - 1]
                sp -= 2
            elif code == OP_JKFF:
                q = state[k]
                nxt = (stack[sp - 2] & (q ^ 1)) | ((stack[sp - 1] ^ 1) & q)
                state[k] = nxt
                stack[sp - 2] = nxt
                sp -= 1
            elif code == OP_RSFF:
                q = state[k]
                nxt = stack[sp - 1] | ((stack[sp - 2] ^ 1) & q)
                state[k] = nxt
                stack[sp - 2] = nxt
                sp -= 1
            elif code == OP_TFF:
                nxt = stack[sp - 1] ^ state[k]
                state[k] = nxt
                stack[sp - 1] = nxt
            else:  # OP_DFF
                nxt = stack[sp - 1]
                state[k] = nxt
                stack[sp - 1] = nxt
        out[wi] |= np.uint64(stack[0] << bi)
    return out


def _batch_mismatches_seq_np(progs, starts, lens, in_words, target, mask, n_rows):
    out = np.empty(starts.shape[0], dtype=np.int64)
    for t in range(starts.shape[0]):
        prog = progs[starts[t]:starts[t] + lens[t]]
        words = _eval_seq_words_np(prog, in_words, n_rows)
        out[t] = int(np.bitwise_count((words ^ target) & mask).sum())
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _resolve(backend):
    backend = backend or BACKEND
    if backend == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable")
    return backend


def eval_words(prog, in_words, mask, backend=None):
    """Packed combinational evaluation; returns one uint64 column."""
    if _resolve(backend) == "numba":
        stack = np.empty((prog.shape[0] + 1, in_words.shape[1]), dtype=np.uint64)
        _eval_words_nb(prog, in_words, mask, stack)
        return stack[0].copy()
    return _eval_words_np(prog, in_words, mask)


def batch_mismatches(progs, starts, lens, in_words, target, mask, backend=None):
    """Mismatch count per program against a packed target column."""
    if starts.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    if _resolve(backend) == "numba":
        return _batch_mismatches_nb(progs, starts, lens, in_words, target, mask)
    return _batch_mismatches_np(progs, starts, lens, in_words, target, mask)


def eval_seq_words(prog, in_words, n_rows, backend=None):
    """Row-sequential evaluation (fresh flip-flop state, all zero)."""
    if _resolve(backend) == "numba":
        state = np.empty(prog.shape[0] + 1, dtype=np.uint64)
        stack = np.empty(prog.shape[0] + 1, dtype=np.uint64)
        return _eval_seq_words_nb(prog, in_words, n_rows, state, stack)
    return _eval_seq_words_np(prog, in_words, n_rows)


def batch_mismatches_seq(
    progs, starts, lens, in_words, target, mask, n_rows, backend=None
):
    if starts.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    if _resolve(backend) == "numba":
        return _batch_mismatches_seq_nb(
            progs, starts, lens, in_words, target, mask, n_rows
        )
    return _batch_mismatches_seq_np(
        progs, starts, lens, in_words, target, mask, n_rows
    )


def warm_up():
    """Trigger JIT compilation so first-use latency lands here, not mid-run."""
    if not HAS_NUMBA:
        return
    prog = np.array([-1, -1, OP_AND], dtype=np.int64)
    in_words = np.array([[np.uint64(0b10)]], dtype=np.uint64)
    mask = np.array([np.uint64(0b11)], dtype=np.uint64)
    starts = np.array([0], dtype=np.int64)
    lens = np.array([3], dtype=np.int64)
    batch_mismatches(prog, starts, lens, in_words, mask, mask)
    batch_mismatches_seq(prog, starts, lens, in_words, mask, mask, 2)
    eval_words(prog, in_words, mask)
    eval_seq_words(prog, in_words, 2)
