"""Pure-Python step kernel; the fallback twin of the Cython extension.

Both kernels implement exactly one contract: evaluate a compiled program
against an integer state vector and a (possibly partial) atom vector.
Returns ``(status, detail, successor)`` where status is OK, CLASH (detail
= state location index) or NEED_ATOM (detail = index of the first
unassigned atom the evaluation had to read). Evaluation order is the
tree order with short-circuit and/or, so every backend branches on the
same atom first.
"""
from __future__ import annotations

from .program import (
    OP_ADD,
    OP_AND,
    OP_ATOM,
    OP_CLOCK,
    OP_CONST,
    OP_EQ,
    OP_EXPIRED,
    OP_GE,
    OP_GT,
    OP_IF,
    OP_LE,
    OP_LOC,
    OP_LT,
    OP_MUL,
    OP_NEQ,
    OP_NOT,
    OP_OR,
    OP_PAR,
    OP_SKIP,
    OP_SUB,
    OP_UPDATE,
    Program,
    STATUS_CLASH,
    STATUS_NEED_ATOM,
    STATUS_OK,
)

BACKEND_NAME = "python"


class _NeedAtom(Exception):
    def __init__(self, index: int):
        self.index = index


class _Clash(Exception):
    def __init__(self, loc: int):
        self.loc = loc


def eval_step(prog: Program, state, atoms, clock: int):
    """One step: returns (status, detail, successor-list-or-None)."""
    kind, a, b, c = prog.kind, prog.a, prog.b, prog.c
    child_list = prog.child_list
    tstart, tdur = prog.timer_start_loc, prog.timer_duration
    out = list(state)
    written = [False] * len(out)

    def ev(n: int) -> int:
        op = kind[n]
        if op == OP_CONST:
            return a[n]
        if op == OP_LOC:
            return state[a[n]]
        if op == OP_ATOM:
            v = atoms[a[n]]
            if v < 0:
                raise _NeedAtom(a[n])
            return v
        if op == OP_CLOCK:
            return clock
        if op == OP_EXPIRED:
            t = a[n]
            return 1 if clock - state[tstart[t]] >= tdur[t] else 0
        if op == OP_NOT:
            return 0 if ev(a[n]) else 1
        if op == OP_AND:
            return ev(b[n]) if ev(a[n]) else 0
        if op == OP_OR:
            return 1 if ev(a[n]) else ev(b[n])
        left = ev(a[n])
        right = ev(b[n])
        if op == OP_EQ:
            return 1 if left == right else 0
        if op == OP_NEQ:
            return 1 if left != right else 0
        if op == OP_LT:
            return 1 if left < right else 0
        if op == OP_LE:
            return 1 if left <= right else 0
        if op == OP_GT:
            return 1 if left > right else 0
        if op == OP_GE:
            return 1 if left >= right else 0
        if op == OP_ADD:
            return left + right
        if op == OP_SUB:
            return left - right
        if op == OP_MUL:
            return left * right
        raise AssertionError(f"bad expression opcode {op}")

    def fire(n: int) -> None:
        op = kind[n]
        if op == OP_SKIP:
            return
        if op == OP_UPDATE:
            loc = a[n]
            value = ev(b[n])
            if written[loc]:
                if out[loc] != value:
                    raise _Clash(loc)
            else:
                out[loc] = value
                written[loc] = True
            return
        if op == OP_PAR:
            start = a[n]
            for i in range(b[n]):
                fire(child_list[start + i])
            return
        if op == OP_IF:
            if ev(a[n]):
                fire(b[n])
            elif c[n] >= 0:
                fire(c[n])
            return
        raise AssertionError(f"bad rule opcode {op}")

    try:
        fire(prog.root)
    except _NeedAtom as need:
        return STATUS_NEED_ATOM, need.index, None
    except _Clash as clash:
        return STATUS_CLASH, clash.loc, None
    return STATUS_OK, 0, out
