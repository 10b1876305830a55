# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Cython step kernel: the compiled twin of _core_py.

Same contract and evaluation order as the pure-Python kernel; _core_py
documents the contract. Only the inner evaluation is typed C.
"""
from array import array

from .program import STATUS_CLASH, STATUS_NEED_ATOM, STATUS_OK

BACKEND_NAME = "compiled"


cdef class _Eval:
    cdef int[::1] kind
    cdef int[::1] a
    cdef int[::1] b
    cdef int[::1] c
    cdef int[::1] child_list
    cdef int[::1] tstart
    cdef long long[::1] tdur
    cdef long long[::1] state
    cdef int[::1] atoms
    cdef long long[::1] out
    cdef char[::1] written
    cdef long long clock
    cdef public int status   # 0 ok, 1 clash, 2 need-atom
    cdef public int detail

    def __init__(self, prog, state_arr, atoms_arr, out_arr, written_arr,
                 long long clock):
        self.kind = prog.kind
        self.a = prog.a
        self.b = prog.b
        self.c = prog.c
        self.child_list = prog.child_list if len(prog.child_list) else array("i", [0])
        self.tstart = prog.timer_start_loc if len(prog.timer_start_loc) else array("i", [0])
        self.tdur = prog.timer_duration if len(prog.timer_duration) else array("q", [0])
        self.state = state_arr
        self.atoms = atoms_arr if len(atoms_arr) else array("i", [0])
        self.out = out_arr
        self.written = written_arr
        self.clock = clock
        self.status = 0
        self.detail = 0

    cdef long long ev(self, int n):
        cdef int op = self.kind[n]
        cdef long long left, right
        cdef int t, v
        if op == 10:  # CONST
            return self.a[n]
        if op == 11:  # LOC
            return self.state[self.a[n]]
        if op == 12:  # ATOM
            v = self.atoms[self.a[n]]
            if v < 0:
                self.status = 2
                self.detail = self.a[n]
                return 0
            return v
        if op == 13:  # CLOCK
            return self.clock
        if op == 14:  # EXPIRED
            t = self.a[n]
            return 1 if self.clock - self.state[self.tstart[t]] >= self.tdur[t] else 0
        if op == 20:  # NOT
            left = self.ev(self.a[n])
            if self.status:
                return 0
            return 0 if left else 1
        if op == 21:  # AND
            left = self.ev(self.a[n])
            if self.status:
                return 0
            if not left:
                return 0
            return self.ev(self.b[n])
        if op == 22:  # OR
            left = self.ev(self.a[n])
            if self.status:
                return 0
            if left:
                return 1
            return self.ev(self.b[n])
        left = self.ev(self.a[n])
        if self.status:
            return 0
        right = self.ev(self.b[n])
        if self.status:
            return 0
        if op == 23:
            return 1 if left == right else 0
        if op == 24:
            return 1 if left != right else 0
        if op == 25:
            return 1 if left < right else 0
        if op == 26:
            return 1 if left <= right else 0
        if op == 27:
            return 1 if left > right else 0
        if op == 28:
            return 1 if left >= right else 0
        if op == 29:
            return left + right
        if op == 30:
            return left - right
        return left * right  # MUL

    cdef void fire(self, int n):
        cdef int op = self.kind[n]
        cdef int loc, start, i
        cdef long long value, cond
        if op == 0:  # SKIP
            return
        if op == 1:  # UPDATE
            loc = self.a[n]
            value = self.ev(self.b[n])
            if self.status:
                return
            if self.written[loc]:
                if self.out[loc] != value:
                    self.status = 1
                    self.detail = loc
            else:
                self.out[loc] = value
                self.written[loc] = 1
            return
        if op == 2:  # PAR
            start = self.a[n]
            for i in range(self.b[n]):
                self.fire(self.child_list[start + i])
                if self.status:
                    return
            return
        # IF
        cond = self.ev(self.a[n])
        if self.status:
            return
        if cond:
            self.fire(self.b[n])
        elif self.c[n] >= 0:
            self.fire(self.c[n])


def eval_step(prog, state, atoms, clock):
    """One step: returns (status, detail, successor-list-or-None)."""
    state_arr = array("q", state)
    atoms_arr = array("i", atoms)
    out_arr = array("q", state)
    written_arr = bytearray(len(state_arr))
    e = _Eval(prog, state_arr, atoms_arr, out_arr, written_arr, clock)
    e.fire(prog.root)
    if e.status == 2:
        return STATUS_NEED_ATOM, e.detail, None
    if e.status == 1:
        return STATUS_CLASH, e.detail, None
    return STATUS_OK, 0, list(out_arr)
