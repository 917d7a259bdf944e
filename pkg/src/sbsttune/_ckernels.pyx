# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_pykernels`` operation for operation."""

from libc.math cimport fabs
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc, realloc
from cpython.tuple cimport PyTuple_GET_ITEM, PyTuple_GET_SIZE

import numpy as np

BACKEND = "cython"

cdef enum:
    OP_CONST = 0
    OP_ADD = 1
    OP_SUB = 2
    OP_NEG = 3

cdef enum:
    EQ = 0
    NE = 1
    LT = 2
    LE = 3
    GT = 4
    GE = 5


cdef inline int64_t _wadd(int64_t a, int64_t b) nogil:
    return <int64_t>(<uint64_t>a + <uint64_t>b)


cdef inline int64_t _wsub(int64_t a, int64_t b) nogil:
    return <int64_t>(<uint64_t>a - <uint64_t>b)


cdef inline int64_t _wneg(int64_t a) nogil:
    return <int64_t>(<uint64_t>0 - <uint64_t>a)


cdef inline void _distances(int relop, int64_t v, int64_t k, double* dt, double* df) nogil:
    cdef double fv = <double>v
    cdef double fk = <double>k
    if relop == EQ:
        if v == k:
            dt[0] = 0.0; df[0] = 1.0
        else:
            dt[0] = fabs(fv - fk); df[0] = 0.0
    elif relop == NE:
        if v == k:
            dt[0] = 1.0; df[0] = 0.0
        else:
            dt[0] = 0.0; df[0] = fabs(fv - fk)
    elif relop == LT:
        if v < k:
            dt[0] = 0.0; df[0] = fk - fv
        else:
            dt[0] = fv - fk + 1.0; df[0] = 0.0
    elif relop == LE:
        if v <= k:
            dt[0] = 0.0; df[0] = fk - fv + 1.0
        else:
            dt[0] = fv - fk; df[0] = 0.0
    elif relop == GT:
        if v > k:
            dt[0] = 0.0; df[0] = fv - fk
        else:
            dt[0] = fk - fv + 1.0; df[0] = 0.0
    else:
        if v >= k:
            dt[0] = 0.0; df[0] = fv - fk + 1.0
        else:
            dt[0] = fk - fv; df[0] = 0.0


def run_statements(test):
    cdef Py_ssize_t n = len(test)
    cdef list values = []
    cdef Py_ssize_t i
    cdef int64_t a, b
    cdef int op
    cdef int64_t* buf = <int64_t*>malloc(max(n, 1) * sizeof(int64_t))
    try:
        for i in range(n):
            st = test[i]
            op = st[0]
            if op == OP_CONST:
                buf[i] = <int64_t>st[1]
            elif op == OP_ADD:
                buf[i] = _wadd(buf[<Py_ssize_t>st[1]], buf[<Py_ssize_t>st[2]])
            elif op == OP_SUB:
                buf[i] = _wsub(buf[<Py_ssize_t>st[1]], buf[<Py_ssize_t>st[2]])
            else:
                buf[i] = _wneg(buf[<Py_ssize_t>st[1]])
            values.append(buf[i])
    finally:
        free(buf)
    return values


def branch_distances(int relop, int64_t v, int64_t k):
    cdef double dt, df
    _distances(relop, v, k, &dt, &df)
    return dt, df


cdef class CompiledSubject:
    cdef int64_t* slot
    cdef int* relop
    cdef int64_t* const_
    cdef Py_ssize_t* parent
    cdef int* pout
    cdef int64_t* values
    cdef Py_ssize_t values_cap
    cdef int* state
    cdef int* outcome
    cdef double* d_true
    cdef double* d_false
    cdef int64_t* level
    cdef double* nu_dec
    cdef readonly Py_ssize_t n_nodes
    cdef readonly Py_ssize_t n_goals

    def __cinit__(self, slots, relops, consts, parents, parent_outcomes):
        cdef Py_ssize_t n = len(slots)
        cdef Py_ssize_t i
        cdef Py_ssize_t m = max(n, 1)
        self.n_nodes = n
        self.n_goals = 2 * n
        self.slot = <int64_t*>malloc(m * sizeof(int64_t))
        self.relop = <int*>malloc(m * sizeof(int))
        self.const_ = <int64_t*>malloc(m * sizeof(int64_t))
        self.parent = <Py_ssize_t*>malloc(m * sizeof(Py_ssize_t))
        self.pout = <int*>malloc(m * sizeof(int))
        self.state = <int*>malloc(m * sizeof(int))
        self.outcome = <int*>malloc(m * sizeof(int))
        self.d_true = <double*>malloc(m * sizeof(double))
        self.d_false = <double*>malloc(m * sizeof(double))
        self.level = <int64_t*>malloc(m * sizeof(int64_t))
        self.nu_dec = <double*>malloc(m * sizeof(double))
        self.values_cap = 128
        self.values = <int64_t*>malloc(self.values_cap * sizeof(int64_t))
        if (self.slot == NULL or self.relop == NULL or self.const_ == NULL or self.parent == NULL
                or self.pout == NULL or self.state == NULL or self.outcome == NULL or self.d_true == NULL
                or self.d_false == NULL or self.level == NULL or self.nu_dec == NULL or self.values == NULL):
            raise MemoryError()
        for i in range(n):
            self.slot[i] = slots[i]
            self.relop[i] = relops[i]
            self.const_[i] = consts[i]
            self.parent[i] = parents[i]
            self.pout[i] = parent_outcomes[i]
            if self.parent[i] >= i:
                raise ValueError("nodes must be topologically ordered")

    def __dealloc__(self):
        free(self.slot); free(self.relop); free(self.const_); free(self.parent); free(self.pout)
        free(self.state); free(self.outcome); free(self.d_true); free(self.d_false)
        free(self.level); free(self.nu_dec); free(self.values)

    @property
    def slots(self):
        return [self.slot[i] for i in range(self.n_nodes)]

    @property
    def relops(self):
        return [self.relop[i] for i in range(self.n_nodes)]

    @property
    def consts(self):
        return [self.const_[i] for i in range(self.n_nodes)]

    @property
    def parents(self):
        return [self.parent[i] for i in range(self.n_nodes)]

    @property
    def parent_outcomes(self):
        return [self.pout[i] for i in range(self.n_nodes)]

    def __reduce__(self):
        return (CompiledSubject, (self.slots, self.relops, self.consts, self.parents, self.parent_outcomes))

    cdef void _load(self, tuple test) except *:
        cdef Py_ssize_t length = PyTuple_GET_SIZE(test)
        cdef Py_ssize_t i
        cdef tuple st
        cdef int op
        cdef int64_t* grown
        if length > self.values_cap:
            grown = <int64_t*>realloc(self.values, length * sizeof(int64_t))
            if grown == NULL:
                raise MemoryError()
            self.values = grown
            self.values_cap = length
        for i in range(length):
            st = <tuple>PyTuple_GET_ITEM(test, i)
            op = <int>(<object>PyTuple_GET_ITEM(st, 0))
            if op == OP_CONST:
                self.values[i] = <int64_t>(<object>PyTuple_GET_ITEM(st, 1))
            elif op == OP_ADD:
                self.values[i] = _wadd(self.values[<Py_ssize_t>(<object>PyTuple_GET_ITEM(st, 1))],
                                       self.values[<Py_ssize_t>(<object>PyTuple_GET_ITEM(st, 2))])
            elif op == OP_SUB:
                self.values[i] = _wsub(self.values[<Py_ssize_t>(<object>PyTuple_GET_ITEM(st, 1))],
                                       self.values[<Py_ssize_t>(<object>PyTuple_GET_ITEM(st, 2))])
            else:
                self.values[i] = _wneg(self.values[<Py_ssize_t>(<object>PyTuple_GET_ITEM(st, 1))])

    def fitness(self, test):
        if type(test) is not tuple:
            test = tuple(test)
        self._load(<tuple>test)
        cdef Py_ssize_t length = PyTuple_GET_SIZE(<tuple>test)
        cdef Py_ssize_t n = self.n_nodes
        cdef Py_ssize_t i, p, s
        cdef double dt, df, d, f
        cdef list out = [0.0] * (2 * n)
        for i in range(n):
            p = self.parent[i]
            if p < 0 or (self.state[p] == 1 and self.outcome[p] == self.pout[i]):
                s = self.slot[i]
                if s < length:
                    _distances(self.relop[i], self.values[s], self.const_[i], &dt, &df)
                    self.state[i] = 1
                    self.outcome[i] = 1 if dt == 0.0 else 0
                    self.d_true[i] = dt
                    self.d_false[i] = df
                    out[2 * i] = dt / (dt + 1.0)
                    out[2 * i + 1] = df / (df + 1.0)
                else:
                    self.state[i] = 2
                    out[2 * i] = 1.0
                    out[2 * i + 1] = 1.0
            else:
                if self.state[p] == 0:
                    self.level[i] = self.level[p] + 1
                    self.nu_dec[i] = self.nu_dec[p]
                else:
                    self.level[i] = 1
                    if self.state[p] == 2:
                        self.nu_dec[i] = 1.0
                    else:
                        d = self.d_true[p] if self.pout[i] == 1 else self.d_false[p]
                        self.nu_dec[i] = d / (d + 1.0)
                self.state[i] = 0
                f = <double>self.level[i] + self.nu_dec[i]
                out[2 * i] = f
                out[2 * i + 1] = f
        return out


def nondominated_ranks(matrix):
    cdef double[:, ::1] m = np.ascontiguousarray(matrix, dtype=np.float64)
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t k = m.shape[1]
    ranks_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] ranks = ranks_arr
    if n == 0:
        return ranks_arr
    # dominance lists as a dense n x n byte matrix: dom[p, q] = 1 iff p dominates q
    dom_arr = np.zeros((n, n), dtype=np.uint8)
    cdef unsigned char[:, ::1] dom = dom_arr
    counts_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] counts = counts_arr
    cdef Py_ssize_t p, q, j
    cdef bint p_le, q_le, strict_p, strict_q
    cdef double a, b
    for p in range(n):
        for q in range(p + 1, n):
            p_le = True; q_le = True; strict_p = False; strict_q = False
            for j in range(k):
                a = m[p, j]; b = m[q, j]
                if a < b:
                    q_le = False; strict_p = True
                elif b < a:
                    p_le = False; strict_q = True
                if not p_le and not q_le:
                    break
            if p_le and strict_p:
                dom[p, q] = 1
                counts[q] += 1
            elif q_le and strict_q:
                dom[q, p] = 1
                counts[p] += 1
    front_arr = np.empty(n, dtype=np.int64)
    next_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] front = front_arr
    cdef int64_t[::1] nxt = next_arr
    cdef Py_ssize_t fsize = 0, nsize, idx
    cdef int64_t rank = 0
    for p in range(n):
        if counts[p] == 0:
            front[fsize] = p
            fsize += 1
    while fsize > 0:
        nsize = 0
        for idx in range(fsize):
            p = front[idx]
            ranks[p] = rank
            for q in range(n):
                if dom[p, q]:
                    counts[q] -= 1
                    if counts[q] == 0:
                        nxt[nsize] = q
                        nsize += 1
        front, nxt = nxt, front
        fsize = nsize
        rank += 1
    return ranks_arr


def shift_refs(list stmts, Py_ssize_t start, long long threshold, long long delta, make):
    cdef Py_ssize_t q, n = len(stmts)
    cdef tuple t
    cdef long long op, a, b, na, nb
    for q in range(start, n):
        t = <tuple>stmts[q]
        op = t[0]
        if op == OP_CONST:
            continue
        a = t[1]
        b = t[2]
        na = a + delta if a >= threshold else a
        nb = b + delta if op != OP_NEG and b >= threshold else b
        if na != a or nb != b:
            stmts[q] = make((op, na, nb))


def invalid_refs(list stmts, Py_ssize_t start):
    cdef Py_ssize_t q, n = len(stmts)
    cdef tuple t
    cdef long long op, a, b
    cdef list out = []
    if start < 0:
        start = 0
    for q in range(start, n):
        t = <tuple>stmts[q]
        op = t[0]
        if op == OP_CONST:
            continue
        a = t[1]
        b = t[2]
        if a >= q or a < 0 or (op != OP_NEG and (b >= q or b < 0)):
            out.append(q)
    return out
