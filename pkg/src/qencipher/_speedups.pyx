# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the two hot loops (see _kernels_py for the reference semantics)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

ctypedef double complex cplx

cdef enum:
    GATE1 = 0
    GATE2 = 1
    MEASURE = 2
    COND1 = 3
    RESET = 4


cdef inline double _abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef void _step(cplx[:, :] src, cplx[:, :] dst, int kind, int a, int b,
                cplx[:, :] m, int n_wires) noexcept nogil:
    cdef Py_ssize_t n_in = src.shape[0]
    cdef Py_ssize_t dim = src.shape[1]
    cdef Py_ssize_t k, i, j
    cdef Py_ssize_t ma = (<Py_ssize_t>1) << (n_wires - 1 - a)
    cdef Py_ssize_t mb
    cdef cplx x0, x1
    if kind == 0:
        for k in range(n_in):
            for i in range(dim):
                if (i & ma) == 0:
                    j = i | ma
                    x0 = src[k, i]
                    x1 = src[k, j]
                    dst[k, i] = m[0, 0] * x0 + m[0, 1] * x1
                    dst[k, j] = m[1, 0] * x0 + m[1, 1] * x1
    else:
        mb = (<Py_ssize_t>1) << (n_wires - 1 - b)
        for k in range(n_in):
            for i in range(dim):
                if (i & ma) != 0:
                    dst[k, i ^ mb] = src[k, i]
                else:
                    dst[k, i] = src[k, i]


cdef double _score(cplx[:, :] st, cplx[:, :, :] proj, double[:] w, Py_ssize_t env) noexcept nogil:
    cdef Py_ssize_t n_in = st.shape[0]
    cdef Py_ssize_t rank = proj.shape[1]
    cdef Py_ssize_t k, r, e, p
    cdef cplx amp
    cdef double total = 0.0
    for k in range(n_in):
        for r in range(rank):
            for e in range(env):
                amp = 0
                for p in range(4):
                    amp = amp + proj[k, r, p].conjugate() * st[k, p * env + e]
                total += w[k] * _abs2(amp)
    return total


def probe_dfs(int[:] kinds, int[:] q0, int[:] q1, cplx[:, :, :] mats, int n_wires,
              int max_len, bint no_repeat, cplx[:, :] init, cplx[:, :, :] proj,
              double[:] weights, Py_ssize_t n_words):
    cdef Py_ssize_t n_gates = kinds.shape[0]
    cdef Py_ssize_t dim = init.shape[1]
    cdef Py_ssize_t env = dim // 4
    words_arr = np.full((n_words, max(max_len, 1)), -1, dtype=np.int32)
    values_arr = np.zeros(n_words, dtype=np.float64)
    if n_gates == 0 or max_len == 0:
        return words_arr[:0], values_arr[:0]
    states_arr = np.empty((max_len + 1, init.shape[0], dim), dtype=np.complex128)
    states_arr[0] = np.asarray(init)
    cdef cplx[:, :, :] states = states_arr
    cdef int[:, :] words = words_arr
    cdef double[:] values = values_arr
    cdef int[:] choice = np.full(max_len, -1, dtype=np.int32)
    cdef int depth = 0
    cdef int g, d
    cdef Py_ssize_t row = 0
    with nogil:
        while True:
            g = choice[depth] + 1
            if no_repeat and depth > 0 and g == choice[depth - 1]:
                g = g + 1
            if g >= n_gates:
                choice[depth] = -1
                if depth == 0:
                    break
                depth = depth - 1
                continue
            choice[depth] = g
            _step(states[depth], states[depth + 1], kinds[g], q0[g], q1[g], mats[g], n_wires)
            for d in range(depth + 1):
                words[row, d] = choice[d]
            values[row] = _score(states[depth + 1], proj, weights, env)
            row = row + 1
            if depth + 1 < max_len:
                depth = depth + 1
    return words_arr, values_arr


cdef void _apply1(cplx[:] psi, cplx[:, :] m, Py_ssize_t ma) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef cplx x0, x1
    for i in range(psi.shape[0]):
        if (i & ma) == 0:
            j = i | ma
            x0 = psi[i]
            x1 = psi[j]
            psi[i] = m[0, 0] * x0 + m[0, 1] * x1
            psi[j] = m[1, 0] * x0 + m[1, 1] * x1


cdef int _measure(cplx[:] psi, Py_ssize_t ma, double u) noexcept nogil:
    cdef Py_ssize_t i
    cdef double p1 = 0.0
    cdef double norm
    cdef int outcome
    for i in range(psi.shape[0]):
        if (i & ma) != 0:
            p1 += _abs2(psi[i])
    outcome = 1 if u < p1 else 0
    norm = sqrt(p1 if outcome else 1.0 - p1)
    if norm <= 0:
        norm = 1.0
    for i in range(psi.shape[0]):
        if ((i & ma) != 0) == (outcome == 1):
            psi[i] = psi[i] / norm
        else:
            psi[i] = 0
    return outcome


def run_trajectories(int[:, :] ops, int[:, :] mat_idx, cplx[:, :, :] mats, cplx[:] psi0,
                     double[:, :] uniforms):
    cdef Py_ssize_t n_trials = mat_idx.shape[0]
    cdef Py_ssize_t n_ops = ops.shape[0]
    cdef Py_ssize_t dim = psi0.shape[0]
    cdef int n_qubits = 0
    while ((<Py_ssize_t>1) << n_qubits) < dim:
        n_qubits += 1
    out_arr = np.full((n_trials, n_ops), -1, dtype=np.int8)
    cdef signed char[:, :] out = out_arr
    psi_arr = np.empty(dim, dtype=np.complex128)
    cdef cplx[:] psi = psi_arr
    cdef Py_ssize_t t, k, i, j, ma, mb, base
    cdef int op, a, b, m
    cdef cplx v0, v1, v2, v3
    cdef cplx[:, :] g
    with nogil:
        for t in range(n_trials):
            for i in range(dim):
                psi[i] = psi0[i]
            for k in range(n_ops):
                op = ops[k, 0]
                a = ops[k, 1]
                b = ops[k, 2]
                ma = (<Py_ssize_t>1) << (n_qubits - 1 - a)
                if op == GATE1:
                    _apply1(psi, mats[mat_idx[t, k]], ma)
                elif op == COND1:
                    _apply1(psi, mats[mat_idx[t, k] + out[t, b]], ma)
                elif op == GATE2:
                    mb = (<Py_ssize_t>1) << (n_qubits - 1 - b)
                    g = mats[mat_idx[t, k]]
                    for base in range(dim):
                        if (base & ma) == 0 and (base & mb) == 0:
                            v0 = psi[base]
                            v1 = psi[base | mb]
                            v2 = psi[base | ma]
                            v3 = psi[base | ma | mb]
                            psi[base] = g[0, 0] * v0 + g[0, 1] * v1 + g[0, 2] * v2 + g[0, 3] * v3
                            psi[base | mb] = g[1, 0] * v0 + g[1, 1] * v1 + g[1, 2] * v2 + g[1, 3] * v3
                            psi[base | ma] = g[2, 0] * v0 + g[2, 1] * v1 + g[2, 2] * v2 + g[2, 3] * v3
                            psi[base | ma | mb] = g[3, 0] * v0 + g[3, 1] * v1 + g[3, 2] * v2 + g[3, 3] * v3
                elif op == MEASURE or op == RESET:
                    m = _measure(psi, ma, uniforms[t, k])
                    out[t, k] = m
                    if op == RESET and m == 1:
                        for i in range(dim):
                            if (i & ma) != 0:
                                j = i ^ ma
                                psi[j] = psi[i]
                                psi[i] = 0
    return out_arr
