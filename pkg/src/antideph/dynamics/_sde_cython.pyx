# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Euler-Maruyama kernel.

Same contract as ``_sde_numpy.run_chunk``: the Euler step is linear in
the vectorized state, v <- E v + dW * S v, and trajectories in a chunk
are advanced independently.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def run_chunk(cnp.ndarray[cnp.complex128_t, ndim=2] e_mat,
              cnp.ndarray[cnp.complex128_t, ndim=2] s_mat,
              cnp.ndarray[cnp.complex128_t, ndim=1] v0,
              cnp.ndarray[cnp.float64_t, ndim=2] dw,
              cnp.ndarray[cnp.int64_t, ndim=1] rec_idx):
    cdef Py_ssize_t n_traj = dw.shape[0]
    cdef Py_ssize_t n_steps = dw.shape[1]
    cdef Py_ssize_t d = v0.shape[0]
    cdef Py_ssize_t n_rec = rec_idx.shape[0]

    out_arr = np.empty((n_traj, n_rec, d), dtype=np.complex128)
    # map step index -> recording slot (-1: not recorded)
    slot_arr = np.full(n_steps + 1, -1, dtype=np.int64)
    cdef Py_ssize_t i
    for i in range(n_rec):
        slot_arr[rec_idx[i]] = i

    cdef cnp.complex128_t[:, :, :] out = out_arr
    cdef cnp.int64_t[:] slot = slot_arr
    cdef cnp.complex128_t[:, :] em = e_mat
    cdef cnp.complex128_t[:, :] sm = s_mat
    cdef cnp.complex128_t[:] vinit = v0
    cdef cnp.float64_t[:, :] noise = dw

    cdef cnp.complex128_t[:] v = np.empty(d, dtype=np.complex128)
    cdef cnp.complex128_t[:] w = np.empty(d, dtype=np.complex128)
    cdef Py_ssize_t t, k, a, b
    cdef double s
    cdef cnp.complex128_t acc

    for t in range(n_traj):
        for a in range(d):
            v[a] = vinit[a]
        if slot[0] >= 0:
            for a in range(d):
                out[t, slot[0], a] = v[a]
        for k in range(n_steps):
            s = noise[t, k]
            for a in range(d):
                acc = 0
                for b in range(d):
                    acc = acc + (em[a, b] + s * sm[a, b]) * v[b]
                w[a] = acc
            for a in range(d):
                v[a] = w[a]
            if slot[k + 1] >= 0:
                for a in range(d):
                    out[t, slot[k + 1], a] = v[a]
    return out_arr
