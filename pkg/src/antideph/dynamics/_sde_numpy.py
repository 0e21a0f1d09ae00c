"""Pure-NumPy Euler-Maruyama kernel (fallback for the Cython extension).

The Euler step is linear in the vectorized state,

    v_{k+1} = E v_k + dW_k * S v_k,

with E = 1 + dt*M (M the vectorized generator) and S the vectorized
noise coupling -sqrt(2*gamma)*{L_s, .}. The kernel advances a chunk of
trajectories at once with batched matvecs.
"""

from __future__ import annotations

import numpy as np


def run_chunk(e_mat, s_mat, v0, dw, rec_idx):
    """Advance ``dw.shape[0]`` trajectories; record at step indices ``rec_idx``.

    Returns a complex array of shape (n_traj, len(rec_idx), dim^2).
    """
    n_traj, n_steps = dw.shape
    d = v0.size
    v = np.broadcast_to(v0, (n_traj, d)).astype(complex).copy()
    out = np.empty((n_traj, len(rec_idx), d), dtype=complex)
    e_t = np.ascontiguousarray(e_mat.T)
    s_t = np.ascontiguousarray(s_mat.T)
    r = 0
    if rec_idx[r] == 0:
        out[:, r] = v
        r += 1
    for k in range(n_steps):
        v = v @ e_t + dw[:, k, None] * (v @ s_t)
        if r < len(rec_idx) and rec_idx[r] == k + 1:
            out[:, r] = v
            r += 1
    return out
