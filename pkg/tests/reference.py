"""Independent reference constructions used as test oracles.

Nothing here goes through Pauli strings: operators are built directly in the
occupation-number basis, where bit ``p`` of a basis index is the occupation
of spin orbital ``p``.
"""
import numpy as np


def annihilator(mode: int, n_modes: int) -> np.ndarray:
    """Matrix of a_mode with the sign of every occupied lower mode."""
    dim = 1 << n_modes
    a = np.zeros((dim, dim))
    below = (1 << mode) - 1
    for s in range(dim):
        if s >> mode & 1:
            a[s ^ (1 << mode), s] = (-1) ** bin(s & below).count("1")
    return a


def fermion_matrix(constant, one_body, two_body) -> np.ndarray:
    """``c + sum h a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q`` as a dense matrix."""
    n = one_body.shape[0]
    a = [annihilator(p, n) for p in range(n)]
    ad = [m.T for m in a]
    h = constant * np.eye(1 << n)
    for p in range(n):
        for q in range(n):
            if one_body[p, q]:
                h += one_body[p, q] * ad[p] @ a[q]
    for p, q, r, s in zip(*np.nonzero(two_body)):
        h += 0.5 * two_body[p, q, r, s] * ad[p] @ ad[r] @ a[s] @ a[q]
    return h


def number_matrix(n_modes: int) -> np.ndarray:
    return np.diag([bin(s).count("1") for s in range(1 << n_modes)]).astype(float)
