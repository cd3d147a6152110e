"""Independent reference computations shared by the test modules.

Nothing here imports the package, so these serve as oracles for it.
"""

from __future__ import annotations

import math

import numpy as np

BOT = -1


def rank_mod_p(rows, p):
    """Plain Python Gaussian elimination, independent of the package."""
    M = [list(map(int, r)) for r in rows]
    rank = 0
    ncols = len(M[0]) if M else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(M)) if M[r][c] % p), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = pow(M[rank][c], -1, p)
        M[rank] = [v * inv % p for v in M[rank]]
        for r in range(len(M)):
            if r != rank and M[r][c] % p:
                f = M[r][c]
                M[r] = [(a - f * b) % p for a, b in zip(M[r], M[rank])]
        rank += 1
    return rank


def recording_closed_form(d, p, x):
    """Coefficients of R |1,p,w>|x> over the register basis (y_0..y_{d-1}, BOT).

    Written from the algebra of S O S, independent of the simulator."""
    om = np.exp(2j * np.pi / d)
    out = np.zeros(d + 1, dtype=complex)
    if x == BOT:
        out[:d] = om ** (p * np.arange(d)) / math.sqrt(d)
        return out
    v = x
    for y in range(d):
        if y == v:
            out[y] = (1 - 2 / d) * om ** (p * v) + 1 / d
        else:
            out[y] = (1 - om ** (p * y) - om ** (p * v)) / d
    out[d] = om ** (p * v) / math.sqrt(d)
    return out


def matmul_mod(a, b, p):
    """Exact integer product reduced mod p."""
    return (np.asarray(a, dtype=object) @ np.asarray(b, dtype=object)) % p
