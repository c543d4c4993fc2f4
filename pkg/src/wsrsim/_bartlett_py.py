"""Pure NumPy Bartlett kernel, used when the compiled extension is absent."""

import numpy as np

# cells per block; bounds the (block, T) complex temporary to ~64 MB at T=1001
_BLOCK = 4096


def bartlett_power(h2, disp, directions, order=2):
    """|sum_t h2[t] exp(-2 pi i order u.disp[t])|^2 for every direction u.

    Same contract as the compiled kernel. Sums go through BLAS rather than
    compensated accumulation.
    """
    h2 = np.asarray(h2, dtype=complex)
    disp = np.asarray(disp, dtype=float)
    directions = np.asarray(directions, dtype=float)
    if disp.shape != (h2.shape[0], 3) or directions.ndim != 2 or directions.shape[1] != 3:
        raise ValueError("shape mismatch between h2, disp and directions")
    out = np.empty(directions.shape[0])
    for start in range(0, directions.shape[0], _BLOCK):
        u = directions[start : start + _BLOCK]
        cycles = order * (u @ disp.T)
        cycles -= np.floor(cycles)
        out[start : start + _BLOCK] = np.abs(np.exp(-2j * np.pi * cycles) @ h2) ** 2
    return out
