"""Hungarian (Kuhn-Munkres) assignment with dual potentials, O(n^3)."""
from __future__ import annotations

import numpy as np


def assign(cost, maximize: bool = False) -> np.ndarray:
    """Optimal assignment for a square cost matrix.

    Returns ``col`` with ``col[i]`` the column assigned to row ``i``,
    minimizing (or maximizing) ``sum_i cost[i, col[i]]``.
    """
    c = np.array(cost, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("cost matrix must be square")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix must be finite")
    if maximize:
        c = -c
    n = c.shape[0]
    if n == 0:
        return np.zeros(0, dtype=int)
    # 1-based arrays; column 0 is a virtual source.
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=int)  # match[col] = row
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            free = ~used[1:]
            cur = c[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            u[match[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    col = np.empty(n, dtype=int)
    for j in range(1, n + 1):
        col[match[j] - 1] = j - 1
    return col
