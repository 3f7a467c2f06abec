"""Boolean saturation kernels for pushdown reachability.

Both paths compute the least relation Q over states that is reflexive,
transitive, contains every plain move, and contains (x, w) whenever
x --push(a)--> y, (y, z) in Q and z --pop(a)--> w.

The numba path is used for systems with at least ``NUMBA_MIN_STATES``
states unless ``UTC_DISABLE_NUMBA=1`` is set or numba is missing. Smaller
systems go to the numpy path (boolean matrix products), which finishes
before the compiled kernel could even be loaded from its cache.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("UTC_DISABLE_NUMBA", "0") not in ("1", "true", "yes")
NUMBA_MIN_STATES = 48


def _bool_mm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.int32) @ b.astype(np.int32)) > 0


def saturate_numpy(plain: np.ndarray, push: np.ndarray, pop: np.ndarray) -> np.ndarray:
    n = plain.shape[0]
    q = plain.copy() | np.eye(n, dtype=bool)
    while True:
        while True:
            nq = q | _bool_mm(q, q)
            if (nq == q).all():
                break
            q = nq
        nq = q.copy()
        for a in range(push.shape[0]):
            nq |= _bool_mm(_bool_mm(push[a], q), pop[a])
        if (nq == q).all():
            return q
        q = nq


if numba is not None:

    @numba.njit(cache=True)
    def _saturate_jit(plain, push, pop):  # pragma: no cover - compiled
        n = plain.shape[0]
        q = plain.copy()
        for i in range(n):
            q[i, i] = True
        changed = True
        while changed:
            changed = False
            for k in range(n):
                for i in range(n):
                    if q[i, k]:
                        for j in range(n):
                            if q[k, j]:
                                q[i, j] = True
            for a in range(push.shape[0]):
                for x in range(n):
                    for y in range(n):
                        if push[a, x, y]:
                            for z in range(n):
                                if q[y, z]:
                                    for w in range(n):
                                        if pop[a, z, w] and not q[x, w]:
                                            q[x, w] = True
                                            changed = True
        return q

else:  # pragma: no cover
    _saturate_jit = None


def saturate_numba(plain: np.ndarray, push: np.ndarray, pop: np.ndarray) -> np.ndarray:
    if _saturate_jit is None:  # pragma: no cover
        raise RuntimeError("numba is not available")
    return _saturate_jit(plain, push, pop)


def saturate_matrix(plain: np.ndarray, push: np.ndarray, pop: np.ndarray, use_numba: bool | None = None) -> np.ndarray:
    if use_numba is None:
        use_numba = USE_NUMBA and plain.shape[0] >= NUMBA_MIN_STATES
    if use_numba:
        return saturate_numba(plain, push, pop)
    return saturate_numpy(plain, push, pop)
