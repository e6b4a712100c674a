"""Numpy fallback for ``_kernels``; same float operations, same tie-breaks."""
from itertools import combinations, islice

import numpy as np

CHUNK = 1 << 18


def _subsets(n: int, k: int):
    it = combinations(range(n), k)
    while True:
        block = list(islice(it, CHUNK))
        if not block:
            return
        yield np.asarray(block, dtype=np.intp)


def _max3(a, b, c):
    return np.maximum(np.maximum(a, b), c)


def ptolemy_scan(D, floor):
    D = np.ascontiguousarray(D, dtype=np.float64)
    best, where, count = np.inf, (-1, -1, -1, -1, -1), 0
    for q in _subsets(D.shape[0], 4):
        i, j, k, l = q.T
        p1 = D[i, j] * D[k, l]
        p2 = D[i, k] * D[j, l]
        p3 = D[i, l] * D[j, k]
        scale = np.maximum(_max3(p1, p2, p3), floor)
        r = np.stack([((p2 + p3) - p1) / scale, ((p1 + p3) - p2) / scale, ((p1 + p2) - p3) / scale], axis=1)
        flat = int(np.argmin(r))
        row, col = divmod(flat, 3)
        if r[row, col] < best:
            best = float(r[row, col])
            where = (*(int(v) for v in q[row]), col)
        count += len(q)
    return (best, *where, count)


def triangle_scan(D, floor):
    D = np.ascontiguousarray(D, dtype=np.float64)
    best, where, count = np.inf, (-1, -1, -1, -1), 0
    for q in _subsets(D.shape[0], 3):
        i, j, k = q.T
        a, b, c = D[i, j], D[i, k], D[j, k]
        scale = np.maximum(_max3(a, b, c), floor)
        r = np.stack([((b + c) - a) / scale, ((a + c) - b) / scale, ((a + b) - c) / scale], axis=1)
        flat = int(np.argmin(r))
        row, col = divmod(flat, 3)
        if r[row, col] < best:
            best = float(r[row, col])
            where = (*(int(v) for v in q[row]), col)
        count += len(q)
    return (best, *where, count)


def circle_scan(D, order, floor):
    D = np.ascontiguousarray(D, dtype=np.float64)
    order = np.asarray(order, dtype=np.intp)
    worst, where, count = -np.inf, (-1, -1, -1, -1), 0
    for q in _subsets(len(order), 4):
        x, y, z, w = order[q].T
        p1 = D[x, y] * D[z, w]
        p2 = D[y, z] * D[w, x]
        p3 = D[x, z] * D[y, w]
        scale = np.maximum(_max3(p1, p2, p3), floor)
        r = np.abs((p1 + p2) - p3) / scale
        row = int(np.argmax(r))
        if r[row] > worst:
            worst = float(r[row])
            where = tuple(int(v) for v in q[row])
        count += len(q)
    return (worst, *where, count)
