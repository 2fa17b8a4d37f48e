"""Brute-force reference implementations used as test oracles.

Nothing here imports the search or collision code under test.
"""

import itertools
import math
from collections import deque

import numpy as np


def simple_paths(edges, src, dst):
    """All simple paths src->dst as (cost, nodes); edges are (u, v, w) undirected."""
    adj = {}
    for u, v, w in edges:
        adj.setdefault(u, []).append((v, w))
        adj.setdefault(v, []).append((u, w))
    out = []

    def walk(node, seen, path, cost):
        if node == dst:
            out.append((cost, tuple(path)))
            return
        for nxt, w in adj.get(node, []):
            if nxt not in seen:
                seen.add(nxt)
                path.append(nxt)
                walk(nxt, seen, path, cost + w)
                path.pop()
                seen.remove(nxt)

    if src == dst:
        return [(0.0, (src,))]
    walk(src, {src}, [src], 0.0)
    return out


def best_path(edges, src, dst, tol=1e-9):
    """Minimum by (cost within tol, hops, lexicographic nodes), or None."""
    paths = simple_paths(edges, src, dst)
    if not paths:
        return None
    lo = min(c for c, _ in paths)
    tied = [p for p in paths if p[0] <= lo + tol]
    return min(tied, key=lambda p: (len(p[1]), p[1]))


def nearest_index(points, q, tol=1e-9):
    """Index of the nearest row (first on ties) by plain Python loop."""
    best, best_d = None, math.inf
    for i, p in enumerate(points):
        d = math.dist(p, q)
        if d < best_d - tol:
            best, best_d = i, d
    return best


def point_hits_voxels(p, occupied, origin, res, radius):
    """True when a ball at p touches any occupied voxel cube (loop over voxels)."""
    for ijk in occupied:
        lo = [origin[k] + ijk[k] * res for k in range(3)]
        hi = [c + res for c in lo]
        gap = [max(lo[k] - p[k], 0.0, p[k] - hi[k]) for k in range(3)]
        if math.sqrt(sum(g * g for g in gap)) <= radius:
            return True
    return False


def sampled_collision_free(occupied, origin, res, a, b, radius, step):
    """Fine-step sampling oracle for a swept-sphere segment.

    Samples the segment every ``step`` metres and tests each sample ball
    against every occupied voxel cube.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if not len(occupied):
        return True
    n = max(1, math.ceil(np.linalg.norm(b - a) / step))
    pts = a[None, :] + (b - a)[None, :] * (np.arange(n + 1)[:, None] / n)
    lo = np.asarray(origin, float)[None, :] + np.asarray(occupied, float) * res
    hi = lo + res
    gap = np.maximum(np.maximum(lo[None] - pts[:, None], pts[:, None] - hi[None]), 0.0)
    return bool(np.sqrt((gap * gap).sum(axis=2)).min() > radius)


def voxel_reachable(free, start, goal):
    """26-connected BFS over a boolean free mask."""
    if not free[start] or not free[goal]:
        return False
    shape = free.shape
    seen = {start}
    q = deque([start])
    offsets = [o for o in itertools.product((-1, 0, 1), repeat=3) if any(o)]
    while q:
        c = q.popleft()
        if c == goal:
            return True
        for o in offsets:
            n = (c[0] + o[0], c[1] + o[1], c[2] + o[2])
            if all(0 <= n[k] < shape[k] for k in range(3)) and n not in seen and free[n]:
                seen.add(n)
                q.append(n)
    return False


def ranks(xs):
    """Average ranks (1-based) with ties sharing the mean rank."""
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    r = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        for k in range(i, j + 1):
            r[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return r


def spearman(xs, ys):
    rx, ry = ranks(xs), ranks(ys)
    mx, my = sum(rx) / len(rx), sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    return num / den
