"""Slow reference implementations the real modules are checked against.

Everything here favors the most literal formulation available: explicit
loops over placements, pairwise distance minima, dense solves of the full
kriging system.  None of it shares code with the package.
"""

from __future__ import annotations

import numpy as np


def brute_pattern_counts(values2d, k, offsets, lag):
    """Count every pattern code by walking all placements one by one."""
    ny, nx = values2d.shape
    n = len(offsets)
    counts = np.zeros(k**n, dtype=np.int64)
    for y in range(ny):
        for x in range(nx):
            code = 0
            weight = 1
            ok = True
            for dx, dy in offsets:
                px, py = x + dx * lag, y + dy * lag
                if not (0 <= px < nx and 0 <= py < ny):
                    ok = False
                    break
                code += int(values2d[py, px]) * weight
                weight *= k
            if ok:
                counts[code] += 1
    return counts


def brute_placements(shape, offsets, lag):
    ny, nx = shape
    total = 0
    for y in range(ny):
        for x in range(nx):
            if all(
                0 <= x + dx * lag < nx and 0 <= y + dy * lag < ny
                for dx, dy in offsets
            ):
                total += 1
    return total


def brute_signed_distance(member2d):
    """Signed distance by pairwise minimum over all opposite cells."""
    member2d = np.asarray(member2d, dtype=bool)
    ny, nx = member2d.shape
    ys, xs = np.mgrid[0:ny, 0:nx]
    inside = np.column_stack([xs[member2d], ys[member2d]]).astype(float)
    outside = np.column_stack([xs[~member2d], ys[~member2d]]).astype(float)
    if inside.size == 0 or outside.size == 0:
        raise ValueError("need both memberships present")
    out = np.empty((ny, nx))
    for y in range(ny):
        for x in range(nx):
            opp = outside if member2d[y, x] else inside
            d = np.sqrt(((opp - (x, y)) ** 2).sum(axis=1)).min()
            out[y, x] = d if member2d[y, x] else -d
    return out


def dense_ok_solve(coords, target, cov):
    """Full ordinary-kriging system assembled entry by entry."""
    m = len(coords)
    a = np.zeros((m + 1, m + 1))
    for i in range(m):
        for j in range(m):
            h = np.hypot(
                coords[i][0] - coords[j][0], coords[i][1] - coords[j][1]
            )
            a[i, j] = cov(h)
        a[i, m] = 1.0
        a[m, i] = 1.0
    b = np.zeros(m + 1)
    for i in range(m):
        b[i] = cov(np.hypot(coords[i][0] - target[0], coords[i][1] - target[1]))
    b[m] = 1.0
    sol = np.linalg.solve(a, b)
    return sol[:m], sol[m]


def brute_event_counts(ti2d, k, offsets, event):
    """Focal-category counts over full-template placements matching an event.

    ``event`` aligns with ``offsets``; None entries are wildcards.  Only
    placements where the whole template is in bounds participate, matching
    how the pattern database is populated.
    """
    ny, nx = ti2d.shape
    counts = np.zeros(k, dtype=np.int64)
    for y in range(ny):
        for x in range(nx):
            if not all(
                0 <= x + dx < nx and 0 <= y + dy < ny for dx, dy in offsets
            ):
                continue
            match = True
            for (dx, dy), want in zip(offsets, event):
                if want is not None and int(ti2d[y + dy, x + dx]) != want:
                    match = False
                    break
            if match:
                counts[int(ti2d[y, x])] += 1
    return counts


def brute_blocks(values2d, bx, by, k, category):
    """Majority and proportion upscaling by looping over (possibly ragged)
    blocks; majority ties resolve to the lowest code."""
    ny, nx = values2d.shape
    nbx = -(-nx // bx)
    nby = -(-ny // by)
    maj = np.zeros((nby, nbx), dtype=np.int64)
    prop = np.zeros((nby, nbx))
    for jy in range(nby):
        for jx in range(nbx):
            cells = values2d[jy * by : (jy + 1) * by, jx * bx : (jx + 1) * bx]
            tallies = [int((cells == c).sum()) for c in range(k)]
            maj[jy, jx] = int(np.argmax(tallies))
            prop[jy, jx] = tallies[category] / cells.size
    return maj, prop
