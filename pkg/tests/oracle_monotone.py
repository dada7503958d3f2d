"""Brute-force oracles for monotone-constrained maximization.

The main tool maximizes a separable objective sum_g f_g(v_g) over
nondecreasing vectors with each v_g restricted to a finite grid. Dynamic
programming over the lattice (running prefix max across coordinates) gives
the exact lattice optimum, identical to literal enumeration but feasible
for grids of a million points. A two-pass wrapper (coarse grid, then one
local refinement) bounds the current-status profile value independently of
the ICM solver under test.
"""

import itertools

import numpy as np


def monotone_lattice_argmax(value_tables, grids):
    """Exact argmax of sum_g f_g(v_g) over v_1 <= ... <= v_m on per-axis grids.

    value_tables[g] holds f_g evaluated on sorted grids[g]. Returns
    (value, argmax vector).
    """
    m = len(grids)
    backs = [None]
    prev_best = None
    prev_grid = None
    for g in range(m):
        vals = np.asarray(value_tables[g], dtype=float)
        grid = np.asarray(grids[g], dtype=float)
        if g == 0:
            best = vals.copy()
        else:
            pm = np.maximum.accumulate(prev_best)
            at_max = prev_best >= pm
            pa = np.maximum.accumulate(
                np.where(at_max, np.arange(prev_best.size), 0)
            )
            if grid.shape == prev_grid.shape and np.array_equal(grid, prev_grid):
                idx = np.arange(grid.size)
            else:
                idx = np.searchsorted(prev_grid, grid, side="right") - 1
            carry = np.where(idx >= 0, pm[np.clip(idx, 0, None)], -np.inf)
            best = vals + carry
            backs.append((idx, pa))
        prev_best, prev_grid = best, grid
    j = int(np.argmax(prev_best))
    value = float(prev_best[j])
    chosen = [j]
    for g in range(m - 1, 0, -1):
        idx, pa = backs[g]
        chosen.append(int(pa[idx[chosen[-1]]]))
    chosen.reverse()
    argmax = np.array([grids[g][chosen[g]] for g in range(m)])
    return value, argmax


def monotone_enumeration_argmax(value_tables, grids):
    """Literal enumeration twin of the DP, for cross-checking on tiny grids."""
    best_val = -np.inf
    best_vec = None
    for combo in itertools.product(*[range(len(g)) for g in grids]):
        vec = [grids[g][j] for g, j in enumerate(combo)]
        if any(vec[i] > vec[i + 1] for i in range(len(vec) - 1)):
            continue
        val = sum(value_tables[g][j] for g, j in enumerate(combo))
        if val > best_val:
            best_val = val
            best_vec = vec
    return float(best_val), np.array(best_vec)


def _cs_tables(knots_count, gidx, delta, c, grids):
    tables = [np.zeros(len(g)) for g in grids]
    for i in range(len(c)):
        g = gidx[i]
        x = grids[g] * c[i]
        if delta[i] == 1:
            tables[g] = tables[g] + np.log(-np.expm1(-x))
        else:
            tables[g] = tables[g] - x
    return tables


def cs_grid_oracle(dataset, theta, lambda_min=1e-8, lambda_max=1e3,
                   pitch=1e-3, refine_points=2001):
    """Independent current-status profile value: coarse lattice DP, refined once.

    Pass 1 scans a shared grid of the given pitch over the clamp range
    (clamp values included exactly); pass 2 re-solves on per-coordinate
    windows of one coarse pitch around the pass-1 argmax.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    knots, gidx = np.unique(dataset.y, return_inverse=True)
    m = knots.shape[0]
    c = np.exp(dataset.z @ theta)
    delta = dataset.delta

    coarse = np.unique(np.concatenate([
        np.arange(lambda_min, lambda_max, pitch), [lambda_min, lambda_max],
    ]))
    grids = [coarse] * m
    tables = _cs_tables(m, gidx, delta, c, grids)
    _, rough = monotone_lattice_argmax(tables, grids)

    fine_grids = []
    for g in range(m):
        lo = max(lambda_min, rough[g] - pitch)
        hi = min(lambda_max, rough[g] + pitch)
        fine_grids.append(np.unique(np.concatenate([
            np.linspace(lo, hi, refine_points), [rough[g]],
        ])))
    fine_tables = _cs_tables(m, gidx, delta, c, fine_grids)
    value, argmax = monotone_lattice_argmax(fine_tables, fine_grids)
    return value, knots, argmax
