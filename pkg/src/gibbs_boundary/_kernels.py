"""Compiled inner loops for cubic B-spline evaluation and pixel loss updates.

Every routine here works on pixels pre-sorted by polar angle, so the support
of one basis function is a contiguous index range.  Loss bookkeeping is kept
as two integer counts, ``A = #{y <= z, inside}`` and ``B = #{y > z, outside}``,
which makes the cached total loss ``c*A + k*B`` exact.
"""

import math

import numpy as np
from numba import njit

ORDER = 4


@njit(cache=True)
def find_span(knots, x):
    """Index ``s`` with ``knots[s] <= x < knots[s+1]`` restricted to ``[0, 2pi]``."""
    hi = knots.shape[0] - 5  # last valid span is D + 1
    s = np.searchsorted(knots, x, side="right") - 1
    if s < 3:
        s = 3
    if s > hi:
        s = hi
    return s


@njit(cache=True)
def basis_at(knots, s, x, out):
    """Four nonzero cubic basis values at ``x`` in span ``s`` (de Boor triangle)."""
    left1 = x - knots[s]
    left2 = x - knots[s - 1]
    left3 = x - knots[s - 2]
    right1 = knots[s + 1] - x
    right2 = knots[s + 2] - x
    right3 = knots[s + 3] - x
    # degree 1
    temp = 1.0 / (right1 + left1)
    n0 = right1 * temp
    n1 = left1 * temp
    # degree 2
    temp = n0 / (right1 + left2)
    m0 = right1 * temp
    saved = left2 * temp
    temp = n1 / (right2 + left1)
    m1 = saved + right2 * temp
    m2 = left1 * temp
    # degree 3
    temp = m0 / (right1 + left3)
    out[0] = right1 * temp
    saved = left3 * temp
    temp = m1 / (right2 + left2)
    out[1] = saved + right2 * temp
    saved = left2 * temp
    temp = m2 / (right3 + left1)
    out[2] = saved + right3 * temp
    out[3] = left1 * temp


@njit(cache=True)
def local_basis(knots, theta, span, vals):
    buf = np.empty(4)
    for i in range(theta.shape[0]):
        s = find_span(knots, theta[i])
        span[i] = s
        basis_at(knots, s, theta[i], buf)
        for q in range(4):
            vals[i, q] = buf[q]


@njit(cache=True)
def evaluate(knots, coef, theta, out):
    buf = np.empty(4)
    for i in range(theta.shape[0]):
        s = find_span(knots, theta[i])
        basis_at(knots, s, theta[i], buf)
        acc = 0.0
        for q in range(4):
            acc += coef[s - 3 + q] * buf[q]
        out[i] = acc


@njit(cache=True)
def refresh(knots, coef, theta, r, low, span, vals, gamma, inside):
    """Recompute every pixel's basis, radius and membership; return ``(A, B)``."""
    buf = np.empty(4)
    a_count = 0
    b_count = 0
    for i in range(theta.shape[0]):
        s = find_span(knots, theta[i])
        span[i] = s
        basis_at(knots, s, theta[i], buf)
        acc = 0.0
        for q in range(4):
            vals[i, q] = buf[q]
            acc += coef[s - 3 + q] * buf[q]
        gamma[i] = acc
        ins = r[i] <= acc
        inside[i] = ins
        if ins:
            if low[i]:
                a_count += 1
        elif not low[i]:
            b_count += 1
    return a_count, b_count


@njit(cache=True)
def _range_delta(coef, span, vals, r, low, inside, lo, hi, scratch_g, scratch_in):
    da = 0
    db = 0
    for i in range(lo, hi):
        s = span[i] - 3
        g = coef[s] * vals[i, 0] + coef[s + 1] * vals[i, 1] + coef[s + 2] * vals[i, 2] + coef[s + 3] * vals[i, 3]
        ins = r[i] <= g
        scratch_g[i] = g
        scratch_in[i] = ins
        if ins != inside[i]:
            if low[i]:
                da += 1 if ins else -1
            else:
                db += -1 if ins else 1
    return da, db


@njit(cache=True)
def coordinate_sweep(
    coef, closure, range_lo, range_hi,
    span, vals, r, low, gamma, inside, counts,
    steps, normals, uniforms, temps, step_sd,
    c, k, mu_beta, closure_prior, best_coef, best_energy,
):
    """Single-coefficient Metropolis updates with closure re-solved each time.

    ``steps[t]`` is the coefficient index proposed at step ``t``.  The target
    is ``exp(-(c*A + k*B) / temps[t] - mu_beta * sum(coef))``, where the
    closure coefficient's prior term is weighted by ``closure_prior``.  ``counts`` and
    the pixel caches are updated in place on acceptance.  When ``best_coef``
    is non-empty the lowest-loss coefficient vector visited is tracked there.
    Returns the number of accepted proposals.
    """
    track_best = best_coef.shape[0] > 0
    scratch_g = np.empty_like(gamma)
    scratch_in = np.empty_like(inside)
    accepted = 0
    for t in range(steps.shape[0]):
        j = steps[t]
        old_j = coef[j]
        new_j = old_j + step_sd * normals[t]
        if new_j <= 0.0:
            continue
        d = new_j - old_j
        old_0 = coef[0]
        coef[j] = new_j
        new_0 = old_0
        if closure[j] != 0.0:
            new_0 = 0.0
            for q in range(1, coef.shape[0]):
                new_0 += closure[q] * coef[q]
        if new_0 <= 0.0:
            coef[j] = old_j
            continue
        d0 = new_0 - old_0
        coef[0] = new_0

        lo1 = range_lo[j]
        hi1 = range_hi[j]
        lo2 = 0
        hi2 = 0
        if closure[j] != 0.0:
            lo2 = range_lo[0]
            hi2 = range_hi[0]
            if lo2 <= hi1 and lo1 <= hi2:
                lo1 = min(lo1, lo2)
                hi1 = max(hi1, hi2)
                hi2 = lo2
        da, db = _range_delta(coef, span, vals, r, low, inside, lo1, hi1, scratch_g, scratch_in)
        if hi2 > lo2:
            da2, db2 = _range_delta(coef, span, vals, r, low, inside, lo2, hi2, scratch_g, scratch_in)
            da += da2
            db += db2

        delta = -(c * da + k * db) / temps[t] - mu_beta * (d + closure_prior * d0)
        if delta >= 0.0 or uniforms[t] < math.exp(delta):
            accepted += 1
            for i in range(lo1, hi1):
                gamma[i] = scratch_g[i]
                inside[i] = scratch_in[i]
            for i in range(lo2, hi2):
                gamma[i] = scratch_g[i]
                inside[i] = scratch_in[i]
            counts[0] += da
            counts[1] += db
            if track_best:
                energy = c * counts[0] + k * counts[1]
                if energy < best_energy[0]:
                    best_energy[0] = energy
                    for q in range(coef.shape[0]):
                        best_coef[q] = coef[q]
        else:
            coef[j] = old_j
            coef[0] = old_0
    return accepted
