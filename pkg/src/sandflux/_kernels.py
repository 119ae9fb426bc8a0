"""Compiled inner loops for the per-edge relaxation sweeps.

Everything here works on raw arrays so numba can compile it; the
wrapping dataclasses live in :mod:`sandflux.solver`.  An edge update
minimizes the step objective along one edge value with all others
frozen.  Only the two cells sharing the edge see that value, so the
objective change is a closed-form function of the edge value ``s``:

    dJ(s) = dt*h*(s - s0)*(R_A - R_B) + dt^2*(s - s0)^2
            + dt*h^2*(k_A*(m_A(s) - m_A(s0)) + k_B*(m_B(s) - m_B(s0)))

where ``R_A``/``R_B`` are the cell residuals before the update and
``m_C(s) = sqrt((a_C + s/2)^2 + b_C^2 + eps^2)`` is cell C's smoothed
flux magnitude as a function of the shared edge (``a_C`` is half the
opposing parallel edge value, ``b_C`` the perpendicular average).
dJ is strictly convex in ``s`` (second derivative >= 2*dt^2 > 0), so a
damped Newton iteration plus an acceptance check cannot increase the
objective.  Expressing the quadratic part through the residual
*difference* keeps the update invariant under constant shifts of the
target field, matching the continuum gauge freedom of the potential.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _dg(s, s0, rdiff, aA, aB, bA2, bB2, kA, kB, h, dt, mA0, mB0):
    # Objective change relative to the sweep-start value s0.
    d = s - s0
    pA = aA + 0.5 * s
    pB = aB + 0.5 * s
    mA = np.sqrt(pA * pA + bA2)
    mB = np.sqrt(pB * pB + bB2)
    return (dt * h * d * rdiff + dt * dt * d * d
            + dt * h * h * (kA * (mA - mA0) + kB * (mB - mB0)))


@njit(cache=True)
def _kink_init(s0, rdiff, aA, aB, kA, kB, h, dt):
    """Closed-form minimizer of the sharp (eps -> 0, b -> 0) edge model.

    Minimizes a*(s-s0) + dt^2*(s-s0)^2 + gA*|aA + s/2| + gB*|aB + s/2|
    exactly by checking the two kink locations and every consistent
    smooth piece.  Newton alone crawls when the smoothed magnitude pins
    an edge at the kink (curvature ~ 1/eps there); starting from the
    sharp model's minimizer steps across in one move.
    """
    alpha = dt * h * rdiff
    beta = dt * dt
    gA = dt * h * h * kA
    gB = dt * h * h * kB

    best_s = s0
    best_v = gA * abs(aA + 0.5 * s0) + gB * abs(aB + 0.5 * s0)
    # Kink candidates plus interior solutions for each sign pattern.
    for idx in range(6):
        if idx == 0:
            s = -2.0 * aA
        elif idx == 1:
            s = -2.0 * aB
        else:
            sgA = 1.0 if idx in (2, 3) else -1.0
            sgB = 1.0 if idx in (2, 4) else -1.0
            s = s0 - (alpha + 0.5 * (gA * sgA + gB * sgB)) / (2.0 * beta)
            pA = aA + 0.5 * s
            pB = aB + 0.5 * s
            if (pA > 0) != (sgA > 0) and pA != 0.0:
                continue
            if (pB > 0) != (sgB > 0) and pB != 0.0:
                continue
        d = s - s0
        v = (alpha * d + beta * d * d
             + gA * abs(aA + 0.5 * s) + gB * abs(aB + 0.5 * s))
        if v < best_v:
            best_v = v
            best_s = s
    return best_s


@njit(cache=True)
def _relax_edge(s0, rdiff, aA, aB, bA2, bB2, kA, kB, h, dt, omega, newton_iters):
    """Damped-Newton minimization along one edge, then over-relaxation.

    Returns the accepted new edge value.  Every accepted value has
    dJ <= 0; if no decrease can be certified the edge keeps s0.
    """
    mA0 = np.sqrt((aA + 0.5 * s0) ** 2 + bA2)
    mB0 = np.sqrt((aB + 0.5 * s0) ** 2 + bB2)
    hh = h * h
    # Start from the sharp-model minimizer if it helps; fall back to s0.
    s = _kink_init(s0, rdiff, aA, aB, kA, kB, h, dt)
    best = _dg(s, s0, rdiff, aA, aB, bA2, bB2, kA, kB, h, dt, mA0, mB0)
    if not (best <= 0.0):
        s = s0
        best = 0.0
    for _ in range(newton_iters):
        pA = aA + 0.5 * s
        pB = aB + 0.5 * s
        mA = np.sqrt(pA * pA + bA2)
        mB = np.sqrt(pB * pB + bB2)
        g1 = (dt * h * rdiff + 2.0 * dt * dt * (s - s0)
              + 0.5 * dt * hh * (kA * pA / mA + kB * pB / mB))
        if g1 == 0.0:
            break
        g2 = (2.0 * dt * dt
              + 0.25 * dt * hh * (kA * bA2 / (mA * mA * mA)
                                  + kB * bB2 / (mB * mB * mB)))
        step = -g1 / g2
        cand = s + step
        val = _dg(cand, s0, rdiff, aA, aB, bA2, bB2, kA, kB, h, dt, mA0, mB0)
        halvings = 0
        # "not (val <= best)" also rejects NaN candidates.
        while not (val <= best) and halvings < 30:
            step *= 0.5
            cand = s + step
            val = _dg(cand, s0, rdiff, aA, aB, bA2, bB2, kA, kB, h, dt, mA0, mB0)
            halvings += 1
        if not (val <= best):
            break
        s = cand
        best = val
    if s == s0:
        return s0
    # Over-relax the move, backing off until the objective still drops.
    out = s0 + omega * (s - s0)
    val = _dg(out, s0, rdiff, aA, aB, bA2, bB2, kA, kB, h, dt, mA0, mB0)
    halvings = 0
    while not (val <= 0.0) and halvings < 30:
        out = s0 + 0.5 * (out - s0)
        val = _dg(out, s0, rdiff, aA, aB, bA2, bB2, kA, kB, h, dt, mA0, mB0)
        halvings += 1
    if not (val <= 0.0):
        return s0
    return out


@njit(cache=True)
def update_x_edge(qx, qy, res, k, i, j, h, dt, eps, omega, newton_iters):
    """Relax the vertical edge between cells (i-1, j) and (i, j)."""
    s0 = qx[i, j]
    rdiff = res[i - 1, j] - res[i, j]
    aA = 0.5 * qx[i - 1, j]
    aB = 0.5 * qx[i + 1, j]
    bA = 0.5 * (qy[i - 1, j] + qy[i - 1, j + 1])
    bB = 0.5 * (qy[i, j] + qy[i, j + 1])
    e2 = eps * eps
    s = _relax_edge(s0, rdiff, aA, aB, bA * bA + e2, bB * bB + e2,
                    k[i - 1, j], k[i, j], h, dt, omega, newton_iters)
    d = s - s0
    if d != 0.0:
        qx[i, j] = s
        c = dt / h
        res[i - 1, j] += c * d
        res[i, j] -= c * d
    return s


@njit(cache=True)
def update_y_edge(qx, qy, res, k, i, j, h, dt, eps, omega, newton_iters):
    """Relax the horizontal edge between cells (i, j-1) and (i, j)."""
    s0 = qy[i, j]
    rdiff = res[i, j - 1] - res[i, j]
    aA = 0.5 * qy[i, j - 1]
    aB = 0.5 * qy[i, j + 1]
    bA = 0.5 * (qx[i, j - 1] + qx[i + 1, j - 1])
    bB = 0.5 * (qx[i, j] + qx[i + 1, j])
    e2 = eps * eps
    s = _relax_edge(s0, rdiff, aA, aB, bA * bA + e2, bB * bB + e2,
                    k[i, j - 1], k[i, j], h, dt, omega, newton_iters)
    d = s - s0
    if d != 0.0:
        qy[i, j] = s
        c = dt / h
        res[i, j - 1] += c * d
        res[i, j] -= c * d
    return s


@njit(cache=True)
def sweep(qx, qy, res, k, h, dt, eps, omega, newton_iters, reverse):
    """One Gauss-Seidel pass over every interior edge.

    Forward order: x-edges lexicographically by (i, j), then y-edges.
    Reverse order visits the same edges backwards (used for symmetric
    sweep pairs).  Boundary edges are never touched.
    """
    nx = qx.shape[0] - 1
    ny = qy.shape[1] - 1
    if not reverse:
        for i in range(1, nx):
            for j in range(ny):
                update_x_edge(qx, qy, res, k, i, j, h, dt, eps, omega, newton_iters)
        for i in range(nx):
            for j in range(1, ny):
                update_y_edge(qx, qy, res, k, i, j, h, dt, eps, omega, newton_iters)
    else:
        for i in range(nx - 1, -1, -1):
            for j in range(ny - 1, 0, -1):
                update_y_edge(qx, qy, res, k, i, j, h, dt, eps, omega, newton_iters)
        for i in range(nx - 1, 0, -1):
            for j in range(ny - 1, -1, -1):
                update_x_edge(qx, qy, res, k, i, j, h, dt, eps, omega, newton_iters)
