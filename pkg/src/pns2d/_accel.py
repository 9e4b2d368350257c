"""Numba-compiled inner loops for the boundary-integral quadratures.

Kept separate so the JIT cache stays stable.  Every kernel writes disjoint
output slots from its parallel loop (no cross-iteration reductions), so
results are bit-reproducible regardless of thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_INV_4PI = 1.0 / (4.0 * np.pi)


@njit(cache=True, inline="always")
def _contract_grad_g(wx, wy, ax, ay, bx, by):
    """sum_{j,k} d_k G_ij(w) a_k b_j as a 2-vector (i-index free)."""
    r2 = wx * wx + wy * wy
    wa = wx * ax + wy * ay
    wb = wx * bx + wy * by
    ab = ax * bx + ay * by
    c = 2.0 * wa * wb / r2
    ox = _INV_4PI * (-wa * bx + wb * ax + ab * wx - c * wx) / r2
    oy = _INV_4PI * (-wa * by + wb * ay + ab * wy - c * wy) / r2
    return ox, oy


@njit(cache=True)
def g_remainder_nodes(x, xp, xpp, s):
    """Singularity-subtracted quadrature of the on-curve velocity remainder.

    Periodic trapezoid over s' != s with the analytic diagonal value; x,
    xp, xpp are the nodal curve values and its first two derivatives.
    """
    n = x.shape[0]
    out = np.empty((n, 2))
    h = 2.0 * np.pi / n
    for i in range(n):
        xi0 = x[i, 0]
        xi1 = x[i, 1]
        acc0 = 0.0
        acc1 = 0.0
        for j in range(n):
            if j == i:
                continue
            d = s[i] - s[j]
            if d > np.pi:
                d -= 2.0 * np.pi
            elif d <= -np.pi:
                d += 2.0 * np.pi
            lx = (xi0 - x[j, 0]) / d
            ly = (xi1 - x[j, 1]) / d
            px = xp[j, 0]
            py = xp[j, 1]
            t0, t1 = _contract_grad_g(lx, ly, px, py, px, py)
            # contraction of dG at xp[j] with (xp[j], xp[j]) is -xp[j]/4pi
            acc0 += (t0 + _INV_4PI * px) / d
            acc1 += (t1 + _INV_4PI * py) / d
            w = 1.0 / d - 1.0 / (2.0 * np.tan(0.5 * d))
            acc0 -= _INV_4PI * w * px
            acc1 -= _INV_4PI * w * py
        # diagonal limit: -X''/(8pi) + (X'.X'') X' / (4pi |X'|^2)
        px = xp[i, 0]
        py = xp[i, 1]
        qx = xpp[i, 0]
        qy = xpp[i, 1]
        p2 = px * px + py * py
        pq = px * qx + py * qy
        acc0 += -qx / (8.0 * np.pi) + pq * px / (4.0 * np.pi * p2)
        acc1 += -qy / (8.0 * np.pi) + pq * py / (4.0 * np.pi * p2)
        out[i, 0] = acc0 * h
        out[i, 1] = acc1 * h
    return out


@njit(cache=True)
def g_deriv_nodes(x, xp, s):
    """Quadrature of the s-derivative of the remainder term.

    Uses the chord slope scaled by 2 sin((s'-s)/2) and the second kernel
    derivative; diagonal value derived from the same expansion as in
    g_remainder_nodes (the integrand extends continuously by 0 there
    after the X'(s')-X'(s) factor is accounted for).
    """
    n = x.shape[0]
    out = np.empty((n, 2))
    h = 2.0 * np.pi / n
    for i in range(n):
        acc0 = 0.0
        acc1 = 0.0
        pix = xp[i, 0]
        piy = xp[i, 1]
        for j in range(n):
            if j == i:
                continue
            d = s[i] - s[j]
            if d > np.pi:
                d -= 2.0 * np.pi
            elif d <= -np.pi:
                d += 2.0 * np.pi
            sin_half = 2.0 * np.sin(0.5 * d)
            ltx = (x[j, 0] - x[i, 0]) / (-sin_half)
            lty = (x[j, 1] - x[i, 1]) / (-sin_half)
            pjx = xp[j, 0]
            pjy = xp[j, 1]
            djx = pjx - pix
            djy = pjy - piy
            a0, a1 = _contract_d2g(ltx, lty, pjx, pjy, pix, piy, djx, djy)
            b0, b1 = _contract_d2g(pjx, pjy, pjx, pjy, pjx, pjy, djx, djy)
            w = 1.0 / (sin_half * sin_half)
            acc0 += (a0 - b0) * w
            acc1 += (a1 - b1) * w
        out[i, 0] = acc0 * h
        out[i, 1] = acc1 * h
    return out


@njit(cache=True, inline="always")
def _contract_d2g(wx, wy, ax, ay, cx, cy, bx, by):
    """sum d_l d_k G_ij(w) a_k c_l b_j as a 2-vector (i free).

    Index layout matches the closed-form second kernel derivative:
    a contracts the k slot, c the l slot, b the j slot.
    """
    r2 = wx * wx + wy * wy
    wa = wx * ax + wy * ay
    wc = wx * cx + wy * cy
    wb = wx * bx + wy * by
    ab = ax * bx + ay * by
    cb = cx * bx + cy * by
    ac = ax * cx + ay * cy
    # (1/4pi)[(-d_ij d_kl + d_ik d_jl + d_jk d_il)/r2 ... ] contracted
    f0 = (-ac * bx + cb * ax + ab * cx) / r2
    f1 = (-ac * by + cb * ay + ab * cy) / r2
    f0 -= 2.0 * wc * (-wa * bx + wb * ax + ab * wx) / (r2 * r2)
    f1 -= 2.0 * wc * (-wa * by + wb * ay + ab * wy) / (r2 * r2)
    g0 = (cx * wa * wb + wx * (wa * cb + wb * ac)) / (r2 * r2)
    g1 = (cy * wa * wb + wy * (wa * cb + wb * ac)) / (r2 * r2)
    g0 -= 4.0 * wx * wa * wb * wc / (r2 * r2 * r2)
    g1 -= 4.0 * wy * wa * wb * wc / (r2 * r2 * r2)
    ox = _INV_4PI * (f0 - 2.0 * g0)
    oy = _INV_4PI * (f1 - 2.0 * g1)
    return ox, oy


@njit(cache=True, inline="always")
def _form1_sum(tx, ty, x, xpp):
    """Plain trapezoid of G(x - X) X'' over the given node set."""
    n = x.shape[0]
    acc0 = 0.0
    acc1 = 0.0
    for j in range(n):
        dx = tx - x[j, 0]
        dy = ty - x[j, 1]
        r2 = dx * dx + dy * dy
        if r2 == 0.0:
            continue
        lnr = 0.5 * np.log(r2)
        df = dx * xpp[j, 0] + dy * xpp[j, 1]
        acc0 += _INV_4PI * (-lnr * xpp[j, 0] + dx * df / r2)
        acc1 += _INV_4PI * (-lnr * xpp[j, 1] + dy * df / r2)
    h = 2.0 * np.pi / n
    return acc0 * h, acc1 * h


@njit(cache=True, inline="always")
def _form2_sum(tx, ty, x, xp, ax, ay):
    """Anchored subtracted form: trapezoid of dG(x - X) X' (X' - anchor)."""
    n = x.shape[0]
    acc0 = 0.0
    acc1 = 0.0
    for j in range(n):
        dx = tx - x[j, 0]
        dy = ty - x[j, 1]
        r2 = dx * dx + dy * dy
        if r2 == 0.0:
            continue
        bx = xp[j, 0] - ax
        by = xp[j, 1] - ay
        t0, t1 = _contract_grad_g(dx, dy, xp[j, 0], xp[j, 1], bx, by)
        acc0 += t0
        acc1 += t1
    h = 2.0 * np.pi / n
    return acc0 * h, acc1 * h


@njit(cache=True, parallel=True)
def velocity_two_form(targets, x, xp, xpp, switch_dist):
    """Reference two-form evaluation on one node set: plain trapezoid far,
    nearest-node anchored subtracted form within switch_dist."""
    m = targets.shape[0]
    n = x.shape[0]
    out = np.empty((m, 2))
    near = np.zeros(m, dtype=np.int64)
    for p in prange(m):
        tx = targets[p, 0]
        ty = targets[p, 1]
        dmin2 = 1e300
        jmin = 0
        for j in range(n):
            dx = tx - x[j, 0]
            dy = ty - x[j, 1]
            r2 = dx * dx + dy * dy
            if r2 < dmin2:
                dmin2 = r2
                jmin = j
        if dmin2 >= switch_dist * switch_dist:
            out[p, 0], out[p, 1] = _form1_sum(tx, ty, x, xpp)
        else:
            near[p] = 1
            out[p, 0], out[p, 1] = _form2_sum(tx, ty, x, xp, xp[jmin, 0], xp[jmin, 1])
    return out, near


@njit(cache=True, parallel=True)
def velocity_zones(targets, x, xpp, xf, xppf, zone_a_dist, zone_c_dist, slack):
    """Zoned evaluation: far points on the coarse nodes, a near band on the
    spectrally refined nodes, and the innermost band flagged for the caller.

    Returns (values, zone codes 0/1/2, nearest fine index, nearest fine
    distance); zone-2 targets get no value here.
    """
    m = targets.shape[0]
    n = x.shape[0]
    nf = xf.shape[0]
    out = np.zeros((m, 2))
    zone = np.zeros(m, dtype=np.int8)
    jnear = np.zeros(m, dtype=np.int64)
    dnear = np.zeros(m)
    for p in prange(m):
        tx = targets[p, 0]
        ty = targets[p, 1]
        dmin2 = 1e300
        for j in range(n):
            dx = tx - x[j, 0]
            dy = ty - x[j, 1]
            r2 = dx * dx + dy * dy
            if r2 < dmin2:
                dmin2 = r2
        if np.sqrt(dmin2) - slack >= zone_a_dist:
            out[p, 0], out[p, 1] = _form1_sum(tx, ty, x, xpp)
            continue
        dmin2 = 1e300
        jmin = 0
        for j in range(nf):
            dx = tx - xf[j, 0]
            dy = ty - xf[j, 1]
            r2 = dx * dx + dy * dy
            if r2 < dmin2:
                dmin2 = r2
                jmin = j
        d = np.sqrt(dmin2)
        jnear[p] = jmin
        dnear[p] = d
        if d >= zone_c_dist:
            zone[p] = 1
            out[p, 0], out[p, 1] = _form1_sum(tx, ty, xf, xppf)
        else:
            zone[p] = 2
    return out, zone, jnear, dnear


@njit(cache=True)
def min_pair_ratio(nodes, s):
    """min over node pairs of |X_i - X_j| / |s_i - s_j|_T."""
    n = nodes.shape[0]
    best = 1e300
    for i in range(n):
        for j in range(i + 1, n):
            ds = abs(s[i] - s[j])
            if ds > np.pi:
                ds = 2.0 * np.pi - ds
            dx = nodes[i, 0] - nodes[j, 0]
            dy = nodes[i, 1] - nodes[j, 1]
            r = np.sqrt(dx * dx + dy * dy) / ds
            if r < best:
                best = r
    return best
