"""Position-based dynamics inner loop, compiled with numba.

One call simulates a span of substeps with an optional rigid pin set
following a per-substep target trajectory. All loops are scalar and run in
fixed order so trajectories are bit-reproducible.
"""

import math

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_BLOWUP = 1

# stats columns per substep
STAT_LENGTH = 0
STAT_MIN_Z = 1
STAT_KINETIC = 2
STAT_MAX_COORD = 3
STAT_MIN_PAIR = 4
N_STATS = 5


@njit(cache=True, nogil=True)
def _seg_closest(ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz):
    """Closest-point parameters (u, v) and squared distance between
    segments AB and CD."""
    d1x = bx - ax
    d1y = by - ay
    d1z = bz - az
    d2x = dx - cx
    d2y = dy - cy
    d2z = dz - cz
    rx = ax - cx
    ry = ay - cy
    rz = az - cz
    a = d1x * d1x + d1y * d1y + d1z * d1z
    e = d2x * d2x + d2y * d2y + d2z * d2z
    f = d2x * rx + d2y * ry + d2z * rz
    eps = 1e-14
    if a <= eps and e <= eps:
        u = 0.0
        v = 0.0
    elif a <= eps:
        u = 0.0
        v = min(max(f / e, 0.0), 1.0)
    else:
        c = d1x * rx + d1y * ry + d1z * rz
        if e <= eps:
            v = 0.0
            u = min(max(-c / a, 0.0), 1.0)
        else:
            b = d1x * d2x + d1y * d2y + d1z * d2z
            den = a * e - b * b
            if den > eps:
                u = min(max((b * f - c * e) / den, 0.0), 1.0)
            else:
                u = 0.0
            v = b * u + f
            if v < 0.0:
                v = 0.0
                u = min(max(-c / a, 0.0), 1.0)
            elif v > e:
                v = 1.0
                u = min(max((b - c) / a, 0.0), 1.0)
            else:
                v = v / e
    px = ax + d1x * u
    py = ay + d1y * u
    pz = az + d1z * u
    qx = cx + d2x * v
    qy = cy + d2y * v
    qz = cz + d2z * v
    ddx = qx - px
    ddy = qy - py
    ddz = qz - pz
    return u, v, ddx * ddx + ddy * ddy + ddz * ddz


@njit(cache=True, nogil=True)
def run_span(
    pos,
    vel,
    rest,
    radius,
    mu,
    gravity,
    damping_sub,
    h,
    iterations,
    capsule,
    pin_nodes,
    pin_local,
    pin_pos,
    pin_yaw,
    blowup_limit,
    stats,
    record,
    record_flag,
):
    """Advance `pin_pos.shape[0]` substeps of length h.

    pos/vel are mutated in place. Pinned nodes track
    pin_pos[t] + Rz(pin_yaw[t]) @ pin_local with infinite weight. Per
    substep, `stats` receives [polyline length, min z, kinetic energy,
    max |coord|, min non-adjacent node-pair distance]. Returns
    (status, substeps_done).
    """
    n = pos.shape[0]
    n_sub = pin_pos.shape[0]
    n_pins = pin_nodes.shape[0]

    inv_mass = np.ones(n)
    for p in range(n_pins):
        inv_mass[pin_nodes[p]] = 0.0

    prev = np.empty((n, 3))
    targets = np.empty((n_pins, 3))

    max_pair_cand = (n * (n - 1)) // 2
    cand_i = np.empty(max_pair_cand, np.int64)
    cand_j = np.empty(max_pair_cand, np.int64)
    contact = 2.0 * radius
    cand_limit2 = (4.0 * radius) ** 2
    cand_seg_limit2 = (contact + 2.0 * radius) ** 2

    done = 0
    for t in range(n_sub):
        for i in range(n):
            prev[i, 0] = pos[i, 0]
            prev[i, 1] = pos[i, 1]
            prev[i, 2] = pos[i, 2]

        # integrate gravity + damping on free nodes
        for i in range(n):
            if inv_mass[i] > 0.0:
                vel[i, 2] -= gravity * h
                vel[i, 0] *= damping_sub
                vel[i, 1] *= damping_sub
                vel[i, 2] *= damping_sub
                pos[i, 0] += vel[i, 0] * h
                pos[i, 1] += vel[i, 1] * h
                pos[i, 2] += vel[i, 2] * h

        # pin targets this substep
        if n_pins > 0:
            gx = pin_pos[t, 0]
            gy = pin_pos[t, 1]
            gz = pin_pos[t, 2]
            cy = math.cos(pin_yaw[t])
            sy = math.sin(pin_yaw[t])
            for p in range(n_pins):
                lx = pin_local[p, 0]
                ly = pin_local[p, 1]
                lz = pin_local[p, 2]
                targets[p, 0] = gx + cy * lx - sy * ly
                targets[p, 1] = gy + sy * lx + cy * ly
                targets[p, 2] = gz + lz
                node = pin_nodes[p]
                pos[node, 0] = targets[p, 0]
                pos[node, 1] = targets[p, 1]
                pos[node, 2] = targets[p, 2]

        # collision candidates from pre-solve positions
        n_cand = 0
        if capsule:
            for a in range(n - 1):
                for b in range(a + 2, n - 1):
                    _, _, d2 = _seg_closest(
                        pos[a, 0], pos[a, 1], pos[a, 2],
                        pos[a + 1, 0], pos[a + 1, 1], pos[a + 1, 2],
                        pos[b, 0], pos[b, 1], pos[b, 2],
                        pos[b + 1, 0], pos[b + 1, 1], pos[b + 1, 2],
                    )
                    if d2 < cand_seg_limit2 and n_cand < max_pair_cand:
                        cand_i[n_cand] = a
                        cand_j[n_cand] = b
                        n_cand += 1
        else:
            for i in range(n):
                for j in range(i + 2, n):
                    dx = pos[j, 0] - pos[i, 0]
                    dy = pos[j, 1] - pos[i, 1]
                    dz = pos[j, 2] - pos[i, 2]
                    d2 = dx * dx + dy * dy + dz * dz
                    if d2 < cand_limit2 and n_cand < max_pair_cand:
                        cand_i[n_cand] = i
                        cand_j[n_cand] = j
                        n_cand += 1

        for _ in range(iterations):
            # (a) distance chain at rest spacing
            for e in range(n - 1):
                wi = inv_mass[e]
                wj = inv_mass[e + 1]
                wsum = wi + wj
                if wsum == 0.0:
                    continue
                dx = pos[e + 1, 0] - pos[e, 0]
                dy = pos[e + 1, 1] - pos[e, 1]
                dz = pos[e + 1, 2] - pos[e, 2]
                dist = math.sqrt(dx * dx + dy * dy + dz * dz)
                if dist < 1e-12:
                    continue
                corr = (dist - rest) / (dist * wsum)
                pos[e, 0] += wi * corr * dx
                pos[e, 1] += wi * corr * dy
                pos[e, 2] += wi * corr * dz
                pos[e + 1, 0] -= wj * corr * dx
                pos[e + 1, 1] -= wj * corr * dy
                pos[e + 1, 2] -= wj * corr * dz

            # (b) table half-space with Coulomb-style friction
            for i in range(n):
                if inv_mass[i] == 0.0:
                    continue
                if pos[i, 2] < radius:
                    dn = radius - pos[i, 2]
                    pos[i, 2] = radius
                    fx = pos[i, 0] - prev[i, 0]
                    fy = pos[i, 1] - prev[i, 1]
                    tl = math.sqrt(fx * fx + fy * fy)
                    if tl > 1e-12:
                        if tl < mu * dn:
                            pos[i, 0] = prev[i, 0]
                            pos[i, 1] = prev[i, 1]
                        else:
                            scale = mu * dn / tl
                            pos[i, 0] -= fx * scale
                            pos[i, 1] -= fy * scale

            # (c) self-collision
            if capsule:
                for k in range(n_cand):
                    a = cand_i[k]
                    b = cand_j[k]
                    u, v, d2 = _seg_closest(
                        pos[a, 0], pos[a, 1], pos[a, 2],
                        pos[a + 1, 0], pos[a + 1, 1], pos[a + 1, 2],
                        pos[b, 0], pos[b, 1], pos[b, 2],
                        pos[b + 1, 0], pos[b + 1, 1], pos[b + 1, 2],
                    )
                    if d2 >= contact * contact:
                        continue
                    dist = math.sqrt(d2)
                    if dist > 1e-9:
                        inv_d = 1.0 / dist
                        nx = (pos[b, 0] + (pos[b + 1, 0] - pos[b, 0]) * v - pos[a, 0] - (pos[a + 1, 0] - pos[a, 0]) * u) * inv_d
                        ny = (pos[b, 1] + (pos[b + 1, 1] - pos[b, 1]) * v - pos[a, 1] - (pos[a + 1, 1] - pos[a, 1]) * u) * inv_d
                        nz = (pos[b, 2] + (pos[b + 1, 2] - pos[b, 2]) * v - pos[a, 2] - (pos[a + 1, 2] - pos[a, 2]) * u) * inv_d
                    else:
                        nx = 0.0
                        ny = 0.0
                        nz = 1.0
                    c_err = dist - contact
                    w = (
                        inv_mass[a] * (1.0 - u) * (1.0 - u)
                        + inv_mass[a + 1] * u * u
                        + inv_mass[b] * (1.0 - v) * (1.0 - v)
                        + inv_mass[b + 1] * v * v
                    )
                    if w == 0.0:
                        continue
                    lam = -c_err / w
                    pos[a, 0] -= inv_mass[a] * lam * (1.0 - u) * nx
                    pos[a, 1] -= inv_mass[a] * lam * (1.0 - u) * ny
                    pos[a, 2] -= inv_mass[a] * lam * (1.0 - u) * nz
                    pos[a + 1, 0] -= inv_mass[a + 1] * lam * u * nx
                    pos[a + 1, 1] -= inv_mass[a + 1] * lam * u * ny
                    pos[a + 1, 2] -= inv_mass[a + 1] * lam * u * nz
                    pos[b, 0] += inv_mass[b] * lam * (1.0 - v) * nx
                    pos[b, 1] += inv_mass[b] * lam * (1.0 - v) * ny
                    pos[b, 2] += inv_mass[b] * lam * (1.0 - v) * nz
                    pos[b + 1, 0] += inv_mass[b + 1] * lam * v * nx
                    pos[b + 1, 1] += inv_mass[b + 1] * lam * v * ny
                    pos[b + 1, 2] += inv_mass[b + 1] * lam * v * nz
            else:
                for k in range(n_cand):
                    i = cand_i[k]
                    j = cand_j[k]
                    wi = inv_mass[i]
                    wj = inv_mass[j]
                    wsum = wi + wj
                    if wsum == 0.0:
                        continue
                    dx = pos[j, 0] - pos[i, 0]
                    dy = pos[j, 1] - pos[i, 1]
                    dz = pos[j, 2] - pos[i, 2]
                    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
                    if dist >= contact:
                        continue
                    if dist < 1e-9:
                        dx = 0.0
                        dy = 0.0
                        dz = 1.0
                        dist = 1e-9
                    corr = (dist - contact) / (dist * wsum)
                    pos[i, 0] += wi * corr * dx
                    pos[i, 1] += wi * corr * dy
                    pos[i, 2] += wi * corr * dz
                    pos[j, 0] -= wj * corr * dx
                    pos[j, 1] -= wj * corr * dy
                    pos[j, 2] -= wj * corr * dz

            # (d) reassert pins
            for p in range(n_pins):
                node = pin_nodes[p]
                pos[node, 0] = targets[p, 0]
                pos[node, 1] = targets[p, 1]
                pos[node, 2] = targets[p, 2]

        # velocities from position change
        inv_h = 1.0 / h
        for i in range(n):
            vel[i, 0] = (pos[i, 0] - prev[i, 0]) * inv_h
            vel[i, 1] = (pos[i, 1] - prev[i, 1]) * inv_h
            vel[i, 2] = (pos[i, 2] - prev[i, 2]) * inv_h

        # post-solve stats
        length = 0.0
        for e in range(n - 1):
            dx = pos[e + 1, 0] - pos[e, 0]
            dy = pos[e + 1, 1] - pos[e, 1]
            dz = pos[e + 1, 2] - pos[e, 2]
            length += math.sqrt(dx * dx + dy * dy + dz * dz)
        min_z = pos[0, 2]
        max_coord = 0.0
        kinetic = 0.0
        for i in range(n):
            if pos[i, 2] < min_z:
                min_z = pos[i, 2]
            for ax in range(3):
                if abs(pos[i, ax]) > max_coord:
                    max_coord = abs(pos[i, ax])
            kinetic += 0.5 * (
                vel[i, 0] * vel[i, 0] + vel[i, 1] * vel[i, 1] + vel[i, 2] * vel[i, 2]
            )
        min_pair2 = 1e300
        for i in range(n):
            for j in range(i + 2, n):
                dx = pos[j, 0] - pos[i, 0]
                dy = pos[j, 1] - pos[i, 1]
                dz = pos[j, 2] - pos[i, 2]
                d2 = dx * dx + dy * dy + dz * dz
                if d2 < min_pair2:
                    min_pair2 = d2
        stats[t, STAT_LENGTH] = length
        stats[t, STAT_MIN_Z] = min_z
        stats[t, STAT_KINETIC] = kinetic
        stats[t, STAT_MAX_COORD] = max_coord
        stats[t, STAT_MIN_PAIR] = math.sqrt(min_pair2)

        if record_flag:
            for i in range(n):
                record[t, i, 0] = pos[i, 0]
                record[t, i, 1] = pos[i, 1]
                record[t, i, 2] = pos[i, 2]

        done = t + 1
        if max_coord > blowup_limit:
            return STATUS_BLOWUP, done

    return STATUS_OK, done
