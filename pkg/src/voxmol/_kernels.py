"""Compiled gridding kernels.

Work is parallelized across (example, coordinate-set) pairs; each pair owns
a disjoint channel block of the output, and within a pair atoms accumulate
sequentially into a float64 scratch block that is cast to float32 once per
voxel on writeback. Per-voxel sums therefore happen in atom order with a
single final rounding, which makes the output bitwise independent of the
thread count and keeps it within one float32 ulp of an exact float64
evaluation. fastmath stays off for the same reason.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

_JIT = dict(cache=True, nogil=True)


@njit(inline="always", **_JIT)
def _axis_bounds(x, cut, origin, res, npts):
    lo = int(math.ceil((x - cut - origin) / res))
    hi = int(math.floor((x + cut - origin) / res))
    if lo < 0:
        lo = 0
    if hi > npts - 1:
        hi = npts - 1
    return lo, hi


@njit(parallel=True, **_JIT)
def forward_index_sets(out, coords, radii, tidx,
                       set_start, set_end, set_example, set_choff, set_t,
                       origins, res, grm, rmult, binary):
    """Scatter index-typed atoms of every packed set into its channel block."""
    npts = out.shape[2]
    nsets = set_start.shape[0]
    for s in prange(nsets):
        a0, a1 = set_start[s], set_end[s]
        if a1 <= a0:
            continue
        e = set_example[s]
        off = set_choff[s]
        nt = set_t[s]
        ox, oy, oz = origins[e, 0], origins[e, 1], origins[e, 2]

        # scratch block covering the union of atom footprints for this set
        bi0, bi1 = npts, -1
        bj0, bj1 = npts, -1
        bk0, bk1 = npts, -1
        for a in range(a0, a1):
            r = radii[a]
            cut = r if binary else r * rmult
            i0, i1 = _axis_bounds(coords[a, 0], cut, ox, res, npts)
            j0, j1 = _axis_bounds(coords[a, 1], cut, oy, res, npts)
            k0, k1 = _axis_bounds(coords[a, 2], cut, oz, res, npts)
            if i0 > i1 or j0 > j1 or k0 > k1:
                continue
            bi0, bi1 = min(bi0, i0), max(bi1, i1)
            bj0, bj1 = min(bj0, j0), max(bj1, j1)
            bk0, bk1 = min(bk0, k0), max(bk1, k1)
        if bi1 < bi0:
            continue
        tmp = np.zeros((nt, bi1 - bi0 + 1, bj1 - bj0 + 1, bk1 - bk0 + 1),
                       dtype=np.float64)
        touched = np.zeros(nt, dtype=np.bool_)

        for a in range(a0, a1):
            x, y, z = coords[a, 0], coords[a, 1], coords[a, 2]
            r = radii[a]
            c = tidx[a]
            cut = r if binary else r * rmult
            i0, i1 = _axis_bounds(x, cut, ox, res, npts)
            j0, j1 = _axis_bounds(y, cut, oy, res, npts)
            k0, k1 = _axis_bounds(z, cut, oz, res, npts)
            if i0 > i1 or j0 > j1 or k0 > k1:
                continue
            touched[c] = True
            r2 = r * r
            inv_r2 = 1.0 / r2
            d02 = (grm * r) ** 2
            dzr = rmult * r
            qa = math.exp(-2.0 * grm * grm) * (2.0 * grm / r) ** 2
            for i in range(i0, i1 + 1):
                dx = ox + i * res - x
                dx2 = dx * dx
                for j in range(j0, j1 + 1):
                    dy = oy + j * res - y
                    dxy2 = dx2 + dy * dy
                    for k in range(k0, k1 + 1):
                        dz = oz + k * res - z
                        d2 = dxy2 + dz * dz
                        if binary:
                            if d2 <= r2:
                                tmp[c, i - bi0, j - bj0, k - bk0] = 1.0
                            continue
                        if d2 <= d02:
                            tmp[c, i - bi0, j - bj0, k - bk0] += \
                                math.exp(-2.0 * d2 * inv_r2)
                        else:
                            d = math.sqrt(d2)
                            if d < dzr:
                                t = d - dzr
                                tmp[c, i - bi0, j - bj0, k - bk0] += qa * t * t
        for c in range(nt):
            if not touched[c]:
                continue
            for i in range(bi0, bi1 + 1):
                for j in range(bj0, bj1 + 1):
                    for k in range(bk0, bk1 + 1):
                        out[e, off + c, i, j, k] = tmp[c, i - bi0, j - bj0, k - bk0]


@njit(parallel=True, **_JIT)
def forward_vector_sets(out, coords, weights_flat, w_start, atom_radii,
                        type_radii_flat, tr_start, radius_type_indexed,
                        set_start, set_end, set_example, set_choff, set_t,
                        origins, res, grm, rmult, binary):
    """Scatter vector-typed atoms: weight w adds w * density into channel c."""
    npts = out.shape[2]
    nsets = set_start.shape[0]
    for s in prange(nsets):
        a0, a1 = set_start[s], set_end[s]
        if a1 <= a0:
            continue
        e = set_example[s]
        off = set_choff[s]
        nt = set_t[s]
        ox, oy, oz = origins[e, 0], origins[e, 1], origins[e, 2]

        # footprint union; with type-indexed radii the largest type radius bounds it
        rmax = 0.0
        if radius_type_indexed:
            for c in range(nt):
                if type_radii_flat[tr_start[s] + c] > rmax:
                    rmax = type_radii_flat[tr_start[s] + c]
        bi0, bi1 = npts, -1
        bj0, bj1 = npts, -1
        bk0, bk1 = npts, -1
        for a in range(a0, a1):
            r = rmax if radius_type_indexed else atom_radii[a]
            cut = r if binary else r * rmult
            i0, i1 = _axis_bounds(coords[a, 0], cut, ox, res, npts)
            j0, j1 = _axis_bounds(coords[a, 1], cut, oy, res, npts)
            k0, k1 = _axis_bounds(coords[a, 2], cut, oz, res, npts)
            if i0 > i1 or j0 > j1 or k0 > k1:
                continue
            bi0, bi1 = min(bi0, i0), max(bi1, i1)
            bj0, bj1 = min(bj0, j0), max(bj1, j1)
            bk0, bk1 = min(bk0, k0), max(bk1, k1)
        if bi1 < bi0:
            continue
        tmp = np.zeros((nt, bi1 - bi0 + 1, bj1 - bj0 + 1, bk1 - bk0 + 1),
                       dtype=np.float64)
        touched = np.zeros(nt, dtype=np.bool_)

        for a in range(a0, a1):
            x, y, z = coords[a, 0], coords[a, 1], coords[a, 2]
            wrow = w_start[s] + (a - a0) * nt
            for c in range(nt):
                w = weights_flat[wrow + c]
                if w == 0.0:
                    continue
                r = type_radii_flat[tr_start[s] + c] if radius_type_indexed else atom_radii[a]
                cut = r if binary else r * rmult
                i0, i1 = _axis_bounds(x, cut, ox, res, npts)
                j0, j1 = _axis_bounds(y, cut, oy, res, npts)
                k0, k1 = _axis_bounds(z, cut, oz, res, npts)
                if i0 > i1 or j0 > j1 or k0 > k1:
                    continue
                touched[c] = True
                r2 = r * r
                inv_r2 = 1.0 / r2
                d02 = (grm * r) ** 2
                dzr = rmult * r
                qa = math.exp(-2.0 * grm * grm) * (2.0 * grm / r) ** 2
                for i in range(i0, i1 + 1):
                    dx = ox + i * res - x
                    dx2 = dx * dx
                    for j in range(j0, j1 + 1):
                        dy = oy + j * res - y
                        dxy2 = dx2 + dy * dy
                        for k in range(k0, k1 + 1):
                            dz = oz + k * res - z
                            d2 = dxy2 + dz * dz
                            ti, tj, tk = i - bi0, j - bj0, k - bk0
                            if binary:
                                if d2 <= r2 and w > tmp[c, ti, tj, tk]:
                                    tmp[c, ti, tj, tk] = w
                                continue
                            if d2 <= d02:
                                tmp[c, ti, tj, tk] += w * math.exp(-2.0 * d2 * inv_r2)
                            else:
                                d = math.sqrt(d2)
                                if d < dzr:
                                    t = d - dzr
                                    tmp[c, ti, tj, tk] += w * qa * t * t
        for c in range(nt):
            if not touched[c]:
                continue
            for i in range(bi0, bi1 + 1):
                for j in range(bj0, bj1 + 1):
                    for k in range(bk0, bk1 + 1):
                        out[e, off + c, i, j, k] = tmp[c, i - bi0, j - bj0, k - bk0]


@njit(parallel=True, **_JIT)
def backward_index(coords, radii, tidx, grid_grad, origin, res, grm, rmult):
    """Coordinate gradients for index-typed atoms (gather per atom)."""
    n = coords.shape[0]
    npts = grid_grad.shape[1]
    coord_grad = np.zeros((n, 3), dtype=np.float64)
    ox, oy, oz = origin[0], origin[1], origin[2]
    for a in prange(n):
        x, y, z = coords[a, 0], coords[a, 1], coords[a, 2]
        r = radii[a]
        c = tidx[a]
        inv_r2 = 1.0 / (r * r)
        d0 = grm * r
        d02 = d0 * d0
        dzr = rmult * r
        qa = math.exp(-2.0 * grm * grm) * (2.0 * grm / r) ** 2
        i0, i1 = _axis_bounds(x, dzr, ox, res, npts)
        j0, j1 = _axis_bounds(y, dzr, oy, res, npts)
        k0, k1 = _axis_bounds(z, dzr, oz, res, npts)
        gx = 0.0
        gy = 0.0
        gz = 0.0
        for i in range(i0, i1 + 1):
            dx = x - (ox + i * res)
            for j in range(j0, j1 + 1):
                dy = y - (oy + j * res)
                for k in range(k0, k1 + 1):
                    dz = z - (oz + k * res)
                    d2 = dx * dx + dy * dy + dz * dz
                    if d2 <= 0.0 or d2 >= dzr * dzr:
                        continue
                    g = grid_grad[c, i, j, k]
                    if g == 0.0:
                        continue
                    d = math.sqrt(d2)
                    if d2 <= d02:
                        slope = math.exp(-2.0 * d2 * inv_r2) * (-4.0 * d * inv_r2)
                    else:
                        slope = 2.0 * qa * (d - dzr)
                    scale = g * slope / d
                    gx += scale * dx
                    gy += scale * dy
                    gz += scale * dz
        coord_grad[a, 0] = gx
        coord_grad[a, 1] = gy
        coord_grad[a, 2] = gz
    return coord_grad


@njit(parallel=True, **_JIT)
def backward_vector(coords, atom_radii, weights, grid_grad,
                    type_radii, radius_type_indexed, origin, res, grm, rmult):
    """Coordinate and type-weight gradients for vector-typed atoms."""
    n = coords.shape[0]
    nt = weights.shape[1]
    npts = grid_grad.shape[1]
    coord_grad = np.zeros((n, 3), dtype=np.float64)
    type_grad = np.zeros((n, nt), dtype=np.float64)
    ox, oy, oz = origin[0], origin[1], origin[2]
    for a in prange(n):
        x, y, z = coords[a, 0], coords[a, 1], coords[a, 2]
        gx = 0.0
        gy = 0.0
        gz = 0.0
        for c in range(nt):
            r = type_radii[c] if radius_type_indexed else atom_radii[a]
            w = weights[a, c]
            inv_r2 = 1.0 / (r * r)
            d02 = (grm * r) ** 2
            dzr = rmult * r
            qa = math.exp(-2.0 * grm * grm) * (2.0 * grm / r) ** 2
            i0, i1 = _axis_bounds(x, dzr, ox, res, npts)
            j0, j1 = _axis_bounds(y, dzr, oy, res, npts)
            k0, k1 = _axis_bounds(z, dzr, oz, res, npts)
            tg = 0.0
            for i in range(i0, i1 + 1):
                dx = x - (ox + i * res)
                for j in range(j0, j1 + 1):
                    dy = y - (oy + j * res)
                    for k in range(k0, k1 + 1):
                        dz = z - (oz + k * res)
                        d2 = dx * dx + dy * dy + dz * dz
                        if d2 >= dzr * dzr:
                            continue
                        g = grid_grad[c, i, j, k]
                        if g == 0.0:
                            continue
                        if d2 <= d02:
                            dens = math.exp(-2.0 * d2 * inv_r2)
                            slope = dens * (-4.0 * math.sqrt(d2) * inv_r2)
                        else:
                            d = math.sqrt(d2)
                            t = d - dzr
                            dens = qa * t * t
                            slope = 2.0 * qa * t
                        tg += g * dens
                        if d2 > 0.0 and w != 0.0:
                            scale = w * g * slope / math.sqrt(d2)
                            gx += scale * dx
                            gy += scale * dy
                            gz += scale * dz
            type_grad[a, c] = tg
        coord_grad[a, 0] = gx
        coord_grad[a, 1] = gy
        coord_grad[a, 2] = gz
    return coord_grad, type_grad
