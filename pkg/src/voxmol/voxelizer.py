"""Voxelization: typed coordinates to density grids and back to gradients.

:class:`GridMaker` turns coordinate sets into cubic density grids. Each
atom contributes a Gaussian out to ``gaussian_radius_multiple`` (grm) times
its radius, then a quadratic tail that reaches zero, with value and slope
continuous, at ``r * (1 + 2 grm^2) / (2 grm)``. Binary mode writes an
indicator of overlapping an atom instead. ``backward`` maps grid-value
gradients to atomic coordinate gradients (and type-weight gradients for
vector types), enabling coordinate/type optimization through the grid.

GridMaker also speaks the estimator protocol (``fit`` / ``transform`` /
``get_params`` / ``set_params``) so gridding composes with scikit-learn
style pipelines: ``transform`` maps a list of examples to an
(N, C, D, D, D) array with no augmentation.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from . import _kernels
from .atomtypes import CoordinateSet
from .errors import ConfigError
from .geom import make_transform
from .grids import write_npy
from .validation import check_rng, check_vector3


def set_num_threads(n: int) -> int:
    """Set the kernel thread count; returns the count actually in effect.

    Before numba is loaded the limit can be raised via the environment;
    afterwards requests clamp to the loaded maximum.
    """
    n = int(n)
    if n < 1:
        raise ValueError("thread count must be >= 1")
    import numba

    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(min(n, limit))
    return numba.get_num_threads()


def get_num_threads() -> int:
    import numba

    return numba.get_num_threads()


def _coord_sets_of(example) -> list[CoordinateSet]:
    if isinstance(example, CoordinateSet):
        return [example]
    sets = getattr(example, "coord_sets", None)
    if sets is None:
        raise TypeError(f"cannot voxelize {type(example).__name__}; "
                        "expected a CoordinateSet or an Example")
    return list(sets)


def channel_count(example) -> int:
    """Total channels of an example: sum of its sets' type counts."""
    return sum(cs.num_types for cs in _coord_sets_of(example))


def channel_names(example) -> list[str]:
    """Per-channel labels, set-qualified so receptor and ligand blocks stay apart."""
    names = []
    for si, cs in enumerate(_coord_sets_of(example)):
        base = cs.type_names or [f"type{i}" for i in range(cs.num_types)]
        names.extend(f"{si}:{n}" for n in base)
    return names


class GridMaker:
    """Configurable voxelizer. Construction stores parameters verbatim.

    Parameters
    ----------
    resolution : grid spacing in Angstrom.
    dimension : length of each cube side in Angstrom.
    binary : write a 0/1 overlap indicator instead of smooth densities.
    radius_type_indexed : with vector types, read the radius per channel
        from the typer's radius table instead of per atom.
    radius_scale : pre-multiplier on atomic radii.
    gaussian_radius_multiple : multiple of the (scaled) radius out to which
        the density stays Gaussian before the quadratic decay.
    """

    _param_names = ("resolution", "dimension", "binary", "radius_type_indexed",
                    "radius_scale", "gaussian_radius_multiple")

    def __init__(self, resolution=0.5, dimension=23.5, binary=False,
                 radius_type_indexed=False, radius_scale=1.0,
                 gaussian_radius_multiple=1.0):
        self.resolution = resolution
        self.dimension = dimension
        self.binary = binary
        self.radius_type_indexed = radius_type_indexed
        self.radius_scale = radius_scale
        self.gaussian_radius_multiple = gaussian_radius_multiple

    # -- estimator protocol --

    def get_params(self, deep=True) -> dict:
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params) -> "GridMaker":
        for key, value in params.items():
            if key not in self._param_names:
                raise ValueError(f"unknown parameter {key!r} for GridMaker")
            setattr(self, key, value)
        return self

    def fit(self, X=None, y=None) -> "GridMaker":
        self._check_params()
        return self

    def transform(self, X) -> np.ndarray:
        """Voxelize a list of examples (no augmentation) to (N, C, D, D, D)."""
        return self.forward_batch(X)

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X, y).transform(X)

    def _check_params(self) -> None:
        if not float(self.resolution) > 0:
            raise ValueError(f"resolution must be > 0, got {self.resolution}")
        if float(self.dimension) < 0:
            raise ValueError(f"dimension must be >= 0, got {self.dimension}")
        if not float(self.radius_scale) > 0:
            raise ValueError(f"radius_scale must be > 0, got {self.radius_scale}")
        if not float(self.gaussian_radius_multiple) > 0:
            raise ValueError(
                f"gaussian_radius_multiple must be > 0, got {self.gaussian_radius_multiple}")

    # -- geometry --

    def points_per_side(self) -> int:
        """Grid points per axis: round(dimension / resolution) + 1 (half-up)."""
        self._check_params()
        return int(math.floor(float(self.dimension) / float(self.resolution) + 0.5)) + 1

    @property
    def radius_multiple(self) -> float:
        """Cutoff distance measured in radii: (1 + 2 grm^2) / (2 grm)."""
        grm = float(self.gaussian_radius_multiple)
        return (1.0 + 2.0 * grm * grm) / (2.0 * grm)

    def grid_origin(self, center) -> np.ndarray:
        """Origin (first voxel center) for a grid centered at ``center``."""
        center = check_vector3(center, "center")
        return center - float(self.dimension) / 2.0

    # -- density kernel (reference form; kernels inline the same math) --

    def density(self, d, r):
        """Density at distance ``d`` from an atom of (scaled) radius ``r``.

        Vectorized over ``d``. ``r`` must already include radius_scale when
        called directly; forward applies the scale for you.
        """
        r = float(r)
        if r <= 0:
            raise ValueError(f"radius must be > 0, got {r}")
        d = np.asarray(d, dtype=np.float64)
        if self.binary:
            out = np.where(d <= r, 1.0, 0.0)
            return float(out) if out.ndim == 0 else out
        grm = float(self.gaussian_radius_multiple)
        d0 = grm * r
        dz = self.radius_multiple * r
        qa = math.exp(-2.0 * grm * grm) / (d0 - dz) ** 2
        gauss = np.exp(-2.0 * d * d / (r * r))
        quad = qa * (d - dz) ** 2
        out = np.where(d <= d0, gauss, np.where(d < dz, quad, 0.0))
        return float(out) if out.ndim == 0 else out

    def density_slope(self, d, r):
        """d(density)/d(distance); zero beyond the cutoff and in binary mode."""
        r = float(r)
        if r <= 0:
            raise ValueError(f"radius must be > 0, got {r}")
        d = np.asarray(d, dtype=np.float64)
        if self.binary:
            out = np.zeros_like(d)
            return float(out) if out.ndim == 0 else out
        grm = float(self.gaussian_radius_multiple)
        d0 = grm * r
        dz = self.radius_multiple * r
        qa = math.exp(-2.0 * grm * grm) / (d0 - dz) ** 2
        gauss = np.exp(-2.0 * d * d / (r * r)) * (-4.0 * d / (r * r))
        quad = 2.0 * qa * (d - dz)
        out = np.where(d <= d0, gauss, np.where(d < dz, quad, 0.0))
        return float(out) if out.ndim == 0 else out

    # -- forward / backward --

    def forward(self, atoms: CoordinateSet, center=None, out=None, *,
                random_translation=0.0, random_rotation=False, rng=None) -> np.ndarray:
        """Voxelize one coordinate set into a (C, D, D, D) float32 grid.

        The grid is centered on ``center`` (default: the set's centroid).
        When augmentation is requested, a single random transform is drawn
        and applied to the atom coordinates about ``center``.
        """
        if not isinstance(atoms, CoordinateSet):
            raise TypeError("atoms must be a CoordinateSet")
        npts = self.points_per_side()
        nch = atoms.num_types
        if center is None:
            center = atoms.centroid()
        out_arr = self._prepare_out(out, (nch, npts, npts, npts))
        batch_view = out_arr.reshape((1,) + out_arr.shape)
        self._run_batch([[atoms]], [check_vector3(center, "center")], batch_view,
                        random_translation, random_rotation, rng)
        return out_arr

    def forward_batch(self, examples, out=None, centers=None, *,
                      random_translation=0.0, random_rotation=False, rng=None) -> np.ndarray:
        """Voxelize a batch into (N, C, D, D, D); one slab per example.

        Coordinate sets occupy consecutive channel blocks in order. Each
        example gets its own grid center (default: centroid of its last
        coordinate set) and, when requested, its own random transform.
        """
        example_sets = [_coord_sets_of(ex) for ex in examples]
        if not example_sets:
            raise ValueError("forward_batch needs at least one example")
        npts = self.points_per_side()
        nch = 0
        for sets in example_sets:
            c = sum(cs.num_types for cs in sets)
            if c:
                if nch and c != nch:
                    raise ValueError(f"examples disagree on channel count: {nch} vs {c}")
                nch = c
        if nch == 0:
            if out is None:
                raise ValueError("cannot infer channel count from empty examples; pass out")
            nch = (out.array if hasattr(out, "array") else np.asarray(out)).shape[1]
        n = len(example_sets)
        out_arr = self._prepare_out(out, (n, nch, npts, npts, npts))

        if centers is None:
            center_list = [self._default_center(sets) for sets in example_sets]
        else:
            centers = np.asarray(centers, dtype=np.float64)
            if centers.shape != (n, 3):
                raise ValueError(f"centers must have shape ({n}, 3), got {centers.shape}")
            center_list = [centers[i] for i in range(n)]
        self._run_batch(example_sets, center_list, out_arr,
                        random_translation, random_rotation, rng)
        return out_arr

    def backward(self, atoms: CoordinateSet, grid_grad, center=None):
        """Map grid-value gradients back to atoms used in a forward call.

        Returns ``(coord_grad, type_grad)``: coordinate gradients (N, 3)
        always, and per-channel type-weight gradients (N, T) for vector
        types (None for index types). Binary grids are flat almost
        everywhere, so their gradients are zero.
        """
        if not isinstance(atoms, CoordinateSet):
            raise TypeError("atoms must be a CoordinateSet")
        self._check_params()
        npts = self.points_per_side()
        gg = grid_grad.array if hasattr(grid_grad, "array") else np.asarray(grid_grad)
        expected = (atoms.num_types, npts, npts, npts)
        if gg.shape != expected:
            raise ValueError(f"grid_grad shape {gg.shape} does not match {expected}")
        gg = np.ascontiguousarray(gg, dtype=np.float32)
        if center is None:
            center = atoms.centroid()
        origin = self.grid_origin(center)
        coords = atoms.coords.astype(np.float64)
        eff_radii = atoms.radii.astype(np.float64) * float(self.radius_scale)
        grm = float(self.gaussian_radius_multiple)

        if self.binary:
            coord_grad = np.zeros((atoms.num_atoms, 3), dtype=np.float32)
            if atoms.has_vector_types:
                return coord_grad, np.zeros((atoms.num_atoms, atoms.num_types),
                                            dtype=np.float32)
            return coord_grad, None

        if atoms.has_vector_types:
            type_radii, use_tr = self._type_radii_for(atoms)
            cg, tg = _kernels.backward_vector(
                coords, eff_radii, atoms.type_vector.astype(np.float64), gg,
                type_radii, use_tr, origin, float(self.resolution), grm,
                self.radius_multiple)
            return cg.astype(np.float32), tg.astype(np.float32)
        cg = _kernels.backward_index(
            coords, eff_radii, atoms.type_index, gg, origin,
            float(self.resolution), grm, self.radius_multiple)
        return cg.astype(np.float32), None

    # -- internals --

    def _default_center(self, sets) -> np.ndarray:
        for cs in reversed(sets):
            if cs.num_atoms:
                return cs.centroid()
        return np.zeros(3, dtype=np.float64)

    def _type_radii_for(self, cs: CoordinateSet):
        if not self.radius_type_indexed:
            return np.ones(cs.num_types, dtype=np.float64), False
        if cs.type_radii is None:
            raise ConfigError(
                "radius_type_indexed requires coordinate sets typed from a table "
                "(type_radii is missing)")
        return cs.type_radii.astype(np.float64) * float(self.radius_scale), True

    def _prepare_out(self, out, shape) -> np.ndarray:
        if out is None:
            return np.zeros(shape, dtype=np.float32)
        arr = out.array if hasattr(out, "array") else out
        if not isinstance(arr, np.ndarray):
            raise TypeError("out must be a numpy array or grid")
        if arr.shape != shape:
            raise ValueError(f"out has shape {arr.shape}, expected {shape}")
        if arr.dtype != np.float32:
            raise TypeError(f"out must be float32, got {arr.dtype}")
        if not arr.flags.c_contiguous:
            raise ValueError("out must be C-contiguous")
        arr[...] = 0.0
        return arr

    def _run_batch(self, example_sets, centers, out, random_translation,
                   random_rotation, rng) -> None:
        self._check_params()
        augment = random_rotation or float(random_translation) > 0
        if augment:
            rng = check_rng(rng)

        vector_mode = None
        for sets in example_sets:
            for cs in sets:
                if cs.num_atoms == 0:
                    continue
                if vector_mode is None:
                    vector_mode = cs.has_vector_types
                elif vector_mode != cs.has_vector_types:
                    raise ValueError("cannot mix index- and vector-typed sets in one batch")
        if vector_mode is None:
            return  # nothing but empty sets; out is already zeroed

        # one transform per example, drawn in example order for reproducibility
        origins = np.empty((len(example_sets), 3), dtype=np.float64)
        placed: list[tuple[int, int, CoordinateSet, np.ndarray]] = []
        for e, sets in enumerate(example_sets):
            center = centers[e]
            origins[e] = self.grid_origin(center)
            transform = None
            if augment:
                transform = make_transform(center, float(random_translation),
                                           random_rotation, rng)
            choff = 0
            for cs in sets:
                coords = cs.coords.astype(np.float64)
                if transform is not None and cs.num_atoms:
                    coords = transform.forward(coords)
                placed.append((e, choff, cs, coords))
                choff += cs.num_types

        natoms_total = sum(cs.num_atoms for _, _, cs, _ in placed)
        nsets = len(placed)
        coords_all = np.zeros((natoms_total, 3), dtype=np.float64)
        set_start = np.zeros(nsets, dtype=np.int64)
        set_end = np.zeros(nsets, dtype=np.int64)
        set_example = np.zeros(nsets, dtype=np.int64)
        set_choff = np.zeros(nsets, dtype=np.int64)
        set_t = np.zeros(nsets, dtype=np.int64)
        pos = 0
        for s, (e, choff, cs, coords) in enumerate(placed):
            set_start[s] = pos
            set_end[s] = pos + cs.num_atoms
            set_example[s] = e
            set_choff[s] = choff
            set_t[s] = cs.num_types
            coords_all[pos:pos + cs.num_atoms] = coords
            pos += cs.num_atoms

        res = float(self.resolution)
        grm = float(self.gaussian_radius_multiple)
        scale = float(self.radius_scale)

        if vector_mode:
            weights_flat = np.zeros(sum(cs.num_atoms * cs.num_types
                                        for _, _, cs, _ in placed), dtype=np.float64)
            w_start = np.zeros(nsets, dtype=np.int64)
            tr_flat = np.zeros(max(1, sum(cs.num_types for _, _, cs, _ in placed)),
                               dtype=np.float64)
            tr_start = np.zeros(nsets, dtype=np.int64)
            atom_radii = np.zeros(natoms_total, dtype=np.float64)
            wpos = tpos = 0
            for s, (e, choff, cs, coords) in enumerate(placed):
                w_start[s] = wpos
                if cs.num_atoms:
                    if not cs.has_vector_types:
                        raise ValueError("cannot mix index- and vector-typed sets in one batch")
                    weights_flat[wpos:wpos + cs.num_atoms * cs.num_types] = (
                        cs.type_vector.astype(np.float64).ravel())
                wpos += cs.num_atoms * cs.num_types
                tr_start[s] = tpos
                type_radii, _ = self._type_radii_for(cs) if cs.num_atoms else (
                    np.ones(cs.num_types), False)
                tr_flat[tpos:tpos + cs.num_types] = type_radii
                tpos += cs.num_types
                atom_radii[set_start[s]:set_end[s]] = cs.radii.astype(np.float64) * scale
            _kernels.forward_vector_sets(
                out, coords_all, weights_flat, w_start, atom_radii,
                tr_flat, tr_start, bool(self.radius_type_indexed),
                set_start, set_end, set_example, set_choff, set_t,
                origins, res, grm, self.radius_multiple, bool(self.binary))
        else:
            radii_all = np.zeros(natoms_total, dtype=np.float64)
            tidx_all = np.zeros(natoms_total, dtype=np.int64)
            for s, (e, choff, cs, coords) in enumerate(placed):
                if cs.num_atoms == 0:
                    continue
                if cs.has_vector_types:
                    raise ValueError("cannot mix index- and vector-typed sets in one batch")
                radii_all[set_start[s]:set_end[s]] = cs.radii.astype(np.float64) * scale
                tidx_all[set_start[s]:set_end[s]] = cs.type_index
            _kernels.forward_index_sets(
                out, coords_all, radii_all, tidx_all,
                set_start, set_end, set_example, set_choff, set_t,
                origins, res, grm, self.radius_multiple, bool(self.binary))


def save_grid(path, grid, origin=None, resolution=None, channel_labels=None,
              extra=None) -> str:
    """Write a grid as NPY plus a JSON sidecar describing its geometry.

    The sidecar (same stem, .json suffix) records origin(s), resolution,
    and channel names for downstream consumers. Returns the sidecar path.
    """
    path = os.fspath(path)
    write_npy(path, grid)
    arr = grid.array if hasattr(grid, "array") else np.asarray(grid)
    meta = {"shape": list(arr.shape)}
    if resolution is not None:
        meta["resolution"] = float(resolution)
    if origin is not None:
        origin = np.asarray(origin, dtype=np.float64)
        if origin.ndim == 1:
            meta["origin"] = [float(v) for v in origin]
        else:
            meta["origins"] = [[float(v) for v in row] for row in origin]
    if channel_labels is not None:
        meta["channels"] = list(channel_labels)
    if extra:
        meta.update(extra)
    sidecar = os.path.splitext(path)[0] + ".json"
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar
