"""Dense multidimensional float grids.

Two flavors with the same element access surface: :class:`OwnedGrid` owns a
zero-initialized buffer, :class:`GridView` aliases storage owned by someone
else (typically a numpy array) without copying. Layout is always row-major
and contiguous; element types are float32 (the default everywhere) or
float64.

Grids serialize to the NPY v1.0 container (little-endian ``<f4``/``<f8``,
C order) via :func:`write_npy` / :func:`read_npy` for interchange with
array tooling.
"""

from __future__ import annotations

import ast
import struct

import numpy as np

from .errors import FormatError

MAX_DIMS = 6

_DTYPES = {
    "f32": np.dtype("<f4"),
    "f64": np.dtype("<f8"),
    "float32": np.dtype("<f4"),
    "float64": np.dtype("<f8"),
}


def _resolve_dtype(element_type) -> np.dtype:
    if isinstance(element_type, str):
        key = element_type.lower()
        if key in _DTYPES:
            return _DTYPES[key]
        raise TypeError(f"unsupported element type {element_type!r}; use 'f32' or 'f64'")
    dt = np.dtype(element_type)
    if dt not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise TypeError(f"unsupported element type {dt}; only float32/float64 grids exist")
    return dt


class GridShape:
    """Shape of a 1- to 6-dimensional grid, with row-major strides."""

    __slots__ = ("dims",)

    def __init__(self, *dims):
        if len(dims) == 1 and not isinstance(dims[0], (int, np.integer)):
            dims = tuple(dims[0])
        if not 1 <= len(dims) <= MAX_DIMS:
            raise ValueError(f"grids support 1..{MAX_DIMS} dimensions, got {len(dims)}")
        out = []
        for d in dims:
            if int(d) != d or int(d) < 1:
                raise ValueError(f"every extent must be a positive integer, got {d!r}")
            out.append(int(d))
        self.dims = tuple(out)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        n = 1
        for d in self.dims:
            n *= d
        return n

    @property
    def strides(self) -> tuple[int, ...]:
        """Row-major strides in elements: stride[-1] == 1."""
        strides = [1] * len(self.dims)
        for i in range(len(self.dims) - 2, -1, -1):
            strides[i] = strides[i + 1] * self.dims[i + 1]
        return tuple(strides)

    def offset(self, index) -> int:
        """Flat row-major offset of a (bounds-checked) index tuple."""
        index = tuple(index)
        if len(index) != len(self.dims):
            raise IndexError(f"expected {len(self.dims)} indices, got {len(index)}")
        flat = 0
        for i, (ix, d, s) in enumerate(zip(index, self.dims, self.strides)):
            if not 0 <= ix < d:
                raise IndexError(f"index {ix} out of bounds for axis {i} with extent {d}")
            flat += ix * s
        return flat

    def __iter__(self):
        return iter(self.dims)

    def __len__(self):
        return len(self.dims)

    def __eq__(self, other):
        if isinstance(other, GridShape):
            return self.dims == other.dims
        return self.dims == tuple(other)

    def __hash__(self):
        return hash(self.dims)

    def __repr__(self):
        return f"GridShape{self.dims}"


class _GridBase:
    """Common element access for owned grids and views."""

    _data: np.ndarray

    @property
    def shape(self) -> GridShape:
        return GridShape(self._data.shape)

    @property
    def dtype(self) -> np.dtype:
        return self._data.dtype

    @property
    def size(self) -> int:
        return self._data.size

    @property
    def array(self) -> np.ndarray:
        """The aliasing numpy array. Writes are visible to the grid."""
        return self._data

    def tonumpy(self) -> np.ndarray:
        """A copy of the grid contents as a fresh numpy array."""
        return self._data.copy()

    def get(self, index) -> float:
        return float(self._data[self._check_index(index)])

    def set(self, index, value) -> None:
        self._data[self._check_index(index)] = value

    def _check_index(self, index):
        index = tuple(index) if isinstance(index, (tuple, list)) else (index,)
        GridShape(self._data.shape).offset(index)  # bounds check, rejects negatives
        return index

    def __getitem__(self, index):
        return self._data[index]

    def __setitem__(self, index, value):
        self._data[index] = value

    def fill(self, value) -> None:
        self._data.fill(value)

    def __repr__(self):
        return f"{type(self).__name__}(shape={self._data.shape}, dtype={self._data.dtype})"


class OwnedGrid(_GridBase):
    """A grid that owns its own contiguous, zero-initialized storage."""

    def __init__(self, shape, element_type="f32"):
        if not isinstance(shape, GridShape):
            shape = GridShape(shape)
        self._data = np.zeros(shape.dims, dtype=_resolve_dtype(element_type))


class GridView(_GridBase):
    """A grid over a preexisting buffer; never copies or frees it.

    The view aliases the buffer, so writes through either side are visible
    to the other. Keep the owner alive for the lifetime of the view (numpy
    reference semantics enforce this when the source is an ndarray).
    """

    def __init__(self, buffer, shape):
        if not isinstance(shape, GridShape):
            shape = GridShape(shape)
        if isinstance(buffer, _GridBase):
            buffer = buffer.array
        if isinstance(buffer, np.ndarray):
            dt = buffer.dtype
            if dt not in (np.dtype(np.float32), np.dtype(np.float64)):
                raise TypeError(f"buffer dtype {dt} is not a float32/float64 grid type")
            if not buffer.flags.c_contiguous:
                raise ValueError("buffer must be C-contiguous to view without a copy")
            flat = buffer.reshape(-1)  # view, no copy for contiguous input
        else:
            mem = memoryview(buffer)
            if mem.format == "f":
                dt = np.dtype(np.float32)
            elif mem.format == "d":
                dt = np.dtype(np.float64)
            else:
                raise TypeError(f"buffer format {mem.format!r} is not float32/float64")
            if not mem.contiguous:
                raise ValueError("buffer must be contiguous to view without a copy")
            flat = np.frombuffer(mem, dtype=dt)
        if flat.size < shape.size:
            raise ValueError(
                f"buffer holds {flat.size} elements, shape {shape.dims} needs {shape.size}"
            )
        self._data = flat[: shape.size].reshape(shape.dims)


def make_grid(shape, element_type="f32") -> OwnedGrid:
    """Allocate a zeroed grid. The shape must have positive extents."""
    return OwnedGrid(shape, element_type)


def view_over(buffer, shape, element_type=None) -> GridView:
    """View a contiguous float buffer as a grid, without copying.

    The buffer's element type must match ``element_type`` exactly when one
    is requested; a float64 buffer never silently becomes a float32 grid.
    """
    view = GridView(buffer, shape)
    if element_type is not None and view.dtype != _resolve_dtype(element_type):
        raise TypeError(
            f"buffer dtype {view.dtype} does not match requested {element_type}; "
            "source and destination dtypes must match"
        )
    return view


def copy_into(src, dst) -> None:
    """Elementwise copy between grids of identical shape and element type."""
    src_arr = src.array if isinstance(src, _GridBase) else np.asarray(src)
    dst_arr = dst.array if isinstance(dst, _GridBase) else dst
    if src_arr.shape != dst_arr.shape:
        raise ValueError(f"shape mismatch: {src_arr.shape} vs {dst_arr.shape}")
    if src_arr.dtype != dst_arr.dtype:
        raise ValueError(f"dtype mismatch: {src_arr.dtype} vs {dst_arr.dtype}")
    np.copyto(dst_arr, src_arr)


# ---- NPY v1.0 container ----

_NPY_MAGIC = b"\x93NUMPY"


def write_npy(path, array) -> None:
    """Write an array or grid to NPY v1.0 (little-endian, C order)."""
    if isinstance(array, _GridBase):
        array = array.array
    array = np.ascontiguousarray(array)
    if array.dtype == np.float32:
        descr = "<f4"
    elif array.dtype == np.float64:
        descr = "<f8"
    else:
        raise TypeError(f"only float32/float64 grids serialize to NPY, got {array.dtype}")
    data = array.astype(descr, copy=False)

    shape_repr = repr(tuple(int(d) for d in array.shape))
    if len(array.shape) == 1:
        shape_repr = f"({int(array.shape[0])},)"
    header = f"{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape_repr}, }}"
    # pad with spaces so magic+version+len+header is a multiple of 64, ending in \n
    unpadded = len(_NPY_MAGIC) + 2 + 2 + len(header) + 1
    pad = (64 - unpadded % 64) % 64
    header = header + " " * pad + "\n"

    with open(path, "wb") as fh:
        fh.write(_NPY_MAGIC)
        fh.write(bytes([1, 0]))
        fh.write(struct.pack("<H", len(header)))
        fh.write(header.encode("latin1"))
        fh.write(data.tobytes())


def read_npy(path) -> np.ndarray:
    """Read an NPY v1.0 file written by :func:`write_npy` (or numpy itself)."""
    with open(path, "rb") as fh:
        magic = fh.read(6)
        if magic != _NPY_MAGIC:
            raise FormatError(f"{path}: not an NPY file (bad magic {magic!r})")
        version = fh.read(2)
        if len(version) < 2 or version[0] != 1:
            raise FormatError(f"{path}: unsupported NPY version {tuple(version)!r}")
        raw_len = fh.read(2)
        if len(raw_len) < 2:
            raise FormatError(f"{path}: truncated NPY header")
        (hlen,) = struct.unpack("<H", raw_len)
        header = fh.read(hlen)
        if len(header) < hlen:
            raise FormatError(f"{path}: truncated NPY header")
        try:
            meta = ast.literal_eval(header.decode("latin1"))
        except (ValueError, SyntaxError) as exc:
            raise FormatError(f"{path}: unparseable NPY header") from exc
        descr = meta.get("descr")
        if descr not in ("<f4", "<f8"):
            raise FormatError(f"{path}: unsupported descr {descr!r}, expected <f4/<f8")
        if meta.get("fortran_order"):
            raise FormatError(f"{path}: fortran-order NPY files are not supported")
        shape = tuple(meta.get("shape", ()))
        count = 1
        for d in shape:
            count *= int(d)
        payload = fh.read()
    expected = count * np.dtype(descr).itemsize
    if len(payload) < expected:
        raise FormatError(f"{path}: truncated NPY payload ({len(payload)} < {expected} bytes)")
    return np.frombuffer(payload[:expected], dtype=descr).reshape(shape).copy()
