"""Atom typing: map raw atoms to channel indices (or one-hot vectors) and radii.

The built-in scheme types by element with 14 heavy-atom channels and
hydrogens dropped; arbitrary schemes plug in through a callback. A typed
molecule becomes a :class:`CoordinateSet`, the unit the voxelizer consumes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .chemio import RawAtom, RawMolecule, element_number
from .errors import ParseError
from .validation import check_coords

log = logging.getLogger(__name__)


@dataclass
class CoordinateSet:
    """Typed coordinates for one molecule.

    Exactly one of ``type_index`` (integer types) or ``type_vector``
    (per-atom weight rows, one-hot when produced by
    :func:`make_vector_types`) is populated. ``type_radii`` carries the
    per-type radii of the originating table when one was used; the
    voxelizer needs it for type-indexed radii with vector types.
    """

    coords: np.ndarray                      # (N, 3) float32 Angstrom
    radii: np.ndarray                       # (N,) float32 Angstrom
    num_types: int
    type_index: np.ndarray | None = None    # (N,) int64
    type_vector: np.ndarray | None = None   # (N, T) float32
    type_names: list[str] | None = None
    type_radii: np.ndarray | None = None    # (T,) float32

    def __post_init__(self):
        self.coords = check_coords(self.coords)
        self.radii = np.ascontiguousarray(self.radii, dtype=np.float32).reshape(-1)
        n = self.coords.shape[0]
        if self.radii.shape[0] != n:
            raise ValueError(f"radii length {self.radii.shape[0]} != atom count {n}")
        if n and not (self.radii > 0).all():
            raise ValueError("all radii must be strictly positive")
        if self.num_types < 1:
            raise ValueError("num_types must be >= 1")
        if (self.type_index is None) == (self.type_vector is None):
            raise ValueError("exactly one of type_index / type_vector must be set")
        if self.type_index is not None:
            self.type_index = np.ascontiguousarray(self.type_index, dtype=np.int64).reshape(-1)
            if self.type_index.shape[0] != n:
                raise ValueError("type_index length does not match atom count")
            if n and (self.type_index.min() < 0 or self.type_index.max() >= self.num_types):
                raise ValueError(f"type indices must lie in [0, {self.num_types})")
        else:
            self.type_vector = np.ascontiguousarray(self.type_vector, dtype=np.float32)
            if self.type_vector.shape != (n, self.num_types):
                raise ValueError(
                    f"type_vector shape {self.type_vector.shape} != ({n}, {self.num_types})"
                )
            if n and self.type_vector.min() < 0:
                raise ValueError("type_vector components must be >= 0")
        if self.type_radii is not None:
            self.type_radii = np.ascontiguousarray(self.type_radii, dtype=np.float32).reshape(-1)
            if self.type_radii.shape[0] != self.num_types:
                raise ValueError("type_radii length does not match num_types")

    @property
    def num_atoms(self) -> int:
        return self.coords.shape[0]

    @property
    def has_vector_types(self) -> bool:
        return self.type_vector is not None

    def centroid(self) -> np.ndarray:
        """Mean position, or the origin for an empty set."""
        if self.num_atoms == 0:
            return np.zeros(3, dtype=np.float64)
        return self.coords.astype(np.float64).mean(axis=0)

    def with_coords(self, coords) -> "CoordinateSet":
        """A copy of this set with replaced coordinates (types/radii shared)."""
        return CoordinateSet(
            coords=coords,
            radii=self.radii,
            num_types=self.num_types,
            type_index=self.type_index,
            type_vector=self.type_vector,
            type_names=self.type_names,
            type_radii=self.type_radii,
        )


class TyperTable:
    """Element-keyed typing table: type names, radii, and an element map.

    Elements absent from both the map and the ignore set are dropped with a
    one-time warning; explicitly ignored elements (hydrogens, noble gases in
    the default table) are dropped silently.
    """

    def __init__(self, type_names, radii, element_map, ignored_elements=(), name="typer"):
        self.type_names = list(type_names)
        self.radii = np.asarray(radii, dtype=np.float32).reshape(-1)
        if self.radii.shape[0] != len(self.type_names):
            raise ValueError("radii length does not match type_names")
        if not (self.radii > 0).all():
            raise ValueError("all type radii must be strictly positive")
        self.element_map = dict(element_map)
        for z, idx in self.element_map.items():
            if not 0 <= idx < len(self.type_names):
                raise ValueError(f"element {z} maps to out-of-range type {idx}")
        self.ignored_elements = frozenset(ignored_elements)
        self.name = name
        self._warned: set[int] = set()

    @property
    def num_types(self) -> int:
        return len(self.type_names)

    def type_of(self, element: int) -> int | None:
        """Type index for an element, or None when the atom is dropped."""
        idx = self.element_map.get(element)
        if idx is not None:
            return idx
        if element not in self.ignored_elements and element not in self._warned:
            self._warned.add(element)
            log.warning("element %d is not mapped by typer %r; ignoring its atoms",
                        element, self.name)
        return None

    def assign(self, atom: RawAtom) -> tuple[int, float] | None:
        idx = self.type_of(atom.element)
        if idx is None:
            return None
        return idx, float(self.radii[idx])

    def __repr__(self):
        return f"TyperTable({self.name!r}, {self.num_types} types)"


class CallbackTyper:
    """User-supplied typing: ``fn(atom) -> (type_index, radius)``.

    A negative type index drops the atom; an index >= ``num_types`` is an
    error. The callback must be a pure function of the atom.
    """

    def __init__(self, fn, num_types, type_names=None, name="callback"):
        if num_types < 1:
            raise ValueError("num_types must be >= 1")
        self.fn = fn
        self._num_types = int(num_types)
        self.type_names = (list(type_names) if type_names is not None
                           else [f"type{i}" for i in range(num_types)])
        if len(self.type_names) != self._num_types:
            raise ValueError("type_names length does not match num_types")
        self.name = name

    @property
    def num_types(self) -> int:
        return self._num_types

    def assign(self, atom: RawAtom) -> tuple[int, float] | None:
        result = self.fn(atom)
        if isinstance(result, tuple):
            idx, radius = result
        else:
            idx, radius = result, 1.0
        idx = int(idx)
        if idx < 0:
            return None
        if idx >= self._num_types:
            raise ValueError(
                f"callback typer {self.name!r} returned type {idx} >= num_types {self._num_types}"
            )
        radius = float(radius)
        if radius <= 0:
            raise ValueError(f"callback typer {self.name!r} returned radius {radius} <= 0")
        return idx, radius


# Default element table. Radii follow the AutoDock/XS lineage; hydrogens and
# noble gases are dropped, common metals collapse into one channel, and the
# remaining mapped heavy elements share a generic channel.
_DEFAULT_TYPES = (
    ("C", 1.90), ("N", 1.80), ("O", 1.70), ("S", 2.00), ("P", 2.10),
    ("F", 1.50), ("Cl", 1.80), ("Br", 2.00), ("I", 2.20), ("B", 1.92),
    ("Si", 2.20), ("Se", 1.90), ("Metal", 1.20), ("Other", 1.70),
)

_SINGLE_ELEMENT_TYPES = {
    "C": 6, "N": 7, "O": 8, "S": 16, "P": 15, "F": 9, "Cl": 17,
    "Br": 35, "I": 53, "B": 5, "Si": 14, "Se": 34,
}

# groups 1-2, transition and post-transition metals, lanthanides/actinides
_METALS = (
    (3, 4, 11, 12, 13) + tuple(range(19, 32)) + tuple(range(37, 51))
    + tuple(range(55, 84)) + (87, 88) + tuple(range(89, 104))
)

_OTHER_ELEMENTS = (32, 33, 51, 52, 84, 85)  # metalloids and odd nonmetals

_IGNORED_ELEMENTS = (1, 2, 10, 18, 36, 54, 86)  # hydrogen and noble gases


def default_element_typer() -> TyperTable:
    """The built-in 14-type element table (hydrogens ignored)."""
    names = [n for n, _ in _DEFAULT_TYPES]
    radii = [r for _, r in _DEFAULT_TYPES]
    emap: dict[int, int] = {}
    for sym, z in _SINGLE_ELEMENT_TYPES.items():
        emap[z] = names.index(sym)
    metal_idx = names.index("Metal")
    for z in _METALS:
        if z not in emap:
            emap[z] = metal_idx
    other_idx = names.index("Other")
    for z in _OTHER_ELEMENTS:
        emap[z] = other_idx
    return TyperTable(names, radii, emap, ignored_elements=_IGNORED_ELEMENTS,
                      name="element14")


def load_typer(path, name=None) -> TyperTable:
    """Load a typer table from text: ``name radius element[,element...]``.

    Elements are symbols or atomic numbers; lines starting with '#' and
    blank lines are skipped.
    """
    names, radii = [], []
    emap: dict[int, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError("expected 'name radius element[,element...]'",
                                 source=str(path), line=lineno)
            try:
                radius = float(parts[1])
            except ValueError:
                raise ParseError(f"bad radius {parts[1]!r}", source=str(path), line=lineno)
            if radius <= 0:
                raise ParseError(f"radius must be positive, got {radius}",
                                 source=str(path), line=lineno)
            idx = len(names)
            names.append(parts[0])
            radii.append(radius)
            for tok in parts[2].split(","):
                z = element_number(tok)
                if z is None:
                    raise ParseError(f"unknown element {tok!r}", source=str(path), line=lineno)
                if z in emap:
                    raise ParseError(f"element {tok!r} mapped twice",
                                     source=str(path), line=lineno)
                emap[z] = idx
    if not names:
        raise ParseError("typer file defines no types", source=str(path), line=1)
    return TyperTable(names, radii, emap, name=name or str(path))


def type_molecule(mol: RawMolecule, typer) -> CoordinateSet:
    """Type every atom of a molecule, dropping atoms the typer ignores."""
    coords, radii, indices = [], [], []
    for atom in mol.atoms:
        assigned = typer.assign(atom)
        if assigned is None:
            continue
        idx, radius = assigned
        coords.append((atom.x, atom.y, atom.z))
        radii.append(radius)
        indices.append(idx)
    n = len(coords)
    type_radii = getattr(typer, "radii", None)
    return CoordinateSet(
        coords=np.array(coords, dtype=np.float32).reshape(n, 3),
        radii=np.array(radii, dtype=np.float32),
        num_types=typer.num_types,
        type_index=np.array(indices, dtype=np.int64),
        type_names=list(getattr(typer, "type_names", [])) or None,
        type_radii=type_radii,
    )


def make_vector_types(cs: CoordinateSet) -> CoordinateSet:
    """Convert index types to one-hot vector rows; coords and radii unchanged."""
    if cs.has_vector_types:
        raise ValueError("coordinate set already uses vector types")
    vec = np.zeros((cs.num_atoms, cs.num_types), dtype=np.float32)
    if cs.num_atoms:
        vec[np.arange(cs.num_atoms), cs.type_index] = 1.0
    return CoordinateSet(
        coords=cs.coords,
        radii=cs.radii,
        num_types=cs.num_types,
        type_vector=vec,
        type_names=cs.type_names,
        type_radii=cs.type_radii,
    )
