"""Structure file parsing and the single-file binary structure cache.

Parsers cover standard XYZ and the fixed-column ATOM/HETATM subset of PDB.
They stop at coordinates and elements; bond perception, protonation, and
charge assignment are deliberately out of scope.

The MOLC cache packs many small structure files into one memory-mappable
binary file with an embedded name index, so a training run touches a single
file no matter how many structures it samples.
"""

from __future__ import annotations

import logging
import mmap
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ParseError

log = logging.getLogger(__name__)

# Z = index + 1
PERIODIC_SYMBOLS = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
    "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm",
    "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds",
    "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
)

SYMBOL_TO_Z = {sym.lower(): z for z, sym in enumerate(PERIODIC_SYMBOLS, start=1)}

MAX_ELEMENT = len(PERIODIC_SYMBOLS)


def element_number(token: str) -> int | None:
    """Resolve an element symbol (case-insensitive) or atomic number string."""
    tok = token.strip()
    if not tok:
        return None
    z = SYMBOL_TO_Z.get(tok.lower())
    if z is not None:
        return z
    if tok.isdigit():
        z = int(tok)
        if 1 <= z <= MAX_ELEMENT:
            return z
    return None


@dataclass(frozen=True)
class RawAtom:
    """One untyped atom: atomic number plus Cartesian position in Angstrom."""

    element: int
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not 1 <= self.element <= MAX_ELEMENT:
            raise ValueError(f"element {self.element} outside [1, {MAX_ELEMENT}]")
        if not all(np.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite atom position ({self.x}, {self.y}, {self.z})")

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass
class RawMolecule:
    """A named, ordered list of atoms, as read from a structure file."""

    name: str = ""
    atoms: list[RawAtom] = field(default_factory=list)

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    def coords(self) -> np.ndarray:
        """Positions as an (N, 3) float32 array."""
        if not self.atoms:
            return np.zeros((0, 3), dtype=np.float32)
        return np.array([[a.x, a.y, a.z] for a in self.atoms], dtype=np.float32)

    def elements(self) -> np.ndarray:
        return np.array([a.element for a in self.atoms], dtype=np.uint8)

    def __eq__(self, other):
        if not isinstance(other, RawMolecule):
            return NotImplemented
        return self.name == other.name and self.atoms == other.atoms


# ---- XYZ ----

def parse_xyz(text: str, name: str = "") -> RawMolecule:
    """Parse standard XYZ text: count line, comment line, then symbol x y z."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("missing atom count line", source=name or "xyz", line=1)
    try:
        count = int(lines[0].strip())
    except ValueError:
        raise ParseError(f"bad atom count {lines[0].strip()!r}", source=name or "xyz", line=1)
    if count < 0:
        raise ParseError(f"negative atom count {count}", source=name or "xyz", line=1)

    atoms = []
    for i in range(count):
        lineno = 3 + i
        if lineno - 1 >= len(lines):
            raise ParseError(
                f"expected {count} atom lines, file ends after {i}",
                source=name or "xyz", line=lineno,
            )
        parts = lines[lineno - 1].split()
        if len(parts) < 4:
            raise ParseError("expected 'symbol x y z'", source=name or "xyz", line=lineno)
        z = element_number(parts[0])
        if z is None:
            raise ParseError(f"unknown element symbol {parts[0]!r}",
                             source=name or "xyz", line=lineno)
        try:
            px, py, pz = float(parts[1]), float(parts[2]), float(parts[3])
        except ValueError:
            raise ParseError("malformed coordinate", source=name or "xyz", line=lineno)
        if not (np.isfinite(px) and np.isfinite(py) and np.isfinite(pz)):
            raise ParseError("non-finite coordinate", source=name or "xyz", line=lineno)
        atoms.append(RawAtom(z, px, py, pz))
    return RawMolecule(name=name, atoms=atoms)


# ---- PDB (ATOM/HETATM subset) ----

def _pdb_element(line: str, lineno: int, source: str) -> int:
    field77 = line[76:78].strip() if len(line) >= 77 else ""
    if field77:
        z = element_number(field77)
        if z is None:
            raise ParseError(
                f"unresolvable element {field77!r} in record {line[:27].rstrip()!r}",
                source=source, line=lineno,
            )
        return z
    # fall back to the atom-name field (columns 13-16)
    atom_name = line[12:16] if len(line) >= 16 else line[12:]
    stripped = atom_name.strip()
    if len(atom_name) >= 2 and atom_name[0] != " ":
        z = element_number(atom_name[:2])
        if z is not None:
            return z
    for ch in stripped:
        if ch.isalpha():
            z = element_number(ch)
            if z is not None:
                return z
            break
    raise ParseError(
        f"cannot resolve element from atom name {atom_name!r}",
        source=source, line=lineno,
    )


def parse_pdb(text: str, name: str = "") -> RawMolecule:
    """Parse ATOM/HETATM records from PDB text; all other records are skipped.

    Elements come from columns 77-78 with a fallback to the atom-name field.
    Only the first conformer is kept: altLoc must be blank or 'A', and
    parsing stops at the first ENDMDL.
    """
    source = name or "pdb"
    atoms = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        record = line[:6].strip()
        if record == "ENDMDL":
            break
        if record not in ("ATOM", "HETATM"):
            continue
        if len(line) >= 17 and line[16] not in (" ", "A"):
            continue
        try:
            px = float(line[30:38])
            py = float(line[38:46])
            pz = float(line[46:54])
        except (ValueError, IndexError):
            raise ParseError(
                f"non-numeric coordinates in record {line[:27].rstrip()!r}",
                source=source, line=lineno,
            )
        if not (np.isfinite(px) and np.isfinite(py) and np.isfinite(pz)):
            raise ParseError("non-finite coordinate", source=source, line=lineno)
        atoms.append(RawAtom(_pdb_element(line, lineno, source), px, py, pz))
    return RawMolecule(name=name, atoms=atoms)


# kept for symmetry with the documented operation name
parse_pdb_subset = parse_pdb


def parse_molecule_file(path) -> RawMolecule:
    """Parse a structure file, choosing the parser from the extension."""
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        text = fh.read()
    if ext == ".xyz":
        return parse_xyz(text, name=path)
    if ext in (".pdb", ".ent"):
        return parse_pdb(text, name=path)
    raise ValueError(f"unsupported structure format {ext!r} for {path} (use .xyz or .pdb)")


# ---- MOLC binary cache ----
#
# Layout (all integers and floats little-endian):
#   magic   "MOLC"
#   u32     version (1)
#   u64     entry count
#   entries u16 name length, UTF-8 name, u32 natoms,
#           natoms x (u8 element, 3 x f32 coords)     [13 bytes per atom]
#   index   sorted by name: u16 name length, UTF-8 name, u64 entry offset
#   footer  u64 offset of index start

MOLC_MAGIC = b"MOLC"
MOLC_VERSION = 1

_ATOM_DTYPE = np.dtype([("element", "u1"), ("x", "<f4"), ("y", "<f4"), ("z", "<f4")])
assert _ATOM_DTYPE.itemsize == 13


def write_cache(molecules, path) -> None:
    """Write molecules to a MOLC cache file. Duplicate names: last one wins."""
    unique: dict[str, RawMolecule] = {}
    for mol in molecules:
        if mol.name in unique:
            log.warning("duplicate structure name %r in cache; keeping the last", mol.name)
        unique[mol.name] = mol

    offsets: dict[str, int] = {}
    with open(path, "wb") as fh:
        fh.write(MOLC_MAGIC)
        fh.write(struct.pack("<I", MOLC_VERSION))
        fh.write(struct.pack("<Q", len(unique)))
        for name, mol in unique.items():
            name_bytes = name.encode("utf-8")
            if len(name_bytes) > 0xFFFF:
                raise ValueError(f"structure name too long ({len(name_bytes)} bytes)")
            offsets[name] = fh.tell()
            fh.write(struct.pack("<H", len(name_bytes)))
            fh.write(name_bytes)
            fh.write(struct.pack("<I", mol.num_atoms))
            packed = np.empty(mol.num_atoms, dtype=_ATOM_DTYPE)
            for i, atom in enumerate(mol.atoms):
                packed[i] = (atom.element, atom.x, atom.y, atom.z)
            fh.write(packed.tobytes())
        index_offset = fh.tell()
        for name in sorted(offsets):
            name_bytes = name.encode("utf-8")
            fh.write(struct.pack("<H", len(name_bytes)))
            fh.write(name_bytes)
            fh.write(struct.pack("<Q", offsets[name]))
        fh.write(struct.pack("<Q", index_offset))


class StructureCache:
    """Read side of a MOLC cache: memory-mapped, index-directed lookups.

    Lookups after open are thread-safe (reads go through offsets into the
    mapping, never a shared file cursor).
    """

    def __init__(self, path):
        self.path = os.fspath(path)
        self._fh = open(self.path, "rb")
        try:
            size = os.fstat(self._fh.fileno()).st_size
            if size < 24:
                raise FormatError(f"{self.path}: file too small to be a MOLC cache")
            self._mm = mmap.mmap(self._fh.fileno(), 0, access=mmap.ACCESS_READ)
        except FormatError:
            self._fh.close()
            raise
        try:
            self._index = self._load_index()
        except Exception:
            self.close()
            raise

    def _load_index(self) -> dict[str, int]:
        mm = self._mm
        if mm[:4] != MOLC_MAGIC:
            raise FormatError(f"{self.path}: bad magic {bytes(mm[:4])!r}")
        (version,) = struct.unpack_from("<I", mm, 4)
        if version != MOLC_VERSION:
            raise FormatError(f"{self.path}: unsupported cache version {version}")
        (count,) = struct.unpack_from("<Q", mm, 8)
        (index_offset,) = struct.unpack_from("<Q", mm, len(mm) - 8)
        if not 16 <= index_offset <= len(mm) - 8:
            raise FormatError(f"{self.path}: index offset {index_offset} out of range")
        index: dict[str, int] = {}
        pos = index_offset
        try:
            for _ in range(count):
                (nlen,) = struct.unpack_from("<H", mm, pos)
                pos += 2
                name = bytes(mm[pos:pos + nlen]).decode("utf-8")
                pos += nlen
                (off,) = struct.unpack_from("<Q", mm, pos)
                pos += 8
                if not 16 <= off < index_offset:
                    raise FormatError(f"{self.path}: entry offset {off} out of range")
                index[name] = off
        except (struct.error, UnicodeDecodeError) as exc:
            raise FormatError(f"{self.path}: truncated or corrupt index") from exc
        if pos != len(mm) - 8:
            raise FormatError(f"{self.path}: index does not span to footer")
        return index

    def lookup(self, name: str) -> RawMolecule:
        """Fetch one stored molecule by name without touching other entries."""
        if self._mm is None:
            raise RuntimeError(f"cache {self.path} is closed")
        try:
            off = self._index[name]
        except KeyError:
            raise KeyError(f"structure {name!r} not found in {self.path}") from None
        mm = self._mm
        try:
            (nlen,) = struct.unpack_from("<H", mm, off)
            off += 2 + nlen
            (natoms,) = struct.unpack_from("<I", mm, off)
            off += 4
            blob = bytes(mm[off:off + natoms * _ATOM_DTYPE.itemsize])
            if len(blob) != natoms * _ATOM_DTYPE.itemsize:
                raise FormatError(f"{self.path}: truncated entry for {name!r}")
            packed = np.frombuffer(blob, dtype=_ATOM_DTYPE)
        except struct.error as exc:
            raise FormatError(f"{self.path}: truncated entry for {name!r}") from exc
        atoms = [
            RawAtom(int(rec["element"]), float(rec["x"]), float(rec["y"]), float(rec["z"]))
            for rec in packed
        ]
        return RawMolecule(name=name, atoms=atoms)

    def names(self) -> list[str]:
        return sorted(self._index)

    def __contains__(self, name) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self._index)

    def close(self) -> None:
        if getattr(self, "_mm", None) is not None:
            self._mm.close()
            self._mm = None
        if getattr(self, "_fh", None) is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def read_cache(path) -> StructureCache:
    """Open a MOLC cache for lookups."""
    return StructureCache(path)
