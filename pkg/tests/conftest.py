import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from voxmol.atomtypes import CoordinateSet


XYZ_METHANE = """5
methane
C 0.000 0.000 0.000
H 0.629 0.629 0.629
H -0.629 -0.629 0.629
H -0.629 0.629 -0.629
H 0.629 -0.629 -0.629
"""

XYZ_WATER = """3
water
O 0.000 0.000 0.117
H 0.757 0.000 -0.469
H -0.757 0.000 -0.469
"""

PDB_TINY = """HEADER    TEST
REMARK    nothing to see
ATOM      1  N   ALA A   1       1.000   2.000   3.000  1.00  0.00           N
ATOM      2  CA  ALA A   1       2.100   2.500   3.200  1.00  0.00           C
HETATM    3 FE   HEM A   2       4.000   4.000   4.000  1.00  0.00          FE
END
"""


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def methane_file(tmp_path):
    path = tmp_path / "methane.xyz"
    path.write_text(XYZ_METHANE)
    return path


@pytest.fixture
def water_file(tmp_path):
    path = tmp_path / "water.xyz"
    path.write_text(XYZ_WATER)
    return path


@pytest.fixture
def tiny_pdb_file(tmp_path):
    path = tmp_path / "tiny.pdb"
    path.write_text(PDB_TINY)
    return path


def random_coordinate_set(rng, n_atoms, num_types=14, extent=8.0, index_mode=True):
    coords = rng.uniform(-extent, extent, size=(n_atoms, 3)).astype(np.float32)
    radii = rng.uniform(1.0, 2.2, size=n_atoms).astype(np.float32)
    if index_mode:
        return CoordinateSet(coords=coords, radii=radii, num_types=num_types,
                             type_index=rng.integers(0, num_types, size=n_atoms))
    vec = rng.uniform(0.0, 1.0, size=(n_atoms, num_types)).astype(np.float32)
    return CoordinateSet(coords=coords, radii=radii, num_types=num_types,
                         type_vector=vec)


def write_xyz(path, coords, elements=None, name="mol"):
    coords = np.asarray(coords, dtype=float)
    elements = elements or ["C"] * len(coords)
    lines = [str(len(coords)), name]
    for el, (x, y, z) in zip(elements, coords):
        lines.append(f"{el} {x:.6f} {y:.6f} {z:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)
