"""voxmol: molecular structures to multidimensional density grids.

Parses structures, types atoms, samples strategically composed example
batches, and voxelizes them into dense float grids with differentiable
forward/backward gridding and rigid-transform data augmentation.
"""

from .errors import ConfigError, FormatError, ParseError, VoxmolError
from .grids import (GridShape, GridView, OwnedGrid, copy_into, make_grid,
                    read_npy, view_over, write_npy)
from .chemio import (RawAtom, RawMolecule, StructureCache, parse_molecule_file,
                     parse_pdb, parse_xyz, read_cache, write_cache)
from .atomtypes import (CallbackTyper, CoordinateSet, TyperTable,
                        default_element_typer, load_typer, make_vector_types,
                        type_molecule)
from .geom import (Quaternion, Transform, make_transform,
                   random_unit_quaternion, transform_example)
from .sampling import Example, ExampleProvider, ExampleSpec, parse_types_line

__version__ = "0.1.0"

# The voxelizer pulls in numba; load it lazily so thread limits can still be
# configured through the environment before the first kernel compiles.
_LAZY_VOXELIZER = {"GridMaker", "save_grid", "channel_count", "channel_names",
                   "set_num_threads", "get_num_threads"}


def __getattr__(name):
    if name in _LAZY_VOXELIZER:
        from . import voxelizer

        return getattr(voxelizer, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | _LAZY_VOXELIZER)
