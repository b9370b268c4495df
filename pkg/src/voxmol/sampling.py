"""Example metadata parsing and strategically sampled, endless batch streams.

A metadata (.types) line is ``[group] label* file+`` where the leading
integer group is consumed only when grouping is enabled, tokens are labels
while they look like finite floats, and everything after the first
non-float token names structure files. Providers cycle the dataset forever,
optionally shuffling each pass, balancing binary classes, stratifying by
receptor and/or by a binned regression value, replicating examples, and
serving grouped frame sequences for recurrent training.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass

import numpy as np

from .atomtypes import (CoordinateSet, default_element_typer, make_vector_types,
                        type_molecule)
from .chemio import parse_molecule_file, read_cache
from .errors import ConfigError, ParseError

_FLOAT_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


def _try_float(token: str) -> float | None:
    """Parse a strict decimal float; rejects nan/inf/underscores."""
    if _FLOAT_RE.match(token):
        return float(token)
    return None


@dataclass
class ExampleSpec:
    """One metadata line: labels, structure file tokens, optional group id."""

    labels: list[float]
    files: list[str]
    group: int | None = None
    seqcont: bool = False

    def as_dict(self) -> dict:
        return {"group": self.group, "labels": list(self.labels),
                "files": list(self.files), "seqcont": self.seqcont}


@dataclass
class Example:
    """A resolved example: typed coordinate sets plus its metadata."""

    coord_sets: list[CoordinateSet]
    labels: list[float]
    group: int | None = None
    seqcont: bool = False

    @property
    def num_coord_sets(self) -> int:
        return len(self.coord_sets)


def parse_types_line(line: str, has_group: bool = False,
                     source=None, line_no=None) -> ExampleSpec:
    """Parse one metadata line. ``has_group`` consumes a leading integer."""
    tokens = line.split()
    if not tokens:
        raise ParseError("empty metadata line", source=source, line=line_no)
    group = None
    if has_group:
        try:
            group = int(tokens[0])
        except ValueError:
            raise ParseError(f"expected integer group id, got {tokens[0]!r}",
                             source=source, line=line_no)
        tokens = tokens[1:]
    labels: list[float] = []
    i = 0
    while i < len(tokens):
        value = _try_float(tokens[i])
        if value is None:
            break
        labels.append(value)
        i += 1
    files = tokens[i:]
    if not files:
        raise ParseError("metadata line names no structure files",
                         source=source, line=line_no)
    return ExampleSpec(labels=labels, files=files, group=group)


class _CyclePool:
    """Endless cursor over a fixed index list, reshuffling each wrap."""

    def __init__(self, items, rng, shuffle):
        self.items = list(items)
        self.rng = rng
        self.shuffle = shuffle
        self.pos = 0
        if shuffle:
            self._shuffle()

    def _shuffle(self):
        perm = self.rng.permutation(len(self.items))
        self.items = [self.items[i] for i in perm]

    def next(self):
        if self.pos >= len(self.items):
            self.pos = 0
            if self.shuffle:
                self._shuffle()
        item = self.items[self.pos]
        self.pos += 1
        return item


class _RoundRobin:
    """Rotate over keyed child pools, one draw per visit."""

    def __init__(self, keys):
        self.keys = list(keys)
        self.cursor = 0

    def next_key(self):
        key = self.keys[self.cursor % len(self.keys)]
        self.cursor += 1
        return key


class ExampleProvider:
    """Endless, strategically sampled example stream over metadata files.

    Options mirror the library surface: shuffle, balanced (binary class
    oversampling), stratify_receptor (equal draws per first-file key),
    numeric stratification over ``labels[stratify_pos]`` in bins of width
    ``stratify_step`` spanning [stratify_min, stratify_max), grouping for
    recurrent sequences, example replication, and structure caching.
    """

    _param_names = ("shuffle", "balanced", "stratify_receptor", "labelpos",
                    "stratify_pos", "stratify_abs", "stratify_min", "stratify_max",
                    "stratify_step", "group_batch_size", "max_group_size",
                    "cache_structs", "duplicate_first", "num_copies",
                    "make_vector_types", "data_root", "recmolcache", "ligmolcache")

    def __init__(self, shuffle=False, balanced=False, stratify_receptor=False,
                 labelpos=0, stratify_pos=1, stratify_abs=True, stratify_min=0,
                 stratify_max=0, stratify_step=0, group_batch_size=1,
                 max_group_size=0, cache_structs=True, duplicate_first=False,
                 num_copies=1, make_vector_types=False, data_root="",
                 recmolcache="", ligmolcache="", typers=None, seed=None):
        self.shuffle = shuffle
        self.balanced = balanced
        self.stratify_receptor = stratify_receptor
        self.labelpos = labelpos
        self.stratify_pos = stratify_pos
        self.stratify_abs = stratify_abs
        self.stratify_min = stratify_min
        self.stratify_max = stratify_max
        self.stratify_step = stratify_step
        self.group_batch_size = group_batch_size
        self.max_group_size = max_group_size
        self.cache_structs = cache_structs
        self.duplicate_first = duplicate_first
        self.num_copies = num_copies
        self.make_vector_types = make_vector_types
        self.data_root = data_root
        self.recmolcache = recmolcache
        self.ligmolcache = ligmolcache

        if typers is None:
            typers = (default_element_typer(),)
        elif not isinstance(typers, (list, tuple)):
            typers = (typers,)
        self.typers = tuple(typers)
        self._rng = seed if isinstance(seed, np.random.Generator) \
            else np.random.default_rng(seed)

        self._specs: list[ExampleSpec] = []
        self._sources: list[str] = []
        self._scheduler = None
        self._emit_queue: list[ExampleSpec] = []
        self._struct_memo: dict[tuple[str, int], CoordinateSet] = {}
        self._rec_cache = None
        self._lig_cache = None
        self._group_slots: list[dict] | None = None

    # -- estimator-style parameter access --

    def get_params(self, deep=True) -> dict:
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params) -> "ExampleProvider":
        for key, value in params.items():
            if key not in self._param_names:
                raise ValueError(f"unknown parameter {key!r} for ExampleProvider")
            setattr(self, key, value)
        self._scheduler = None
        self._group_slots = None
        return self

    # -- population --

    @property
    def size(self) -> int:
        """Number of example specs currently populated."""
        return len(self._specs)

    def populate(self, paths) -> None:
        """Parse one or more metadata files; blank and '#' lines skipped."""
        if isinstance(paths, (str, os.PathLike)):
            paths = [paths]
        has_group = self.max_group_size > 0
        for path in paths:
            path = os.fspath(path)
            with open(path, "r", encoding="utf-8") as fh:
                for line_no, line in enumerate(fh, start=1):
                    stripped = line.strip()
                    if not stripped or stripped.startswith("#"):
                        continue
                    self._specs.append(parse_types_line(
                        stripped, has_group=has_group, source=path, line_no=line_no))
            self._sources.append(path)
        self._scheduler = None
        self._group_slots = None

    def _check_config(self) -> None:
        if self.num_copies < 1:
            raise ConfigError(f"num_copies must be >= 1, got {self.num_copies}")
        if self.group_batch_size < 1:
            raise ConfigError(f"group_batch_size must be >= 1, got {self.group_batch_size}")
        if self.stratify_max > self.stratify_min and not self.stratify_step > 0:
            raise ConfigError("stratify_step must be > 0 when stratify_max > stratify_min")
        if self.labelpos < 0 or self.stratify_pos < 0:
            raise ConfigError("labelpos and stratify_pos must be >= 0")

    # -- structure resolution --

    def _caches(self):
        if self.recmolcache and self._rec_cache is None:
            self._rec_cache = read_cache(self.recmolcache)
        if self.ligmolcache and self._lig_cache is None:
            self._lig_cache = read_cache(self.ligmolcache)
        return self._rec_cache, self._lig_cache

    def _load_set(self, token: str, position: int) -> CoordinateSet:
        typer_idx = min(position, len(self.typers) - 1)
        memo_key = (token, typer_idx)
        if self.cache_structs and memo_key in self._struct_memo:
            return self._struct_memo[memo_key]
        rec_cache, lig_cache = self._caches()
        cache = rec_cache if position == 0 else lig_cache
        if cache is not None:
            mol = cache.lookup(token)
        else:
            path = token
            if self.data_root and not os.path.isabs(path):
                path = os.path.join(self.data_root, path)
            mol = parse_molecule_file(path)
        cs = type_molecule(mol, self.typers[typer_idx])
        if self.cache_structs:
            self._struct_memo[memo_key] = cs
        return cs

    def _resolve(self, spec: ExampleSpec, seqcont=False) -> Example:
        sets = [self._load_set(tok, i) for i, tok in enumerate(spec.files)]
        if self.duplicate_first and len(sets) >= 2:
            first = sets[0]
            expanded = []
            for other in sets[1:]:
                expanded.extend((first, other))
            sets = expanded
        if self.make_vector_types:
            sets = [make_vector_types(cs) if not cs.has_vector_types else cs
                    for cs in sets]
        return Example(coord_sets=sets, labels=list(spec.labels),
                       group=spec.group, seqcont=seqcont)

    @staticmethod
    def _padding_spec(like: ExampleSpec) -> ExampleSpec:
        # empty files mark continuation padding for short groups
        return ExampleSpec(labels=[0.0] * len(like.labels), files=[],
                           group=like.group, seqcont=True)

    # -- flat sampling --

    def _label_at(self, spec: ExampleSpec, pos: int, what: str) -> float:
        if pos >= len(spec.labels):
            raise ConfigError(
                f"{what}={pos} but a line for {spec.files[0]!r} has only "
                f"{len(spec.labels)} labels")
        return spec.labels[pos]

    def _stratum_of(self, spec: ExampleSpec, nbins: int) -> int:
        value = self._label_at(spec, self.stratify_pos, "stratify_pos")
        if self.stratify_abs:
            value = abs(value)
        idx = int(math.floor((value - self.stratify_min) / self.stratify_step))
        return min(max(idx, 0), nbins - 1)  # clamp: no example is dropped

    def _build_scheduler(self) -> None:
        if not self._specs:
            raise ConfigError("provider is not populated")
        self._check_config()
        numeric = self.stratify_max > self.stratify_min
        nbins = 1
        if numeric:
            span = float(self.stratify_max) - float(self.stratify_min)
            nbins = max(1, int(math.ceil(span / float(self.stratify_step) - 1e-9)))

        # stratum -> class -> receptor -> [spec indices]
        tree: dict[int, dict[int, dict[str, list[int]]]] = {}
        for idx, spec in enumerate(self._specs):
            stratum = self._stratum_of(spec, nbins) if numeric else 0
            if self.balanced:
                cls = 1 if self._label_at(spec, self.labelpos, "labelpos") != 0 else 0
            else:
                cls = -1
            receptor = spec.files[0] if self.stratify_receptor else ""
            tree.setdefault(stratum, {}).setdefault(cls, {}) \
                .setdefault(receptor, []).append(idx)

        if self.balanced:
            classes_present = {cls for node in tree.values() for cls in node}
            if classes_present != {0, 1}:
                missing = "nonzero" if 1 not in classes_present else "zero"
                raise ConfigError(
                    f"balanced=True but the dataset has no {missing}-label examples")

        sched = {
            "strata": _RoundRobin(sorted(tree)),
            "tree": {},
            "toggle": 1,  # balanced draws start with the nonzero class
        }
        for stratum, by_class in tree.items():
            class_nodes = {}
            for cls, by_rec in by_class.items():
                class_nodes[cls] = {
                    "receptors": _RoundRobin(by_rec.keys()),
                    "pools": {rec: _CyclePool(indices, self._rng, self.shuffle)
                              for rec, indices in by_rec.items()},
                }
            sched["tree"][stratum] = class_nodes
        self._scheduler = sched
        self._emit_queue = []

    def _draw_spec(self) -> ExampleSpec:
        if self._scheduler is None:
            self._build_scheduler()
        sched = self._scheduler
        stratum = sched["tree"][sched["strata"].next_key()]
        if self.balanced:
            wanted = sched["toggle"]
            sched["toggle"] = 1 - wanted
            node = stratum.get(wanted)
            if node is None:  # this stratum lacks the class; use what it has
                node = stratum[1 - wanted]
        else:
            node = stratum[-1]
        pool = node["pools"][node["receptors"].next_key()]
        return self._specs[pool.next()]

    def next_specs(self, n: int) -> list[ExampleSpec]:
        """Draw the next n example specs (metadata only, no structure I/O)."""
        if n < 1:
            raise ValueError(f"batch size must be >= 1, got {n}")
        if self.max_group_size > 0:
            raise ConfigError("grouped providers serve batches via next_group_batch")
        out = []
        while len(out) < n:
            if not self._emit_queue:
                spec = self._draw_spec()
                self._emit_queue.extend([spec] * self.num_copies)
            out.append(self._emit_queue.pop(0))
        return out

    def next_batch(self, n: int) -> list[Example]:
        """Resolve the next n examples; the stream never exhausts."""
        return [self._resolve(spec) for spec in self.next_specs(n)]

    def next(self) -> Example:
        return self.next_batch(1)[0]

    def __iter__(self):
        while True:
            yield self.next()

    # -- grouped sampling --

    def _build_groups(self) -> None:
        if not self._specs:
            raise ConfigError("provider is not populated")
        self._check_config()
        groups: dict[int, list[int]] = {}
        order: list[int] = []
        for idx, spec in enumerate(self._specs):
            if spec.group is None:
                raise ConfigError("grouped sampling needs group ids on every line")
            if spec.group not in groups:
                groups[spec.group] = []
                order.append(spec.group)
            groups[spec.group].append(idx)
        self._groups = groups
        self._group_queue = _CyclePool(order, self._rng, self.shuffle)
        self._group_slots = []

    def next_group_specs(self, n: int) -> list[list[ExampleSpec]]:
        """Next n parallel sequences of specs, one distinct group per slot.

        Each sequence is a chronological slice of length group_batch_size;
        seqcont is False exactly on a group's first frame. Groups shorter
        than max_group_size pad out with empty-file continuation specs.
        """
        if self.max_group_size <= 0:
            raise ConfigError("next_group_batch requires max_group_size > 0")
        if n < 1:
            raise ValueError(f"batch size must be >= 1, got {n}")
        if self._group_slots is None:
            self._build_groups()
        if n > len(self._groups):
            raise ConfigError(
                f"cannot serve {n} distinct groups; dataset has {len(self._groups)}")
        if len(self._group_slots) != n:
            self._group_slots = [None] * n
        batches = []
        for slot_idx in range(n):
            slot = self._group_slots[slot_idx]
            if slot is None or slot["served"] >= self.max_group_size:
                gid = self._group_queue.next()
                slot = {"gid": gid, "frames": self._groups[gid], "pos": 0, "served": 0}
                self._group_slots[slot_idx] = slot
            first_spec = self._specs[slot["frames"][0]]
            seq = []
            for _ in range(self.group_batch_size):
                if slot["pos"] < len(slot["frames"]) and slot["served"] < self.max_group_size:
                    spec = self._specs[slot["frames"][slot["pos"]]]
                    seq.append(ExampleSpec(labels=list(spec.labels),
                                           files=list(spec.files),
                                           group=spec.group,
                                           seqcont=slot["served"] > 0))
                    slot["pos"] += 1
                else:
                    seq.append(self._padding_spec(first_spec))
                slot["served"] += 1
            batches.append(seq)
        return batches

    def next_group_batch(self, n: int) -> list[list[Example]]:
        """Resolve n parallel group sequences of examples."""
        batches = []
        for seq in self.next_group_specs(n):
            resolved = []
            for spec in seq:
                if not spec.files:
                    resolved.append(Example(coord_sets=[], labels=list(spec.labels),
                                            group=spec.group, seqcont=True))
                else:
                    resolved.append(self._resolve(spec, seqcont=spec.seqcont))
            batches.append(resolved)
        return batches

    def close(self) -> None:
        for cache in (self._rec_cache, self._lig_cache):
            if cache is not None:
                cache.close()
        self._rec_cache = self._lig_cache = None
