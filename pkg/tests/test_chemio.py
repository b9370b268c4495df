import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxmol.chemio import (RawAtom, RawMolecule, element_number, parse_molecule_file,
                           parse_pdb, parse_xyz, read_cache, write_cache)
from voxmol.errors import FormatError, ParseError


class TestElements:
    def test_case_insensitive(self):
        assert element_number("C") == 6
        assert element_number("c") == 6
        assert element_number("CL") == 17
        assert element_number("cl") == 17

    def test_numeric(self):
        assert element_number("26") == 26

    def test_unknown(self):
        assert element_number("Zz") is None
        assert element_number("") is None
        assert element_number("200") is None


class TestParseXyz:
    def test_single_carbon(self):
        mol = parse_xyz("1\n\nC 0.0 0.0 0.0")
        assert mol.num_atoms == 1
        assert mol.atoms[0].element == 6
        assert mol.atoms[0].position == (0.0, 0.0, 0.0)

    def test_water_ish(self):
        mol = parse_xyz("2\nwater-ish\nO 0 0 0\nH 0.96 0 0")
        assert [a.element for a in mol.atoms] == [8, 1]

    def test_count_mismatch_reports_line(self):
        with pytest.raises(ParseError) as err:
            parse_xyz("3\n\nC 0 0 0")
        assert err.value.line == 4

    def test_unknown_symbol(self):
        with pytest.raises(ParseError) as err:
            parse_xyz("1\n\nXx 0 0 0")
        assert err.value.line == 3

    def test_malformed_float(self):
        with pytest.raises(ParseError):
            parse_xyz("1\n\nC zero 0 0")

    def test_bad_count(self):
        with pytest.raises(ParseError) as err:
            parse_xyz("many\n\nC 0 0 0")
        assert err.value.line == 1

    def test_extra_columns_ignored(self):
        mol = parse_xyz("1\n\nC 1 2 3 0.5")
        assert mol.atoms[0].position == (1.0, 2.0, 3.0)


class TestParsePdb:
    def test_atom_record(self):
        line = ("ATOM      1  CA  ALA A   1       1.000   2.000   3.000"
                "  1.00  0.00           C  ")
        mol = parse_pdb(line)
        assert mol.num_atoms == 1
        assert mol.atoms[0].element == 6
        assert mol.atoms[0].position == (1.0, 2.0, 3.0)

    def test_header_only_is_empty(self):
        mol = parse_pdb("HEADER    X\nREMARK  2\nEND\n")
        assert mol.num_atoms == 0

    def test_bad_element_field(self):
        line = ("HETATM    1  X1  LIG A   1       0.000   0.000   0.000"
                "  1.00  0.00          ZZ  ")
        with pytest.raises(ParseError):
            parse_pdb(line)

    def test_element_fallback_to_name(self):
        # element columns absent entirely; name " N  " resolves to nitrogen
        line = "ATOM      1  N   ALA A   1       0.000   0.000   0.000"
        mol = parse_pdb(line)
        assert mol.atoms[0].element == 7

    def test_two_letter_name_fallback(self):
        line = "HETATM    1 FE   HEM A   1       0.000   0.000   0.000"
        mol = parse_pdb(line)
        assert mol.atoms[0].element == 26

    def test_altloc_keeps_first_conformer(self):
        lines = "\n".join([
            "ATOM      1  CA AALA A   1       0.000   0.000   0.000  0.50  0.00           C",
            "ATOM      2  CA BALA A   1       9.000   9.000   9.000  0.50  0.00           C",
        ])
        mol = parse_pdb(lines)
        assert mol.num_atoms == 1
        assert mol.atoms[0].position == (0.0, 0.0, 0.0)

    def test_non_numeric_coordinates(self):
        line = "ATOM      1  CA  ALA A   1       a.aaa   2.000   3.000"
        with pytest.raises(ParseError):
            parse_pdb(line)

    def test_stops_at_endmdl(self):
        lines = "\n".join([
            "ATOM      1  CA  ALA A   1       0.000   0.000   0.000  1.00  0.00           C",
            "ENDMDL",
            "ATOM      2  CA  ALA A   1       9.000   9.000   9.000  1.00  0.00           C",
        ])
        assert parse_pdb(lines).num_atoms == 1

    def test_fixture_file(self, tiny_pdb_file):
        mol = parse_molecule_file(tiny_pdb_file)
        assert [a.element for a in mol.atoms] == [7, 6, 26]


class TestParserTotality:
    @settings(max_examples=200, deadline=None)
    @given(st.binary(max_size=400))
    def test_xyz_never_crashes(self, blob):
        text = blob.decode("latin1")
        try:
            parse_xyz(text)
        except ParseError:
            pass

    @settings(max_examples=200, deadline=None)
    @given(st.binary(max_size=400))
    def test_pdb_never_crashes(self, blob):
        text = blob.decode("latin1")
        try:
            parse_pdb(text)
        except ParseError:
            pass


def _f32(x):
    return float(np.float32(x))


coordinate = st.floats(min_value=-500.0, max_value=500.0,
                       allow_nan=False, allow_infinity=False)


@st.composite
def molecules(draw, max_atoms=12):
    name = draw(st.text(
        alphabet=st.characters(min_codepoint=33, max_codepoint=0x2FF), min_size=1,
        max_size=24))
    n = draw(st.integers(min_value=0, max_value=max_atoms))
    atoms = [
        RawAtom(draw(st.integers(min_value=1, max_value=118)),
                _f32(draw(coordinate)), _f32(draw(coordinate)), _f32(draw(coordinate)))
        for _ in range(n)
    ]
    return RawMolecule(name=name, atoms=atoms)


class TestCache:
    def test_round_trip_two_molecules(self, tmp_path):
        mols = [
            RawMolecule("lig1", [RawAtom(6, 0.0, 0.5, -1.25)]),
            RawMolecule("lig2", [RawAtom(8, 1.0, 2.0, 3.0), RawAtom(1, 0.25, 0.0, 0.0)]),
        ]
        path = tmp_path / "test.molc"
        write_cache(mols, path)
        with read_cache(path) as cache:
            assert len(cache) == 2
            assert cache.names() == ["lig1", "lig2"]
            for mol in mols:
                assert cache.lookup(mol.name) == mol

    def test_lookup_missing_is_key_error(self, tmp_path):
        path = tmp_path / "test.molc"
        write_cache([RawMolecule("a", [])], path)
        with read_cache(path) as cache:
            with pytest.raises(KeyError):
                cache.lookup("missing")

    def test_lookup_idempotent(self, tmp_path):
        path = tmp_path / "test.molc"
        mol = RawMolecule("a", [RawAtom(7, 1, 2, 3)])
        write_cache([mol], path)
        with read_cache(path) as cache:
            assert cache.lookup("a") == cache.lookup("a")

    def test_closed_cache_is_usage_error(self, tmp_path):
        path = tmp_path / "test.molc"
        write_cache([RawMolecule("a", [])], path)
        cache = read_cache(path)
        cache.close()
        with pytest.raises(RuntimeError):
            cache.lookup("a")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.molc"
        path.write_bytes(b"XXXX" + b"\x00" * 32)
        with pytest.raises(FormatError):
            read_cache(path)

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "test.molc"
        write_cache([RawMolecule("abc", [RawAtom(6, 1, 2, 3)] * 5)], path)
        data = path.read_bytes()
        trunc = tmp_path / "trunc.molc"
        trunc.write_bytes(data[: len(data) // 2])
        with pytest.raises(FormatError):
            read_cache(trunc)

    def test_duplicate_names_last_wins(self, tmp_path, caplog):
        mols = [
            RawMolecule("dup", [RawAtom(6, 0, 0, 0)]),
            RawMolecule("dup", [RawAtom(8, 1, 1, 1)]),
        ]
        path = tmp_path / "dup.molc"
        import logging

        with caplog.at_level(logging.WARNING):
            write_cache(mols, path)
        assert any("duplicate" in rec.message for rec in caplog.records)
        with read_cache(path) as cache:
            assert len(cache) == 1
            assert cache.lookup("dup").atoms[0].element == 8

    def test_coordinates_stored_as_f32(self, tmp_path):
        mol = RawMolecule("pi", [RawAtom(6, 3.14159265358979, 0, 0)])
        path = tmp_path / "pi.molc"
        write_cache([mol], path)
        with read_cache(path) as cache:
            got = cache.lookup("pi").atoms[0].x
        assert got == float(np.float32(3.14159265358979))

    def test_file_size_bound(self, tmp_path):
        mols = [RawMolecule(f"m{i}", [RawAtom(6, 0, 0, 0)] * 3) for i in range(20)]
        path = tmp_path / "sized.molc"
        write_cache(mols, path)
        # header 16 + per entry (2 + name + 4 + 13*natoms) + index (2 + name + 8) + footer 8
        bound = 16 + sum(2 + len(m.name) + 4 + 13 * m.num_atoms for m in mols) \
            + sum(2 + len(m.name) + 8 for m in mols) + 8
        assert path.stat().st_size == bound

    def test_concurrent_lookups(self, tmp_path):
        from concurrent.futures import ThreadPoolExecutor

        mols = [RawMolecule(f"m{i}", [RawAtom(6, i, 0.0, 0.0)]) for i in range(50)]
        path = tmp_path / "conc.molc"
        write_cache(mols, path)
        with read_cache(path) as cache:
            def fetch(i):
                return cache.lookup(f"m{i % 50}").atoms[0].x

            with ThreadPoolExecutor(max_workers=8) as pool:
                results = list(pool.map(fetch, range(400)))
        assert results == [float(i % 50) for i in range(400)]

    @settings(max_examples=40, deadline=None)
    @given(st.lists(molecules(), max_size=8,
                    unique_by=lambda m: m.name))
    def test_round_trip_property(self, tmp_path_factory, mols):
        path = tmp_path_factory.mktemp("molc") / "fuzz.molc"
        write_cache(mols, path)
        with read_cache(path) as cache:
            assert len(cache) == len(mols)
            for mol in mols:
                assert cache.lookup(mol.name) == mol
