import json

import pytest

from optw.core import GroupTag, Instance, Node
from optw.instance_io import (
    BenchmarkFile,
    FileFormat,
    MalformedFile,
    SchemaVersionMismatch,
    UnknownFormat,
    dumps_benchmark_text,
    dumps_canonical,
    parse_benchmark,
    parse_text,
    read_canonical,
    reference_scores,
    validate_instance,
    write_canonical,
)

from conftest import FIXTURES, fixture_path, load_fixture

FIXTURE_NAMES = sorted(p.stem for p in FIXTURES.glob("*.txt"))


class TestParse:
    def test_solomon_layout(self):
        inst = load_fixture("solomon_syn100")
        assert len(inst.poi_indices()) == 100
        assert inst.rounding_decimals == 1
        assert inst.group_tag is GroupTag.SOLOMON
        assert (inst.t_start, inst.t_end) == (0.0, 230.0)
        assert inst.scores[inst.start_index] == inst.scores[inst.end_index] == 0.0

    def test_cordeau_layout(self):
        inst = load_fixture("cordeau_syn48")
        assert len(inst.poi_indices()) == 48
        assert inst.rounding_decimals == 2

    def test_gavalas_layout(self):
        inst = load_fixture("gavalas_syn100")
        assert inst.rounding_decimals == 2
        assert inst.group_tag is GroupTag.GAVALAS

    def test_hand_written_rows(self):
        text = "\n".join([
            "1 1 2 0",
            "0 0",
            "0 35.0 35.0 0 0 0 0 0 230",
            "1 41 49 10 10 1 4 1 2 4 8 161 171",
            "2 35 17 10 7 1 4 1 2 4 8 50 60",
        ])
        inst = parse_text(text, GroupTag.SOLOMON, "toy")
        assert inst.n == 4
        assert inst.nodes[1] == Node(41, 49, 10, 161, 171, 10)
        assert inst.nodes[3].x == 35.0 and inst.nodes[3].score == 0.0
        assert inst.travel[1, 2] == 32.6

    def test_second_depot_row_becomes_end(self):
        text = "1 1 1 0\n0 0\n0 0 0 0 0 0 0 0 100\n1 1 1 5 3 0 0 0 100\n2 9 9 0 0 0 0 0 100\n"
        inst = parse_text(text, GroupTag.CORDEAU)
        assert (inst.nodes[-1].x, inst.nodes[-1].y) == (9.0, 9.0)

    def test_truncated(self):
        text = fixture_path("solomon_desk20").read_text().splitlines()
        with pytest.raises(MalformedFile) as err:
            parse_text("\n".join(text[:10]), GroupTag.SOLOMON)
        assert err.value.line > 0

    def test_non_numeric(self):
        with pytest.raises(MalformedFile) as err:
            parse_text("1 1 1 0\n0 0\n0 0 0 0 0 0 0 0 100\n1 a 1 5 3 0 0 0 100\n", GroupTag.SOLOMON)
        assert err.value.line == 4

    def test_short_row(self):
        with pytest.raises(MalformedFile):
            parse_text("1 1 1 0\n0 0\n0 0 0 0 0 0 100\n1 1 1\n", GroupTag.SOLOMON)

    def test_deterministic(self):
        a = parse_benchmark(fixture_path("cordeau_syn48"))
        b = parse_benchmark(fixture_path("cordeau_syn48"))
        assert a == b

    def test_text_round_trip(self):
        inst = load_fixture("solomon_desk20")
        assert parse_text(dumps_benchmark_text(inst), GroupTag.SOLOMON, inst.name) == inst


class TestDetect:
    @pytest.mark.parametrize("name, fmt", [
        ("c101.txt", FileFormat.SOLOMON), ("rc202.txt", FileFormat.SOLOMON),
        ("pr01.txt", FileFormat.CORDEAU), ("t101.txt", FileFormat.GAVALAS),
        ("gavalas_x.txt", FileFormat.GAVALAS), ("any.json", FileFormat.CANONICAL),
    ])
    def test_by_name(self, name, fmt):
        assert BenchmarkFile.detect(name).format is fmt

    def test_unknown(self):
        with pytest.raises(UnknownFormat):
            BenchmarkFile.detect("mystery.dat")

    def test_explicit_flag(self):
        assert BenchmarkFile.detect("mystery.dat", "CordeauOPTW").format is FileFormat.CORDEAU


class TestCanonical:
    @pytest.mark.parametrize("name", FIXTURE_NAMES)
    def test_round_trip(self, name, tmp_path):
        inst = load_fixture(name)
        path = write_canonical(inst, tmp_path / "x.json")
        back = read_canonical(path)
        assert back == inst
        assert parse_benchmark(path) == inst

    def test_byte_identical(self, tmp_path):
        inst = load_fixture("cordeau_syn48")
        a = write_canonical(inst, tmp_path / "a.json").read_bytes()
        b = write_canonical(inst, tmp_path / "b.json").read_bytes()
        assert a == b

    def test_float_bits_preserved(self, tmp_path):
        nodes = (Node(0.1, 1 / 3, 0, 0, 7.25, 0), Node(2.0 ** 0.5, 1e-17, 3.3, 0, 7.25, 0.7),
                 Node(0.1, 1 / 3, 0, 0, 7.25, 0))
        inst = Instance(nodes, 0, 2, 0.0, 7.25, 2, 9.1, 3.63, GroupTag.CUSTOM, "bits")
        assert read_canonical(write_canonical(inst, tmp_path / "f.json")) == inst

    def test_schema_mismatch(self, tmp_path):
        doc = json.loads(dumps_canonical(load_fixture("solomon_desk20")))
        doc["schema_version"] = 2
        (tmp_path / "v2.json").write_text(json.dumps(doc))
        with pytest.raises(SchemaVersionMismatch):
            read_canonical(tmp_path / "v2.json")

    def test_key_order(self):
        doc = json.loads(dumps_canonical(load_fixture("solomon_desk20")))
        assert list(doc)[0] == "schema_version"
        assert list(doc)[-1] == "nodes"


class TestValidate:
    @pytest.mark.parametrize("name", FIXTURE_NAMES)
    def test_fixtures_clean(self, name):
        assert validate_instance(load_fixture(name)) == []

    def test_window_inverted(self):
        nodes = (Node(0, 0, 0, 0, 10, 0), Node(1, 1, 1, 5, 4, 0), Node(0, 0, 0, 0, 10, 0))
        out = validate_instance(Instance(nodes, 0, 2, 0.0, 10.0))
        assert [str(v) for v in out] == ["WindowInverted(1)"]

    def test_budget_inverted(self):
        nodes = (Node(0, 0, 0, 0, 10, 0), Node(1, 1, 1, 0, 10, 0), Node(0, 0, 0, 0, 10, 0))
        out = validate_instance(Instance(nodes, 0, 2, 11.0, 10.0, t_max=20))
        assert [v.rule for v in out] == ["BudgetInverted"]


class TestReferenceScores:
    def test_table_rows(self):
        refs = reference_scores()
        assert refs["r101"]["best_known"] == 198 and refs["r101"]["ils"] == 182
        assert refs["c201"]["ils"] == 840
        assert refs["rc202"]["ils"] == 882 and refs["rc202"]["model"] == 934
        assert refs["r201"]["model"] == 793 and refs["r201"]["model_as"] == 794
