import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import instances
from plotalloc.core import Allocation, Instance, social_welfare
from plotalloc.generators import FIXTURES, paper_fixture
from plotalloc.io import (
    CSV_HEADER,
    FormatError,
    ResultRow,
    append_rows,
    atomic_write_text,
    export_mip,
    mip_model,
    mip_point,
    mip_scale,
    parse_instance,
    parse_lp,
    parse_reports,
    parse_rows,
    render_instance,
    render_lp,
    render_reports,
    rows_to_csv,
)
from plotalloc.optimize import brute_force_opt

F = Fraction


class TestInstanceFiles:
    @pytest.mark.parametrize("name", sorted(FIXTURES))
    def test_fixture_round_trip(self, name):
        inst = paper_fixture(name).instance
        assert parse_instance(render_instance(inst)) == inst

    @settings(max_examples=60, deadline=None)
    @given(instances(max_n=6))
    def test_random_round_trip(self, inst):
        text = render_instance(inst)
        assert parse_instance(text) == inst
        assert render_instance(parse_instance(text)) == text

    def test_asymmetric_weights_survive(self):
        inst = Instance.build([[0, 1], [1, 0]], [(0, 1)], [(0, 1, "1/7", "2/3")])
        assert parse_instance(render_instance(inst)).friendships.phi(1, 0) == F(2, 3)

    def test_yaml_flavoured_input(self):
        text = "plots: {count: 2, edges: [[0, 1]]}\nvalues:\n  - ['1', '1/2']\n  - ['0', '1']\n"
        inst = parse_instance(text)
        assert inst.u(0, 1) == F(1, 2) and inst.plots.adjacent(0, 1)

    def test_value_out_of_range(self):
        with pytest.raises(FormatError, match="outside"):
            parse_instance('{"plots": {"count": 1},\n "values": [["3/2"]]}')

    def test_degree_violation_has_line(self):
        text = (
            '{"plots": {"count": 3},\n'
            ' "friends": [{"pair": [0, 1], "weights": ["1", "1"]},\n'
            '             {"pair": [1, 2], "weights": ["1", "1"]}],\n'
            ' "values": [[0, 0, 0], [0, 0, 0], [0, 0, 0]]}'
        )
        with pytest.raises(FormatError) as exc:
            parse_instance(text)
        assert exc.value.line is not None and "friend" in str(exc.value)

    @pytest.mark.parametrize("text", ['{"plots": {"count": 1}, "values": [[0.5]]}', '{"plots": ', "[]", '{"values": [["0"]]}'])
    def test_rejects_malformed(self, text):
        with pytest.raises(FormatError):
            parse_instance(text)


class TestReports:
    def test_round_trip(self):
        reports = (2, None, 0)
        assert parse_reports(render_reports(reports), 3) == reports
        assert parse_reports("[1, null]", 2) == (1, None)

    @pytest.mark.parametrize("text", ["[0, null]", "[1]", "[5, null]", '{"reports": [1, 0], "x": 1}'])
    def test_invalid(self, text):
        with pytest.raises(FormatError):
            parse_reports(text, 2)


class TestLp:
    def test_round_trip_and_reparse(self):
        text = export_mip(paper_fixture("example5").instance)
        model = parse_lp(text)
        assert render_lp(model) == text

    def test_no_friends_is_assignment(self):
        inst = Instance.build([["1/2", 1], [1, 0]])
        model = mip_model(inst)
        assert set(model.objective) == {"a_0_0", "a_0_1", "a_1_0", "a_1_1"}
        assert mip_scale(model) == 2

    def test_points_score_welfare(self):
        inst = paper_fixture("example2").instance
        model = parse_lp(export_mip(inst))
        d = mip_scale(model)
        best = None
        for p in itertools.permutations(range(inst.n)):
            a = Allocation(p)
            pt = mip_point(inst, a)
            assert model.feasible(pt)
            assert model.evaluate(pt) / d == social_welfare(inst, a)
            best = max(best or 0, model.evaluate(pt) / d)
        assert best == brute_force_opt(inst).welfare == F(33, 10)

    def test_infeasible_points_detected(self):
        inst = paper_fixture("example2").instance
        model = mip_model(inst)
        pt = mip_point(inst, Allocation((0, 1, 2)))
        pt["a_1_0"] = 1
        assert not model.feasible(pt)

    def test_parse_errors_have_lines(self):
        with pytest.raises(FormatError) as exc:
            parse_lp("Maximize\n obj: 2 x\nSubject To\n c1: 3 x <=\nEnd\n")
        assert exc.value.line == 4


class TestResults:
    def test_csv_round_trip(self, tmp_path):
        rows = [ResultRow("hub_n8", "on-ct-rsd", "exact", F(51), F(201)), ResultRow("x", "sd", 3, F(1, 3), None, 12)]
        path = tmp_path / "r.csv"
        append_rows(path, rows[:1])
        append_rows(path, rows[1:])
        text = path.read_text()
        assert text.splitlines()[0] == ",".join(CSV_HEADER)
        assert text.count("instance,") == 1
        assert parse_rows(text) == rows
        assert "17/67" in text

    def test_foreign_file_refused(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            append_rows(path, [ResultRow("x", "sd", 0, F(1), F(1))])
        assert path.read_text() == "a,b\n1,2\n"

    def test_ratio(self):
        assert ResultRow("x", "sd", 0, F(1), F(0)).ratio is None
        assert rows_to_csv([], header=False) == ""

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        atomic_write_text(tmp_path / "f.txt", "hello")
        assert [p.name for p in tmp_path.iterdir()] == ["f.txt"]
