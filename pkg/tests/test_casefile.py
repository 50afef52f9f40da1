import io
import math

import pytest
from hypothesis import given, settings, strategies as st

from newtonflow.casefile import (
    CASE_DIR,
    Branch,
    Bus,
    BusKind,
    BusSolution,
    CaseFormatError,
    CaseValidationError,
    Generator,
    NetworkCase,
    bundled_case,
    bundled_case_names,
    format_case,
    parse_case,
    write_solution,
)

from conftest import two_bus_text
from oracles import count_table_rows


def test_minimal_two_bus_echoes_fields(two_bus):
    assert two_bus.base_mva == 100.0
    assert [b.id for b in two_bus.buses] == [1, 2]
    assert [b.kind for b in two_bus.buses] == [BusKind.SLACK, BusKind.PQ]
    assert len(two_bus.branches) == 1
    br = two_bus.branches[0]
    assert (br.r, br.x, br.tap_ratio) == (0.0, 0.1, 1.0)
    assert two_bus.buses[1].p_load == pytest.approx(0.5)
    assert two_bus.buses[1].q_load == pytest.approx(0.1)


@pytest.mark.parametrize("name", bundled_case_names())
def test_bundled_counts_match_line_count(name):
    text = (CASE_DIR / f"{name}.m").read_text()
    case = bundled_case(name)
    assert len(case.buses) == count_table_rows(text, "bus")
    assert len(case.branches) == count_table_rows(text, "branch")
    assert len(case.generators) == count_table_rows(text, "gen")


def test_ieee14_counts(case14):
    assert (len(case14.buses), len(case14.branches), len(case14.generators)) == (14, 20, 5)


def test_unit_conversions(case14):
    bus2 = case14.buses[1]
    assert bus2.p_load == pytest.approx(0.217)
    assert bus2.v_ang_init == pytest.approx(math.radians(-4.98))
    assert case14.buses[8].b_shunt == pytest.approx(0.19)
    # tap column 0 means nominal ratio
    assert case14.branches[0].tap_ratio == 1.0
    assert case14.branches[7].tap_ratio == pytest.approx(0.978)


def test_unknown_fields_warn():
    with pytest.warns(UserWarning, match="mpc.gencost"):
        parse_case((CASE_DIR / "case14.m").read_text())


def test_duplicate_bus_rejected():
    text = two_bus_text().replace("    2  1  50", "    1  1  50")
    with pytest.raises(CaseValidationError, match="duplicate bus id 1"):
        parse_case(text)


def test_missing_slack_rejected():
    text = two_bus_text().replace("1  3  0", "1  2  0")
    with pytest.raises(CaseValidationError, match="slack"):
        parse_case(text)


def test_dangling_branch_rejected():
    text = two_bus_text().replace("    1  2  0.0  0.1", "    1  7  0.0  0.1")
    with pytest.raises(CaseValidationError, match="dangling"):
        parse_case(text)


def test_nonpositive_base_rejected():
    with pytest.raises(CaseValidationError, match="baseMVA"):
        parse_case(two_bus_text().replace("baseMVA = 100", "baseMVA = 0"))


def test_syntax_error_reports_position():
    text = two_bus_text().replace("mpc.gen = [", "mpc.gen = [ 1 @")
    with pytest.raises(CaseFormatError) as err:
        parse_case(text)
    assert err.value.line == 7
    assert err.value.column == 15


def test_ragged_matrix_reports_row():
    text = two_bus_text().replace("1.1  0.9;\n];", "1.1;\n];", 1)
    text = text.replace("    2  1  50  10  0  0  1  1.0  0  230  1  1.1  0.9;", "    2  1  50;")
    with pytest.raises(CaseFormatError, match="columns") as err:
        parse_case(text)
    assert err.value.line == 5


def test_generator_setpoints_must_agree():
    text = two_bus_text().replace(
        "    1  0  0  100  -100  1.0  100  1  200  0;",
        "    1  0  0  100  -100  1.0  100  1  200  0;\n    1  5  0  100  -100  1.02  100  1  200  0;",
    )
    with pytest.raises(CaseValidationError, match="setpoints"):
        parse_case(text)


def test_pv_bus_needs_generator():
    text = two_bus_text().replace("    2  1  50", "    2  2  50")
    with pytest.raises(CaseValidationError, match="PV bus 2"):
        parse_case(text)


def test_out_of_service_kept():
    text = two_bus_text().replace("0  0  0  0  1;", "0  0  0  0  0;")
    case = parse_case(text)
    assert len(case.branches) == 1 and not case.branches[0].in_service
    assert case.active_branches() == []


def test_comments_and_commas():
    text = two_bus_text().replace("mpc.bus = [", "mpc.bus = [ % bus table\n\n").replace(
        "    1  3  0   0   0  0  1  1.0  0  230  1  1.1  0.9;",
        "    1, 3, 0, 0, 0, 0, 1, 1.0, 0, 230, 1, 1.1, 0.9 % slack\n",
    )
    assert parse_case(text) == parse_case(two_bus_text())


# -- round trip / insensitivity properties -------------------------------------

finite = st.floats(min_value=-5, max_value=5, allow_nan=False, allow_infinity=False)


@st.composite
def cases(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    kinds = [BusKind.SLACK] + [draw(st.sampled_from([BusKind.PQ, BusKind.PV])) for _ in range(n - 1)]
    buses = tuple(
        Bus(i + 1, kinds[i], draw(finite), draw(finite), draw(finite), draw(finite),
            draw(st.floats(0.5, 1.5)), draw(st.floats(-1, 1)), draw(st.sampled_from([0.0, 138.0, 345.0])))
        for i in range(n)
    )
    gens = tuple(
        Generator(b.id, draw(finite), draw(finite), draw(st.floats(0.9, 1.1)))
        for b in buses if b.kind is not BusKind.PQ
    )
    branches = tuple(
        Branch(k, k + 1, draw(st.floats(0, 0.2)), draw(st.floats(0.01, 0.5)), draw(st.floats(0, 0.3)),
               draw(st.sampled_from([1.0, 0.95, 1.05])), draw(st.floats(-0.2, 0.2)), draw(st.booleans()))
        for k in range(1, n)
    )
    return NetworkCase(draw(st.sampled_from([10.0, 100.0, 1000.0])), buses, branches, gens, "synth")


def _close(a, b):
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


@given(cases())
@settings(max_examples=60, deadline=None)
def test_round_trip(case):
    back = parse_case(format_case(case), name="synth")
    assert back.base_mva == case.base_mva
    for x, y in zip(back.buses + back.branches + back.generators, case.buses + case.branches + case.generators):
        assert type(x) is type(y)
        for f in x.__dataclass_fields__:
            u, v = getattr(x, f), getattr(y, f)
            assert _close(u, v) if isinstance(u, float) else u == v, f


@given(cases(), st.data())
@settings(max_examples=40, deadline=None)
def test_comment_and_blank_line_insensitivity(case, data):
    text = format_case(case)
    lines = text.split("\n")
    out = []
    for line in lines:
        out.append(line)
        if data.draw(st.booleans()):
            out.append(data.draw(st.sampled_from(["", "   ", "% a comment", "\t% 1 2 3;"])))
    assert parse_case("\n".join(out), name="synth") == parse_case(text, name="synth")


# -- solution table ---------------------------------------------------------------

def _solution(case):
    return [BusSolution(b.id, 1.0 - 0.01 * k, -0.1 * k, 0.5 - k, 0.1 * k) for k, b in enumerate(case.buses)]


def test_write_solution_rows(two_bus):
    sink = io.StringIO()
    write_solution(two_bus, _solution(two_bus), sink)
    lines = sink.getvalue().splitlines()
    assert lines[0] == "bus,v_pu,theta_deg,p_mw,q_mvar"
    assert len(lines) == 3
    assert lines[2] == "2,0.99,-5.72958,-50,10"


def test_write_solution_incomplete(two_bus):
    with pytest.raises(ValueError, match="solution incomplete"):
        write_solution(two_bus, [], io.StringIO())


def test_write_solution_deterministic(case14):
    a, b = io.StringIO(), io.StringIO()
    write_solution(case14, _solution(case14), a)
    write_solution(case14, _solution(case14), b)
    assert a.getvalue() == b.getvalue()
