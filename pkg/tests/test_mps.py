import numpy as np
import pytest

from deepcycle.engine import solve_lp, solve_milp
from deepcycle.engine.mps import (
    MpsParseError,
    mps_name,
    parse_mps,
    read_mps,
    read_solution,
    to_mps,
    write_mps,
    write_solution,
)
from deepcycle.problem import make_problem
from conftest import tiny_problem


def assert_same_problem(a, b):
    assert a.A.shape == b.A.shape
    np.testing.assert_array_equal(a.c, b.c)
    np.testing.assert_array_equal(a.A.toarray(), b.A.toarray())
    for name in ("row_lo", "row_hi", "col_lo", "col_hi"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    np.testing.assert_array_equal(a.integer, b.integer)
    assert a.objective_offset == b.objective_offset


@pytest.mark.parametrize("seed", [0, 3, 8])
def test_round_trip_tiny_uc(seed, tmp_path):
    _, p, _ = tiny_problem(seed)
    path = tmp_path / "m.mps"
    write_mps(p, path)
    q = read_mps(path)
    assert_same_problem(p, q)
    assert [mps_name(n) for n in p.col_names] == list(q.col_names)
    a, b = solve_milp(p), solve_milp(q)
    assert a.status == b.status
    if a.status == "optimal":
        assert a.objective == pytest.approx(b.objective, abs=1e-9)


def test_round_trip_ranged_free_and_negative_bounds():
    A = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, -1.0], [1.0, 0.0, 1.0], [3.0, 1.0, 1.0]])
    p = make_problem(
        [1.0, -2.0, 0.5], A,
        row_lo=[-1.0, 2.0, -np.inf, 0.0], row_hi=[4.0, 2.0, 7.0, np.inf],
        col_lo=[-np.inf, -3.0, 0.0], col_hi=[np.inf, 5.0, 1.0],
        integer=[False, False, True],
    )
    q = parse_mps(to_mps(p))
    assert_same_problem(p, q)
    assert solve_lp(q).objective == pytest.approx(solve_lp(p).objective, abs=1e-12)


def test_repr_precision_survives():
    p = make_problem([0.1 + 0.2], [[1.0 / 3.0]], [np.pi], [np.inf], col_hi=[1e6])
    q = parse_mps(to_mps(p))
    assert q.c[0] == 0.1 + 0.2
    assert q.A.toarray()[0, 0] == 1.0 / 3.0
    assert q.row_lo[0] == np.pi


def test_hand_written_mps_with_marker_and_objsense():
    text = """NAME small
OBJSENSE
    MAX
ROWS
 N obj
 L c1
 G c2
COLUMNS
    MARKER  'MARKER'  'INTORG'
    x  obj  3  c1  1
    x  c2  1
    MARKER  'MARKER'  'INTEND'
    y  obj  2  c1  1
RHS
    rhs  c1  4  c2  1
BOUNDS
 UP bnd  x  3
 UP bnd  y  2.5
ENDATA
"""
    p = parse_mps(text)
    assert p.integer.tolist() == [True, False]
    sol = solve_milp(p)
    # maximize 3x + 2y, x + y <= 4, x >= 1, x <= 3 integer, y <= 2.5  ->  x=3, y=1
    assert sol.objective == pytest.approx(-11.0, abs=1e-9)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("NAME a\nFOO\nENDATA\n", "unknown section"),
        ("NAME a\nROWS\n Q r1\nENDATA\n", "bad row type"),
        ("NAME a\nROWS\n N obj\n L r1\nCOLUMNS\n    x  r1\nENDATA\n", "odd number"),
    ],
)
def test_parse_errors_name_the_line(text, fragment):
    with pytest.raises(MpsParseError, match=fragment):
        parse_mps(text, source="bad.mps")


def test_solution_file_round_trip(tmp_path):
    path = tmp_path / "s.txt"
    write_solution(path, ["b", "a"], [2.5, -1.0], {"status": "optimal", "bound": "3.0"})
    x, header = read_solution(path, ["a", "b"])
    np.testing.assert_array_equal(x, [-1.0, 2.5])
    assert header["status"] == "optimal" and header["bound"] == "3.0"


def test_solution_missing_column_and_bad_value(tmp_path):
    path = tmp_path / "s.txt"
    write_solution(path, ["a"], [1.0])
    with pytest.raises(MpsParseError, match="missing"):
        read_solution(path, ["a", "b"])
    path.write_text("a notanumber\n")
    with pytest.raises(MpsParseError, match="bad value"):
        read_solution(path, ["a"])
    path.write_text("a 1 2\n")
    with pytest.raises(MpsParseError):
        read_solution(path, ["a"])


def test_empty_solution_has_no_point(tmp_path):
    path = tmp_path / "s.txt"
    write_solution(path, [], [], {"status": "infeasible"})
    x, header = read_solution(path, ["a"])
    assert x is None and header["status"] == "infeasible"
