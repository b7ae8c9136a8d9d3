import math

import numpy as np
import pytest

from ksforced import Grid2D, ScalarField, State
from ksforced.diagnostics import CSV_FIELDS, DiagnosticsRecord, energy_w, make_record
from ksforced.output import emit_csv, format_value, read_csv, write_table


def test_empty_header_only(tmp_path):
    p = emit_csv([], tmp_path / "d.csv")
    assert p.read_text() == ",".join(CSV_FIELDS) + "\n"
    assert p.read_text().startswith(
        "t,mass_u,v_l1,v_l1_exact,u_linf,u_l2,v_w1theta,energy_w,dissipation,energy_residual,fv_integral,ulogu_l1,vt_l2_accum\n"
    )


def test_steady_state_row(tmp_path):
    g = Grid2D(8, 8)
    s = State(ScalarField.constant(g, 1.0), ScalarField.constant(g, 1.0))
    w = energy_w(s.u, s.v)
    rec = make_record(State(s.u, s.v, 0.1), s, 0.1, None, 1.0, 3.0, 2.0, w, 0.0)
    header, rows = read_csv(emit_csv([rec], tmp_path / "d.csv"))
    assert len(rows) == 1
    assert rows[0][header.index("energy_residual")] == 0.0


def test_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.standard_normal((10_000, len(CSV_FIELDS))) * 10.0 ** rng.integers(-300, 300, (10_000, len(CSV_FIELDS)))
    recs = [DiagnosticsRecord(*row) for row in data.tolist()]
    header, rows = read_csv(emit_csv(recs, tmp_path / "big.csv"))
    assert tuple(header) == CSV_FIELDS
    back = np.array(rows)
    assert back.shape == data.shape
    assert np.array_equal(back.view(np.uint64), data.view(np.uint64))


def test_format_value():
    assert format_value(None) == ""
    assert format_value(True) == "true"
    assert format_value(np.bool_(False)) == "false"
    assert format_value(0.1) == "0.1"
    assert format_value(math.inf) == "inf"
    assert format_value(math.nan) == "nan"
    assert format_value(3) == "3"


def test_write_table_errors(tmp_path):
    with pytest.raises(ValueError):
        write_table(tmp_path / "x.csv", ("a", "b"), [(1,)])
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError) as ei:
        write_table(blocker / "sub" / "x.csv", ("a",), [])
    assert "x.csv" in str(ei.value)


def test_nested_directory(tmp_path):
    p = write_table(tmp_path / "a" / "b" / "t.csv", ("x", "y"), [(1.5, "s")])
    assert p.read_text() == "x,y\n1.5,s\n"
