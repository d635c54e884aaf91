from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plsim.config import (
    SOLVERS,
    ExperimentConfig,
    RunSection,
    SolverSection,
    dump_config,
    load_config,
    parse_config,
)
from plsim.instances import linear_span_instance
from plsim.numkit import InputError
from plsim.plotting import PlotError, plot_csvs, plot_panels, read_csv, write_csv
from plsim.solvers import COLUMNS, gd

BASIC = """
[problem]
preset = "common-hessian"
L = 10.0
mu = 1.0
n = 8
Delta = 1.0

[solver]
names = ["gd", "cgd"]
eta = 0.1
T_iters = 20
"""


def test_parse_basic():
    cfg = parse_config(BASIC)
    assert cfg.preset == "common-hessian" and cfg.solver.names == ["gd", "cgd"]
    assert cfg.run.eps == 1e-6 and cfg.topology is None


@pytest.mark.parametrize("text,needle", [
    ("[problem]\nn = 3\n", "preset"),
    ('[problem]\npreset = "nope"\n', "unknown problem"),
    ('[problem]\npreset = "common-hessian"\n[solver]\nnames = ["sgd"]\n', "unknown solver"),
    ('[problem]\npreset = "common-hessian"\n[solver]\nbogus = 1\n', "unknown keys"),
    ('[problem]\npreset = "common-hessian"\n[extra]\n', "unknown sections"),
    ('[problem]\npreset = "common-hessian"\n', "eta or auto"),
    ("[problem\n", "TOML"),
])
def test_parse_errors(text, needle):
    with pytest.raises(InputError, match=needle):
        parse_config(text)


solver_sections = st.builds(
    SolverSection,
    names=st.lists(st.sampled_from(SOLVERS), min_size=1, max_size=4, unique=True),
    auto=st.booleans(),
    eta=st.floats(1e-6, 1.0),
    T_iters=st.integers(0, 10_000),
    K=st.none() | st.integers(0, 100),
    p=st.none() | st.floats(0.01, 1.0),
    b=st.none() | st.integers(1, 16),
)
run_sections = st.builds(RunSection, tau=st.floats(0, 10), eps=st.floats(1e-12, 1.0), seed=st.integers(0, 2**31),
                         out=st.text("abcxyz/_", min_size=1, max_size=12))


@given(solver_sections, run_sections, st.sampled_from([None, "linear:8", "ring:8"]))
def test_config_round_trip(solver, run, topo):
    cfg = ExperimentConfig({"preset": "common-hessian", "L": 10.0, "mu": 1.0, "n": 8, "Delta": 1.0}, topo, solver, run)
    cfg.validate()
    back = parse_config(dump_config(cfg))
    assert back == cfg


def test_load_from_file(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(BASIC)
    assert load_config(p).solver.T_iters == 20


@pytest.fixture
def record():
    objs = linear_span_instance(10.0, 1.0, 4, 1.0)
    return gd(objs, np.zeros(objs.d), 0.05, 30)


def test_csv_round_trip(tmp_path, record):
    path = write_csv(record, tmp_path / "gd.csv")
    cols = read_csv(path)
    assert list(cols) == COLUMNS
    assert cols["gap"] == [float(repr(g)) for g in record.columns["gap"]]
    assert cols["U"][0] is None
    assert path.read_text().splitlines()[0] == ",".join(COLUMNS)


def test_csv_errors(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    with pytest.raises(PlotError, match="empty"):
        read_csv(empty)
    bad = tmp_path / "b.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(PlotError, match="columns"):
        read_csv(bad)
    header = tmp_path / "h.csv"
    header.write_text(",".join(COLUMNS) + "\n")
    with pytest.raises(PlotError, match="no data"):
        read_csv(header)


def test_plots_are_svg_and_deterministic(tmp_path, record):
    csv = write_csv(record, tmp_path / "gd.csv")
    a = plot_csvs([csv], "lfo_total", tmp_path / "a.svg", "t")
    b = plot_csvs([csv], "lfo_total", tmp_path / "b.svg", "t")
    assert a.read_bytes() == b.read_bytes()
    assert b"<svg" in a.read_bytes()
    panels = plot_panels([record], tmp_path / "p.svg")
    assert b"<svg" in panels.read_bytes()
    with pytest.raises(PlotError):
        plot_csvs([csv], "gap", tmp_path / "c.svg")
