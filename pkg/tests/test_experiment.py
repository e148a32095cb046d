import json

import pytest

from fibrand.experiment import (ExperimentSpec, SpecError, build_sampler, expected_table,
                                format_table, resolve_group, run_experiment)
from fibrand.rng import RandomSource


@pytest.mark.parametrize("kwargs", [dict(algo="nope"), dict(samples=-1), dict(t=0), dict(abc=(1, 0, 1)),
                                    dict(abc=(1, 1)), dict(k=0), dict(epsilon=1.0),
                                    dict(partition="/nonexistent/table.csv")])
def test_spec_validation(kwargs):
    with pytest.raises(SpecError):
        ExperimentSpec(**kwargs)


def test_resolve_group_errors(tmp_path):
    with pytest.raises(SpecError):
        resolve_group("missing.json")
    with pytest.raises(SpecError):
        resolve_group("NotAGroup")
    f = tmp_path / "g.txt"
    f.write_text("permutation degree=4\n(1 2 3 4)\n(1 2)\n")
    rg = resolve_group(str(f))
    assert rg.order is None and rg.family is None and rg.name == "g"


def test_zero_samples_is_an_error():
    with pytest.raises(SpecError):
        run_experiment(ExperimentSpec(group="S4", samples=0))


def test_file_group_needs_partition(tmp_path):
    f = tmp_path / "s4.txt"
    f.write_text("permutation degree=4\n(1 2 3 4)\n(1 2)\n")
    with pytest.raises(SpecError, match="partition"):
        run_experiment(ExperimentSpec(group=str(f), samples=100))
    part = tmp_path / "s4.csv"
    part.write_text("cycle type,expected\n4,6\n3 1,8\n2 2,3\n2 1 1,6\n1 1 1 1,1\n")
    rep = run_experiment(ExperimentSpec(group=str(f), samples=2000, partition=str(part)))
    assert rep.partition_source == "file" and rep.categories == 5
    assert rep.chi.expected == pytest.approx([2000 * c / 24 for c in (6, 8, 3, 6, 1)])


def test_partition_labels_must_be_cycle_types(tmp_path):
    part = tmp_path / "bad.csv"
    part.write_text("C1,3\nC2,4\n")
    with pytest.raises(SpecError, match="cycle type"):
        run_experiment(ExperimentSpec(group="S4", samples=10, partition=str(part)))
    part.write_text("3 1,3\n2,4\n")
    with pytest.raises(SpecError, match="degree"):
        run_experiment(ExperimentSpec(group="S4", samples=10, partition=str(part)))


def test_matrix_groups_are_refused():
    with pytest.raises(SpecError):
        run_experiment(ExperimentSpec(group="SL(2,3)", samples=10))


def test_t_below_generator_count():
    with pytest.raises(SpecError):
        build_sampler(ExperimentSpec(group="S4", t=1), resolve_group("S4"), RandomSource(0))


@pytest.mark.parametrize("algo", ["fibcube", "fibcube+boost", "pr-classic", "pr-variant"])
def test_every_algorithm_runs(algo):
    rep = run_experiment(ExperimentSpec(group="S4", algo=algo, samples=300, seed=2))
    d = json.loads(rep.to_json())
    assert d["schema"] == "fibrand-report/1" and d["samples"] == 300
    assert d["chi_square"]["df"] == 4
    assert rep.mean_ops_per_sample > 0


def test_pipeline_details():
    _, details = build_sampler(ExperimentSpec(group="A5", algo="fibcube+boost", epsilon=0.5),
                               resolve_group("A5"), RandomSource(0))
    assert details["booster_t"] == 263 and details["amplifier_k"] == 6
    _, details = build_sampler(ExperimentSpec(group="S4", algo="pr-variant"), resolve_group("S4"),
                               RandomSource(0))
    assert details == {"k": 12, "steps": 5}


def test_analytic_partition_for_alternating_groups():
    labels, values, src = expected_table(ExperimentSpec(group="A15"), resolve_group("A15"))
    assert src == "analytic" and len(labels) == 90
    assert sum(values) == pytest.approx(1)


def test_reports_are_reproducible():
    a = run_experiment(ExperimentSpec(group="A5", samples=500, seed=3))
    b = run_experiment(ExperimentSpec(group="A5", samples=500, seed=3))
    assert a.to_json() == b.to_json()
    assert format_table([a]) == format_table([b])
    assert format_table([a]).splitlines()[0].split()[:3] == ["group", "|G|", "t/precomp"]
