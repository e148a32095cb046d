import json

import pytest

from fibrand.cli import main

GOLDEN_A5 = """(1 4 2 5 3)
(1 4 3 5 2)
(1 4 2 5 3)
# precompute_ops=47 mean_ops_per_sample=23.333
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_golden_sample(capsys):
    code, out, _ = run(capsys, "sample", "--group", "A5", "--algo", "fibcube", "--t", "20",
                       "--n", "3", "--seed", "7")
    assert code == 0 and out == GOLDEN_A5


def test_sample_zero_prints_only_the_footer(capsys):
    code, out, _ = run(capsys, "sample", "--group", "A5", "--n", "0")
    assert code == 0 and out.startswith("# precompute_ops=") and len(out.splitlines()) == 1


def test_sample_images_and_json(capsys):
    code, out, _ = run(capsys, "sample", "--group", "S4", "--n", "2", "--notation", "images",
                       "--format", "json")
    d = json.loads(out)
    assert code == 0 and len(d["elements"]) == 2 and d["elements"][0].startswith("[")


def test_missing_group_file_exits_2(capsys):
    code, _, err = run(capsys, "sample", "--group", "missing.json")
    assert code == 2 and "not found" in err


def test_bad_algorithm_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["experiment", "--algo", "bogus"])
    assert info.value.code == 2


def test_build_and_sample_from_saved_cube(capsys, tmp_path):
    path = tmp_path / "cube.json"
    code, _, err = run(capsys, "build", "--group", "S5", "--t", "25", "--seed", "3", "--out", str(path))
    assert code == 0 and "saved cube of length 25" in err
    saved = json.loads(path.read_text())
    assert saved["schema"] == "fibrand-saved-cube/1" and len(saved["cube"]["factors"]) == 25
    code, a, _ = run(capsys, "sample", "--group", "S5", "--cube", str(path), "--n", "4", "--seed", "1")
    code2, b, _ = run(capsys, "sample", "--group", "S5", "--cube", str(path), "--n", "4", "--seed", "1")
    assert code == code2 == 0 and a == b
    assert "precompute_ops=0" in a


def test_experiment_json_and_table_agree(capsys):
    args = ["experiment", "--group", "S4", "--samples", "800", "--seed", "4"]
    code, table, _ = run(capsys, *args)
    code_j, js, _ = run(capsys, *args, "--format", "json")
    d = json.loads(js)
    assert code == code_j
    row = table.splitlines()[1].split()
    assert row[4] == f"{d['chi_square']['statistic']:.1f}"
    assert row[3] == f"{d['categories']}/{d['chi_square']['df']}"
    assert row[2] == f"{d['details']['t']}/{d['precompute_ops']}"


def test_experiment_csv_and_runs(capsys):
    code, out, _ = run(capsys, "experiment", "--group", "S4", "--samples", "300", "--runs", "3",
                       "--format", "csv")
    lines = out.splitlines()
    assert lines[0].startswith("group,order,algo,seed") and len(lines) == 4
    assert [l.split(",")[3] for l in lines[1:]] == ["0", "1", "2"]


def test_experiment_rejection_exits_1(capsys):
    # a single-factor cube cannot look uniform on S5
    code, out, _ = run(capsys, "experiment", "--group", "S5", "--t", "2", "--samples", "2000")
    assert code == 1 and out.rstrip().endswith("no")


def test_verify_single_invariant(capsys):
    code, out, _ = run(capsys, "verify", "--group", "S4", "--only", "norm-monotone")
    assert code == 0 and out.startswith("norm-monotone") and out.rstrip().endswith("ok")
    assert len(out.splitlines()) == 1


def test_verify_unknown_invariant(capsys):
    code, _, err = run(capsys, "verify", "--only", "nonsense")
    assert code == 2 and "unknown invariant" in err


def test_verify_fault_injection_exits_1_with_witness(capsys):
    code, out, _ = run(capsys, "verify", "--group", "S4", "--only", "trace-replay",
                       "--inject-fault", "sample_r_bitflip", "--format", "json")
    d = json.loads(out)
    assert code == 1 and not d["ok"]
    w = d["failures"][0]
    assert w["invariant"] == "trace-replay" and w["witness"]["problems"]


def test_identical_flags_give_identical_bytes(capsys, tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        main(["experiment", "--group", "A5", "--algo", "pr-classic", "--samples", "400",
              "--seed", "9", "--format", "json", "--out", str(path)])
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_bench_kernels(capsys):
    code, out, _ = run(capsys, "bench", "--kernels")
    assert code == 0 and "perm_chain" in out and "NO" not in out


def test_bench_algorithms(capsys):
    code, out, _ = run(capsys, "bench", "--group", "S4", "--samples", "200")
    assert code == 0
    assert sum(1 for l in out.splitlines() if l.startswith("S4 [")) == 4
