"""Command-line behavior: parsing, exit codes, files, and deterministic outputs."""

import numpy as np
import pytest

from seqregret.batch import RegretReport
from seqregret.cli import (
    InputFileError,
    default_monomials,
    default_n_grid,
    main,
    read_config_file,
    read_sequence_file,
)
from seqregret.randomized import EXTENDED_CSV_COLUMNS


def run_cli(*args):
    return main(list(args))


def read(path):
    return path.read_text(encoding="utf-8")


# -------------------------------------------------------------- input files


def test_sequence_file_with_bound_header(tmp_path):
    p = tmp_path / "seq.txt"
    p.write_text("# comment\n# A = 2.0\n0.5\n\n-1.5\n1.0\n")
    seq = read_sequence_file(str(p))
    np.testing.assert_array_equal(seq.values, [0.5, -1.5, 1.0])
    assert seq.bound_A == 2.0


def test_sequence_file_bound_defaults_to_max_abs(tmp_path):
    p = tmp_path / "seq.txt"
    p.write_text("0.25\n-0.75\n0.5\n")
    assert read_sequence_file(str(p)).bound_A == 0.75
    z = tmp_path / "zeros.txt"
    z.write_text("0.0\n0.0\n")
    assert read_sequence_file(str(z)).bound_A == 0.0


def test_sequence_file_errors_carry_position(tmp_path):
    bad_number = tmp_path / "bad.txt"
    bad_number.write_text("1.0\n0.5\nnot-a-number\n")
    with pytest.raises(InputFileError, match=r"bad\.txt:3"):
        read_sequence_file(str(bad_number))
    bad_header = tmp_path / "hdr.txt"
    bad_header.write_text("# A = huge\n1.0\n")
    with pytest.raises(InputFileError, match=r"hdr\.txt:1"):
        read_sequence_file(str(bad_header))
    empty = tmp_path / "empty.txt"
    empty.write_text("# only comments\n")
    with pytest.raises(InputFileError, match="no samples"):
        read_sequence_file(str(empty))
    with pytest.raises(InputFileError, match="cannot read"):
        read_sequence_file(str(tmp_path / "missing.txt"))


def test_sequence_file_violating_declared_bound_is_rejected(tmp_path):
    p = tmp_path / "over.txt"
    p.write_text("# A = 1.0\n2.5\n")
    with pytest.raises(InputFileError):
        read_sequence_file(str(p))


def test_config_file_parsing(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("family = zero  # trailing comment\nn=16\nsvg = true\nbig_flag=3\n")
    assert read_config_file(str(p)) == {"family": "zero", "n": "16", "svg": "true", "big-flag": "3"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("just-a-token\n")
    with pytest.raises(InputFileError, match="key=value"):
        read_config_file(str(bad))
    anonymous = tmp_path / "anon.cfg"
    anonymous.write_text("= 3\n")
    with pytest.raises(InputFileError, match="empty key"):
        read_config_file(str(anonymous))


def test_small_helpers():
    assert default_monomials(2) == [{1: 1}, {1: 1, 2: 1}]
    assert default_n_grid(512) == [128, 256, 512]
    assert default_n_grid(16) == [16]


# ------------------------------------------------------------ regret command


def test_regret_zero_family_reports_all_zero(tmp_path):
    out = tmp_path / "zero.csv"
    assert run_cli("regret", "--family", "zero", "--n", "16", "--out", str(out)) == 0
    header, row = read(out).splitlines()
    assert header == ",".join(RegretReport.CSV_COLUMNS)
    cells = row.split(",")
    assert cells[0] == "16"
    assert all(float(c) == 0.0 for c in cells[4:])


def test_regret_default_family_to_stdout(capsys):
    assert run_cli("regret", "--n", "32") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(RegretReport.CSV_COLUMNS)
    assert len(lines) == 2


def test_regret_from_input_file(tmp_path, capsys):
    p = tmp_path / "seq.txt"
    p.write_text("# A=1.0\n1.0\n1.0\n1.0\n")
    assert run_cli("regret", "--input", str(p)) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert row[0] == "3"
    assert float(row[4]) == 2.25  # the worked three-ones run


def test_regret_malformed_input_exits_2(tmp_path, capsys):
    p = tmp_path / "seq.txt"
    p.write_text("1.0\nbroken\n")
    assert run_cli("regret", "--input", str(p)) == 2
    assert "error:" in capsys.readouterr().err


def test_regret_svg_needs_out(capsys):
    assert run_cli("regret", "--n", "8", "--svg") == 2
    assert "--svg requires --out" in capsys.readouterr().err


def test_regret_svg_written_next_to_csv(tmp_path):
    out = tmp_path / "run.csv"
    assert run_cli("regret", "--n", "32", "--svg", "--out", str(out)) == 0
    svg = tmp_path / "run.svg"
    text = read(svg)
    assert text.startswith("<svg")
    assert "certificate" in text


# ----------------------------------------------------------------- seed rules


@pytest.mark.parametrize(
    "args",
    [
        ("lowerbound", "--n", "16", "--trials", "4"),
        ("identity", "--n", "8"),
        ("regret", "--family", "walk", "--n", "8"),
        ("regret", "--family", "adversarial", "--n", "8"),
    ],
)
def test_stochastic_runs_require_a_seed(args, capsys):
    assert run_cli(*args) == 2
    assert "--seed is required" in capsys.readouterr().err


def test_deterministic_families_do_not_need_a_seed():
    assert run_cli("regret", "--family", "sinusoid", "--n", "8") == 0
    assert run_cli("regret", "--family", "zero", "--n", "8") == 0


# -------------------------------------------------------------- config files


def test_config_supplies_flags_and_explicit_flags_win(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("family=zero\nn=8\n")
    assert run_cli("regret", "--config", str(cfg)) == 0
    assert capsys.readouterr().out.splitlines()[1].split(",")[0] == "8"
    # explicit --n overrides the file's n
    assert run_cli("regret", "--config", str(cfg), "--n", "4") == 0
    assert capsys.readouterr().out.splitlines()[1].split(",")[0] == "4"


def test_config_boolean_svg(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("family=sinusoid\nn=16\nsvg=true\n")
    out = tmp_path / "cfg.csv"
    assert run_cli("regret", "--config", str(cfg), "--out", str(out)) == 0
    assert (tmp_path / "cfg.svg").exists()


def test_config_bad_boolean_exits_2(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("svg=maybe\n")
    assert run_cli("regret", "--config", str(cfg)) == 2
    assert "expected a boolean" in capsys.readouterr().err


def test_config_missing_file_exits_2(tmp_path, capsys):
    assert run_cli("regret", "--config", str(tmp_path / "nope.cfg")) == 2
    assert "cannot read config" in capsys.readouterr().err


def test_config_unknown_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("wibble=1\n")
    assert run_cli("regret", "--config", str(cfg)) == 2


def test_unknown_family_exits_2():
    assert run_cli("regret", "--family", "fractal") == 2


# ------------------------------------------------------------------ compare


def parse_csv(text):
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


def test_compare_checkpoints_and_baselines(tmp_path):
    out = tmp_path / "cmp.csv"
    assert run_cli("compare", "--family", "sinusoid", "--n", "32", "--out", str(out)) == 0
    rows = parse_csv(read(out))
    # sinusoid is not two-valued: three baselines at each of four checkpoints
    assert sorted({r["algo"] for r in rows}) == ["lms", "rls", "universal"]
    assert [int(r["n"]) for r in rows if r["algo"] == "universal"] == [4, 8, 16, 32]
    for row in rows:
        assert float(row["regret"]) == pytest.approx(
            float(row["loss"]) - float(row["batch_raw"]), abs=1e-12
        )
    # plain RLS (forgetting 1) is the same recursion as the universal run
    by_n = {int(r["n"]): r for r in rows if r["algo"] == "universal"}
    for r in rows:
        if r["algo"] == "rls":
            assert float(r["loss"]) == pytest.approx(float(by_n[int(r["n"])]["loss"]), rel=1e-9)


def test_compare_includes_bayes_only_on_two_valued_data(tmp_path):
    out = tmp_path / "cmp.csv"
    assert run_cli(
        "compare", "--family", "adversarial", "--seed", "5", "--n", "32", "--out", str(out)
    ) == 0
    rows = parse_csv(read(out))
    assert sorted({r["algo"] for r in rows}) == ["bayes", "lms", "rls", "universal"]


# ------------------------------------------------------------------ identity


def test_identity_checks_pass_and_write_extended_row(tmp_path, capsys):
    out = tmp_path / "id.csv"
    code = run_cli(
        "identity", "--family", "sinusoid", "--n", "24", "--seed", "7",
        "--trials", "50", "--out", str(out),
    )
    captured = capsys.readouterr()
    assert code == 0, captured.err
    assert "evidence identity:" in captured.out
    assert "randomized account:" in captured.out
    header, row = read(out).splitlines()
    assert header == ",".join(EXTENDED_CSV_COLUMNS)
    assert len(row.split(",")) == 13


def test_identity_on_adversarial_data(tmp_path, capsys):
    out = tmp_path / "id.csv"
    code = run_cli(
        "identity", "--family", "adversarial", "--n", "16", "--seed", "3",
        "--trials", "40", "--class", "univar", "--out", str(out),
    )
    assert code == 0, capsys.readouterr().err


# ---------------------------------------------------- deterministic reruns


def rerun_bytes(tmp_path, name, *args):
    a, b = tmp_path / f"{name}_a.csv", tmp_path / f"{name}_b.csv"
    assert run_cli(*args, "--out", str(a)) == 0
    assert run_cli(*args, "--out", str(b)) == 0
    return a.read_bytes(), b.read_bytes()


def test_seeded_reruns_are_byte_identical(tmp_path):
    pairs = [
        ("regret", ("regret", "--family", "walk", "--seed", "3", "--n", "64")),
        ("lower", ("lowerbound", "--seed", "11", "--n", "16", "--trials", "8")),
        ("compare", ("compare", "--family", "adversarial", "--seed", "5", "--n", "32")),
        ("identity", ("identity", "--family", "sinusoid", "--seed", "7", "--n", "16", "--trials", "20")),
    ]
    for name, args in pairs:
        first, second = rerun_bytes(tmp_path, name, *args)
        assert first == second, name
        assert first  # nonempty


def test_seeded_svg_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "sa.csv", tmp_path / "sb.csv"
    args = ("regret", "--family", "walk", "--seed", "9", "--n", "48", "--svg")
    assert run_cli(*args, "--out", str(a)) == 0
    assert run_cli(*args, "--out", str(b)) == 0
    assert (tmp_path / "sa.svg").read_bytes() == (tmp_path / "sb.svg").read_bytes()


def test_lowerbound_csv_structure(tmp_path):
    out = tmp_path / "lb.csv"
    assert run_cli("lowerbound", "--seed", "2", "--n", "16", "--trials", "6", "--out", str(out)) == 0
    lines = read(out).splitlines()
    assert lines[0] == "n,mean_regret,std_error,trials"
    assert lines[-1].startswith("slope_fit,")


def test_lowerbound_monomial_class(tmp_path):
    out = tmp_path / "lbm.csv"
    code = run_cli(
        "lowerbound", "--class", "monomial", "--seed", "4", "--n", "16",
        "--trials", "6", "--out", str(out),
    )
    assert code == 0
    assert len(read(out).splitlines()) == 3  # header, one horizon, slope


def test_config_cannot_supply_the_subcommand(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n=8\n")
    assert run_cli("--config", str(cfg)) == 2
