from fractions import Fraction

import numpy as np
import pytest
from mpmath import mpf

import src.config as config
from src.errors import ConfigError
from src.galois import field_of_order
from src.models import BivariateDegreeDistribution, BoundResult, SimResult
from src.repository import (
    export_enumerator,
    load_degree_distribution,
    load_enumerator,
    load_matrix,
    number_text,
    read_header,
    read_table,
    resolve_output,
    store_degree_distribution,
    store_matrix,
    write_bounds_csv,
    write_errexp_csv,
    write_oracle_csv,
    write_simulation_csv,
)
from src.services import outercodes as oc
from src.services.raptor import omega_r10


@pytest.fixture(autouse=True)
def output_dir(tmp_path, monkeypatch):
    # 输出目录指向临时目录，避免写入仓库
    monkeypatch.setattr(config, "OUTPUT_DIR", str(tmp_path / "output"))
    yield tmp_path


def test_matrix_round_trip(tmp_path):
    mat = np.array([[1, 0, 3], [2, 1, 0]])
    path = tmp_path / "g.txt"
    store_matrix(str(path), 4, mat)
    q, back = load_matrix(str(path))
    assert q == 4
    assert (back == mat).all()


def test_matrix_comments_and_blank_lines(tmp_path):
    path = tmp_path / "rep.txt"
    path.write_text("# 重复码\n2 1 2\n\n1 1  # 唯一一行\n", encoding="utf-8")
    q, mat = load_matrix(str(path))
    assert q == 2 and mat.tolist() == [[1, 1]]


@pytest.mark.parametrize("body", ["2 2 2\n1 0\n", "2 1 2\n1 2\n", "", "2 x 2\n1 1\n"])
def test_matrix_rejects_bad_files(tmp_path, body):
    path = tmp_path / "bad.txt"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_matrix(str(path))
    assert info.value.field == "outer"


def test_distribution_round_trip(tmp_path):
    path = tmp_path / "r10.txt"
    store_degree_distribution(str(path), omega_r10())
    assert load_degree_distribution(str(path)) == omega_r10()


def test_bivariate_distribution_round_trip(tmp_path):
    omega2 = BivariateDegreeDistribution(((1, 2, Fraction(1, 3)), (2, 3, Fraction(2, 3))))
    path = tmp_path / "met.txt"
    store_degree_distribution(str(path), omega2)
    assert "1/3" in path.read_text(encoding="utf-8")
    assert load_degree_distribution(str(path)) == omega2


def test_distribution_is_normalized_within_tolerance(tmp_path, caplog):
    path = tmp_path / "near.txt"
    path.write_text("1 0.5\n2 0.5000000001\n", encoding="utf-8")
    omega = load_degree_distribution(str(path))
    assert sum(p for _, p in omega.pairs) == 1
    assert "normalizing" in caplog.text


@pytest.mark.parametrize("body", ["1 0.5\n2 0.4\n", "1 0.5\n2\n", "1 half\n", "0 1\n"])
def test_distribution_rejects_bad_files(tmp_path, body):
    path = tmp_path / "bad.txt"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_degree_distribution(str(path))
    assert info.value.field == "dist"


@pytest.mark.parametrize("which,hA", [
    ("weight", None),
    ("bivariate_weight", 4),
    ("composition", None),
    ("biweight", None),
])
def test_enumerator_export_and_load(tmp_path, which, hA):
    enum = oc.exhaustive_enumerators(oc.hamming_generator(3), which, hA)
    path = tmp_path / f"{which}.csv"
    export_enumerator(str(path), enum)
    back = load_enumerator(str(path))
    if which == "biweight":
        assert back.entries == enum.entries
    else:
        assert back == enum


def test_bicomposition_export_and_load(tmp_path):
    gf4 = field_of_order(4)
    code = oc.code_from_generator(gf4, [[1, 0, 2], [0, 1, 3]])
    enum = oc.exhaustive_enumerators(code, "bicomposition")
    path = tmp_path / "bicomp.csv"
    export_enumerator(str(path), enum)
    assert open(path, encoding="utf-8").readline().strip() == "bicomposition,4,3"
    assert load_enumerator(str(path)).entries == enum.entries


def test_enumerator_counts_are_fractions(tmp_path):
    from src.services.enumerators import uniform_pc_weight_enum
    enum = uniform_pc_weight_enum(6, 3, 2)
    path = tmp_path / "upc.csv"
    export_enumerator(str(path), enum)
    text = path.read_text(encoding="utf-8")
    assert "0,1/1" in text
    assert load_enumerator(str(path)) == enum


def test_unknown_enumerator_kind(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("spectrum,2,3\n0,1/1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_enumerator(str(path))


def test_number_text_digits():
    assert number_text(None) == ""
    assert number_text(7) == "7"
    assert number_text(0.125) == "0.125"
    assert number_text(1 / 3) == "0.33333333333333331"
    assert float(number_text(mpf(1) / 3)) == pytest.approx(1 / 3, rel=1e-16)
    assert number_text(Fraction(1, 8)) == "0.125"


def test_resolve_output_uses_output_dir(output_dir):
    path = resolve_output("bounds.csv")
    assert path == str(output_dir / "output" / "bounds.csv")
    assert (output_dir / "output").is_dir()


def test_bounds_table(tmp_path):
    results = [
        BoundResult(0, mpf("0.5"), mpf(0), mpf("0.5"), mpf("0.5"), mpf("0.5"), lrfc=mpf(1)),
        BoundResult(1, mpf("0.25"), None, mpf("0.25")),
    ]
    path = write_bounds_csv(str(tmp_path / "b.csv"), results, {"construction": "gfq", "q": 2}, lrfc=True)
    header = read_header(path)
    assert header == {"construction": "gfq", "q": "2"}
    df = read_table(path)
    assert list(df.columns) == ["delta", "s1", "s2", "upper", "lb_bonferroni", "lb_dawson_sankoff", "lrfc"]
    assert df["upper"].tolist() == [0.5, 0.25]
    assert np.isnan(df["lb_dawson_sankoff"][1])


def test_simulation_table(tmp_path):
    results = [SimResult(2, 100, 5, 0.05, 0.0164, 0.1128)]
    path = write_simulation_csv(str(tmp_path / "s.csv"), results, {"seed": 1})
    df = read_table(path)
    assert df.to_dict("records") == [
        {"delta": 2, "trials": 100, "failures": 5, "p_hat": 0.05, "ci_low": 0.0164, "ci_high": 0.1128}
    ]


def test_errexp_table_with_summary(tmp_path):
    rows = [(0.9, 0.0, -0.01), (0.9, 0.1, 0.02)]
    path = write_errexp_csv(str(tmp_path / "e.csv"), rows, {"q": 2}, summary=["eps_star=0.05"])
    df = read_table(path)
    assert list(df.columns) == ["epsilon", "bound_bits_per_symbol"]
    assert _lines(path)[-1] == "# eps_star=0.05"
    path = write_errexp_csv(str(tmp_path / "e2.csv"), rows, {"q": 2}, with_rate=True)
    assert list(read_table(path).columns) == ["rate", "epsilon", "bound_bits_per_symbol"]


def test_oracle_table(tmp_path):
    path = write_oracle_csv(str(tmp_path / "o.csv"), [(0, Fraction(1, 2), Fraction(1, 2)), (1, Fraction(1, 4), None)],
                            {"q": 2})
    df = read_table(path)
    assert df["p_exact_fraction"].tolist() == ["1/2", "1/4"]
    assert df["p_exact"].tolist() == [0.5, 0.25]


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def test_enumerator_and_matrix_with_header(tmp_path):
    enum = oc.exhaustive_enumerators(oc.hamming_generator(3), "weight")
    path = tmp_path / "w.csv"
    export_enumerator(str(path), enum, header={"outer": "hamming:3", "seed": 0})
    assert read_header(str(path)) == {"outer": "hamming:3", "seed": "0"}
    assert load_enumerator(str(path)) == enum
    mpath = tmp_path / "g.txt"
    store_matrix(str(mpath), 2, [[1, 1]], header={"seed": 5})
    assert _lines(mpath)[0] == "# seed=5"
    assert load_matrix(str(mpath))[1].tolist() == [[1, 1]]


def test_ensemble_simulation_table_has_code_dimension_columns(tmp_path):
    results = [SimResult(0, 40, 10, 0.25, 0.1, 0.4, codes_above_k=1, failures_at_kc=12)]
    df = read_table(write_simulation_csv(str(tmp_path / "e.csv"), results, {"seed": 1}))
    assert df["failures_kc"].tolist() == [12]
    assert df["codes_above_k"].tolist() == [1]
