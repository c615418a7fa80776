import csv
import io
import json
import math

import numpy as np
import pytest

from graphequiv import cli, measures
from graphequiv.measures import rho


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def records(text):
    return json.loads(text)["records"]


def csv_records(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


EDET_SPEC = {
    "label": "edet-cap",
    "intensity": {"kind": "kernel", "kernel": {"type": "max_inverse", "c": 1, "d": 0}},
    "ensemble": {"type": "grid"},
    "link": {"type": "cap"},
}


def write_spec(tmp_path, name, **overrides):
    spec = json.loads(json.dumps(EDET_SPEC))
    spec.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(spec))
    return str(path)


def test_distance_inline_pair(capsys):
    code, out, _ = run(capsys, "distance", "--p", "0.1", "--q", "0.2")
    assert code == 0
    (r,) = records(out)
    assert r["tv_exact"] == pytest.approx(0.1, abs=1e-15)
    assert r["rho_sum"] == rho(0.1, 0.2)


def test_distance_edet_pair_at_n3(capsys, tmp_path):
    a = write_spec(tmp_path, "a.json")
    b = write_spec(tmp_path, "b.json", link={"type": "odds"})
    code, out, _ = run(capsys, "distance", "--spec-a", a, "--spec-b", b, "--n-grid", "3")
    assert code == 0
    (r,) = records(out)
    expected = float(np.sum(rho([1 / 2, 1 / 3, 1 / 3], [1 / 3, 1 / 4, 1 / 4])))
    assert r["rho_sum"] == pytest.approx(expected, rel=1e-14)
    assert r["N"] == 3 and r["tv_exact"] is not None


def test_distance_identical_specs_all_zero(capsys, tmp_path):
    a = write_spec(tmp_path, "a.json")
    code, out, _ = run(capsys, "distance", "--spec-a", a, "--spec-b", a, "--n-grid", "4,50")
    assert code == 0
    for r in records(out):
        for key in ("rho_sum", "hellinger_distance", "tv_lower", "tv_upper"):
            assert r[key] == 0.0
        assert r["hellinger_integral"] == 1.0


def test_distance_random_specs_need_seed(capsys, tmp_path):
    spec = {"label": "r1", "intensity": {"kind": "kernel", "kernel": {"type": "rank1"}},
            "ensemble": {"type": "iid", "distribution": {"name": "pareto", "alpha": 3}},
            "link": {"type": "exp_link"}}
    a = tmp_path / "a.json"
    a.write_text(json.dumps(spec))
    spec["link"] = {"type": "odds"}
    b = tmp_path / "b.json"
    b.write_text(json.dumps(spec))
    code, _, err = run(capsys, "distance", "--spec-a", str(a), "--spec-b", str(b), "--n-grid", "20")
    assert code == 2 and "seed" in err
    code, out, _ = run(capsys, "distance", "--spec-a", str(a), "--spec-b", str(b), "--n-grid", "20",
                       "--seed", "1")
    assert code == 0 and records(out)[0]["rho_sum"] > 0


def test_tabulated_spec(capsys, tmp_path):
    (tmp_path / "k.csv").write_text("a,b\n1,3\n3,2\n")
    base = {"intensity": {"kind": "kernel", "kernel": {"type": "tabulated", "csv": "k.csv"}},
            "ensemble": {"type": "iid", "distribution": {"name": "categorical", "probs": [0.5, 0.5]}}}
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps({**base, "link": {"type": "cap"}}))
    b.write_text(json.dumps({**base, "link": {"type": "odds"}}))
    code, out, _ = run(capsys, "distance", "--spec-a", str(a), "--spec-b", str(b), "--n-grid", "5",
                       "--seed", "3")
    assert code == 0
    assert records(out)[0]["N"] == 10


@pytest.mark.parametrize("content", ["{not json", json.dumps({"link": {"type": "nope"}}),
                                     json.dumps({**EDET_SPEC, "intensity": {"kind": "kernel",
                                                 "kernel": {"type": "mystery"}}})])
def test_bad_spec_exits_2(capsys, tmp_path, content):
    bad = tmp_path / "bad.json"
    bad.write_text(content)
    good = write_spec(tmp_path, "good.json")
    code, _, err = run(capsys, "distance", "--spec-a", str(bad), "--spec-b", good)
    assert code == 2 and err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["criteria", "--preset", "egnp", "--n-grid", "100,50"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        cli.main(["couple", "--mode", "edgewise", "--preset", "egnp"])     # --seed missing
    assert e.value.code == 2


def test_exact_request_too_large_exits_3(capsys):
    code, _, err = run(capsys, "distance", "--preset", "egnp", "--n-grid", "10", "--exact")
    assert code == 3 and "enumeration" in err


def test_criteria_counterexample(capsys):
    code, out, _ = run(capsys, "criteria", "--preset", "counterexample-t1",
                       "--conditions", "t1i,t1iia,t1iib", "--c-grid", "10,30,100")
    assert code == 0
    v = {r["condition"]: r["verdict"] for r in records(out) if r["kind"] == "verdict"}
    assert v == {"t1i": "inconsistent", "t1iia": "consistent", "t1iib": "inconsistent"}


def test_criteria_edet_c2ii(capsys):
    code, out, _ = run(capsys, "criteria", "--preset", "edet", "--conditions", "c2ii",
                       "--n-grid", "100,200,400,800")
    assert code == 0
    (v,) = [r for r in records(out) if r["kind"] == "verdict"]
    assert v["verdict"] == "consistent"


def test_criteria_identical_specs(capsys, tmp_path):
    a = write_spec(tmp_path, "a.json")
    code, out, _ = run(capsys, "criteria", "--spec-a", a, "--spec-b", a, "--n-grid", "50,100,200,400",
                       "--conditions", "t1i,t1iia,c1i,c1ii")
    assert code == 0
    recs = records(out)
    assert all(r["verdict"] == "consistent" for r in recs if r["kind"] == "verdict")
    assert all(r["value"] == 0 for r in recs if r["kind"] == "value" and r["condition"] == "t1i")


def test_criteria_strict_inconclusive_exits_4(capsys):
    args = ["criteria", "--preset", "egnp", "--conditions", "t1i", "--n-grid", "100,1000,10000"]
    code, out, _ = run(capsys, *args)
    assert code == 0
    assert records(out)[-1]["verdict"] == "inconclusive"
    code, _, _ = run(capsys, *args, "--strict")
    assert code == 4


def test_criteria_condition_mismatch_exits_2(capsys):
    code, _, err = run(capsys, "criteria", "--preset", "egnp", "--conditions", "t2i")
    assert code == 2
    code, _, err = run(capsys, "criteria", "--preset", "egnp", "--conditions", "t9")
    assert code == 2


def test_couple_edge_count_clt(capsys):
    code, out, _ = run(capsys, "couple", "--mode", "edge_count", "--alpha", "1", "--n-grid", "2000",
                       "--replicates", "500", "--seed", "4")
    assert code == 0
    (r,) = records(out)
    assert abs(r["exact"] - 0.3829) < 0.02
    assert r["clt_reference"] == pytest.approx(0.3829249, abs=1e-7)


def test_couple_egnp_contrast(capsys):
    code, out, _ = run(capsys, "couple", "--mode", "edgewise", "--preset", "egnp",
                       "--n-grid", "500,4000", "--replicates", "300", "--seed", "2")
    assert code == 0
    assert records(out)[-1]["bound"] == pytest.approx(0.25, abs=0.01)
    code, out, _ = run(capsys, "couple", "--mode", "edge_count", "--preset", "egnp",
                       "--n-grid", "500,4000", "--replicates", "300", "--seed", "2")
    assert code == 0
    tv = [r["exact"] for r in records(out)]
    assert tv[0] > tv[1] and tv[1] < 0.01


def test_couple_edgewise_identical_rate_zero(capsys):
    code, out, _ = run(capsys, "couple", "--mode", "edgewise", "--preset", "ep2",
                       "--param", "delta_exponent=50", "--n-grid", "20,40", "--replicates", "200",
                       "--seed", "1")
    assert code == 0
    assert all(r["estimate"] == 0.0 for r in records(out))


def test_couple_edge_count_needs_homogeneous_source(capsys):
    code, _, err = run(capsys, "couple", "--mode", "edge_count", "--preset", "edet",
                       "--n-grid", "50", "--seed", "1")
    assert code == 3


def test_json_and_csv_payloads_match(capsys):
    args = ["criteria", "--preset", "ehh", "--n-grid", "50,100,200,400", "--replicates", "30",
            "--seed", "11", "--conditions", "t2i,t2iib,c2ii"]
    _, js, _ = run(capsys, *args)
    _, cs, _ = run(capsys, *args, "--format", "csv")
    a, b = records(js), csv_records(cs)
    assert len(a) == len(b)
    for ra, rb in zip(a, b):
        for k, v in ra.items():
            if isinstance(v, float):
                assert float(rb[k]) == v or (math.isnan(v) and rb[k] == "NaN")
            elif v is None:
                assert rb[k] == ""
            elif isinstance(v, bool):
                assert rb[k] == str(v).lower()
            else:
                assert rb[k] == str(v)
    meta = json.loads(js)["metadata"]
    assert meta["seed"] == 11 and len(meta["spec_sha256"]) == 64
    assert meta["tolerances"]["slope_tol"] == 0.1
    assert "# seed: 11" in cs


def test_reruns_are_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.csv"
        code = cli.main(["couple", "--mode", "edgewise", "--preset", "erank1", "--n-grid", "30,60",
                         "--replicates", "100", "--seed", "123", "--format", "csv", "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_presets_listing(capsys):
    code, out, _ = run(capsys, "presets")
    assert code == 0
    for name in ("egnp", "edet", "edet2", "erank1", "ehh", "ep2", "counterexample-t1"):
        assert name in out


def test_accept_selected_checks(capsys):
    code, out, _ = run(capsys, "accept", "--only", "lemma_double,egnp_contrast", "--no-timings")
    assert code == 0
    recs = records(out)
    assert [r["check"] for r in recs] == ["lemma_double", "egnp_contrast"]
    assert all(r["passed"] for r in recs) and all(r["runtime"] is None for r in recs)


def test_accept_names_failure_under_injected_rho_bug(capsys, monkeypatch):
    def bad_rho(p, q):
        p, q = np.asarray(p, float), np.asarray(q, float)
        return (np.sqrt(p) + np.sqrt(q)) ** 2 + (np.sqrt(1 - p) - np.sqrt(1 - q)) ** 2
    monkeypatch.setattr(measures, "rho", bad_rho)
    code, out, err = run(capsys, "accept", "--only", "form_equivalence")
    assert code == 5
    assert "form_equivalence" in err
    assert records(out)[0]["passed"] is False


def test_accept_unknown_check(capsys):
    code, _, err = run(capsys, "accept", "--only", "nonsense")
    assert code == 2
