import json

import numpy as np
import pytest

from ovfree.cli import main
from ovfree.serialize import array_to_json

from conftest import random_cp, random_density, random_hermitian


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def read(path):
    with open(path) as fh:
        return json.load(fh)


def map_spec_scaled_id(k, t):
    return {"k": k, "kraus": [array_to_json(np.sqrt(t) * np.eye(k))]}


def map_spec_id_plus_transpose():
    from ovfree import CPMap

    choi = CPMap.identity(2).choi + CPMap.transpose_map(2).choi
    return {"k": 2, "choi": array_to_json(choi)}


def semicircle_spec(order=4):
    cums = []
    for n in range(1, order + 1):
        t = np.zeros((1,) * (n - 1) + (1, 1))
        if n == 2:
            t[..., 0, 0] = 1.0
        cums.append(array_to_json(t))
    return {"k": 1, "order": order, "cumulants": cums}


def bernoulli_spec(order=6):
    from ovfree import bernoulli, cumulants_from_moments

    cums = cumulants_from_moments(bernoulli(order))
    return {"k": 1, "order": order, "cumulants": [array_to_json(c.tensor) for c in cums]}


def realization_spec(rng, k=2, p=2, order=3):
    X = random_hermitian(rng, k * p)
    rho = random_density(rng, p)
    return {
        "k": k,
        "order": order,
        "realization": {
            "d": k * p,
            "X": array_to_json(X),
            "embedding": "tensor-block",
            "p": p,
            "state": array_to_json(rho),
        },
    }


def test_check_cp_scaled_identity(tmp_path):
    inp = write(tmp_path, "map.json", map_spec_scaled_id(2, 2.0))
    out = str(tmp_path / "out.json")
    assert main(["check-cp", "--in", inp, "--out", out]) == 0
    report = read(out)
    assert report["eta"]["is_psd"] and report["eta_minus_id"]["is_psd"]


def test_check_cp_transpose(tmp_path):
    from ovfree import CPMap

    inp = write(tmp_path, "map.json", {"k": 2, "choi": array_to_json(CPMap.transpose_map(2).choi)})
    out = str(tmp_path / "out.json")
    assert main(["check-cp", "--in", inp, "--out", out]) == 0
    report = read(out)
    assert not report["eta"]["is_psd"]


def test_check_cp_id_plus_transpose(tmp_path):
    inp = write(tmp_path, "map.json", map_spec_id_plus_transpose())
    out = str(tmp_path / "out.json")
    assert main(["check-cp", "--in", inp, "--out", out]) == 0
    report = read(out)
    assert not report["eta"]["is_psd"]
    assert not report["eta_minus_id"]["is_psd"]


def test_malformed_json_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["check-cp", "--in", str(bad)]) == 2


def test_bad_map_spec_exit_2(tmp_path):
    inp = write(tmp_path, "map.json", {"k": 2})
    assert main(["check-cp", "--in", inp]) == 2


def test_convolve_semicircle(tmp_path):
    inp = write(tmp_path, "in.json", {"distribution": semicircle_spec(4), "map": map_spec_scaled_id(1, 2.0)})
    out = str(tmp_path / "out.json")
    assert main(["convolve-power", "--in", inp, "--out", out, "--order", "4"]) == 0
    result = read(out)
    m2 = result["moments"][1][0][0][0]
    m4 = result["moments"][3][0][0][0][0][0]
    assert abs(m2[0] - 2.0) < 1e-10
    assert abs(m4[0] - 8.0) < 1e-10


def test_convolve_identity_echoes(tmp_path):
    inp = write(tmp_path, "in.json", {"distribution": bernoulli_spec(4), "map": map_spec_scaled_id(1, 1.0)})
    out = str(tmp_path / "out.json")
    assert main(["convolve-power", "--in", inp, "--out", out, "--order", "4"]) == 0
    result = read(out)
    values = [result["moments"][0][0][0], result["moments"][1][0][0][0]]
    assert abs(values[0][0]) < 1e-12
    assert abs(values[1][0] - 1.0) < 1e-12


def test_convolve_bernoulli_half_prefix(tmp_path):
    inp = write(tmp_path, "in.json", {"distribution": bernoulli_spec(6), "map": map_spec_scaled_id(1, 0.5)})
    out = str(tmp_path / "out.json")
    assert main(["convolve-power", "--in", inp, "--out", out, "--order", "6"]) == 0
    result = read(out)
    flat = [np.asarray(t).reshape(-1)[:2] for t in result["moments"][:4]]
    got = [v[0] for v in flat]
    assert np.allclose(got, [0.0, 0.5, 0.0, 0.0], atol=1e-12)


def test_convolve_dimension_mismatch_exit_2(tmp_path):
    inp = write(tmp_path, "in.json", {"distribution": semicircle_spec(4), "map": map_spec_scaled_id(2, 2.0)})
    assert main(["convolve-power", "--in", inp]) == 2


def test_positivity_command(tmp_path):
    inp = write(tmp_path, "in.json", {"distribution": bernoulli_spec(6), "map": None})
    out = str(tmp_path / "out.json")
    assert main(["positivity", "--in", inp, "--out", out, "--level", "3", "--order", "6"]) == 0
    assert read(out)["positive_up_to_level"]


def test_verify_realization_pass(tmp_path):
    rng = np.random.default_rng(11)
    psi = random_cp(rng, 2, rank=1)
    from ovfree import CPMap

    eta_choi = CPMap.identity(2).choi + psi.choi
    inp = write(
        tmp_path,
        "in.json",
        {
            "distribution": realization_spec(rng, order=3),
            "map": {"k": 2, "choi": array_to_json(eta_choi)},
        },
    )
    out = str(tmp_path / "out.json")
    assert main(["verify-realization", "--in", inp, "--out", out, "--order", "3"]) == 0
    result = read(out)
    assert result["pass"]
    assert result["max_deviation"] < 1e-8


def test_verify_realization_precondition_exit_3(tmp_path):
    rng = np.random.default_rng(12)
    inp = write(
        tmp_path,
        "in.json",
        {"distribution": realization_spec(rng, order=3), "map": map_spec_scaled_id(2, 0.5)},
    )
    out = str(tmp_path / "out.json")
    assert main(["verify-realization", "--in", inp, "--out", out]) == 3
    result = read(out)
    assert not result["pass"]
    assert result["eta_minus_id"]["witness"] is not None


def test_verify_realization_order_guard(tmp_path):
    rng = np.random.default_rng(13)
    inp = write(
        tmp_path,
        "in.json",
        {"distribution": realization_spec(rng, order=3), "map": map_spec_scaled_id(2, 1.0)},
    )
    assert main(["verify-realization", "--in", inp, "--order", "12"]) == 2


def test_order_guard_env_override(tmp_path, monkeypatch):
    inp = write(tmp_path, "in.json", {"distribution": semicircle_spec(9), "map": map_spec_scaled_id(1, 1.0)})
    monkeypatch.delenv("OVFREE_MAX_ORDER", raising=False)
    assert main(["convolve-power", "--in", inp, "--order", "9"]) == 2
    monkeypatch.setenv("OVFREE_MAX_ORDER", "9")
    out = str(tmp_path / "out.json")
    assert main(["convolve-power", "--in", inp, "--out", out, "--order", "9"]) == 0
    assert len(read(out)["moments"]) == 9


def test_counterexample_preserved(tmp_path):
    inp = write(tmp_path, "in.json", {"map": map_spec_scaled_id(2, 3.0)})
    out = str(tmp_path / "out.json")
    assert main(["counterexample", "--in", inp, "--out", out]) == 0
    result = read(out)
    assert result["eta_minus_id_cp"]
    assert result["witness"] is None and result["nonpositivity"] is None


def test_counterexample_full_chain(tmp_path):
    inp = write(tmp_path, "in.json", {"map": map_spec_id_plus_transpose()})
    out = str(tmp_path / "out.json")
    assert main(["counterexample", "--in", inp, "--out", out]) == 0
    result = read(out)
    assert not result["eta_minus_id_cp"]
    assert result["lambda"] < 1
    assert result["witness"]["m"] == 2
    assert result["nonpositivity"]["min_eigenvalue"] < 0
    assert result["nonpositivity"]["witness_vector"] is not None


def test_counterexample_scalar_lambda(tmp_path):
    inp = write(tmp_path, "in.json", {"map": map_spec_scaled_id(1, 0.9)})
    out = str(tmp_path / "out.json")
    assert main(["counterexample", "--in", inp, "--out", out]) == 0
    result = read(out)
    assert abs(result["lambda"] - 0.9) < 1e-10


def test_deterministic_output(tmp_path):
    inp = write(tmp_path, "in.json", {"map": map_spec_id_plus_transpose()})
    out1 = str(tmp_path / "out1.json")
    out2 = str(tmp_path / "out2.json")
    assert main(["counterexample", "--in", inp, "--out", out1]) == 0
    assert main(["counterexample", "--in", inp, "--out", out2]) == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()


def test_unknown_command_rejected():
    with pytest.raises(SystemExit):
        main(["frobnicate", "--in", "x.json"])
