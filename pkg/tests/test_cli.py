"""In-process checks of the command-line interface."""

import json

import pytest

from torusdyn import corpus
from torusdyn.cli import main

GOLDEN = 0.6180339887498949


@pytest.fixture(scope="module", autouse=True)
def _cli_cache(tmp_path_factory):
    # route orbit databases built by the CLI into a throwaway cache so
    # repeated invocations in this module reuse them
    mp = pytest.MonkeyPatch()
    mp.setenv("TORUSDYN_CACHE", str(tmp_path_factory.mktemp("cli-cache")))
    yield
    mp.undo()


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    doc = json.loads(captured.out) if captured.out.strip() else None
    err = json.loads(captured.err) if captured.err.strip() else None
    return code, doc, err


def test_verify_passes_on_builtin_map(capsys):
    code, doc, _ = run_cli(["verify", "--label", "cat-linear"], capsys)
    assert code == 0
    assert doc["ok"] is True
    assert doc["command"] == "verify"
    assert doc["spec_label"] == "cat-linear"
    assert len(doc["spec_hash"]) == 64
    assert doc["backend"] in ("numba", "numpy")
    assert doc["result"]["passed"] is True


def test_verify_fails_on_cone_violation(tmp_path, capsys):
    bad = corpus.cat_sin(0.45)
    path = tmp_path / "bad.json"
    bad.save(path)
    code, doc, _ = run_cli(["verify", "--spec", str(path)], capsys)
    assert code == 1
    assert doc["ok"] is False


def test_missing_spec_is_an_error(capsys):
    code, doc, err = run_cli(["verify"], capsys)
    assert code == 2
    assert doc is None
    assert err["error"] == "TorusDynError"
    assert "--spec" in err["message"]


def test_orbits_enumerate_counts(capsys):
    code, doc, _ = run_cli(
        ["orbits", "enumerate", "--label", "cat-linear", "--levels", "6"], capsys
    )
    assert code == 0
    assert doc["result"]["counts"] == {
        "1": 1, "2": 5, "3": 16, "4": 45, "5": 121, "6": 320,
    }


def test_orbits_validate(capsys):
    code, doc, _ = run_cli(
        ["orbits", "validate", "--label", "fib-linear", "--levels", "6"], capsys
    )
    assert code == 0
    assert doc["result"]["ok"] is True


def test_spectral_resonances(capsys):
    code, doc, _ = run_cli(
        ["spectral", "resonances", "--label", "cat-linear", "--levels", "10"],
        capsys,
    )
    assert code == 0
    res = doc["result"]
    assert res["verdict"] is True
    assert res["disc_zero_count"] == 1
    assert abs(res["modulus"] - res["expected"]) <= 1e-3


def test_spectral_determinant_shape(capsys):
    code, doc, _ = run_cli(
        ["spectral", "determinant", "--label", "cat-linear", "--levels", "6",
         "--weight", "g-tilde", "--extended"], capsys
    )
    assert code == 0
    coeffs = doc["result"]["coefficients"]
    assert len(coeffs) == 7
    assert coeffs[0]["re"] == pytest.approx(1.0)
    assert coeffs[0]["im"] == pytest.approx(0.0)


def test_horocycle_integrate(capsys):
    code, doc, _ = run_cli(
        ["horocycle", "integrate", "--label", "cat-linear", "--t", "50"], capsys
    )
    assert code == 0
    assert doc["result"]["t"][-1] == pytest.approx(50.0)
    assert doc["result"]["clock_error"] < 1e-9
    assert len(doc["result"]["values"]) == 7


def test_horocycle_rotation(capsys):
    code, doc, _ = run_cli(
        ["horocycle", "rotation", "--label", "cat-linear", "--returns", "512"],
        capsys,
    )
    assert code == 0
    res = doc["result"]
    assert res["omega"] == pytest.approx(GOLDEN, abs=1e-9)
    assert tuple(res["relation"]) == (1, -1)


def test_mme_equidistribution(capsys):
    code, doc, _ = run_cli(
        ["mme", "equidistribution", "--label", "cat-linear", "--levels", "10"],
        capsys,
    )
    assert code == 0
    assert doc["result"]["reference_exact"] is True
    assert doc["result"]["fit"]["superexponential"] is True


def test_corpus_writes_manifest(tmp_path, capsys):
    out = tmp_path / "corpus"
    code, doc, _ = run_cli(["corpus", "--out", str(out)], capsys)
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    labels = {entry["label"] for entry in manifest["specs"]}
    assert "cat-linear" in labels and "fib-linear" in labels
    for entry in manifest["specs"]:
        assert (out / entry["file"]).exists()


def test_pretty_flag_after_subcommand(capsys):
    code = main(["verify", "--label", "cat-linear", "--pretty"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("{\n")  # indented output
    assert json.loads(out)["ok"] is True
