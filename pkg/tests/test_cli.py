import csv
import hashlib
import io
import json
import subprocess
import sys

import pytest

from thermolab import cli
from thermolab import io as tio
from thermolab.config import DEFAULTS, REQUIRES, resolve

FAST = {
    "maps orbit": [],
    "maps certify-bc": ["--set", "map.family=\"quadratic\"", "--set", "map.a=2"],
    "maps certify-rovella": [],
    "hyp detect": ["--sigma", "0.75"],
    "hyp frequency": ["--points", "20", "--horizon", "200"],
    "induce build": ["--max-time", "12"],
    "induce variation": ["--depth", "4", "--set", "inducing.max_time=12",
                         "--set", "thermo.potential={\"kind\": \"coordinate\"}"],
    "shift pressure": [],
    "shift rpf": ["--set", "shift.potential={\"kind\": \"bernoulli\", \"p\": [0.5, 0.3, 0.2]}"],
    "shift gibbs-check": [],
    "thermo pressure": [],
    "thermo equilibrium": ["--set", "inducing.max_time=16", "--set", "thermo.support_samples=20"],
    "thermo abramov-check": ["--set", "inducing.max_time=16", "--set", "thermo.support_samples=20"],
    "thermo viana-potential": ["--L", "50000", "--set", "map.family=\"viana\"",
                               "--set", "thermo.viana.claim_orbits=5", "--set", "thermo.viana.claim_length=100"],
    "thermo finiteness-gap": [],
}


def invoke(argv):
    buf = io.StringIO()
    code = cli.run(argv, stdout=buf)
    return code, buf.getvalue()


def digest(out_dir):
    h = hashlib.sha256()
    for p in sorted(out_dir.iterdir()):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def test_every_command_is_covered():
    assert set(FAST) == set(REQUIRES)


@pytest.mark.parametrize("name", sorted(FAST))
def test_command_envelope_and_determinism(name, tmp_path):
    argv = name.split() + FAST[name] + ["--seed", "3", "--out", str(tmp_path / "out")]
    code, text = invoke(argv)
    assert code == 0, text
    env = json.loads(text)
    assert env["schema_version"] == tio.SCHEMA_VERSION
    assert env["command"] == name
    schema = tio.schema()
    assert set(schema["result_keys"][name]) <= set(env["result"])
    first = digest(tmp_path / "out")
    files = sorted(p.name for p in (tmp_path / "out").iterdir())
    stem = name.replace(" ", "_").replace("-", "_")
    assert f"{stem}.json" in files
    for f in files:
        if f.endswith(".csv"):
            table = f[len(stem) + 1:-4]
            with open(tmp_path / "out" / f, newline="", encoding="utf-8") as fh:
                assert next(csv.reader(fh)) == schema["csv"][table]
    code2, text2 = invoke(argv)
    assert code2 == 0 and text2 == text
    assert digest(tmp_path / "out") == first


def test_json_is_sorted_and_finite():
    _, text = invoke(["thermo", "finiteness-gap"])
    env = json.loads(text)
    assert text == json.dumps(env, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def test_seed_changes_random_potential():
    base = ["shift", "rpf", "--set", "shift.potential={\"kind\": \"random_locally_constant\", \"N\": 4}"]
    a = json.loads(invoke(base + ["--seed", "1"])[1])["result"]["lambda"]
    b = json.loads(invoke(base + ["--seed", "2"])[1])["result"]["lambda"]
    assert a != b


def test_runtime_error_exit_code():
    code, text = invoke(["thermo", "finiteness-gap", "--gamma", "0"])
    assert code == 1
    assert json.loads(text)["error"]["code"] == "thermo.BadParameters"


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"hyperbolic": {"sigmaa": 0.5}}))
    code, text = invoke(["hyp", "detect", "--config", str(bad)])
    assert code == 2 and json.loads(text)["error"]["code"].endswith("ConfigError")
    code, _ = invoke(["maps", "orbit", "--config", str(tmp_path / "missing.toml")])
    assert code == 2
    code, _ = invoke(["maps", "orbit", "--set", "orbit.n=\"many\""])
    assert code == 2


def test_tau_cutoff_too_small_is_reported():
    code, text = invoke(["thermo", "equilibrium", "--set", "inducing.max_time=12"])
    assert code == 1
    assert json.loads(text)["error"]["code"] == "thermo.NonIntegrableTau"


def test_toml_config(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text('[map]\nfamily = "quadratic"\na = 2.0\n\n[orbit]\nx = 0.0\nn = 3\n')
    code, text = invoke(["maps", "orbit", "--config", str(p)])
    assert code == 0
    r = json.loads(text)["result"]
    assert r["n"] == 3 and r["end"] == -2.0


def test_flag_overrides_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"orbit": {"n": 7}}))
    _, text = invoke(["maps", "orbit", "--config", str(p), "--n", "2"])
    assert json.loads(text)["config"]["orbit"]["n"] == 2


def test_resolve_does_not_mutate_defaults():
    before = json.dumps(DEFAULTS, sort_keys=True)
    resolve(None, {"orbit.n": 5}, ["map.family=\"quadratic\""])
    assert json.dumps(DEFAULTS, sort_keys=True) == before


def test_argparse_error_is_json():
    r = subprocess.run([sys.executable, "-m", "thermolab", "maps", "orbit", "--n", "x"],
                       capture_output=True, text=True)
    assert r.returncode == 2
    err = json.loads(r.stderr[r.stderr.index("{"):])
    assert err["error"]["code"] == "cli.ConfigError"


def test_csv_quoting():
    text = tio.csv_text(["a", "b"], [{"a": 'x,"y"', "b": [1, 2.5]}, {"a": None, "b": True}])
    assert text == 'a,b\r\n"x,""y""",1 2.5\r\n,true\r\n'


def test_plain_handles_non_finite():
    assert tio.plain({"a": float("nan"), "b": [float("-inf")]}) == {"a": "nan", "b": ["-inf"]}
