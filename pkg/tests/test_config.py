import pytest

from andersonkit.config import Config, default_config, load_config, resolve_config
from andersonkit.errors import ConfigError


def test_get_set_and_flatten():
    cfg = Config()
    cfg.set("solve.omega", 0.5)
    cfg.set("seed", 3)
    assert cfg.get("solve.omega") == 0.5
    assert cfg.get("solve.missing", "x") == "x"
    assert cfg.get("seed.deeper") is None
    assert list(cfg.flatten()) == [("seed", 3), ("solve.omega", 0.5)]


def test_merged_is_deep_and_copies():
    base = Config({"solve": {"omega": 0.2, "p": 3}})
    merged = base.merged({"solve": {"p": 5}})
    assert merged.get("solve.omega") == 0.2 and merged.get("solve.p") == 5
    assert base.get("solve.p") == 3


def test_defaults():
    cfg = default_config()
    assert cfg.get("solve.omega") == 0.2
    assert cfg.get("solve.m") == 20
    assert cfg.get("gmres.restart") == 50
    assert cfg.get("boltzmann.repeats") == 30
    assert cfg.get("bench.epsilon") == 1e-4


def test_load_yaml(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("solve:\n  p: 4\nperturb:\n  eps: [1.0e-6, 1.0]\n", encoding="utf-8")
    cfg = load_config(path)
    assert cfg.get("solve.p") == 4
    assert cfg.get("perturb.eps") == [1e-6, 1.0]


def test_load_key_value(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nsolve.tol = 1.0e-10\nprecond.rcm = true  # inline\n\nseed=9\n", encoding="utf-8")
    cfg = load_config(path)
    assert cfg.get("solve.tol") == pytest.approx(1e-10)
    assert cfg.get("precond.rcm") is True
    assert cfg.get("seed") == 9


@pytest.mark.parametrize(
    "name, text",
    [("bad.cfg", "just words\n"), ("bad2.cfg", "= 3\n"), ("list.yaml", "- 1\n- 2\n")],
)
def test_load_errors(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_precedence(tmp_path, monkeypatch):
    path = tmp_path / "run.yaml"
    path.write_text("seed: 4\nsolve:\n  omega: 0.7\nbench:\n  matrix_dir: from-file\n", encoding="utf-8")
    monkeypatch.setenv("ANDERSONKIT_MATRIX_DIR", "from-env")
    cfg = resolve_config(path, {"solve": {"omega": 0.9}})
    assert cfg.get("seed") == 4
    assert cfg.get("solve.omega") == 0.9
    assert cfg.get("solve.p") == 3
    assert cfg.get("bench.matrix_dir") == "from-env"
