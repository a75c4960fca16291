import pytest

from diraclab.config import ConfigError, load_config, parse_config, to_text, with_overrides
from diraclab.model import Mixture

MINIMAL = """
[model.0]
form = quadratic
r = 0.25
g = 1
[ic]
kind = box
b = -0.6
c = -0.4
mass = 0.2
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.solver.eps == 1e-3 and cfg.solver.dt == 1e-4
    assert cfg.grid.x_min == -3.0 and cfg.grid.n_points == 6001
    assert cfg.model.a(0.0) == 0.25


def test_overrides_apply_last_dot_split():
    cfg = parse_config(MINIMAL, ["solver.t_end=2.5", "model.0.r=0.5"])
    assert cfg.solver.t_end == 2.5 and cfg.model.r == 0.5


@pytest.mark.parametrize("text, fragment", [
    (MINIMAL.replace("r = 0.25", "r = abc"), "[model.0] r"),
    (MINIMAL.replace("kind = box", "kind = cube"), "[ic]"),
    (MINIMAL + "[solver]\ndt = 1\n", "dt*K0/eps"),
    (MINIMAL + "[solver]\nbogus = 1\n", "bogus"),
    ("[ic]\nkind = box\n", "model"),
    ("[broken", "line"),
])
def test_errors_name_the_field(text, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert fragment in str(info.value)


def test_bad_override():
    with pytest.raises(ConfigError):
        parse_config(MINIMAL, ["solver.t_end"])


def test_round_trip_with_mixture_and_schedule():
    text = MINIMAL.replace("kind = box\nb = -0.6\nc = -0.4\nmass = 0.2", "kind = mixture\ncomponents = 2") + """
[model.1]
form = polynomial
coeffs = 0.2, 0, 0.8, 0, -0.6666666666666666
[schedule]
segments = 0:0, 0.5:1
period = 1
[ic.0]
kind = gaussian
center = -0.75
mass = 0.2
[ic.1]
kind = gaussian
center = 0
mass = 1
eps_scaled = true
"""
    cfg = parse_config(text)
    assert isinstance(cfg.ic, Mixture)
    assert cfg.schedule.period == 1.0
    again = parse_config(to_text(cfg))
    assert again == cfg
    assert to_text(again) == to_text(cfg)


def test_load_and_with_overrides(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(MINIMAL)
    cfg = load_config(path)
    assert with_overrides(cfg, ["solver.eps=0.002"]).solver.eps == 0.002
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")
