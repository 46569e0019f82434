import xml.etree.ElementTree as ET

import numpy as np
import pytest

from nmmb import cli, config
from nmmb.config import parse_config, with_overrides, format_config
from nmmb.errors import ConfigParseError, DomainError
from nmmb.manybody import Statistics
from nmmb.metrics import DistanceReport
from nmmb.plot import emit_plot
from nmmb.presets import PRESETS, load_preset, preset_text

MINIMAL = """\
[potential]
l = 50
b = 2
r = 4000
v0 = 0.1
"""

SMALL = """\
[potential]
l = 10
b = 1
r = 30
v0 = 0.5

[numerics]
h = 0.5
t_max = 40
n_samples = 5

[state.a]
statistics = boson
orbitals = 1

[state.b]
statistics = boson
orbitals = 2

[output]
name = small
"""


@pytest.fixture
def tmp_cache(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv("NMMB_CACHE_DIR", str(d))
    return d


# -- parsing ----------------------------------------------------------------------

def test_minimal_document_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.h == 0.25
    assert cfg.e_cut is None  # complete basis
    assert cfg.t_max == 100000.0
    assert cfg.n_samples == 500
    assert cfg.potential.l == 50 and cfg.potential.r == 4000
    assert cfg.state_a.orbitals == ((1, 0),) and cfg.state_b.vacuum


def test_negative_v0_rejected():
    with pytest.raises(ConfigParseError) as exc:
        parse_config(MINIMAL.replace("v0 = 0.1", "v0 = -1"))
    assert exc.value.key == "potential.v0" and exc.value.line == 5


def test_unknown_key_names_key_and_line():
    with pytest.raises(ConfigParseError) as exc:
        parse_config(MINIMAL + "\n[numerics]\nhh = 0.5\n")
    assert exc.value.key == "numerics.hh" and exc.value.line == 8
    assert "numerics.hh" in str(exc.value) and "line 8" in str(exc.value)


def test_missing_orbitals():
    with pytest.raises(ConfigParseError) as exc:
        parse_config(MINIMAL + "\n[state.a]\nstatistics = fermion\n")
    assert exc.value.key == "state.a.orbitals"


def test_non_integral_breakpoint():
    with pytest.raises(ConfigParseError) as exc:
        parse_config(MINIMAL + "\n[numerics]\nh = 0.3\n")
    assert exc.value.key.startswith("potential.")


@pytest.mark.parametrize("snippet, key", [
    ("[numerics]\nn_samples = 1\n", "numerics.n_samples"),
    ("[numerics]\ne_cut = -1\n", "numerics.e_cut"),
    ("[state.a]\nstatistics = fermion\norbitals = 1, 1\n", "state.a.orbitals"),
    ("[state.a]\nstatistics = anyon\norbitals = 1\n", "state.a.statistics"),
    ("[state.a]\nstatistics = ordered\nsymmetrize = true\norbitals = 1\n", "state.a.symmetrize"),
    ("[state.a]\norbitals = 1, 2\n[output]\nkp = 3\n", "output.kp"),
    ("[output]\nmetrics = d_full, bogus\n", "output.metrics"),
    ("[output]\nplot = maybe\n", "output.plot"),
])
def test_validation_errors(snippet, key):
    with pytest.raises(ConfigParseError) as exc:
        parse_config(MINIMAL + "\n" + snippet)
    assert exc.value.key == key
    assert exc.value.line is not None


def test_syntax_errors_carry_line():
    with pytest.raises(ConfigParseError) as exc:
        parse_config("x = 1\n")
    assert exc.value.line == 1
    with pytest.raises(ConfigParseError) as exc:
        parse_config(MINIMAL + "[potential]\n")
    assert exc.value.line == 6


def test_internal_labels_and_complete():
    cfg = parse_config(MINIMAL + "\n[numerics]\ne_cut = complete\n"
                       "[state.a]\norbitals = 1:-, 2:+\n")
    assert cfg.e_cut is None
    assert cfg.state_a.orbitals == ((1, 1), (2, 0))
    assert cfg.d_int == 2


def test_fig3c_statistics():
    cfg = load_preset("fig3c")
    assert cfg.state_a.statistics is Statistics.BOSON and cfg.state_a.symmetrize
    assert cfg.state_b.statistics is Statistics.ORDERED and not cfg.state_b.symmetrize
    assert cfg.state_a.orbitals == ((1, 0),) * 3 + ((2, 0),) * 3
    assert cfg.output.kp == (1, 2, 3, 4, 5)


@pytest.mark.parametrize("name", list(PRESETS))
def test_presets_parse_and_roundtrip(name):
    cfg = load_preset(name)
    assert parse_config(format_config(cfg)) == cfg
    assert cfg.output.name == name


def test_overrides_validated():
    cfg = load_preset("fig1b")
    assert with_overrides(cfg, h=0.5, n_samples=7).n_samples == 7
    with pytest.raises(ConfigParseError):
        with_overrides(cfg, n_samples=1)


# -- plotting ---------------------------------------------------------------------------

def _report():
    t = np.linspace(0, 10, 6)
    d = np.linspace(0.5, 0.1, 6)
    return DistanceReport(times=t, d_full=d, p_lower=d, p_upper=d, d_1p=d,
                          extra={"p1": {1: np.exp(-t)}})


def test_emit_plot_wellformed(tmp_path):
    paths = emit_plot(_report(), tmp_path / "r")
    assert [p.name for p in paths] == ["r_p1.svg", "r_metrics.svg"]
    for p in paths:
        root = ET.parse(p).getroot()
        assert root.tag.endswith("svg")
    text = paths[0].read_text()
    assert "1e-" in text  # logarithmic ordinate labels


def test_emit_plot_single_log_panel(tmp_path):
    paths = emit_plot(_report(), tmp_path / "r", panels=("p1",))
    assert len(paths) == 1


def test_emit_plot_errors(tmp_path):
    with pytest.raises(DomainError):
        emit_plot(_report(), tmp_path / "r", metrics=())
    with pytest.raises(DomainError):
        emit_plot(_report(), tmp_path / "r", panels=())
    empty = DistanceReport(times=np.zeros(0), d_full=np.zeros(0), p_lower=np.zeros(0),
                           p_upper=np.zeros(0), d_1p=np.zeros(0))
    with pytest.raises(DomainError):
        emit_plot(empty, tmp_path / "r")


# -- CLI --------------------------------------------------------------------------------

def test_cli_run_config(tmp_path, tmp_cache, capsys):
    cfg_path = tmp_path / "small.cfg"
    cfg_path.write_text(SMALL)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out), "--plot"]) == 0
    raw = (out / "small.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    lines = raw.decode().splitlines()
    header = lines[0].split(",")
    assert header[:3] == ["t", "p1_n1", "p1_n2"]
    assert header[-4:] == ["d_full", "p_lower", "p_upper", "d_1p"]
    assert len(lines) == 6
    for line in lines[1:]:
        for cell in line.split(","):
            assert format(float(cell), ".17g") == cell
    for p in ("small_p1.svg", "small_metrics.svg"):
        ET.parse(out / p)
    assert (out / "small_witnesses.csv").exists()
    assert "wrote" in capsys.readouterr().out


def test_cli_probabilities_in_range(tmp_path, tmp_cache):
    cfg_path = tmp_path / "small.cfg"
    cfg_path.write_text(SMALL)
    cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path)])
    data = np.genfromtxt(tmp_path / "small.csv", delimiter=",", names=True)
    for name in data.dtype.names:
        if name.startswith(("p1_", "pk_")):
            assert np.all(data[name] >= -1e-9) and np.all(data[name] <= 1 + 1e-9)
    total_a = sum(data[n] for n in data.dtype.names if n.startswith("pk_a_"))
    assert np.allclose(total_a, 1.0, atol=1e-9)


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(MINIMAL.replace("v0 = 0.1", "v0 = -1"))
    assert cli.main(["run", "--config", str(bad)]) == 2
    assert "line 5" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_cli_numerical_error_exit_code(tmp_path, tmp_cache, capsys):
    cfg_path = tmp_path / "small.cfg"
    cfg_path.write_text(SMALL)
    rc = cli.main(["run", "--config", str(cfg_path), "--emax", "0.2",
                   "--out", str(tmp_path)])
    assert rc == 3
    err = capsys.readouterr().err
    assert "small" in err and "e_cut" in err


def test_cli_cache_commands(tmp_path, tmp_cache, capsys):
    cfg_path = tmp_path / "small.cfg"
    cfg_path.write_text(SMALL)
    cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path)])
    assert any(tmp_cache.iterdir())
    capsys.readouterr()
    assert cli.main(["cache", "path"]) == 0
    assert capsys.readouterr().out.strip() == str(tmp_cache)
    assert cli.main(["cache", "clear"]) == 0
    assert "removed 1" in capsys.readouterr().out
    assert not list(tmp_cache.glob("*.nmmb*"))


def test_cli_presets(capsys):
    assert cli.main(["presets", "list"]) == 0
    listed = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert listed == list(PRESETS)
    assert cli.main(["presets", "show", "fig3c"]) == 0
    assert capsys.readouterr().out == preset_text("fig3c")


def test_cli_bad_override_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--preset", "fig1b", "--emax", "-3"])
    assert exc.value.code == 2
