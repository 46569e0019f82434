"""Scenario documents for the published figures."""
from .config import parse_config
from .errors import ConfigurationError

_COMMON = """\
[potential]
l = 50
b = 2
r = 4000
v0 = 0.1
"""

PRESETS = {
    "fig1b": ("single particle in |1>; survival probability in the left well", """
[state.a]
statistics = boson
orbitals = 1

[state.b]
vacuum = true

[output]
name = fig1b
panels = p1
"""),
    "fig2ab": ("one particle in |1> versus one particle in |2>", """
[state.a]
statistics = boson
orbitals = 1

[state.b]
statistics = boson
orbitals = 2

[output]
name = fig2ab
"""),
    "fig2cd": ("|1> with internal label - versus +", """
[state.a]
statistics = boson
orbitals = 1:-

[state.b]
statistics = boson
orbitals = 1:+

[output]
name = fig2cd
"""),
    "fig3a": ("three fermions in |1>,|2>,|3> versus the many-particle vacuum", """
[state.a]
statistics = fermion
orbitals = 1, 2, 3

[state.b]
vacuum = true

[output]
name = fig3a
"""),
    "fig3b": ("four versus five bosons in |1>", """
[state.a]
statistics = boson
orbitals = 1, 1, 1, 1

[state.b]
statistics = boson
orbitals = 1, 1, 1, 1, 1

[output]
name = fig3b
"""),
    "fig3c": ("symmetrised versus unsymmetrised 3x|1> + 3x|2>", """
[state.a]
statistics = boson
symmetrize = true
orbitals = 1, 1, 1, 2, 2, 2

[state.b]
statistics = ordered
symmetrize = false
orbitals = 1, 1, 1, 2, 2, 2

[output]
name = fig3c
kp = 1, 2, 3, 4, 5
"""),
}


def preset_names():
    return list(PRESETS)


def preset_text(name):
    try:
        return _COMMON + PRESETS[name][1]
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def load_preset(name):
    return parse_config(preset_text(name))
