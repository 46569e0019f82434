"""Scenario documents: a plain ``[section]`` / ``key = value`` format.

Lines starting with ``#`` or ``;`` are comments. Every error names the
offending key and its line.
"""
import math
from dataclasses import dataclass, field, replace

from .errors import ConfigParseError, ConfigurationError
from .manybody import N_MAX, Statistics
from .potential import PotentialSpec, _steps

DEFAULT_H = 0.25
DEFAULT_T_MAX = 100000.0
DEFAULT_SAMPLES = 500
DEFAULT_EPS_COMPLETE = 1e-8

INTERNAL_ALIASES = {"+": 0, "-": 1}
PANELS = ("p1", "metrics")
METRICS = ("d_full", "p_lower", "p_upper", "d_1p")


@dataclass(frozen=True)
class StateSpec:
    """Statistics plus ``(well index, internal label)`` pairs; an empty
    orbital list with ``vacuum`` set is the many-particle vacuum."""

    statistics: Statistics = Statistics.BOSON
    orbitals: tuple = ()
    vacuum: bool = False

    @property
    def n_particles(self):
        return len(self.orbitals)

    @property
    def symmetrize(self):
        return self.statistics is not Statistics.ORDERED


@dataclass(frozen=True)
class OutputSpec:
    name: str = "scenario"
    kp: tuple = ()
    plot: bool = False
    panels: tuple = PANELS
    metrics: tuple = METRICS
    correlations: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    h: float = DEFAULT_H
    e_cut: float = None
    t_max: float = DEFAULT_T_MAX
    n_samples: int = DEFAULT_SAMPLES
    eps_complete: float = DEFAULT_EPS_COMPLETE
    state_a: StateSpec = StateSpec()
    state_b: StateSpec = StateSpec(vacuum=True)
    output: OutputSpec = OutputSpec()

    @property
    def d_int(self):
        labels = [lab for s in (self.state_a, self.state_b) for _, lab in s.orbitals]
        return max(labels, default=0) + 1

    def validate(self):
        validate(self)
        return self


def _float(value, key, line):
    try:
        x = float(value)
    except ValueError:
        raise ConfigParseError(f"expected a number, got {value!r}", key, line) from None
    if not math.isfinite(x):
        raise ConfigParseError(f"expected a finite number, got {value!r}", key, line)
    return x


def _int(value, key, line):
    try:
        return int(value)
    except ValueError:
        raise ConfigParseError(f"expected an integer, got {value!r}", key, line) from None


def _bool(value, key, line):
    v = value.lower()
    if v in ("true", "false"):
        return v == "true"
    raise ConfigParseError(f"expected true or false, got {value!r}", key, line)


def _list(value):
    return [x.strip() for x in value.split(",") if x.strip()]


def _e_cut(value, key, line):
    if value.lower() in ("complete", "none", "inf"):
        return None
    x = _float(value, key, line)
    if not x > 0:
        raise ConfigParseError("e_cut must be positive", key, line)
    return x


def _orbitals(value, key, line):
    out = []
    for item in _list(value):
        n_txt, _, lab_txt = item.partition(":")
        n = _int(n_txt.strip(), key, line)
        if n < 1:
            raise ConfigParseError(f"well index must be >= 1, got {n}", key, line)
        lab_txt = lab_txt.strip() or "0"
        if lab_txt in INTERNAL_ALIASES:
            lab = INTERNAL_ALIASES[lab_txt]
        else:
            lab = _int(lab_txt, key, line)
            if lab < 0:
                raise ConfigParseError(f"internal label must be >= 0, got {lab}", key, line)
        out.append((n, lab))
    return tuple(out)


def _statistics(value, key, line):
    try:
        return Statistics(value.lower())
    except ValueError:
        choices = ", ".join(s.value for s in Statistics)
        raise ConfigParseError(f"statistics must be one of {choices}, got {value!r}", key, line) from None


def _tokenize(text):
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigParseError(f"malformed section header {line!r}", line=lineno)
            current = line[1:-1].strip()
            if current in sections:
                raise ConfigParseError(f"duplicate section [{current}]", line=lineno)
            sections[current] = {}
            continue
        if current is None:
            raise ConfigParseError("key outside of any section", line=lineno)
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigParseError(f"expected 'key = value', got {line!r}", line=lineno)
        value = value.split(" #")[0].strip()
        qualified = f"{current}.{key}"
        if key in sections[current]:
            raise ConfigParseError("duplicate key", qualified, lineno)
        sections[current][key] = (value, lineno)
    return sections


_SCHEMA = {
    "potential": {"l", "b", "r", "v0"},
    "numerics": {"h", "e_cut", "t_max", "n_samples", "eps_complete"},
    "state.a": {"statistics", "orbitals", "symmetrize", "vacuum"},
    "state.b": {"statistics", "orbitals", "symmetrize", "vacuum"},
    "output": {"name", "kp", "plot", "panels", "metrics", "correlations"},
}


def _state(section, name, default):
    if section is None:
        return default
    vacuum = False
    if "vacuum" in section:
        v, ln = section["vacuum"]
        vacuum = _bool(v, f"{name}.vacuum", ln)
    stats = default.statistics
    if "statistics" in section:
        v, ln = section["statistics"]
        stats = _statistics(v, f"{name}.statistics", ln)
    orbitals = ()
    if "orbitals" in section:
        v, ln = section["orbitals"]
        orbitals = _orbitals(v, f"{name}.orbitals", ln)
    if vacuum and orbitals:
        raise ConfigParseError("a vacuum state takes no orbitals", f"{name}.orbitals",
                               section["orbitals"][1])
    if not vacuum and not orbitals:
        line = section["statistics"][1] if "statistics" in section else None
        raise ConfigParseError("missing required key", f"{name}.orbitals", line)
    if "symmetrize" in section:
        v, ln = section["symmetrize"]
        sym = _bool(v, f"{name}.symmetrize", ln)
        if sym != (stats is not Statistics.ORDERED):
            raise ConfigParseError(
                f"symmetrize = {v} contradicts statistics = {stats.value}", f"{name}.symmetrize", ln)
    return StateSpec(statistics=stats, orbitals=orbitals, vacuum=vacuum)


def parse_config(text):
    """Validated :class:`ScenarioConfig` with defaults for absent keys."""
    sections = _tokenize(text)
    for sec, keys in sections.items():
        if sec not in _SCHEMA:
            line = min((ln for _, ln in keys.values()), default=None)
            raise ConfigParseError(f"unknown section [{sec}]", sec, line)
        for key, (_, ln) in keys.items():
            if key not in _SCHEMA[sec]:
                raise ConfigParseError("unknown key", f"{sec}.{key}", ln)

    pot = sections.get("potential", {})
    pvals = {}
    for k in ("l", "b", "r", "v0"):
        if k not in pot:
            continue
        v, ln = pot[k]
        x = _float(v, f"potential.{k}", ln)
        if (k in ("l", "r") and not x > 0) or (k in ("b", "v0") and x < 0):
            bound = "positive" if k in ("l", "r") else "non-negative"
            raise ConfigParseError(f"{k} must be {bound}, got {v}", f"potential.{k}", ln)
        pvals[k] = x
    potential = PotentialSpec(**pvals)

    num = sections.get("numerics", {})
    kw = {}
    if "h" in num:
        kw["h"] = _float(num["h"][0], "numerics.h", num["h"][1])
    if "e_cut" in num:
        kw["e_cut"] = _e_cut(num["e_cut"][0], "numerics.e_cut", num["e_cut"][1])
    if "t_max" in num:
        kw["t_max"] = _float(num["t_max"][0], "numerics.t_max", num["t_max"][1])
    if "n_samples" in num:
        kw["n_samples"] = _int(num["n_samples"][0], "numerics.n_samples", num["n_samples"][1])
    if "eps_complete" in num:
        kw["eps_complete"] = _float(num["eps_complete"][0], "numerics.eps_complete",
                                    num["eps_complete"][1])

    state_a = _state(sections.get("state.a"), "state.a", StateSpec())
    if "state.a" not in sections:
        state_a = StateSpec(orbitals=((1, 0),))
    state_b = _state(sections.get("state.b"), "state.b", StateSpec(vacuum=True))

    out = sections.get("output", {})
    okw = {}
    if "name" in out:
        okw["name"] = out["name"][0]
    if "kp" in out:
        okw["kp"] = tuple(_int(x, "output.kp", out["kp"][1]) for x in _list(out["kp"][0]))
    if "plot" in out:
        okw["plot"] = _bool(out["plot"][0], "output.plot", out["plot"][1])
    if "correlations" in out:
        okw["correlations"] = _bool(out["correlations"][0], "output.correlations",
                                    out["correlations"][1])
    for key, allowed in (("panels", PANELS), ("metrics", METRICS)):
        if key in out:
            vals = tuple(_list(out[key][0]))
            bad = [v for v in vals if v not in allowed]
            if bad:
                raise ConfigParseError(f"unknown {key} {bad}; choose from {allowed}",
                                       f"output.{key}", out[key][1])
            okw[key] = vals

    cfg = ScenarioConfig(potential=potential, state_a=state_a, state_b=state_b,
                         output=OutputSpec(**okw), **kw)
    lines = {f"{s}.{k}": ln for s, keys in sections.items() for k, (_, ln) in keys.items()}
    try:
        validate(cfg)
    except ConfigParseError as exc:
        if exc.line is None and exc.key in lines:
            raise ConfigParseError(str(exc).split(" (")[0], exc.key, lines[exc.key]) from None
        raise
    return cfg


def validate(cfg):
    """Cross-field checks shared by parsed documents and CLI overrides."""
    if not cfg.h > 0 or cfg.h > cfg.potential.l / 10.0:
        raise ConfigParseError(f"h = {cfg.h} must lie in (0, l/10]", "numerics.h")
    for name in ("l", "b", "r"):
        try:
            _steps(getattr(cfg.potential, name), cfg.h, name)
        except ConfigurationError as exc:
            raise ConfigParseError(str(exc), f"potential.{name}") from None
    if cfg.e_cut is not None and not cfg.e_cut > 0:
        raise ConfigParseError("e_cut must be positive", "numerics.e_cut")
    if not cfg.t_max > 0:
        raise ConfigParseError("t_max must be positive", "numerics.t_max")
    if cfg.n_samples < 2:
        raise ConfigParseError("n_samples must be at least 2", "numerics.n_samples")
    if not 0 < cfg.eps_complete < 1:
        raise ConfigParseError("eps_complete must lie in (0, 1)", "numerics.eps_complete")
    for name, st in (("state.a", cfg.state_a), ("state.b", cfg.state_b)):
        if st.n_particles > N_MAX:
            raise ConfigParseError(f"{st.n_particles} particles exceed N_max = {N_MAX}",
                                   f"{name}.orbitals")
        if st.statistics is Statistics.FERMION and len(set(st.orbitals)) < len(st.orbitals):
            raise ConfigParseError("fermions may not share an orbital (Pauli exclusion)",
                                   f"{name}.orbitals")
    n_max = max((n for s in (cfg.state_a, cfg.state_b) for n, _ in s.orbitals), default=1)
    for kp in cfg.output.kp:
        if not 1 <= kp <= max(cfg.state_a.n_particles, cfg.state_b.n_particles, 1):
            raise ConfigParseError(f"kp = {kp} outside 1..N", "output.kp")
    if n_max > round(cfg.potential.l / cfg.h) - 1:
        raise ConfigParseError(f"well index {n_max} exceeds the resolvable well modes",
                               "state.a.orbitals")
    return cfg


def with_overrides(cfg, h=None, e_cut=None, t_max=None, n_samples=None, kp=None,
                   plot=None, name=None):
    kw = {}
    if h is not None:
        kw["h"] = h
    if e_cut is not None:
        kw["e_cut"] = None if e_cut == math.inf else e_cut
    if t_max is not None:
        kw["t_max"] = t_max
    if n_samples is not None:
        kw["n_samples"] = n_samples
    out = cfg.output
    if kp is not None:
        out = replace(out, kp=tuple(kp))
    if plot is not None:
        out = replace(out, plot=plot)
    if name is not None:
        out = replace(out, name=name)
    return validate(replace(cfg, output=out, **kw))


def format_config(cfg):
    """Serialise a config back to the document format."""
    p = cfg.potential
    lines = ["[potential]", f"l = {p.l!r}", f"b = {p.b!r}", f"r = {p.r!r}", f"v0 = {p.v0!r}", "",
             "[numerics]", f"h = {cfg.h!r}",
             f"e_cut = {'complete' if cfg.e_cut is None else repr(cfg.e_cut)}",
             f"t_max = {cfg.t_max!r}", f"n_samples = {cfg.n_samples}",
             f"eps_complete = {cfg.eps_complete!r}"]
    for name, st in (("state.a", cfg.state_a), ("state.b", cfg.state_b)):
        lines += ["", f"[{name}]"]
        if st.vacuum:
            lines.append("vacuum = true")
        else:
            lines.append(f"statistics = {st.statistics.value}")
            lines.append("orbitals = " + ", ".join(f"{n}:{lab}" for n, lab in st.orbitals))
    o = cfg.output
    lines += ["", "[output]", f"name = {o.name}", "kp = " + ", ".join(map(str, o.kp)),
              f"plot = {'true' if o.plot else 'false'}", "panels = " + ", ".join(o.panels),
              "metrics = " + ", ".join(o.metrics),
              f"correlations = {'true' if o.correlations else 'false'}"]
    return "\n".join(lines) + "\n"
