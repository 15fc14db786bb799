"""Experiment configuration: strict INI parsing plus named presets.

A config file describes one case end to end: the full-order grid and
physics under ``[case]``, the sampling window under ``[time]``, the
train/validation/extrapolation bounds under ``[splits]``, and optional
``[rom]``, ``[coarse]``, ``[sweep]`` and ``[output]`` sections consumed
by the matching CLI commands.  Unknown sections or keys are rejected so
typos fail loudly instead of silently running the wrong experiment.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .errors import ConfigError
from .grids import TWO_PI

CASES = ("adv1d", "adv2d")
METHODS = ("gpod", "lpod", "lopod", "coarse_fom")
INTEGRATORS = ("rk4", "crank_nicolson")
SWEEP_KINDS = ("subdomains", "modes", "dt")

# section -> key -> coercion kind
_SCHEMA = {
    "case": {
        "kind": "case",
        "n": "int",
        "nx": "int",
        "ny": "int",
        "length": "float",
        "lx": "float",
        "ly": "float",
        "c": "float",
        "nu": "float",
        "seed": "int",
    },
    "time": {"dt": "float", "t_end": "float", "stride": "int"},
    "splits": {"train_end": "float", "val_start": "float", "val_end": "float"},
    "rom": {
        "method": "method",
        "subdomains": "ints",
        "modes": "int",
        "rank": "int",
        "dt": "float",
        "t_end": "float",
        "integrator": "integrator",
        "replicas": "int",
    },
    "coarse": {"factor": "int", "dt": "float", "replicas": "int"},
    "sweep": {
        "kind": "sweep_kind",
        "subdomains": "ints",
        "modes": "ints",
        "ranks": "ints",
        "dts": "floats",
        "methods": "methods",
        "threshold": "float",
    },
    "output": {"dir": "str"},
}

_REQUIRED = {
    "case": ("kind",),
    "time": ("dt", "t_end"),
    "splits": ("train_end", "val_end"),
}


@dataclass(frozen=True)
class RomSettings:
    """Reduced-model knobs; unset values fall back to the FOM sampling."""

    method: str | None = None
    subdomains: tuple[int, ...] | None = None
    modes: int | None = None
    rank: int | None = None
    dt: float | None = None
    t_end: float | None = None
    integrator: str = "rk4"
    replicas: int = 5


@dataclass(frozen=True)
class SweepSettings:
    kind: str
    subdomains: tuple[int, ...] = ()
    modes: tuple[int, ...] = ()
    ranks: tuple[int, ...] = ()
    dts: tuple[float, ...] = ()
    methods: tuple[str, ...] = ()
    threshold: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (one case, one set of splits)."""

    case: str
    dt: float
    t_end: float
    stride: int = 1
    n: int | None = None
    nx: int | None = None
    ny: int | None = None
    length: float = TWO_PI
    lx: float = TWO_PI
    ly: float = TWO_PI
    c: float = 1.0
    nu: float = 1.0e-3
    seed: int = 0
    train_end: float = 0.0
    val_start: float | None = None
    val_end: float = 0.0
    rom: RomSettings = field(default_factory=RomSettings)
    coarse_factor: int | None = None
    coarse_dt: float | None = None
    coarse_replicas: int | None = None
    sweep: SweepSettings | None = None
    outdir: str | None = None

    @property
    def ndim(self) -> int:
        return 1 if self.case == "adv1d" else 2


def _fail(where: str, message: str) -> ConfigError:
    return ConfigError(f"{where}: {message}")


def _coerce(kind: str, raw: str, where: str):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "str":
            return raw
        if kind == "ints":
            return tuple(int(p) for p in raw.split(",") if p.strip())
        if kind == "floats":
            return tuple(float(p) for p in raw.split(",") if p.strip())
    except ValueError:
        raise _fail(where, f"expected {kind}, got {raw!r}") from None
    if kind == "case":
        if raw not in CASES:
            raise _fail(where, f"unknown case {raw!r}; choose from {CASES}")
        return raw
    if kind == "method":
        if raw not in METHODS:
            raise _fail(where, f"unknown method {raw!r}; choose from {METHODS}")
        return raw
    if kind == "methods":
        return tuple(_coerce("method", p, where) for p in raw.split(",") if p.strip())
    if kind == "integrator":
        name = {"cn": "crank_nicolson"}.get(raw, raw)
        if name not in INTEGRATORS:
            raise _fail(where, f"unknown integrator {raw!r}; choose from {INTEGRATORS}")
        return name
    if kind == "sweep_kind":
        if raw not in SWEEP_KINDS:
            raise _fail(where, f"unknown sweep kind {raw!r}; choose from {SWEEP_KINDS}")
        return raw
    raise AssertionError(kind)


def _read_sections(text: str, origin: str) -> dict[str, dict]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    if parser.defaults():
        key = next(iter(parser.defaults()))
        raise _fail(origin, f"key {key!r} appears before any [section] header")
    out: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise _fail(origin, f"unknown section [{section}]; "
                                f"known: {', '.join(_SCHEMA)}")
        keys = _SCHEMA[section]
        values = {}
        for key, raw in parser.items(section):
            if key not in keys:
                raise _fail(f"{origin} [{section}]",
                            f"unknown key {key!r}; known: {', '.join(keys)}")
            values[key] = _coerce(keys[key], raw, f"{origin} {section}.{key}")
        out[section] = values
    return out


def _check_case(sections: dict, origin: str) -> dict:
    case_sec = sections.get("case", {})
    kind = case_sec.get("kind")
    axis_keys = {"adv1d": ("n", "length", "c"), "adv2d": ("nx", "ny", "lx", "ly", "nu")}
    other = {"adv1d": ("nx", "ny", "lx", "ly", "nu"), "adv2d": ("n", "length", "c")}
    for key in other[kind]:
        if key in case_sec:
            raise _fail(f"{origin} case.{key}", f"not applicable to {kind}")
    if kind == "adv1d" and "n" not in case_sec:
        raise _fail(f"{origin} [case]", "adv1d requires key 'n'")
    if kind == "adv2d" and not {"nx", "ny"} <= case_sec.keys():
        raise _fail(f"{origin} [case]", "adv2d requires keys 'nx' and 'ny'")
    del axis_keys
    return case_sec


def parse_config(text: str, origin: str = "<config>") -> ExperimentConfig:
    """Parse and validate INI ``text`` into an :class:`ExperimentConfig`."""
    sections = _read_sections(text, origin)
    for name, required in _REQUIRED.items():
        if name not in sections:
            raise _fail(origin, f"missing required section [{name}]")
        for key in required:
            if key not in sections[name]:
                raise _fail(f"{origin} [{name}]", f"missing required key {key!r}")
    case_sec = _check_case(sections, origin)
    time_sec = sections["time"]
    split_sec = sections["splits"]

    dt = time_sec["dt"]
    t_end = time_sec["t_end"]
    stride = time_sec.get("stride", 1)
    if dt <= 0.0 or t_end <= 0.0:
        raise _fail(f"{origin} [time]", "dt and t_end must be positive")
    if stride < 1:
        raise _fail(f"{origin} time.stride", "must be >= 1")

    train_end = split_sec["train_end"]
    val_end = split_sec["val_end"]
    val_start = split_sec.get("val_start")
    if not 0.0 < train_end < val_end:
        raise _fail(f"{origin} [splits]", "need 0 < train_end < val_end")
    if val_start is not None and not train_end <= val_start < val_end:
        raise _fail(f"{origin} [splits]",
                    "need train_end <= val_start < val_end")
    if val_end > t_end:
        raise _fail(f"{origin} [splits]", "val_end exceeds time.t_end")

    rom_sec = sections.get("rom", {})
    rom = RomSettings(
        method=rom_sec.get("method"),
        subdomains=rom_sec.get("subdomains"),
        modes=rom_sec.get("modes"),
        rank=rom_sec.get("rank"),
        dt=rom_sec.get("dt"),
        t_end=rom_sec.get("t_end"),
        integrator=rom_sec.get("integrator", "rk4"),
        replicas=rom_sec.get("replicas", 5),
    )
    ndim = 1 if case_sec["kind"] == "adv1d" else 2
    if rom.subdomains is not None and len(rom.subdomains) != ndim:
        raise _fail(f"{origin} rom.subdomains",
                    f"expected {ndim} comma-separated count(s) for {case_sec['kind']}")
    if rom.replicas < 1:
        raise _fail(f"{origin} rom.replicas", "must be >= 1")

    coarse_sec = sections.get("coarse", {})
    sweep_sec = sections.get("sweep")
    sweep = None
    if sweep_sec is not None:
        if "kind" not in sweep_sec:
            raise _fail(f"{origin} [sweep]", "missing required key 'kind'")
        sweep = SweepSettings(
            kind=sweep_sec["kind"],
            subdomains=sweep_sec.get("subdomains", ()),
            modes=sweep_sec.get("modes", ()),
            ranks=sweep_sec.get("ranks", ()),
            dts=sweep_sec.get("dts", ()),
            methods=sweep_sec.get("methods", ()),
            threshold=sweep_sec.get("threshold"),
        )

    return ExperimentConfig(
        case=case_sec["kind"],
        dt=dt,
        t_end=t_end,
        stride=stride,
        n=case_sec.get("n"),
        nx=case_sec.get("nx"),
        ny=case_sec.get("ny"),
        length=case_sec.get("length", TWO_PI),
        lx=case_sec.get("lx", TWO_PI),
        ly=case_sec.get("ly", TWO_PI),
        c=case_sec.get("c", 1.0),
        nu=case_sec.get("nu", 1.0e-3),
        seed=case_sec.get("seed", 0),
        train_end=train_end,
        val_start=val_start,
        val_end=val_end,
        rom=rom,
        coarse_factor=coarse_sec.get("factor"),
        coarse_dt=coarse_sec.get("dt"),
        coarse_replicas=coarse_sec.get("replicas"),
        sweep=sweep,
        outdir=sections.get("output", {}).get("dir"),
    )


def load_config(path) -> ExperimentConfig:
    """Read and validate the INI file at ``path``."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, origin=str(path))


# Named presets for the two reference cases.  The 1D case is a periodic
# traveling pulse sampled every step; the 2D case is an advected and
# weakly diffused three-bump field sampled every 16th step with a gap
# between the training and validation windows.
PRESETS = {
    "1d-paper": """
[case]
kind = adv1d
n = 1000
c = 1.0

[time]
dt = 0.01
t_end = 5.0
stride = 1

[splits]
train_end = 1.0
val_end = 2.0

[rom]
method = lpod
subdomains = 10
modes = 6
rank = 60
dt = 0.01
t_end = 5.0
integrator = rk4

[sweep]
kind = subdomains
subdomains = 5, 10, 20, 25
modes = 2, 3, 4, 6, 8, 12
methods = lpod, lopod
""",
    "2d-paper": """
[case]
kind = adv2d
nx = 256
ny = 256
nu = 0.001

[time]
dt = 0.025
t_end = 40.0
stride = 16

[splits]
train_end = 12.0
val_start = 16.0
val_end = 20.0

[rom]
method = lopod
subdomains = 8, 8
modes = 15
dt = 0.025
t_end = 40.0
integrator = crank_nicolson

[coarse]
factor = 2
dt = 0.05

[sweep]
kind = modes
modes = 5, 10, 15, 20, 25, 30
methods = lpod, lopod
threshold = 0.01
""",
}


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(PRESETS))


def preset_config(name: str) -> ExperimentConfig:
    """Return the built-in configuration called ``name``."""
    if name not in PRESETS:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_config(PRESETS[name], origin=f"preset:{name}")
