"""Run-configuration text format and validation.

Sectioned key = value text, one assignment per line, '#' comments.
Unknown sections or keys are rejected with the offending line number;
semantic problems surface as ValidationError naming the field.  The
canonical echo from `to_text` parses back to an identical config.
"""

import shlex
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import maxwell, presets, snapshots
from .dynamics import SchemeConfig
from .energetics import MaterialParams, uniform_k_matrix
from .errors import ParseError, SimulationError, ValidationError
from .geometry import GeometryConfig, build_geometry
from .maxwell import AppliedCurrent


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "on" if v else "off"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


@dataclass
class RunConfig:
    # geometry
    lx: float = 1.0
    ly: float = 1.0
    l_minus: float = 0.5
    l_plus: float = 0.5
    nx: int = 8
    ny: int = 8
    nz_minus: int = 4
    nz_plus: int = 4
    eta: Optional[float] = None
    trace_order: int = 1
    # material
    a_exch: float = 0.0
    k_diag: Optional[tuple] = None
    k_matrix: Optional[tuple] = None   # 9 entries, row major
    ks: float = 0.0
    j1: float = 0.0
    j2: float = 0.0
    alpha: float = 1.0
    mu0: float = 1.0
    eps0: float = 1.0
    sigma: float = 0.0
    penalty_k: float = 0.0
    # scheme
    dt: float = 1e-3
    integrator: str = "heun"
    constraint: str = "projected"
    bc_mode: str = "sharp"
    subcycles: int = 1
    stability_c: float = 0.25
    # maxwell
    padding: int = 8
    bc: str = "pec"
    frozen: bool = False
    # initial
    m0: tuple = ("uniform", 0.0, 0.0, 1.0)
    h0: tuple = ("zero",)
    e0: tuple = ("zero",)
    # current
    f: tuple = ("zero",)
    # output
    directory: str = "out"
    cadence: int = 1
    snapshots_on: bool = False
    # run
    t_end: float = 0.0
    seed: int = 0
    threads: int = 0

    def to_text(self) -> str:
        lines = ["[geometry]"]
        for key in ("lx", "ly", "l_minus", "l_plus", "nx", "ny", "nz_minus", "nz_plus"):
            lines.append(f"{key} = {_fmt(getattr(self, key))}")
        if self.eta is not None:
            lines.append(f"eta = {_fmt(self.eta)}")
        lines.append(f"trace_order = {self.trace_order}")
        lines.append("")
        lines.append("[material]")
        for key in ("a_exch", "ks", "j1", "j2", "alpha", "mu0", "eps0", "sigma",
                    "penalty_k"):
            lines.append(f"{key} = {_fmt(getattr(self, key))}")
        if self.k_diag is not None:
            lines.append("k_diag = " + " ".join(_fmt(v) for v in self.k_diag))
        if self.k_matrix is not None:
            lines.append("k_matrix = " + " ".join(_fmt(v) for v in self.k_matrix))
        lines.append("")
        lines.append("[scheme]")
        for key in ("dt", "integrator", "constraint", "bc_mode", "subcycles",
                    "stability_c"):
            lines.append(f"{key} = {_fmt(getattr(self, key))}")
        lines.append("")
        lines.append("[maxwell]")
        lines.append(f"padding = {self.padding}")
        lines.append(f"bc = {self.bc}")
        lines.append(f"frozen = {_fmt(self.frozen)}")
        lines.append("")
        lines.append("[initial]")
        lines.append("m = " + " ".join(_fmt(v) for v in self.m0))
        lines.append("h0 = " + " ".join(_fmt(v) for v in self.h0))
        lines.append("e0 = " + " ".join(_fmt(v) for v in self.e0))
        lines.append("")
        lines.append("[current]")
        lines.append("f = " + " ".join(_fmt(v) for v in self.f))
        lines.append("")
        lines.append("[output]")
        lines.append(f"directory = {self.directory}")
        lines.append(f"cadence = {self.cadence}")
        lines.append(f"snapshots = {_fmt(self.snapshots_on)}")
        lines.append("")
        lines.append("[run]")
        lines.append(f"t_end = {_fmt(self.t_end)}")
        lines.append(f"seed = {self.seed}")
        lines.append(f"threads = {self.threads}")
        lines.append("")
        return "\n".join(lines)


def _to_float(tok, line):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(line, f"expected a number, got {tok!r}")


def _to_int(tok, line):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(line, f"expected an integer, got {tok!r}")


def _to_bool(tok, line):
    low = tok.lower()
    if low in ("on", "true", "1", "yes"):
        return True
    if low in ("off", "false", "0", "no"):
        return False
    raise ParseError(line, f"expected on/off, got {tok!r}")


def _preset(tokens, line, kinds):
    kind = tokens[0]
    if kind not in kinds:
        raise ParseError(line, f"unknown preset {kind!r} (choose from {sorted(kinds)})")
    want = kinds[kind]
    args = tokens[1:]
    if want >= 0 and len(args) != want:
        raise ParseError(line, f"preset {kind!r} takes {want} argument(s)")
    return (kind,) + tuple(float(a) if _is_number(a) else a for a in args)


def _is_number(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


# section -> key -> (attr, converter); converters get (tokens, line)
def _scalar(conv):
    def convert(tokens, line):
        if len(tokens) != 1:
            raise ParseError(line, "expected a single value")
        return conv(tokens[0], line)
    return convert


def _choice(options):
    def convert(tokens, line):
        if len(tokens) != 1 or tokens[0] not in options:
            raise ParseError(line, f"expected one of {sorted(options)}")
        return tokens[0]
    return convert


def _floats(n):
    def convert(tokens, line):
        if len(tokens) != n:
            raise ParseError(line, f"expected {n} numbers")
        return tuple(_to_float(t, line) for t in tokens)
    return convert


_SCHEMA = {
    "geometry": {
        "lx": ("lx", _scalar(_to_float)),
        "ly": ("ly", _scalar(_to_float)),
        "l_minus": ("l_minus", _scalar(_to_float)),
        "l_plus": ("l_plus", _scalar(_to_float)),
        "nx": ("nx", _scalar(_to_int)),
        "ny": ("ny", _scalar(_to_int)),
        "nz_minus": ("nz_minus", _scalar(_to_int)),
        "nz_plus": ("nz_plus", _scalar(_to_int)),
        "eta": ("eta", _scalar(_to_float)),
        "trace_order": ("trace_order", _scalar(_to_int)),
    },
    "material": {
        "a_exch": ("a_exch", _scalar(_to_float)),
        "k_diag": ("k_diag", _floats(3)),
        "k_matrix": ("k_matrix", _floats(9)),
        "ks": ("ks", _scalar(_to_float)),
        "j1": ("j1", _scalar(_to_float)),
        "j2": ("j2", _scalar(_to_float)),
        "alpha": ("alpha", _scalar(_to_float)),
        "mu0": ("mu0", _scalar(_to_float)),
        "eps0": ("eps0", _scalar(_to_float)),
        "sigma": ("sigma", _scalar(_to_float)),
        "penalty_k": ("penalty_k", _scalar(_to_float)),
    },
    "scheme": {
        "dt": ("dt", _scalar(_to_float)),
        "integrator": ("integrator", _choice({"heun", "rk4"})),
        "constraint": ("constraint", _choice({"projected", "penalized"})),
        "bc_mode": ("bc_mode", _choice({"sharp", "thin_layer"})),
        "subcycles": ("subcycles", _scalar(_to_int)),
        "stability_c": ("stability_c", _scalar(_to_float)),
    },
    "maxwell": {
        "padding": ("padding", _scalar(_to_int)),
        "bc": ("bc", _choice({"pec", "mur1"})),
        "frozen": ("frozen", _scalar(_to_bool)),
    },
    "initial": {
        "m": ("m0", lambda toks, ln: _preset(
            toks, ln, {"uniform": 3, "vortexish": 0, "random": -1, "snapshot": -1})),
        "h0": ("h0", lambda toks, ln: _preset(
            toks, ln, {"zero": 0, "magnetostatic": 0, "uniform": 3})),
        "e0": ("e0", lambda toks, ln: _preset(toks, ln, {"zero": 0, "uniform": 3})),
    },
    "current": {
        "f": ("f", lambda toks, ln: _preset(toks, ln, {"zero": 0, "pulse": 5})),
    },
    "output": {
        "directory": ("directory", lambda toks, ln: " ".join(toks)),
        "cadence": ("cadence", _scalar(_to_int)),
        "snapshots": ("snapshots_on", _scalar(_to_bool)),
    },
    "run": {
        "t_end": ("t_end", _scalar(_to_float)),
        "seed": ("seed", _scalar(_to_int)),
        "threads": ("threads", _scalar(_to_int)),
    },
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text.

    The first problem is reported with its line number (ParseError) or
    field name (ValidationError); the returned config has all defaults
    filled in.
    """
    config = RunConfig()
    section = None
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ParseError(lineno, f"unknown section [{section}]")
            continue
        if "=" not in line:
            raise ParseError(lineno, "expected 'key = value'")
        if section is None:
            raise ParseError(lineno, "assignment before any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        tokens = shlex.split(value.strip())
        if key not in _SCHEMA[section]:
            raise ParseError(lineno, f"unknown key {key!r} in [{section}]")
        if not tokens:
            raise ParseError(lineno, f"missing value for {key!r}")
        if (section, key) in seen:
            raise ParseError(lineno, f"duplicate key {key!r} in [{section}]")
        seen.add((section, key))
        attr, converter = _SCHEMA[section][key]
        setattr(config, attr, converter(tokens, lineno))
    _validate(config)
    return config


def _validate(config: RunConfig):
    if config.trace_order not in (1, 2):
        raise ValidationError("geometry.trace_order", "must be 1 or 2")
    if config.alpha <= 0:
        raise ValidationError("material.alpha", "must be positive")
    if config.dt <= 0:
        raise ValidationError("scheme.dt", "must be positive")
    if config.subcycles < 1:
        raise ValidationError("scheme.subcycles", "must be at least 1")
    if config.padding < 1:
        raise ValidationError("maxwell.padding", "must be at least 1")
    if config.cadence < 1:
        raise ValidationError("output.cadence", "must be at least 1")
    if config.t_end < 0:
        raise ValidationError("run.t_end", "must be nonnegative")
    if config.bc_mode == "thin_layer" and config.eta is None:
        raise ValidationError("geometry.eta", "required in thin_layer mode")
    if config.m0[0] == "random" and len(config.m0) not in (2, 3):
        raise ValidationError("initial.m", "random preset takes seed [smooth_cells]")
    if config.m0[0] == "snapshot" and len(config.m0) != 2:
        raise ValidationError("initial.m", "snapshot preset takes a path")


@dataclass
class RunSetup:
    """Everything dynamics.run needs, built from a validated config."""

    config: RunConfig
    geom: object
    params: MaterialParams
    scheme: SchemeConfig
    box: object
    em: object
    m0: np.ndarray
    f: AppliedCurrent


def build_setup(config: RunConfig) -> RunSetup:
    """Materialize grids, parameters and initial fields.

    Geometry and material violations are reported as ValidationError so
    the command line can attribute them to config fields.  A nonzero
    [run] seed overrides the seed of a random magnetization preset.
    """
    try:
        geom = build_geometry(GeometryConfig(
            base_lx=config.lx, base_ly=config.ly,
            l_minus=config.l_minus, l_plus=config.l_plus,
            nx=config.nx, ny=config.ny,
            nz_minus=config.nz_minus, nz_plus=config.nz_plus,
            eta=config.eta, trace_order=config.trace_order))
    except SimulationError as exc:
        raise ValidationError("geometry", str(exc)) from exc

    k_field = None
    if config.k_matrix is not None:
        k = np.asarray(config.k_matrix, dtype=float).reshape(3, 3)
        k_field = uniform_k_matrix(k, geom)
    elif config.k_diag is not None:
        k_field = uniform_k_matrix(np.diag(config.k_diag), geom)
    try:
        params = MaterialParams(
            a_exch=config.a_exch, k_matrix=k_field, ks=config.ks,
            j1=config.j1, j2=config.j2, alpha=config.alpha,
            mu0=config.mu0, eps0=config.eps0, sigma=config.sigma,
            penalty_k=config.penalty_k)
    except ValueError as exc:
        raise ValidationError("material", str(exc)) from exc

    scheme = SchemeConfig(
        dt=config.dt, subcycles=config.subcycles, integrator=config.integrator,
        constraint=config.constraint, bc_mode=config.bc_mode,
        stability_c=config.stability_c, frozen_em=config.frozen)

    m0 = _build_m0(config, geom)

    box = maxwell.make_box(geom, config.padding)
    em = maxwell.empty_em_state(box, bc=config.bc)
    m0_box = maxwell.embed_cell_field(m0, box)
    em.hx, em.hy, em.hz = maxwell.init_divfree(m0_box, _h0_spec(config), box)
    _set_e0(config, em)
    if config.bc == "pec":
        maxwell.zero_boundary_tangential_e(em)
    maxwell.record_div0(em, m0, geom)

    f = _build_current(config)
    return RunSetup(config=config, geom=geom, params=params, scheme=scheme,
                    box=box, em=em, m0=m0, f=f)


def _build_m0(config: RunConfig, geom) -> np.ndarray:
    kind = config.m0[0]
    if kind == "uniform":
        vec = np.asarray(config.m0[1:4], dtype=float)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValidationError("initial.m", "uniform direction must be nonzero")
        return presets.uniform_m(vec / norm, geom)
    if kind == "vortexish":
        return presets.vortexish_m(geom)
    if kind == "random":
        smooth = float(config.m0[2]) if len(config.m0) == 3 else 1.5
        seed = config.seed if config.seed else int(config.m0[1])
        return presets.random_unit_m(geom, seed, smooth_cells=smooth)
    if kind == "snapshot":
        fid, dims, _, _, arrays = snapshots.read_snapshot(config.m0[1])
        if fid != snapshots.FIELD_M or dims != (geom.nx, geom.ny, geom.nz_total):
            raise ValidationError("initial.m", "snapshot does not match the geometry")
        return arrays[0]
    raise ValidationError("initial.m", f"unknown preset {kind!r}")


def _h0_spec(config: RunConfig):
    kind = config.h0[0]
    if kind in ("zero", "magnetostatic"):
        return kind
    return np.asarray(config.h0[1:4], dtype=float)


def _set_e0(config: RunConfig, em):
    if config.e0[0] == "zero":
        return
    vec = np.asarray(config.e0[1:4], dtype=float)
    em.ex[...] = vec[0]
    em.ey[...] = vec[1]
    em.ez[...] = vec[2]


def _build_current(config: RunConfig) -> AppliedCurrent:
    if config.f[0] == "zero":
        return AppliedCurrent.zero()
    ax, ay, az, t0, width = (float(v) for v in config.f[1:6])
    if width <= 0:
        raise ValidationError("current.f", "pulse width must be positive")
    return AppliedCurrent(amplitude=(ax, ay, az), t0=t0, width=width, kind="pulse")
