"""Experiment configuration: INI files parsed into typed specs.

A config is flat structured text (configparser syntax) with sections

    [experiment]   kind = compose-demo | segment | ct, seed
    [grid]         nx ny x_min x_max y_min y_max
    [dictionary]   mode = lattice | shapes | glyphs | file, plus mode fields
    [solver]       w sigma gamma beta tau0 tau_mx eps1 eps2 max_outer ...
    [segmentation] eps missing_pct stats_period init ...
    [synthetic]    shape records + gray levels for generated scenes
    [ct]           geometry, physics constants, phantom, counts path
    [dictionary2]  second-phase dictionary (two-phase CT only)
    [output]       dir

Multi-valued fields (shape lists, sizes) are whitespace-separated, one
record per line for shapes.  All referenced files must exist at load
time; the seed and the config's SHA-256 ride along so runs can record
their provenance.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    Circle,
    Ellipse,
    Grid,
    Polygon,
    Rectangle,
    Shape,
    Triangle,
    shape_from_record,
)
from .knolls import ShapeDictionary, load_dictionary, make_dictionary
from .solver import SolverParams

__all__ = [
    "ExperimentConfig",
    "DictionarySpec",
    "SolverSpec",
    "SegmentationSpec",
    "SyntheticSpec",
    "CTSpec",
    "load_config",
    "GLYPH_LETTERS",
]

_KINDS = ("compose-demo", "segment", "ct")
_DICT_MODES = ("lattice", "shapes", "glyphs", "file")


# ---------------------------------------------------------------------------
# glyph font: rectilinear block letters as simple polygons on the unit box

_T = 0.25  # stroke thickness
_MID_LO = (1.0 - _T) / 2.0
_MID_HI = (1.0 + _T) / 2.0

GLYPH_LETTERS: dict[str, tuple[float, ...]] = {
    "L": (0, 0, 1, 0, 1, _T, _T, _T, _T, 1, 0, 1),
    "T": (_MID_LO, 0, _MID_HI, 0, _MID_HI, 1 - _T, 1, 1 - _T, 1, 1, 0, 1, 0, 1 - _T, _MID_LO, 1 - _T),
    "E": (0, 0, 1, 0, 1, _T, _T, _T, _T, _MID_LO, 0.8, _MID_LO, 0.8, _MID_HI, _T, _MID_HI, _T, 1 - _T, 1, 1 - _T, 1, 1, 0, 1),
    "F": (0, 0, _T, 0, _T, _MID_LO, 0.8, _MID_LO, 0.8, _MID_HI, _T, _MID_HI, _T, 1 - _T, 1, 1 - _T, 1, 1, 0, 1),
    "H": (0, 0, _T, 0, _T, _MID_LO, 1 - _T, _MID_LO, 1 - _T, 0, 1, 0, 1, 1, 1 - _T, 1, 1 - _T, _MID_HI, _T, _MID_HI, _T, 1, 0, 1),
    "I": (_MID_LO, 0, _MID_HI, 0, _MID_HI, 1, _MID_LO, 1),
    "C": (0, 0, 1, 0, 1, _T, _T, _T, _T, 1 - _T, 1, 1 - _T, 1, 1, 0, 1),
    "U": (0, 0, 1, 0, 1, 1, 1 - _T, 1, 1 - _T, _T, _T, _T, _T, 1, 0, 1),
}


def glyph_polygon(letter: str, cx: float, cy: float, height: float, aspect: float = 0.7) -> Polygon:
    """Block-letter polygon centered at (cx, cy) with the given cap height."""
    if letter not in GLYPH_LETTERS:
        raise ValueError(f"no glyph for letter {letter!r}")
    coords = np.array(GLYPH_LETTERS[letter], dtype=float).reshape(-1, 2)
    coords[:, 0] = (coords[:, 0] - 0.5) * height * aspect + cx
    coords[:, 1] = (coords[:, 1] - 0.5) * height + cy
    return Polygon(tuple(coords.ravel()))


# ---------------------------------------------------------------------------
# section specs


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split())


def _records(text: str) -> tuple[str, ...]:
    return tuple(line.strip() for line in text.splitlines() if line.strip())


@dataclass(frozen=True)
class DictionarySpec:
    mode: str = "lattice"
    c: float = 0.1
    cap: int = 4000
    # lattice / glyphs placement
    kinds: tuple[str, ...] = ("circle", "square", "triangle", "ellipse")
    nx: int = 5
    ny: int = 5
    margin: float = 0.12
    sizes: tuple[float, ...] = (0.07,)
    rotations: tuple[float, ...] = (0.0,)
    aspect: float = 0.6
    # shapes mode
    records: tuple[str, ...] = ()
    # glyphs mode
    letters: str = ""
    height: float = 0.2
    # file mode
    path: str = ""

    def __post_init__(self) -> None:
        if self.mode not in _DICT_MODES:
            raise ValueError(f"unknown dictionary mode {self.mode!r}")
        if not self.c > 0:
            raise ValueError("lifting parameter c must be positive")
        if self.cap < 1:
            raise ValueError("dictionary cap must be positive")

    def _placements(self, grid: Grid) -> list[tuple[float, float]]:
        wx = grid.x_max - grid.x_min
        wy = grid.y_max - grid.y_min
        xs = grid.x_min + wx * (self.margin + (1 - 2 * self.margin) * (np.arange(self.nx) + 0.5) / self.nx)
        ys = grid.y_min + wy * (self.margin + (1 - 2 * self.margin) * (np.arange(self.ny) + 0.5) / self.ny)
        return [(float(x), float(y)) for x in xs for y in ys]

    def _base_shape(self, kind: str, cx: float, cy: float, size: float, rot: float) -> Shape:
        if kind == "circle":
            return Circle(cx, cy, size)
        if kind == "square":
            return Rectangle(cx, cy, size, size, rot)
        if kind == "rect":
            return Rectangle(cx, cy, size, 0.6 * size, rot)
        if kind == "ellipse":
            return Ellipse(cx, cy, size, self.aspect * size, rot)
        if kind == "triangle":
            # equilateral, circumradius = size, vertex initially pointing +y
            angles = rot + np.pi / 2 + np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
            pts = np.column_stack([cx + size * np.cos(angles), cy + size * np.sin(angles)])
            return Triangle(*pts.ravel())
        raise ValueError(f"unknown base shape kind {kind!r}")

    def build(self, grid: Grid) -> ShapeDictionary:
        """Materialize the dictionary on a grid (deterministic ordering)."""
        if self.mode == "file":
            return load_dictionary(self.path)
        shapes: list[Shape] = []
        labels: list[str] = []
        if self.mode == "shapes":
            for rec in self.records:
                shapes.append(shape_from_record(rec))
                labels.append(rec)
        elif self.mode == "lattice":
            count = len(self.kinds) * self.nx * self.ny * len(self.sizes) * len(self.rotations)
            if count > self.cap:
                raise ValueError(f"dictionary would hold {count} shapes, over the cap of {self.cap}")
            for kind in self.kinds:
                for cx, cy in self._placements(grid):
                    for size in self.sizes:
                        for rot in self.rotations:
                            shapes.append(self._base_shape(kind, cx, cy, size, rot))
                            labels.append(f"{kind}@{cx:.4g},{cy:.4g} r{size:.4g} t{rot:.4g}")
        else:  # glyphs
            count = len(self.letters) * self.nx * self.ny
            if count > self.cap:
                raise ValueError(f"dictionary would hold {count} shapes, over the cap of {self.cap}")
            for letter in self.letters:
                for cx, cy in self._placements(grid):
                    shapes.append(glyph_polygon(letter, cx, cy, self.height))
                    labels.append(f"{letter}@{cx:.4g},{cy:.4g} h{self.height:.4g}")
        if len(shapes) > self.cap:
            raise ValueError(f"dictionary would hold {len(shapes)} shapes, over the cap of {self.cap}")
        if not shapes:
            raise ValueError("dictionary spec produced no shapes")
        return make_dictionary(shapes, grid, self.c, labels=labels)


@dataclass(frozen=True)
class SolverSpec:
    w: float = 0.1
    sigma: float | str = "auto"  # float, or "auto" for an app-chosen noise floor
    gamma: float = 1e-4
    beta: float = 0.5
    tau0: float = 0.0
    tau_mx: float = math.inf
    eps1: float | None = None
    eps2: float | None = None
    max_outer: int = 100
    max_spg: int = 500
    spg_tol: float = 1e-6

    def params(self, sigma_auto: float) -> SolverParams:
        sigma = sigma_auto if self.sigma == "auto" else float(self.sigma)
        return SolverParams(
            sigma=sigma, w=self.w, gamma=self.gamma, beta=self.beta,
            tau0=self.tau0, tau_mx=self.tau_mx, eps1=self.eps1, eps2=self.eps2,
            max_outer=self.max_outer, max_spg=self.max_spg, spg_tol=self.spg_tol,
        )


@dataclass(frozen=True)
class SegmentationSpec:
    eps: float = 0.05
    missing_pct: float = 0.0
    stats_period: int = 1  # 0 freezes the region stats
    fixed_stats: tuple[float, float] | None = None
    init: str = "pm1"  # pm1 | ones
    init_count: int | None = None
    init_value: float = 1.0
    image: str = ""  # optional PGM input instead of a synthetic scene

    def __post_init__(self) -> None:
        if not 0.0 <= self.missing_pct < 1.0:
            raise ValueError("missing_pct must lie in [0, 1)")
        if self.stats_period < 0:
            raise ValueError("stats_period must be nonnegative")
        if self.init not in ("pm1", "ones"):
            raise ValueError(f"unknown init scheme {self.init!r}")


@dataclass(frozen=True)
class SyntheticSpec:
    records: tuple[str, ...] = ()
    foreground: float = 1.0
    background: float = 0.0
    noise_std: float = 0.0

    def shapes(self) -> list[Shape]:
        return [shape_from_record(rec) for rec in self.records]


@dataclass(frozen=True)
class CTSpec:
    n_angles: int = 30
    rays_per_angle: int = 48
    detector_extent: float = 2.8
    lambda_T: float = 4.0e6
    gauss_pct: float = 0.01
    poisson: bool = True
    mode: str = "single"  # single | two-phase
    u_in: float = 0.2
    u_ex: float = 2.7e-4
    mu_a: float = 2.7e-4
    mu_s: float = 0.2
    mu_b: float = 0.7
    eps: float = 0.05
    phantom: str = ""  # shape-list file
    phantom_shapes: tuple[str, ...] = ()  # inline "mu <record>" lines
    phantom_background: float = 2.7e-4
    counts: str = ""  # counts CSV consumed by ct-recon

    def __post_init__(self) -> None:
        if self.n_angles < 1:
            raise ValueError("need at least one projection angle")
        if self.mode not in ("single", "two-phase"):
            raise ValueError(f"unknown ct mode {self.mode!r}")

    def geometry(self):
        from .ct import RayGeometry

        angles = tuple(np.linspace(0.0, np.pi, self.n_angles, endpoint=False))
        return RayGeometry(angles, self.rays_per_angle, self.detector_extent)

    def phantom_list(self) -> tuple[list[tuple[Shape, float]], float]:
        if self.phantom:
            from .ct import load_phantom

            return load_phantom(self.phantom)
        if not self.phantom_shapes:
            raise ValueError("config names neither a phantom file nor inline phantom shapes")
        out = []
        for line in self.phantom_shapes:
            mu_tok, _, rec = line.partition(" ")
            out.append((shape_from_record(rec.strip()), float(mu_tok)))
        return out, self.phantom_background


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    grid: Grid
    dictionary: DictionarySpec
    solver: SolverSpec = SolverSpec()
    segmentation: SegmentationSpec = SegmentationSpec()
    synthetic: SyntheticSpec = SyntheticSpec()
    ct: CTSpec = CTSpec()
    dictionary2: DictionarySpec | None = None
    out_dir: str = "runs"
    sha256: str = ""
    source: str = ""

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")


# ---------------------------------------------------------------------------
# parsing


def _take(section, parsers):
    kwargs = {}
    for key in section:
        if key not in parsers:
            raise ValueError(f"unknown key {key!r} in section [{section.name}]")
        kwargs[key] = parsers[key](section[key])
    return kwargs


_DICT_PARSERS = {
    "mode": str,
    "c": float,
    "cap": int,
    "kinds": lambda s: tuple(s.split()),
    "nx": int,
    "ny": int,
    "margin": float,
    "sizes": _floats,
    "rotations": _floats,
    "aspect": float,
    "records": _records,
    "letters": lambda s: s.strip(),
    "height": float,
    "path": str,
}

_SOLVER_PARSERS = {
    "w": float,
    "sigma": lambda s: "auto" if s.strip() == "auto" else float(s),
    "gamma": float,
    "beta": float,
    "tau0": float,
    "tau_mx": float,
    "eps1": float,
    "eps2": float,
    "max_outer": int,
    "max_spg": int,
    "spg_tol": float,
}

_SEG_PARSERS = {
    "eps": float,
    "missing_pct": float,
    "stats_period": int,
    "fixed_stats": lambda s: tuple(float(t) for t in s.split()),
    "init": str,
    "init_count": int,
    "init_value": float,
    "image": str,
}

_SYN_PARSERS = {
    "records": _records,
    "foreground": float,
    "background": float,
    "noise_std": float,
}

_CT_PARSERS = {
    "n_angles": int,
    "rays_per_angle": int,
    "detector_extent": float,
    "lambda_T": float,
    "gauss_pct": float,
    "poisson": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "mode": str,
    "u_in": float,
    "u_ex": float,
    "mu_a": float,
    "mu_s": float,
    "mu_b": float,
    "eps": float,
    "phantom": str,
    "phantom_shapes": _records,
    "phantom_background": float,
    "counts": str,
}


def load_config(path, seed_override: int | None = None, out_override: str | None = None) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    from pathlib import Path

    raw = Path(path).read_bytes()
    parser = configparser.ConfigParser(inline_comment_prefixes=(";",))
    parser.optionxform = str  # keep case: lambda_T
    parser.read_string(raw.decode())

    known = {"experiment", "grid", "dictionary", "dictionary2", "solver",
             "segmentation", "synthetic", "ct", "output"}
    for name in parser.sections():
        if name not in known:
            raise ValueError(f"unknown config section [{name}]")
    if "experiment" not in parser or "grid" not in parser:
        raise ValueError("config needs [experiment] and [grid] sections")

    exp = parser["experiment"]
    kind = exp.get("kind", "")
    seed = exp.getint("seed", 0)
    for key in exp:
        if key not in ("kind", "seed"):
            raise ValueError(f"unknown key {key!r} in section [experiment]")

    g = parser["grid"]
    grid = Grid(
        g.getint("nx"), g.getint("ny"),
        g.getfloat("x_min", 0.0), g.getfloat("x_max", 1.0),
        g.getfloat("y_min", 0.0), g.getfloat("y_max", 1.0),
    )

    def section_spec(name, cls, parsers):
        if name not in parser:
            return cls()
        return cls(**_take(parser[name], parsers))

    dictionary = section_spec("dictionary", DictionarySpec, _DICT_PARSERS)
    dictionary2 = None
    if "dictionary2" in parser:
        dictionary2 = DictionarySpec(**_take(parser["dictionary2"], _DICT_PARSERS))
    solver = section_spec("solver", SolverSpec, _SOLVER_PARSERS)
    segmentation = section_spec("segmentation", SegmentationSpec, _SEG_PARSERS)
    synthetic = section_spec("synthetic", SyntheticSpec, _SYN_PARSERS)
    ct = section_spec("ct", CTSpec, _CT_PARSERS)

    out_dir = parser["output"].get("dir", "runs") if "output" in parser else "runs"
    if out_override is not None:
        out_dir = out_override
    if seed_override is not None:
        seed = seed_override

    config = ExperimentConfig(
        kind=kind, seed=seed, grid=grid, dictionary=dictionary,
        solver=solver, segmentation=segmentation, synthetic=synthetic, ct=ct,
        dictionary2=dictionary2, out_dir=out_dir,
        sha256=hashlib.sha256(raw).hexdigest(), source=str(path),
    )

    # ct.counts is exempt: ct-sim writes it, so it may not exist yet
    base = Path(path).parent
    for ref in (dictionary.path, ct.phantom, segmentation.image,
                dictionary2.path if dictionary2 else ""):
        if ref and not (base / ref).exists() and not Path(ref).exists():
            raise ValueError(f"referenced file does not exist: {ref}")
    return config


def resolve_ref(config: ExperimentConfig, ref: str) -> str:
    """Resolve a file reference relative to the config's own directory."""
    from pathlib import Path

    p = Path(ref)
    if p.exists() or p.is_absolute():
        return str(p)
    return str(Path(config.source).parent / ref)
