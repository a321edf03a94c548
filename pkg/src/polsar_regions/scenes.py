"""Class covariance presets and the simulated 3x3 mosaic experiment.

The nine presets are ML covariance estimates (HH, HV, VV channels, linear
power) of land-cover training areas in an L-band SIR-C scene near Petrolina,
Brazil. Each entry below lists the diagonal and then the upper triangle in
row-major order ``(HH.HV*, HH.VV*, HV.VV*)``.
"""

from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import linalg, streams
from .classifier import amplitudes
from .distances import gaussian_estimate
from .errors import DomainError, UnknownClassError
from .wishart import CovarianceEstimate, WishartModel, estimate_covariance, sample_multilook

_CLASS_COVARIANCES = {
    "River": (
        (2.98e-3, 3.40e-4, 1.19e-2),
        (5.31e-6 + 8.11e-5j, 3.47e-3 + 3.42e-4j, 4.47e-6 + 1.39e-4j),
    ),
    "Caatinga": (
        (1.11e-1, 3.40e-2, 9.47e-2),
        (-3.10e-3 - 1.58e-3j, 1.98e-2 + 1.65e-3j, -1.41e-3 + 1.87e-3j),
    ),
    "Prepared Soil": (
        (1.05e-2, 8.46e-4, 1.14e-2),
        (-5.39e-6 - 2.37e-4j, 7.53e-3 + 1.75e-3j, -3.38e-5 + 1.32e-4j),
    ),
    "Soybean 1": (
        (3.40e-2, 5.16e-3, 5.38e-2),
        (-1.79e-3 - 1.86e-3j, -3.6e-4 - 7.58e-3j, 4.38e-4 + 4.28e-4j),
    ),
    # the (0,2) imaginary part appears with a decimal comma ("1,73"); read as 1.73e-3
    "Soybean 2": (
        (4.31e-2, 9.26e-3, 4.35e-2),
        (-1.76e-3 - 1.32e-3j, -1.78e-4 - 1.73e-3j, 6.55e-4 + 1.27e-3j),
    ),
    "Soybean 3": (
        (7.53e-2, 1.47e-2, 3.70e-2),
        (-4.25e-3 - 7.66e-3j, 5.87e-4 - 1.36e-3j, -2.18e-4 + 1.21e-3j),
    ),
    "Tillage": (
        (3.53e-2, 3.05e-3, 3.29e-2),
        (1.20e-3 + 1.02e-4j, 1.64e-2 - 2.65e-3j, 4.48e-4 + 1.88e-4j),
    ),
    "Corn 1": (
        (1.15e-1, 1.33e-2, 1.47e-1),
        (-3.95e-3 - 3.57e-3j, 9.13e-3 - 4.86e-3j, 3.34e-3 + 2.83e-3j),
    ),
    "Corn 2": (
        (4.19e-2, 1.02e-2, 5.71e-2),
        (1.08e-3 - 1.01e-3j, 9.24e-3 - 3.68e-3j, 2.43e-4 + 3.31e-4j),
    ),
}

CLASS_NAMES = tuple(_CLASS_COVARIANCES)
CHANNELS = ("HH", "HV", "VV")


@dataclass(frozen=True)
class ClassPreset:
    name: str
    sigma: np.ndarray


def preset(name):
    """Return the preset covariance for one of :data:`CLASS_NAMES`."""
    key = _resolve(name)
    diagonal, upper = _CLASS_COVARIANCES[key]
    return ClassPreset(key, linalg.from_upper(diagonal, upper))


def _resolve(name):
    if name in _CLASS_COVARIANCES:
        return name
    folded = {k.lower().replace(" ", "").replace("_", ""): k for k in _CLASS_COVARIANCES}
    key = folded.get(str(name).lower().replace(" ", "").replace("_", "").replace("-", ""))
    if key is None:
        raise UnknownClassError(f"unknown class {name!r}; choose from {', '.join(CLASS_NAMES)}")
    return key


@dataclass(frozen=True)
class PrototypeEntry:
    name: str
    wishart: object
    gaussian: object = None


@dataclass(frozen=True)
class PrototypeSet:
    """Ordered class prototypes; the position of an entry is its class index."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise DomainError("a prototype set needs at least one class")
        names = [e.name for e in entries]
        if len(set(names)) != len(names):
            raise DomainError("prototype class names must be unique")
        qs = {e.wishart.q for e in entries}
        looks = {e.wishart.looks for e in entries}
        if len(qs) != 1 or len(looks) != 1:
            raise DomainError("all prototypes must share q and the number of looks")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def names(self):
        return [e.name for e in self.entries]

    @property
    def q(self):
        return self.entries[0].wishart.q

    @property
    def looks(self):
        return self.entries[0].wishart.looks

    @property
    def has_gaussian(self):
        return all(e.gaussian is not None for e in self.entries)

    def index(self, name):
        return self.names.index(name)


def simulate_prototypes(names=CLASS_NAMES, pixels_per_class=900, looks=4, seed=0):
    """Independent training samples, one ML estimate per class.

    Draws come from the ``PROTOTYPES`` stream domain, disjoint from every
    mosaic tile stream for the same seed.
    """
    if pixels_per_class < 1:
        raise DomainError("pixels_per_class must be >= 1")
    entries = []
    for name in names:
        p = preset(name)
        rng = streams.stream(seed, streams.PROTOTYPES, CLASS_NAMES.index(p.name))
        pixels = sample_multilook(WishartModel(p.sigma, looks), rng, pixels_per_class)
        entries.append(PrototypeEntry(
            p.name,
            estimate_covariance(pixels, looks),
            gaussian_estimate(amplitudes(pixels)),
        ))
    return PrototypeSet(tuple(entries))


def preset_prototypes(names=CLASS_NAMES, sample_size=900, looks=4):
    """Prototypes whose estimates are the preset matrices themselves."""
    presets = [preset(n) for n in names]
    return PrototypeSet(tuple(
        PrototypeEntry(p.name, CovarianceEstimate(p.sigma, sample_size, looks)) for p in presets
    ))


def default_layout():
    return tuple(tuple(CLASS_NAMES[3 * r: 3 * r + 3]) for r in range(3))


@dataclass(frozen=True)
class MosaicSpec:
    layout: tuple = field(default_factory=default_layout)
    tile_size: int = 150
    looks: int = 4
    seed: int = 0

    def __post_init__(self):
        layout = tuple(tuple(_resolve(n) for n in row) for row in self.layout)
        if not layout or any(len(row) != len(layout[0]) for row in layout) or not layout[0]:
            raise DomainError("layout must be a non-empty rectangular grid")
        if self.tile_size < 1:
            raise DomainError("tile_size must be >= 1")
        object.__setattr__(self, "layout", layout)

    @property
    def classes(self):
        """Distinct class names in first-appearance order (row-major)."""
        seen = []
        for row in self.layout:
            for name in row:
                if name not in seen:
                    seen.append(name)
        return seen

    @property
    def shape(self):
        return len(self.layout) * self.tile_size, len(self.layout[0]) * self.tile_size


@dataclass
class Mosaic:
    raster: np.ndarray  # (H, W, q, q) complex
    truth: np.ndarray   # (H, W) int32 class index into ``classes``
    classes: list
    looks: int


def simulate_mosaic(spec, workers=1):
    """Simulate every tile independently and stitch them together.

    Tile ``(r, c)`` draws from its own child stream, so the output does not
    depend on ``workers``.
    """
    t = spec.tile_size
    h, w = spec.shape
    q = preset(spec.layout[0][0]).sigma.shape[0]
    raster = np.empty((h, w, q, q), dtype=np.complex128)
    truth = np.empty((h, w), dtype=np.int32)
    classes = spec.classes

    def fill(rc):
        r, c = rc
        name = spec.layout[r][c]
        rng = streams.stream(spec.seed, streams.MOSAIC, r, c)
        model = WishartModel(preset(name).sigma, spec.looks)
        raster[r * t:(r + 1) * t, c * t:(c + 1) * t] = sample_multilook(model, rng, (t, t))
        truth[r * t:(r + 1) * t, c * t:(c + 1) * t] = classes.index(name)

    tiles = [(r, c) for r in range(len(spec.layout)) for c in range(len(spec.layout[0]))]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(fill, tiles))
    else:
        for rc in tiles:
            fill(rc)
    return Mosaic(raster, truth, classes, spec.looks)
