import numpy as np
import pytest

from polsar_regions import linalg, streams
from polsar_regions.errors import DomainError, UnknownClassError
from polsar_regions.scenes import (
    CLASS_NAMES,
    MosaicSpec,
    PrototypeEntry,
    PrototypeSet,
    default_layout,
    preset,
    preset_prototypes,
    simulate_mosaic,
    simulate_prototypes,
)
from polsar_regions.wishart import CovarianceEstimate, WishartModel, sample_multilook


def test_river_entries():
    s = preset("River").sigma
    assert s[0, 0] == 2.98e-3
    assert s[0, 1] == 5.31e-6 + 8.11e-5j
    assert s[1, 0] == 5.31e-6 - 8.11e-5j
    assert s[2, 2] == 1.19e-2


def test_corn2_entries():
    s = preset("Corn 2").sigma
    assert s[0, 0] == 4.19e-2 and s[1, 1] == 1.02e-2


@pytest.mark.parametrize("name", CLASS_NAMES)
def test_every_preset_is_positive_definite(name):
    linalg.cholesky_hpd(preset(name).sigma)


def test_name_resolution():
    assert preset("corn_2").name == "Corn 2"
    assert preset("prepared-soil").name == "Prepared Soil"
    with pytest.raises(UnknownClassError):
        preset("Wheat")


def test_default_mosaic_shape():
    spec = MosaicSpec()
    assert spec.shape == (450, 450)
    assert spec.classes == list(CLASS_NAMES)
    assert spec.layout == default_layout()


def test_tiny_mosaic():
    m = simulate_mosaic(MosaicSpec(layout=(("River",),), tile_size=2, looks=4, seed=1))
    assert m.raster.shape == (2, 2, 3, 3)
    assert np.all(m.truth == 0)
    assert m.classes == ["River"]


def test_mosaic_blocks_and_moments():
    spec = MosaicSpec(tile_size=60, seed=3)
    m = simulate_mosaic(spec)
    iu = np.triu_indices(3)
    zscores = []
    for r in range(3):
        for c in range(3):
            block = m.truth[r * 60:(r + 1) * 60, c * 60:(c + 1) * 60]
            name = spec.layout[r][c]
            assert np.all(block == m.classes.index(name))
            z = m.raster[r * 60:(r + 1) * 60, c * 60:(c + 1) * 60].reshape(-1, 3, 3)
            s = preset(name).sigma
            for part in (np.real, np.imag):
                x = part(z)[:, iu[0], iu[1]]
                se = x.std(axis=0) / np.sqrt(len(x))
                keep = se > 0  # imaginary diagonal is exactly zero
                zscores.extend(((x.mean(axis=0) - part(s)[iu]) / np.where(keep, se, 1))[keep])
    zscores = np.array(zscores)
    # 81 unique entries: expect ~0.2 beyond 3 s.e. under a correct sampler
    assert np.sum(np.abs(zscores) > 3) <= 2
    assert np.all(np.abs(zscores) < 5)
    assert 0.75 < zscores.std() < 1.25


def test_mosaic_independent_of_worker_count():
    spec = MosaicSpec(tile_size=20, seed=11)
    a = simulate_mosaic(spec, workers=1)
    b = simulate_mosaic(spec, workers=4)
    np.testing.assert_array_equal(a.raster, b.raster)
    np.testing.assert_array_equal(a.truth, b.truth)


def test_mosaic_seed_changes_data():
    a = simulate_mosaic(MosaicSpec(tile_size=5, seed=1))
    b = simulate_mosaic(MosaicSpec(tile_size=5, seed=2))
    assert not np.array_equal(a.raster, b.raster)


def test_invalid_specs():
    with pytest.raises(DomainError):
        MosaicSpec(layout=(("River", "Caatinga"), ("Tillage",)))
    with pytest.raises(DomainError):
        MosaicSpec(tile_size=0)
    with pytest.raises(UnknownClassError):
        MosaicSpec(layout=(("Nope",),))


def test_prototype_sizes():
    protos = simulate_prototypes(pixels_per_class=900, seed=0)
    assert len(protos) == 9
    assert all(e.wishart.sample_size == 900 for e in protos)
    assert protos.has_gaussian and protos.looks == 4 and protos.q == 3


def test_single_pixel_prototype_equals_draw():
    protos = simulate_prototypes(["Tillage"], pixels_per_class=1, looks=4, seed=7)
    rng = streams.stream(7, streams.PROTOTYPES, CLASS_NAMES.index("Tillage"))
    draw = sample_multilook(WishartModel(preset("Tillage").sigma, 4), rng, 1)[0]
    np.testing.assert_array_equal(protos.entries[0].wishart.sigma_hat, draw)


def test_prototype_relative_error_small():
    failures = 0
    for seed in range(100):
        protos = simulate_prototypes(["Soybean 2"], 900, 4, seed)
        s = preset("Soybean 2").sigma
        err = np.linalg.norm(protos.entries[0].wishart.sigma_hat - s) / np.linalg.norm(s)
        failures += err >= 0.05
    assert failures <= 1


def test_prototypes_independent_of_mosaic():
    spec = MosaicSpec(layout=(("River",),), tile_size=30, seed=0)
    m = simulate_mosaic(spec)
    p = simulate_prototypes(["River"], 900, 4, 0)
    assert not np.isin(p.entries[0].wishart.sigma_hat.ravel(), m.raster.ravel()).any()


def test_prototype_set_validation():
    a = CovarianceEstimate(np.eye(3), 10, 4)
    with pytest.raises(DomainError):
        PrototypeSet((PrototypeEntry("A", a), PrototypeEntry("A", a)))
    with pytest.raises(DomainError):
        PrototypeSet((PrototypeEntry("A", a), PrototypeEntry("B", CovarianceEstimate(np.eye(3), 10, 5))))
    with pytest.raises(DomainError):
        PrototypeSet(())
    protos = preset_prototypes(["River", "Corn 1"], 500, 4)
    assert protos.names == ["River", "Corn 1"] and protos.index("Corn 1") == 1
    assert not protos.has_gaussian
