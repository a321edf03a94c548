import numpy as np
import pytest

from polsar_regions import plotting, streams
from polsar_regions.distances import StatisticKind as K
from polsar_regions.experiment import (
    REFERENCE_NON_REJECTION,
    null_rejection_rate,
    records_as_dicts,
    run_experiment,
    summarize,
)
from polsar_regions.scenes import preset


def test_streams_are_keyed_and_reproducible():
    a = streams.stream(1, streams.MOSAIC, 0, 0).standard_normal(4)
    b = streams.stream(1, streams.MOSAIC, 0, 0).standard_normal(4)
    c = streams.stream(1, streams.MOSAIC, 0, 1).standard_normal(4)
    d = streams.stream(1, streams.PROTOTYPES, 0, 0).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)
    with pytest.raises(ValueError):
        streams.stream(-1, streams.MOSAIC)


def test_run_and_summarize():
    records = run_experiment([0, 1], tiles=(30,), kinds=(K.KULLBACK_LEIBLER, K.HELLINGER),
                             tile_size=60, prototype_pixels=300)
    assert len(records) == 4
    rows = summarize(records)
    assert [(r["kind"], r["tile"], r["seeds"]) for r in rows] == [("hellinger", 30, 2), ("kl", 30, 2)]
    assert all(0 <= r["non_rejection"] <= 1 for r in rows)
    assert records_as_dicts(records)[0]["seed"] == 0


def test_null_size_small_run():
    size = null_rejection_rate(K.BHATTACHARYYA, preset("Tillage").sigma, trials=400, seed=3)
    assert 0.0 <= size <= 0.15


def test_figures_render_deterministically(tmp_path):
    rows = [{"kind": k.value, "tile": t, "non_rejection": 0.94} for k in K for t in (5, 10)]
    plotting.save_non_rejection(tmp_path / "a.png", rows, REFERENCE_NON_REJECTION)
    plotting.save_non_rejection(tmp_path / "b.png", rows, REFERENCE_NON_REJECTION)
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
    binary = np.zeros((10, 10), np.uint8)
    binary[:5] = 255
    plotting.save_pvalue_map(tmp_path / "p.png", binary, 0.05, "test")
    rgb = np.zeros((10, 10, 3), np.uint8)
    plotting.save_class_map(tmp_path / "c.png", rgb, {"x": (0, 0, 0)}, ["x"], "t")
    assert (tmp_path / "p.png").stat().st_size > 0 and (tmp_path / "c.png").stat().st_size > 0
