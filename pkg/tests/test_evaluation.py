import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from octrack.evaluation import (
    EvalConfig,
    compare,
    jaggedness,
    mean_abs_error,
    px_to_um,
    reduction_pct,
)
from octrack.signal_model import LayerId

EPI, DM = LayerId.EPITHELIUM, LayerId.DM
finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_mae_examples():
    assert mean_abs_error([1, 2, 3], [1, 2, 3]) == 0
    assert mean_abs_error(np.arange(5) + 1.0, np.arange(5)) == 1.0
    assert mean_abs_error([1, 2, 4], [1, 1, 1]) == pytest.approx(4 / 3, abs=1e-15)
    with pytest.raises(ValueError):
        mean_abs_error([1], [1, 2])
    with pytest.raises(ValueError):
        mean_abs_error([], [])


@pytest.mark.parametrize("px, um", [(0.36, 0.9396), (0.28, 0.7308), (0.89, 2.3229), (0.54, 1.4094)])
def test_px_to_um_table_values(px, um):
    assert px_to_um(px) == pytest.approx(um, abs=1e-4)


def test_reduction_examples():
    assert reduction_pct(0.89, 0.36) == pytest.approx(59.55, abs=0.01)
    assert reduction_pct(0.54, 0.28) == pytest.approx(48.15, abs=0.01)
    assert reduction_pct(0.7, 0.7) == 0
    with pytest.raises(ValueError):
        reduction_pct(0.0, 0.1)


def test_jaggedness_examples():
    assert jaggedness([3.0] * 10) == 0
    assert jaggedness([0.0, 1.0] * 50) == 1.0
    assert jaggedness(-0.5 * np.arange(20.0)) == 0.5
    with pytest.raises(ValueError):
        jaggedness([1.0])


@given(st.floats(0.01, 100), st.floats(0, 100), st.floats(0.01, 100))
def test_reduction_scale_invariant(a, b, c):
    assert reduction_pct(a, b) == pytest.approx(reduction_pct(c * a, c * b), rel=1e-9, abs=1e-9)


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=30), finite)
def test_mae_translation_invariant(pairs, shift):
    est, tru = map(np.array, zip(*pairs))
    assert mean_abs_error(est + shift, tru + shift) == pytest.approx(
        mean_abs_error(est, tru), abs=1e-9
    )


def test_compare_identical_is_zero():
    t = np.linspace(100, 110, 50)
    est = t + 0.3
    c = compare({EPI: est}, {EPI: est}, {EPI: t})
    assert c.reduction[EPI] == 0


def test_compare_skips_raw_dropouts_and_reports():
    truth = np.zeros(6)
    raw = np.array([1.0, np.nan, -1.0, 1.0, np.nan, 1.0])
    kdh = np.full(6, 0.5)
    c = compare({EPI: raw, DM: raw}, {EPI: kdh, DM: kdh}, {EPI: truth, DM: truth}, EvalConfig(2.0))
    assert c.raw[EPI].n_columns == 4 and c.kdh[EPI].n_columns == 6
    assert c.raw[EPI].mae_px == 1.0 and c.kdh[EPI].mae_um == 1.0
    assert c.reduction[DM] == 50.0
    rows = json.loads(c.to_json())
    assert {r["pipeline"] for r in rows} == {"raw", "kdh"}
    assert set(rows[0]) >= {"layer", "mae_px", "mae_um", "jaggedness_px", "n_columns", "reduction_pct"}
    table = c.table()
    assert "Average Epithelium Error" in table and "50.00%" in table
