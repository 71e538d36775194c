"""Counting metrics: within-one accuracy and normalized absolute error."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from racnet.errors import ValidationError
from racnet.metrics import mae, obo


def test_perfect_predictions():
    gts = [3.0, 7.0, 2.0]
    assert obo(gts, gts) == 1.0
    assert mae(gts, gts) == 0.0


def test_fixture_pair():
    gts = [10.0, 4.0]
    preds = [11.0, 8.0]
    assert obo(preds, gts) == 0.5
    assert mae(preds, gts) == (abs(11.0 - 10.0) / 10.0 + abs(8.0 - 4.0) / 4.0) / 2.0


def test_within_one_boundary_is_inclusive():
    assert obo([6.0], [5.0]) == 1.0
    assert obo([6.0 + 1e-9], [5.0]) == 0.0


def test_unrounded_predictions_allowed():
    assert obo([5.4], [5.0]) == 1.0
    assert abs(mae([5.4], [5.0]) - 0.08) < 1e-12


def test_order_invariance():
    gts = [2.0, 5.0, 9.0, 4.0]
    preds = [2.5, 7.0, 9.0, 1.0]
    assert obo(preds, gts) == obo(preds[::-1], gts[::-1])
    assert abs(mae(preds, gts) - mae(preds[::-1], gts[::-1])) < 1e-12


def test_length_mismatch_and_empty_rejected():
    with pytest.raises(ValidationError):
        obo([1.0], [1.0, 2.0])
    with pytest.raises(ValidationError):
        obo([], [])
    with pytest.raises(ValidationError):
        mae([1.0], [])


def test_mae_rejects_zero_ground_truth():
    with pytest.raises(ValidationError):
        mae([1.0, 2.0], [3.0, 0.0])


def test_obo_accepts_zero_ground_truth():
    # a zero-count video scores correct only for predictions within 1
    assert obo([0.5, 3.0], [0.0, 0.0]) == 0.5


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0.0, 500.0), st.floats(0.5, 500.0)),
                min_size=1, max_size=30))
def test_metric_ranges(pairs):
    preds = [p for p, _ in pairs]
    gts = [g for _, g in pairs]
    assert 0.0 <= obo(preds, gts) <= 1.0
    assert mae(preds, gts) >= 0.0
