"""Tests for the orientation group tables and coordinate maps."""
import sys, os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from itertools import product

import numpy as np
import pytest
from src.d4.group import (
    LABELS, CoordinateRangeError, Orientation, compare_tables, compose, coordinate_map,
    derive_tables, format_tables, inverse, invert_label, output_shape, transform_array,
    verify_group,
)
from src.utils.constants import REFERENCE_COMPOSE, REFERENCE_INVERSE_ACTION


@pytest.fixture
def tables():
    return derive_tables()


def test_compose_matches_reference(tables):
    assert tables.compose.tolist() == REFERENCE_COMPOSE


def test_inverse_action_matches_reference(tables):
    assert tables.inverse_action.tolist() == REFERENCE_INVERSE_ACTION


def test_compare_tables_reports_no_mismatch(tables):
    assert compare_tables(tables, REFERENCE_COMPOSE, REFERENCE_INVERSE_ACTION) == []


def test_compare_tables_names_the_entry(tables):
    broken = [row[:] for row in REFERENCE_COMPOSE]
    broken[4][5] = 3
    mismatches = compare_tables(tables, broken, REFERENCE_INVERSE_ACTION)
    assert len(mismatches) == 1
    assert (mismatches[0].table, mismatches[0].i, mismatches[0].j) == ("compose", 4, 5)
    assert "compose[4][5]" in str(mismatches[0])


def test_group_axioms_hold(tables):
    assert verify_group(tables) == []


def test_inverse_vector(tables):
    assert tables.inverse.tolist() == [0, 1, 2, 3, 4, 6, 5, 7]
    assert inverse(tables, 5) == 6
    assert inverse(tables, 6) == 5


@pytest.mark.parametrize("i,j,expected", [
    (0, 6, 6), (3, 3, 0), (7, 4, 3), (1, 2, 3), (4, 5, 2),
])
def test_compose_examples(tables, i, j, expected):
    assert compose(tables, i, j) == expected


def test_invert_label_examples(tables):
    assert invert_label(tables, 0, 5) == 5
    assert invert_label(tables, 5, 0) == 6


def test_invert_label_undoes_compose(tables):
    for i, k in product(LABELS, LABELS):
        assert compose(tables, i, invert_label(tables, i, k)) == k
    for j, t in product(LABELS, LABELS):
        assert invert_label(tables, j, compose(tables, j, t)) == t


def test_involutions_and_klein_subgroup(tables):
    for i in (0, 1, 2, 3, 4, 7):
        assert compose(tables, i, i) == 0
    assert compose(tables, 5, 6) == 0
    klein = {0, 1, 2, 3}
    for i, j in product(klein, klein):
        assert compose(tables, i, j) in klein


def test_tables_are_read_only(tables):
    with pytest.raises(ValueError):
        tables.compose[0, 0] = 1


def test_compose_matches_pixel_composition(tables):
    image = np.arange(12).reshape(3, 4)
    for i, j in product(LABELS, LABELS):
        twice = transform_array(transform_array(image, j), i)
        assert np.array_equal(twice, transform_array(image, compose(tables, i, j)))


# ----------------------------------------------------------------------
def test_coordinate_map_identity():
    assert coordinate_map(0, 5, 7, 10, 12) == (5, 7)


def test_coordinate_map_hflip_corner():
    assert coordinate_map(1, 0, 0, 2, 2) == (1, 0)


def test_label5_corner_diagram():
    grid = np.array([[1, 2], [3, 4]])
    assert transform_array(grid, 5).tolist() == [[3, 1], [4, 2]]


@pytest.mark.parametrize("label,expected", [
    (2, [[3, 4], [1, 2]]),
    (7, [[4, 2], [3, 1]]),
    (3, [[4, 3], [2, 1]]),
    (4, [[1, 3], [2, 4]]),
])
def test_corner_diagrams(label, expected):
    assert transform_array(np.array([[1, 2], [3, 4]]), label).tolist() == expected


def test_coordinate_map_out_of_range():
    with pytest.raises(CoordinateRangeError):
        coordinate_map(0, 10, 0, 10, 12)
    # labels 4-7 swap the output dimensions
    with pytest.raises(CoordinateRangeError):
        coordinate_map(5, 0, 10, 10, 12)
    assert coordinate_map(5, 11, 9, 10, 12) == (9, 0)


def test_output_shape_swaps_for_transposing_labels():
    assert output_shape(3, 10, 12) == (10, 12)
    assert output_shape(6, 10, 12) == (12, 10)
    assert Orientation(6).swaps_axes
    assert not Orientation.ROT180.swaps_axes


def test_bad_label_rejected():
    with pytest.raises(ValueError):
        transform_array(np.zeros((2, 2)), 8)


def test_format_tables_layout(tables):
    lines = format_tables(tables).splitlines()
    assert lines[0] == "compose"
    assert lines[1] == "0 1 2 3 4 5 6 7"
    assert lines[5] == "4 6 5 7 0 2 1 3"
    assert lines[9] == "inverse_action"
    assert lines[-2] == "inverse"
    assert lines[-1] == "0 1 2 3 4 6 5 7"
