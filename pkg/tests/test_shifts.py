import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import arc_fraction, shift_grid_search
from universality.shifts import (
    ShiftWindow,
    density_estimate,
    find_shift,
    max_deviation,
    shift_predicate,
    write_hits_csv,
)


def test_trivial_targets_hit_at_zero():
    w = find_shift({2: 1, 3: 1, 5: 1}, 0.1, 0.0, 10.0)
    assert w.found
    assert w.hits[0] == pytest.approx(0.0, abs=1e-6)


def test_matches_grid_oracle():
    targets = {2: -1, 3: 1}
    w = find_shift(targets, 0.2, 0.0, 200.0, max_hits=1000)
    grid = shift_grid_search(targets, 0.2, 200.0, 1e-3)
    assert w.found and grid.size
    # every oracle run of solutions contains a reported hit
    runs = np.split(grid, np.flatnonzero(np.diff(grid) > 0.01) + 1)
    for run in runs:
        assert any(run[0] - 0.01 <= h <= run[-1] + 0.01 for h in w.hits)
    assert runs[0][0] - 0.01 <= w.hits[0] <= runs[0][-1] + 0.01


def test_random_targets_three_primes():
    rng = np.random.default_rng(7)
    targets = {p: complex(np.exp(1j * rng.uniform(0, 2 * np.pi))) for p in (2, 3, 5)}
    w = find_shift(targets, 0.1, 0.0, 1e4)
    assert w.found
    assert all(d < 0.1 for d in w.deviations)
    assert np.all(max_deviation(np.array(w.hits), targets) < 0.1)


def test_empty_window_flagged():
    w = find_shift({2: -1}, 0.01, 0.0, 1.0)
    assert not w.found and w.exhausted


def test_rejects_bad_targets():
    with pytest.raises(ValueError):
        find_shift({2: 0.5}, 0.1)
    with pytest.raises(ValueError):
        find_shift({}, 0.1)
    with pytest.raises(ValueError):
        find_shift({2: 1}, 0.0)


def test_window_reverifies_hits():
    with pytest.raises(ValueError):
        ShiftWindow(0.0, 10.0, 0.01, 0.1, {2: -1}, hits=(0.0,))


@given(st.floats(0, 1e4), st.floats(-1e-3, 1e-3))
def test_lipschitz(t, h):
    targets = {2: 1j, 3: -1, 7: 1}
    d = abs(max_deviation(t + h, targets) - max_deviation(t, targets))
    assert d <= math.log(7) * abs(h) + 1e-12


def test_reproducible(tmp_path):
    targets = {2: -1, 3: 1j}
    a = find_shift(targets, 0.2, 0.0, 500.0)
    b = find_shift(targets, 0.2, 0.0, 500.0)
    assert a.hits == b.hits
    write_hits_csv(a, tmp_path / "a.csv")
    write_hits_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_density_trivial_predicates():
    assert density_estimate(lambda t: np.ones_like(t, dtype=bool), 100.0, 1000, 0).fraction == 1.0
    assert density_estimate(lambda t: np.zeros_like(t, dtype=bool), 100.0, 1000, 0).fraction == 0.0


def test_density_single_prime_arc():
    pred = shift_predicate({2: 1}, 0.5)
    est = density_estimate(pred, 1e5, 200_000, 3)
    assert abs(est.fraction - arc_fraction(0.5)) < est.radius + 2e-3
    assert est.excludes_zero


def test_density_seeded():
    pred = shift_predicate({2: 1, 3: -1}, 0.3)
    a = density_estimate(pred, 1e4, 10_000, 11)
    b = density_estimate(pred, 1e4, 10_000, 11)
    assert a == b
