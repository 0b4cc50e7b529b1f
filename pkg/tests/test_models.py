import itertools
import math

import numpy as np
import pytest

from asyncca.models import (IsingModel, IsingParams, LifeModel, energy_change, flip_table,
                            ising_index, ising_next_state, life_next_state, parse_model)

UNIT = IsingParams(J=1, H=0, T=1)


def test_table_examples():
    tab = flip_table(UNIT)
    assert tab.p(1, 4) == pytest.approx(3.3535e-4, rel=1e-4)
    assert tab.p(1, 0) == 0.5
    assert tab.p(1, -4) == pytest.approx(0.99966, abs=1e-5)


@pytest.mark.parametrize("params", [UNIT, IsingParams(1, 0.3, 2.0), IsingParams(-1, 0.7, 0.5)])
def test_table_entries_and_detailed_balance(params):
    tab = flip_table(params)
    assert len(tab) == 10
    for s in (-1, 1):
        for total in range(-4, 5, 2):
            dE = energy_change(params, s, total)
            x = math.exp(-dE / params.T)
            p = tab.p(s, total)
            assert abs(p - x / (1 + x)) < 1e-12
            # flipping back from -s sees -dE
            assert abs(p / tab.p(-s, total) - x) < 1e-12 * max(1, x)


def test_table_decreasing_in_energy():
    params = IsingParams(1, 0.2, 1.5)
    tab = flip_table(params)
    pairs = sorted((energy_change(params, s, t), tab.p(s, t))
                   for s in (-1, 1) for t in range(-4, 5, 2))
    assert all(a[1] >= b[1] for a, b in zip(pairs, pairs[1:]))


def test_index_examples_and_bijection():
    assert ising_index(-1, -4) == 0
    assert ising_index(1, 4) == 9
    assert ising_index(1, 0) == 7
    seen = {ising_index(s, t) for s, t in itertools.product((-1, 1), range(-4, 5, 2))}
    assert seen == set(range(10))
    for bad in ((0, 0), (1, 3), (1, 6)):
        with pytest.raises(ValueError):
            ising_index(*bad)


def test_next_state_examples():
    tab = flip_table(UNIT)
    assert ising_next_state(1, [1, -1, 1, -1], tab, 0.4) == -1
    assert ising_next_state(1, [1, -1, 1, -1], tab, 0.6) == 1
    assert ising_next_state(1, [1, 1, 1, 1], tab, 0.5) == 1


def test_life_examples():
    assert life_next_state(1, [1, 1, 0, 0, 0, 0, 0, 0]) == 1
    assert life_next_state(0, [1, 1, 1, 0, 0, 0, 0, 0]) == 1
    assert life_next_state(1, [1, 1, 1, 1, 0, 0, 0, 0]) == 0


def test_model_update_uses_table():
    m = IsingModel(UNIT)
    states = [1, 1, 1, 1, 1]
    row = [1, 2, 3, 4]
    assert m.update(states, 0, row, lambda: 1e-4) == -1
    assert m.update(states, 0, row, lambda: 0.5) == 1


def test_life_is_deterministic():
    lm = LifeModel()
    assert lm.change_probability([0, 1, 1, 1, 0, 0, 0, 0, 0], 0, list(range(1, 9))) == 1.0
    assert lm.change_probability([0] * 9, 0, list(range(1, 9))) == 0.0


def test_parse_model():
    m = parse_model("ising:J=1,H=0.5,T=2")
    assert (m.params.J, m.params.H, m.params.T) == (1.0, 0.5, 2.0)
    assert isinstance(parse_model("life"), LifeModel)
    assert parse_model("ising:T=3", dim=3).z == 6
    for bad in ("ising:K=1", "ising:T=0", "potts", "life:x"):
        with pytest.raises(ValueError):
            parse_model(bad)


def test_3d_table():
    tab = flip_table(UNIT, z=6)
    assert len(tab) == 14
    assert tab.p(1, 6) == pytest.approx(math.exp(-12) / (1 + math.exp(-12)))
