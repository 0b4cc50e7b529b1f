import pytest
from hypothesis import given, settings, strategies as st

from asyncca.topology import MOORE, Lattice, Partition, neighbors


@pytest.mark.parametrize("q", [1, 2, 3])
def test_neighbourhood_size_2d(q):
    lat = Lattice(2, 16)
    for c in (0, 17, 255):
        assert len(neighbors(lat, c, q)) - 1 == 2 * q * (q + 1)


def test_circle_wraps():
    assert neighbors(Lattice(1, 5), 0) == {4, 0, 1}


def test_first_degree_includes_self():
    lat = Lattice(2, 8)
    assert all(len(neighbors(lat, c)) == 5 for c in range(lat.size))


def test_moore_has_eight():
    assert len(neighbors(Lattice(2, 6), 7, stencil=MOORE)) == 9


def test_bad_cell_rejected():
    with pytest.raises(ValueError):
        neighbors(Lattice(2, 4), 16)
    with pytest.raises(ValueError):
        neighbors(Lattice(2, 4), 0, q=0)


def test_stencil_table_counts():
    for dim in (1, 2, 3):
        tab = Lattice(dim, 5).stencil_table()
        assert tab.shape == (5 ** dim, 2 * dim)


def test_w_sets_match_figure():
    # 8x8 torus, 4x4 subarrays: PE ids 0 1 / 2 3
    part = Partition(Lattice(2, 8), 4)
    lat = part.lattice
    assert part.w_set(lat.cell((1, 1))) == frozenset()          # interior
    assert part.w_set(lat.cell((1, 3))) == {1}                   # right edge
    assert part.w_set(lat.cell((3, 3))) == {1, 2}                # corner
    assert part.w_set(lat.cell((0, 0))) == {1, 2}                # wraps both ways


@pytest.mark.parametrize("m,q,expected", [(4, 1, 4), (12, 1, 100), (4, 2, 0), (6, 2, 4)])
def test_kernel_counts(m, q, expected):
    part = Partition(Lattice(2, 2 * m), m, q)
    for C in range(part.count):
        assert len(part.kernel_cells(C)) == expected


def test_kernel_is_exactly_empty_w():
    part = Partition(Lattice(2, 12), 6)
    for C in range(part.count):
        kern = set(part.kernel_cells(C).tolist())
        for c in part.cells_of(C).tolist():
            assert (c in kern) == (not part.w_set(c))


def test_kernel_and_boundary_split_subarray():
    part = Partition(Lattice(3, 6), 3)
    for C in range(part.count):
        k = set(part.kernel_cells(C).tolist())
        b = set(part.boundary_cells(C).tolist())
        assert not k & b
        assert k | b == set(part.cells_of(C).tolist())


def test_partition_counts():
    part = Partition(Lattice(3, 8), 4)
    assert part.count == 8
    assert part.cells_per_subarray == 64
    assert sorted(part.owner.tolist()) == sorted(sum(([C] * 64 for C in range(8)), []))


def test_indivisible_side_rejected():
    with pytest.raises(ValueError):
        Partition(Lattice(2, 10), 4)


@settings(max_examples=40, deadline=None)
@given(dim=st.integers(1, 3), side=st.integers(3, 7), q=st.integers(1, 2), data=st.data())
def test_neighbourhood_symmetric(dim, side, q, data):
    lat = Lattice(dim, side)
    c = data.draw(st.integers(0, lat.size - 1))
    for x in neighbors(lat, c, q):
        assert c in neighbors(lat, x, q)


@settings(max_examples=30, deadline=None)
@given(dim=st.integers(1, 3), m=st.integers(3, 5), k=st.integers(1, 3))
def test_w_set_bounded_by_adjacent_subarrays(dim, m, k):
    if dim == 3 and k > 2:
        k = 2
    part = Partition(Lattice(dim, m * k), m)
    for c in range(part.lattice.size):
        w = part.w_set(c)
        assert len(w) <= dim
        assert set(w) <= set(part.pe_neighbors(part.subarray_of(c)))
