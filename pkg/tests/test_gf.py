import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crcodes import gf
from crcodes.errors import SingularMatrix

F8 = gf.field(8)
F16 = gf.field(16)


def carryless_mul(a, b, w, poly):
    """Shift-and-add reference multiply, independent of the log tables."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> w:
            a ^= poly
    return r


def test_tables_agree_with_carryless_reference_w8():
    a = np.arange(256)
    for b in range(256):
        got = F8.mul_array(a, np.full(256, b))
        want = [carryless_mul(int(x), b, 8, gf.PRIMITIVE_POLY[8]) for x in a]
        assert got.tolist() == want


def test_field_axioms_exhaustive_w8():
    a = np.arange(256).reshape(-1, 1)
    b = np.arange(256).reshape(1, -1)
    prod = F8.mul_array(np.broadcast_to(a, (256, 256)), np.broadcast_to(b, (256, 256)))
    assert (prod == prod.T).all()
    assert (prod[1] == np.arange(256)).all()
    assert (prod[0] == 0).all()
    # every nonzero element has exactly one inverse
    for x in range(1, 256):
        row = prod[x]
        assert np.count_nonzero(row == 1) == 1
        assert F8.mul(x, F8.inv(x)) == 1
    # associativity and distributivity, one fixed c at a time
    for c in range(256):
        ab_c = F8.mul_array(prod, np.full((256, 256), c))
        a_bc = prod[:, F8.mul_array(np.arange(256), np.full(256, c))]
        assert (ab_c == a_bc).all()
        left = F8.mul_array(np.broadcast_to(a, (256, 256)), np.bitwise_xor(b, c))
        right = prod ^ prod[:, [c]]
        assert (left == right).all()


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroDivisionError):
        F16.inv(0)


@pytest.mark.parametrize(
    "m, want",
    [
        (np.eye(4, dtype=np.uint16), 4),
        (np.zeros((3, 5), dtype=np.uint16), 0),
        (np.array([[3, 7, 9], [3, 7, 9]], dtype=np.uint16), 1),
    ],
)
def test_rank_examples(m, want):
    assert gf.rank(m) == want


def test_solve_identity():
    b = np.array([5, 0, 65535, 12], dtype=np.uint16)
    assert (gf.solve(np.eye(4, dtype=np.uint16), b) == b).all()


def test_solve_random_full_rank_w8():
    rng = np.random.default_rng(7)
    a = gf.random_matrix(8, 8, 1, w=8)
    while F8.rank(a) < 8:
        a = F8.random_matrix(8, 8, rng)
    x = rng.integers(0, 256, 8).astype(np.uint8)
    b = F8.matvec(a, x)
    assert (F8.solve(a, b) == x).all()


def test_solve_singular_raises():
    a = np.array([[1, 2], [0, 0]], dtype=np.uint16)
    with pytest.raises(SingularMatrix):
        gf.solve(a, np.array([1, 1], dtype=np.uint16))


def test_random_matrix_empty_and_deterministic():
    assert gf.random_matrix(0, 0, 3).shape == (0, 0)
    assert (gf.random_matrix(5, 6, 42) == gf.random_matrix(5, 6, 42)).all()
    assert not (gf.random_matrix(5, 6, 42) == gf.random_matrix(5, 6, 43)).all()


def test_random_64x64_full_rank_frequency():
    full = sum(gf.rank(gf.random_matrix(64, 64, seed)) == 64 for seed in range(1000))
    assert full / 1000 >= 0.99


def test_inverse_roundtrip():
    a = gf.random_matrix(6, 6, 11)
    assert (F16.matmul(a, F16.inverse(a)) == np.eye(6, dtype=np.uint16)).all()


def test_independent_rows_span():
    a = gf.random_matrix(3, 5, 2)
    m = np.vstack([a, F16.matmul(gf.random_matrix(4, 3, 3), a)])
    rows = F16.independent_rows(m)
    assert len(rows) == 3 and F16.rank(m[rows]) == 3


def test_unsupported_width():
    with pytest.raises(ValueError):
        gf.field(12)


matrices = st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))


@settings(max_examples=60, deadline=None)
@given(matrices, st.integers(0, 2**32 - 1))
def test_rank_invariant_under_row_permutation(shape, perm_seed):
    rows, cols, seed = shape
    a = gf.random_matrix(rows, cols, seed, w=8)
    a[rows // 2] = a[0]  # make deficiency likely
    perm = np.random.default_rng(perm_seed).permutation(rows)
    assert F8.rank(a) == F8.rank(a[perm]) <= min(rows, cols)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_solve_after_multiply_is_identity(n, seed):
    a = gf.random_matrix(n, n, seed)
    if F16.rank(a) < n:
        return
    x = gf.random_matrix(n, 1, seed + 1)[:, 0]
    assert (F16.solve(a, F16.matvec(a, x)) == x).all()


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 65535), st.integers(0, 65535), st.integers(0, 65535))
def test_distributive_w16(a, b, c):
    assert F16.mul(a, b ^ c) == F16.mul(a, b) ^ F16.mul(a, c)
    assert F16.mul(a, b) == carryless_mul(a, b, 16, gf.PRIMITIVE_POLY[16])
