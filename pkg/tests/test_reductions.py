from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from qtslab.algebra import BoolMatrix, DimensionError, FieldMatrix, convolve
from qtslab.reductions import (
    BlockOverflowError, ReductionError, block_width, certify_good_rows, embed_binary_mult,
    embed_convolution, embed_cube, embed_inverse, embed_square, encode_doubled, good_rows,
    half_norm, ksdw_matrix, linear_convolution, pre_carry_blocks, stacked_block_sizes,
    stacked_hard_matrix, tensor_rigidity_verify, triple_product_via_kron,
)


def triple_oracle(a, b, c, p):
    """Integer matrix product in plain numpy, reduced once at the end."""
    return (a.astype(object) @ b.astype(object) @ c.astype(object)) % p


mats = st.integers(1, 3).flatmap(
    lambda n: arrays(np.int64, (3, n, n), elements=st.integers(0, 6)))


@settings(max_examples=150, deadline=None)
@given(mats)
def test_triple_product_embeddings(abc):
    A, B, C = (FieldMatrix(m, 7) for m in abc)
    truth = FieldMatrix(triple_oracle(*abc, 7), 7)
    for res in (embed_cube(A, B, C), embed_inverse(A, B, C)):
        assert res.verified and res.extracted == truth
    kr = triple_product_via_kron(A, B, C)
    assert kr.verified
    assert kr.extracted.tolist() == [[v] for v in truth.data.reshape(-1)]


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: arrays(np.int64, (2, n, n), elements=st.integers(0, 4))))
def test_square_embedding(ab):
    A, B = (FieldMatrix(m, 5) for m in ab)
    res = embed_square(A, B)
    assert res.verified
    assert res.extracted == FieldMatrix((ab[0].astype(object) @ ab[1]) % 5, 5)


def test_inverse_embedding_matrix_is_unit_triangular():
    I = FieldMatrix.identity(2, 5)
    res = embed_inverse(I, I, I)
    M = res.constructed["M"].data
    assert np.all(np.diag(M) == 1) and np.all(np.tril(M, -1) == 0)


def test_embedding_rejects_mismatched_inputs():
    with pytest.raises(DimensionError):
        embed_cube(FieldMatrix.identity(2, 5), FieldMatrix.identity(3, 5), FieldMatrix.identity(2, 5))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4).flatmap(lambda h: arrays(np.int64, (2, 2 * h), elements=st.integers(0, 6))))
def test_convolution_embedding(uv):
    res = embed_convolution(uv[0], uv[1], 7)
    assert res.verified


# -- binary multiplication ----------------------------------------------------------

def test_block_width():
    assert [block_width(n) for n in (4, 5, 8, 9, 16)] == [2, 3, 3, 4, 4]


def test_encode_doubled_layout():
    # u = (1, 0, 1, 1), b = 2: blocks 0..7 hold 1,0,1,1,1,0,1,1
    assert encode_doubled([1, 0, 1, 1], 2) == 0b01_01_00_01_01_01_00_01


@settings(max_examples=300, deadline=None)
@given(st.integers(4, 8).flatmap(lambda n: arrays(np.int64, (2, n), elements=st.integers(0, 1))))
def test_product_is_sum_of_pre_carry_blocks(uv):
    u, v = uv.tolist()
    n = len(u)
    b = block_width(n)
    prod = encode_doubled(u, b) * encode_doubled(v, b)
    assert prod == sum(e << (b * r) for r, e in enumerate(pre_carry_blocks(u, v)))


@settings(max_examples=300, deadline=None)
@given(st.integers(4, 8).flatmap(lambda n: arrays(np.int64, (2, n), elements=st.integers(0, 1))))
def test_binary_mult_recovers_convolution_or_refuses(uv):
    u, v = uv.tolist()
    n = len(u)
    try:
        emb = embed_binary_mult(u, v)
    except BlockOverflowError:
        assert max(pre_carry_blocks(u, v)) >= 2 ** block_width(n)
        return
    lin = [sum(u[a] * v[q - a] for a in range(n) if 0 <= q - a < n) for q in range(2 * n - 1)]
    assert list(emb.linear) == lin
    # a prime above n leaves the integer cyclic convolution unreduced
    assert emb.cyclic == convolve(u, v, 11)


def test_binary_mult_rejects_bad_inputs():
    with pytest.raises(ReductionError):
        embed_binary_mult([1, 0, 1], [1, 0, 1])
    with pytest.raises(ReductionError):
        embed_binary_mult([2, 0, 0, 0], [1, 0, 0, 0])
    with pytest.raises(BlockOverflowError):
        embed_binary_mult([1] * 4, [1] * 4)


def test_linear_convolution_small():
    assert linear_convolution([1, 1], [1, 1]) == [1, 2, 1]


# -- tensor rigidity -------------------------------------------------------------------

def test_tensor_rigidity_identity():
    I = FieldMatrix.identity(2, 5)
    assert tensor_rigidity_verify(I, I, 0.5) is True
    Z = FieldMatrix([[1, 0], [0, 0]], 5)
    assert tensor_rigidity_verify(Z, I, 0.5) is None


# -- Boolean constructions --------------------------------------------------------------

def test_good_rows_example():
    A = BoolMatrix([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 0, 1]])
    # column 1 is shared, others are lonely
    assert good_rows(A, [0, 1, 2], 1) == [0, 1, 2]
    assert good_rows(A, [0, 1], 2) == []


@pytest.mark.parametrize("n,k", [(8, 1), (16, 2), (16, 4), (32, 4)])
def test_ksdw_row_weights_and_reproducible(n, k):
    A, cert = ksdw_matrix(n, k, seed=7)
    assert set(A.row_weights()) == {n // (2 * k)}
    B, cert2 = ksdw_matrix(n, k, seed=7)
    assert A == B and cert == cert2
    assert cert.threshold == math.ceil(n / (6 * k))
    C, _ = ksdw_matrix(n, k, seed=8, certify=False)
    assert C != A


def test_ksdw_rejects_bad_k():
    with pytest.raises(ReductionError):
        ksdw_matrix(10, 3)


def test_certificate_with_known_matrix():
    # a permutation matrix: every row of every set is good at threshold 1
    cert = certify_good_rows(BoolMatrix.identity(6), 2)
    assert cert.threshold == 1 and cert.passed and cert.exhaustive


@pytest.mark.parametrize("n,blocks", [(8, [(3.0, 4)]), (16, [(4.0, 4)]), (32, [(5.0, 8)])])
def test_stacked_block_sizes_frozen(n, blocks):
    assert stacked_block_sizes(n) == blocks


@pytest.mark.parametrize("n", [8, 16, 32, 64])
def test_stacked_rows_bounded(n):
    A = stacked_hard_matrix(n, seed=1)
    assert A.cols == n
    assert A.rows <= n * math.log2(n)
    assert half_norm(A) > 0
