import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from mpkin.linalg import (
    JacobianBuilder,
    PatternError,
    ProductPlan,
    SparseJacobian,
    SparseLU,
    pattern_from_coo,
    sparse_lu_factor,
    sparse_lu_solve,
)


def test_builder_freezes_and_rejects_late_registration():
    jb = JacobianBuilder(3)
    jb.register([0, 1], [1, 2])
    jb.register([0], [1])
    pat = jb.freeze(include_diagonal=True)
    assert pat.nnz == 5
    assert pat.contains([0, 2], [1, 0]).tolist() == [True, False]
    with pytest.raises(PatternError):
        jb.register([0], [0])
    with pytest.raises(PatternError):
        JacobianBuilder(2).register([2], [0])
    with pytest.raises(PatternError):
        pat.positions([2], [0])


def test_accumulate_into_pattern():
    pat = pattern_from_coo(2, 2, [0, 1, 1], [0, 0, 1])
    jac = SparseJacobian(pat)
    jac.accumulate(pat.positions([1, 1, 0], [0, 0, 0]), np.array([1.0, 2.0, 5.0]))
    assert np.array_equal(jac.toarray(), [[5.0, 0.0], [3.0, 0.0]])


def test_identity_and_two_by_two():
    ident = sp.identity(4, format="csc")
    b = np.arange(1.0, 5.0)
    assert np.array_equal(sparse_lu_solve(sparse_lu_factor(ident), b), b)
    m = sp.csc_matrix(np.array([[2.0, 1.0], [0.0, 3.0]]))
    x = sparse_lu_solve(sparse_lu_factor(m), np.array([1.0, 2.0]))
    assert np.allclose(x, [1 / 6, 2 / 3], rtol=1e-15)


@pytest.mark.parametrize("backend", ["kernel", "superlu"])
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 31), density=st.floats(0.02, 0.2))
def test_random_system_against_dense(backend, seed, density):
    rng = np.random.default_rng(seed)
    n = 50
    a = sp.random(n, n, density=density, random_state=rng, format="csc")
    m = (a @ a.T + sp.identity(n) * n * 0.1).tocsc()  # SPD shift
    c = m.tocoo()
    lu = SparseLU(pattern_from_coo(n, n, c.row, c.col), backend=backend)
    data = np.zeros(lu.pattern.nnz)
    np.add.at(data, lu.pattern.positions(c.row, c.col), c.data)
    b = rng.standard_normal(n)
    x = lu.factor(data).solve(b)
    assert np.linalg.norm(m @ x - b) <= 1e-10 * np.linalg.norm(b)
    assert np.allclose(x, np.linalg.solve(m.toarray(), b), rtol=1e-9, atol=1e-12)


def test_symbolic_analysis_is_reused():
    rng = np.random.default_rng(5)
    m = (sp.random(20, 20, density=0.15, random_state=rng) + 4 * sp.identity(20)).tocsc()
    fact = sparse_lu_factor(m)
    again = sparse_lu_factor(m * 2.0, symbolic=fact)
    assert again is fact
    if fact.backend == "kernel":
        assert fact.n_symbolic == 1 and fact.n_numeric == 2
    b = rng.standard_normal(20)
    assert np.allclose((m * 2.0) @ again.solve(b), b)


def test_factor_shifted_matches_explicit():
    rng = np.random.default_rng(9)
    j = (sp.random(15, 15, density=0.2, random_state=rng) - sp.identity(15)).tocsc()
    c = j.tocoo()
    rows = np.concatenate([c.row, np.arange(15)])
    cols = np.concatenate([c.col, np.arange(15)])
    pat = pattern_from_coo(15, 15, rows, cols)
    data = np.zeros(pat.nnz)
    np.add.at(data, pat.positions(c.row, c.col), c.data)
    b = rng.standard_normal(15)
    x = SparseLU(pat).factor_shifted(data, 0.3).solve(b)
    assert np.allclose((sp.identity(15) - 0.3 * j) @ x, b, rtol=1e-12)


def test_product_plan_matches_dense():
    rng = np.random.default_rng(2)
    a = sp.random(6, 3, density=0.5, random_state=rng, format="csc")
    b = sp.random(3, 6, density=0.5, random_state=rng, format="csc")
    ca, cb = a.tocoo(), b.tocoo()
    pa = pattern_from_coo(6, 3, ca.row, ca.col)
    pb = pattern_from_coo(3, 6, cb.row, cb.col)
    rows, cols = np.nonzero(np.ones((6, 6)))
    target = pattern_from_coo(6, 6, rows, cols)
    out = np.zeros(target.nnz)
    ad, bd = np.zeros(pa.nnz), np.zeros(pb.nnz)
    np.add.at(ad, pa.positions(ca.row, ca.col), ca.data)
    np.add.at(bd, pb.positions(cb.row, cb.col), cb.data)
    ProductPlan(target, pa, pb).apply(out, ad, bd)
    assert np.allclose(target.matrix(out).toarray(), (a @ b).toarray())
    with pytest.raises(ValueError):
        ProductPlan(target, pb, pb)
