import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volball import linsolve


def test_duplicate_triplets_summed():
    system = linsolve.assemble(1, [0, 0], [0, 0], [1.0, 1.0])
    assert system.matrix[0, 0] == 2.0


def test_empty_triplets():
    system = linsolve.assemble(3, [], [], [])
    assert system.matrix.nnz == 0


def test_identity_solve():
    system = linsolve.assemble(2, [0, 1], [0, 1], [1.0, 1.0])
    x = linsolve.solve(system, np.array([3.0, 5.0]))
    np.testing.assert_allclose(x, [3.0, 5.0])


def test_diagonal_solve():
    system = linsolve.assemble(2, [0, 1], [0, 1], [2.0, 4.0])
    x = linsolve.solve(system, np.array([2.0, 4.0]))
    np.testing.assert_allclose(x, [1.0, 1.0])


def test_out_of_range_triplet():
    with pytest.raises(IndexError):
        linsolve.assemble(2, [0, 2], [0, 0], [1.0, 1.0])


def test_path_graph_ramp():
    # 1D path Laplacian with endpoints pinned to 0 and 1 gives a linear ramp
    n = 11
    rows, cols, vals = [], [], []
    for i in range(n - 1):
        rows += [i, i + 1, i, i + 1]
        cols += [i, i + 1, i + 1, i]
        vals += [1.0, 1.0, -1.0, -1.0]
    system = linsolve.assemble(n, rows, cols, vals)
    system.constrain([0, n - 1], [0.0, 1.0])
    x = linsolve.solve(system, np.zeros(n))
    np.testing.assert_allclose(x, np.linspace(0, 1, n), atol=1e-10)


def _random_spd(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T + n * np.eye(n)


def test_random_spd_vs_dense_oracle():
    rng = np.random.default_rng(42)
    A = _random_spd(rng, 10)
    b = rng.normal(size=10)
    expected = np.linalg.solve(A, b)  # dense elimination oracle
    rows, cols = np.nonzero(A)
    system = linsolve.assemble(10, rows, cols, A[rows, cols])
    x = linsolve.solve(system, b)
    np.testing.assert_allclose(x, expected, atol=1e-9 * np.abs(expected).max())


def test_recover_known_solution_many():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(3, 12))
        A = _random_spd(rng, n)
        x_true = rng.normal(size=n)
        rows, cols = np.nonzero(A)
        system = linsolve.assemble(n, rows, cols, A[rows, cols])
        x = linsolve.solve(system, A @ x_true)
        assert np.linalg.norm(x - x_true) <= 1e-9 * max(np.linalg.norm(x_true), 1)


def test_energy_norm_monotone_descent():
    rng = np.random.default_rng(11)
    A = _random_spd(rng, 12)
    b = rng.normal(size=12)
    x_true = np.linalg.solve(A, b)
    iterates = []
    linsolve._pcg(__import__("scipy.sparse", fromlist=["csr_matrix"]).csr_matrix(A),
                  b, 1e-12, 10000, callback=lambda x, r: iterates.append(x))
    energies = [float((x - x_true) @ A @ (x - x_true)) for x in iterates]
    assert all(e2 <= e1 + 1e-12 for e1, e2 in zip(energies, energies[1:]))


def test_constrained_values_exact():
    rng = np.random.default_rng(5)
    A = _random_spd(rng, 8)
    rows, cols = np.nonzero(A)
    system = linsolve.assemble(8, rows, cols, A[rows, cols])
    system.constrain([2, 5], [1.5, -0.5])
    x = linsolve.solve(system, np.zeros(8))
    assert x[2] == 1.5 and x[5] == -0.5


def test_multi_rhs():
    rng = np.random.default_rng(9)
    A = _random_spd(rng, 6)
    B = rng.normal(size=(6, 3))
    rows, cols = np.nonzero(A)
    system = linsolve.assemble(6, rows, cols, A[rows, cols])
    X = linsolve.solve(system, B)
    np.testing.assert_allclose(A @ X, B, atol=1e-8)


def test_asymmetric_flagged_symmetric_raises():
    with pytest.raises(ValueError):
        linsolve.assemble(2, [0, 1], [1, 0], [1.0, 2.0], symmetric=True)


def test_nonsymmetric_solve():
    rng = np.random.default_rng(13)
    A = _random_spd(rng, 8) + 0.1 * rng.normal(size=(8, 8))
    rows, cols = np.nonzero(A)
    system = linsolve.assemble(8, rows, cols, A[rows, cols], symmetric=False)
    x_true = rng.normal(size=8)
    x = linsolve.solve(system, A @ x_true)
    np.testing.assert_allclose(x, x_true, atol=1e-7)


def test_singular_reports_iterations():
    system = linsolve.assemble(2, [0, 0, 1, 1], [0, 1, 0, 1], [1.0, 1.0, 1.0, 1.0])
    with pytest.raises(linsolve.SolverError) as exc:
        linsolve.solve(system, np.array([1.0, -1.0]))
    assert exc.value.iterations >= 1
    assert exc.value.residual > 0


def test_assembly_deterministic():
    rng = np.random.default_rng(1)
    rows = rng.integers(0, 30, size=500)
    cols = rng.integers(0, 30, size=500)
    vals = rng.normal(size=500)
    a = linsolve.assemble(30, rows, cols, vals, symmetric=False)
    b = linsolve.assemble(30, rows, cols, vals, symmetric=False)
    assert (a.matrix != b.matrix).nnz == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=9), st.integers(min_value=0, max_value=2**31))
def test_property_spd_solve(n, seed):
    rng = np.random.default_rng(seed)
    A = _random_spd(rng, n)
    x_true = rng.normal(size=n)
    rows, cols = np.nonzero(A)
    system = linsolve.assemble(n, rows, cols, A[rows, cols])
    x = linsolve.solve(system, A @ x_true)
    assert np.linalg.norm(A @ x - A @ x_true) <= 1e-8 * max(np.linalg.norm(A @ x_true), 1e-9)
