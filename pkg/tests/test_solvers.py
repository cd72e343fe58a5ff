import itertools

import numpy as np
import pytest

from qubbo.acquisition import QuboProblem
from qubbo.dataset import Dataset
from qubbo.exceptions import (
    ConfigError,
    DimensionMismatchError,
    InvalidScheduleError,
    ProblemTooLargeError,
    SchemaError,
    SpaceExhaustedError,
)
from qubbo.solvers import (
    FileExchangeAdapter,
    SamplePool,
    SolverConfig,
    random_batch,
    read_pool_csv,
    select_batch,
    solve,
    write_pool_csv,
)
from qubbo.space import DesignSpace


def random_problem(rng, n, scale=1.0):
    quadratic = {
        (i, j): float(rng.normal() * scale)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < 0.7
    }
    return QuboProblem(
        n_vars=n,
        linear=rng.normal(size=n) * scale,
        quadratic=quadratic,
        offset=float(rng.normal()),
    )


def oracle_all_energies(problem):
    """Independent evaluator: dense matrix built here, einsum contraction,
    states enumerated via itertools rather than bit shifts."""
    n = problem.n_vars
    q = np.zeros((n, n))
    q[np.arange(n), np.arange(n)] = problem.linear
    for (i, j), v in problem.quadratic.items():
        q[i, j] = v
    states = np.array(list(itertools.product([0, 1], repeat=n)), dtype=np.float64)
    return states, problem.offset + np.einsum("ni,ij,nj->n", states, q, states)


def test_exhaustive_matches_brute_force_ranking():
    rng = np.random.default_rng(2024)
    for _ in range(5):
        n = int(rng.integers(4, 11))
        problem = random_problem(rng, n)
        pool = solve(problem, SolverConfig(backend="exhaustive"), seed=0)
        assert len(pool) == 2**n
        states, energies = oracle_all_energies(problem)
        order = np.lexsort((states @ (2 ** np.arange(n - 1, -1, -1)), energies))
        np.testing.assert_allclose(pool.energies, energies[order], atol=1e-10)
        np.testing.assert_array_equal(pool.bits, states[order].astype(np.uint8))
        assert np.all(pool.multiplicities == 1)
        assert pool.metadata["complete"]


def test_exhaustive_pure_python_anchor():
    # Belt and braces: a from-scratch python evaluation of every state.
    rng = np.random.default_rng(55)
    problem = random_problem(rng, 6)
    pool = solve(problem, SolverConfig(backend="exhaustive"), seed=0)
    best = None
    for bits in itertools.product([0, 1], repeat=6):
        e = problem.offset
        for i in range(6):
            e += problem.linear[i] * bits[i]
        for (i, j), v in problem.quadratic.items():
            e += v * bits[i] * bits[j]
        if best is None or e < best[0]:
            best = (e, bits)
    assert pool.energies[0] == pytest.approx(best[0], abs=1e-10)
    assert tuple(pool.bits[0]) == best[1]


def test_exhaustive_cap_and_too_large():
    rng = np.random.default_rng(9)
    problem = random_problem(rng, 14)
    cfg = SolverConfig(backend="exhaustive", reads=10)  # cap 3000 < 2^14
    pool = solve(problem, cfg, seed=0)
    assert len(pool) == 3000
    assert not pool.metadata["complete"]
    _, energies = oracle_all_energies(problem)
    np.testing.assert_allclose(pool.energies, np.sort(energies)[:3000], atol=1e-10)
    big = QuboProblem(n_vars=31, linear=np.zeros(31), quadratic={})
    with pytest.raises(ProblemTooLargeError):
        solve(big, cfg, seed=0)


def test_tie_break_is_lexicographic():
    # Zero QUBO: every state ties at 0, so ranking must be lexicographic.
    problem = QuboProblem(n_vars=3, linear=np.zeros(3), quadratic={})
    pool = solve(problem, SolverConfig(backend="exhaustive"), seed=0)
    expected = list(itertools.product([0, 1], repeat=3))
    assert [tuple(r) for r in pool.bits] == expected
    sa = solve(problem, SolverConfig(reads=64, sweeps=5), seed=1)
    assert [tuple(r) for r in sa.bits] == sorted(tuple(r) for r in sa.bits)


def test_annealer_finds_exhaustive_optimum():
    rng = np.random.default_rng(31)
    for trial in range(3):
        problem = random_problem(rng, 12)
        exact = solve(problem, SolverConfig(backend="exhaustive"), seed=0)
        sa = solve(problem, SolverConfig(reads=300, sweeps=1000), seed=trial)
        assert sa.energies[0] == pytest.approx(exact.energies[0], abs=1e-9)
        assert int(sa.multiplicities.sum()) == 300
        # energies in the pool are re-evaluable from the problem
        np.testing.assert_allclose(sa.energies, problem.energy(sa.bits), atol=1e-12)


def test_annealer_deterministic_per_seed():
    rng = np.random.default_rng(12)
    problem = random_problem(rng, 10)
    cfg = SolverConfig(reads=50, sweeps=200)
    a = solve(problem, cfg, seed=77)
    b = solve(problem, cfg, seed=77)
    np.testing.assert_array_equal(a.bits, b.bits)
    np.testing.assert_array_equal(a.energies, b.energies)
    np.testing.assert_array_equal(a.multiplicities, b.multiplicities)


def test_annealer_schedule_validation():
    problem = QuboProblem(n_vars=2, linear=np.ones(2), quadratic={})
    with pytest.raises(InvalidScheduleError):
        solve(problem, SolverConfig(sweeps=0), seed=0)
    with pytest.raises(InvalidScheduleError):
        solve(problem, SolverConfig(beta_start=1.0, beta_end=0.5), seed=0)
    with pytest.raises(InvalidScheduleError):
        solve(problem, SolverConfig(beta_start=1.0), seed=0)
    with pytest.raises(ConfigError):
        solve(problem, SolverConfig(backend="quantum"), seed=0)
    with pytest.raises(ConfigError):
        solve(problem, SolverConfig(reads=0), seed=0)
    with pytest.raises(ConfigError):
        solve(problem, SolverConfig(backend="external"), seed=0)


def test_select_batch_screens_infeasible_and_seen():
    space = DesignSpace.from_cardinalities([29])  # residual codes 29..31
    problem = QuboProblem(n_vars=5, linear=np.zeros(5), quadratic={})
    pool = solve(problem, SolverConfig(backend="exhaustive"), seed=0)
    data = Dataset(5)
    batch, shortfall = select_batch(pool, space, data, 4)
    assert not shortfall
    # lexicographic zero-energy ranking: codes 0,1,2,3
    assert [tuple(r) for r in batch] == [
        (0, 0, 0, 0, 0),
        (0, 0, 0, 0, 1),
        (0, 0, 0, 1, 0),
        (0, 0, 0, 1, 1),
    ]
    assert np.all(space.is_feasible(batch))
    data.append(batch, np.zeros(4), loop=1)
    nxt, shortfall = select_batch(pool, space, data, 4)
    assert not shortfall
    assert [tuple(space.decode(r)) for r in nxt] == [(4,), (5,), (6,), (7,)]
    # infeasible codes 29..31 never pass the screen
    everything, shortfall = select_batch(pool, space, data, 100)
    assert shortfall
    assert len(everything) == 29 - 4
    codes = {int(space.decode(r)[0]) for r in everything}
    assert codes == set(range(4, 29))


def test_select_batch_width_mismatch():
    space = DesignSpace.from_cardinalities([4])
    pool = SamplePool(
        n_vars=3,
        bits=np.zeros((1, 3), dtype=np.uint8),
        energies=np.zeros(1),
        multiplicities=np.ones(1, dtype=np.int64),
    )
    with pytest.raises(DimensionMismatchError):
        select_batch(pool, space, Dataset(3), 1)


def test_random_batch_distinct_feasible_deterministic():
    space = DesignSpace.from_cardinalities([6, 29])
    data = Dataset(space.total_bits)
    a = random_batch(space, data, 20, seed=5)
    b = random_batch(space, data, 20, seed=5)
    np.testing.assert_array_equal(a, b)
    assert len({r.tobytes() for r in a}) == 20
    assert np.all(space.is_feasible(a))
    c = random_batch(space, data, 20, seed=6)
    assert not np.array_equal(a, c)


def test_random_batch_exhausts_space_exactly():
    space = DesignSpace.from_cardinalities([6])
    data = Dataset(space.total_bits)
    batch = random_batch(space, data, 6, seed=0)
    assert sorted(int(space.decode(r)[0]) for r in batch) == [0, 1, 2, 3, 4, 5]
    data.append(batch, np.zeros(6), loop=1)
    with pytest.raises(SpaceExhaustedError):
        random_batch(space, data, 1, seed=0)


def test_random_batch_finds_last_remaining_point():
    # 4096-point space with one unseen point left: must return exactly it.
    space = DesignSpace.from_cardinalities([16, 16, 16])
    data = Dataset(space.total_bits)
    assigns = np.array(
        [(a, b, c) for a in range(16) for b in range(16) for c in range(16)]
    )
    missing = (7, 11, 3)
    keep = ~np.all(assigns == missing, axis=1)
    data.append(space.encode(assigns[keep]), np.zeros(keep.sum()), loop=0)
    batch = random_batch(space, data, 1, seed=123)
    assert tuple(space.decode(batch[0])) == missing


def test_random_batch_uniform_frequencies():
    # Single-site space: category counts over many independent draws stay
    # within 5 sigma of the binomial expectation.
    space = DesignSpace.from_cardinalities([6])
    data = Dataset(space.total_bits)
    n_draws = 30000
    counts = np.zeros(6, dtype=int)
    for s in range(n_draws):
        row = random_batch(space, data, 1, seed=s)
        counts[int(space.decode(row[0])[0])] += 1
    expect = n_draws / 6
    bound = 5 * np.sqrt(n_draws * (1 / 6) * (5 / 6))
    assert np.all(np.abs(counts - expect) < bound), counts


def test_pool_csv_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    problem = random_problem(rng, 6)
    pool = solve(problem, SolverConfig(reads=40, sweeps=100), seed=3)
    path = tmp_path / "pool.csv"
    write_pool_csv(pool, path)
    assert path.read_text().startswith("# qubbo sample-pool schema=1\n")
    loaded = read_pool_csv(path)
    assert loaded.n_vars == pool.n_vars
    np.testing.assert_array_equal(loaded.bits, pool.bits)
    np.testing.assert_array_equal(loaded.energies, pool.energies)
    np.testing.assert_array_equal(loaded.multiplicities, pool.multiplicities)


def test_pool_csv_rejects_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,x2,energy\n0,1,0.5\n")
    with pytest.raises(SchemaError):
        read_pool_csv(path)
    path.write_text("x1,energy,multiplicity\n2,0.5,1\n")
    with pytest.raises(SchemaError):
        read_pool_csv(path)


def test_external_adapter_round_trip(tmp_path):
    rng = np.random.default_rng(17)
    problem = random_problem(rng, 8)
    reference = solve(problem, SolverConfig(backend="exhaustive", reads=1), seed=0)
    top = SamplePool(
        n_vars=8,
        bits=reference.bits[:50],
        energies=np.zeros(50),  # deliberately stale: must be recomputed
        multiplicities=np.ones(50, dtype=np.int64),
    )
    write_pool_csv(top, tmp_path / "samples.csv")
    adapter = FileExchangeAdapter(exchange_dir=tmp_path)
    cfg = SolverConfig(backend="external", adapter=adapter)
    pool = solve(problem, cfg, seed=0)
    assert (tmp_path / "problem.qubo").exists()
    np.testing.assert_allclose(pool.energies, problem.energy(pool.bits), atol=1e-12)
    np.testing.assert_array_equal(pool.bits, reference.bits[:50])
    assert pool.metadata["backend"] == "external"


def test_external_adapter_missing_response(tmp_path):
    adapter = FileExchangeAdapter(exchange_dir=tmp_path / "xchg")
    problem = QuboProblem(n_vars=2, linear=np.ones(2), quadratic={})
    with pytest.raises(FileNotFoundError):
        solve(problem, SolverConfig(backend="external", adapter=adapter), seed=0)
