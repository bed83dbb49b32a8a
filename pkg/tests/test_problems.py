import io
import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xylab.errors import CapacityError, ParseError, ValidationError
from xylab.problems import (
    ProblemInstance,
    adjacency_matrix,
    bit_matrix,
    build_problem,
    embed_graph_partition,
    embed_portfolio,
    embed_sparsest_subgraph,
    exact_spectrum_bounds,
    ingest_prices,
    ingest_prices_text,
    load_instance,
    random_graph,
    read_graph,
    save_instance,
    weight_indices,
    write_graph,
)


def all_bits(n):
    return [np.array(b) for b in itertools.product([0, 1], repeat=n)]


def portfolio_cost(p, C, q, x):
    return -p @ x + q * x @ C @ x


def cut_size(A, x):
    return (1 - x) @ A @ x


def induced_edges(A, x):
    return x @ A @ x / 2


# portfolio ---------------------------------------------------------------

def test_single_asset_expansion():
    inst = embed_portfolio([1.0], [[0.0]], q=0.0)
    assert inst.h == {0: 0.5}
    assert inst.const_term == -0.5


def test_diagonal_free_z_coefficients():
    rng = np.random.default_rng(4)
    n = 5
    p = rng.normal(size=n)
    C = rng.normal(size=(n, n))
    C = C + C.T
    np.fill_diagonal(C, 0)
    inst = embed_portfolio(p, C, q=1.0, k=2)
    for i in range(n):
        assert math.isclose(inst.h.get(i, 0.0), 0.5 * (p[i] - C[i].sum()), abs_tol=1e-12)


def test_portfolio_brute_force_six_assets():
    rng = np.random.default_rng(11)
    n, q = 6, 0.8
    p = rng.normal(size=n)
    M = rng.normal(size=(n, n))
    C = M @ M.T
    inst = embed_portfolio(p, C, q, k=3)
    for idx, x in enumerate(all_bits(n)):
        assert math.isclose(inst.energies(np.array([idx]))[0], portfolio_cost(p, C, q, x), abs_tol=1e-9)


def test_portfolio_rejects_asymmetric_covariance():
    with pytest.raises(ValidationError):
        embed_portfolio([0.1, 0.2], [[1.0, 0.5], [0.4, 1.0]], k=1)
    with pytest.raises(ValidationError):
        embed_portfolio([0.1, 0.2], np.eye(2), q=-1.0, k=1)


# graph problems ----------------------------------------------------------

def test_single_edge_partition():
    inst = embed_graph_partition([(0, 1)], 2)
    assert inst.const_term == 0.5 and inst.J == {(0, 1): -0.5}
    np.testing.assert_allclose(inst.energies(), [0, 1, 1, 0])


def test_partition_brute_force_reg3():
    n = 8
    edges = random_graph("Reg3", n, seed=2)
    A = adjacency_matrix(edges, n)
    inst = embed_graph_partition(edges, n)
    for idx, x in enumerate(all_bits(n)):
        assert inst.energies(np.array([idx]))[0] == pytest.approx(cut_size(A, x), abs=1e-9)
    assert inst.h == {}  # no single-qubit part


def test_partition_of_k4_is_degenerate():
    bounds = exact_spectrum_bounds(embed_graph_partition(random_graph("Reg3", 4, seed=0), 4))
    assert bounds.e_min == bounds.e_max == 4 and bounds.degenerate


def test_partition_requires_even_n():
    with pytest.raises(ValidationError):
        embed_graph_partition([(0, 1), (1, 2), (0, 2)], 3)


def test_empty_graph():
    inst = embed_graph_partition([], 4)
    assert not inst.h and not inst.J and inst.const_term == 0
    b = exact_spectrum_bounds(embed_sparsest_subgraph([], 6, 3))
    assert b.e_min == b.e_max == 0


def test_sparsest_single_edge():
    inst = embed_sparsest_subgraph([(0, 1)], 2, 1)
    assert inst.energy([1, 1]) == 1 and inst.energy([0, 1]) == 0


def test_sparsest_four_cycle():
    inst = embed_sparsest_subgraph([(0, 1), (1, 2), (2, 3), (0, 3)], 4, 2)
    b = exact_spectrum_bounds(inst)
    assert b.e_min == 0
    assert sorted(b.minimizer_bits()) == ["0101", "1010"]


def test_sparsest_reg3_feasible_states():
    n = 8
    edges = random_graph("Reg3", n, seed=5)
    A = adjacency_matrix(edges, n)
    inst = embed_sparsest_subgraph(edges, n, 4)
    idx = weight_indices(n, 4)
    assert len(idx) == math.comb(8, 4)
    X = bit_matrix(n, idx).astype(float)
    np.testing.assert_allclose(inst.energies(idx), np.einsum("bi,ij,bj->b", X, A, X) / 2, atol=1e-9)


def test_adjacency_matrix_input():
    A = np.array([[0, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 1], [0, 0, 1, 0]])
    assert embed_sparsest_subgraph(A).J == embed_sparsest_subgraph([(0, 1), (1, 2), (2, 3)], 4).J
    with pytest.raises(ValidationError):
        embed_sparsest_subgraph(np.array([[1, 0], [0, 0]]))


def test_edge_list_validation():
    with pytest.raises(ValidationError):
        embed_sparsest_subgraph([(0, 0)], 3)
    with pytest.raises(ValidationError):
        embed_sparsest_subgraph([(0, 1), (1, 0)], 3)
    with pytest.raises(ValidationError):
        embed_sparsest_subgraph([(0, 5)], 3)


@given(st.integers(4, 9), st.integers(0, 10_000), st.data())
def test_graph_energies_match_cost(n, seed, data):
    kind = data.draw(st.sampled_from(["partition", "sparsest"]))
    if kind == "partition" and n % 2:
        n += 1
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(n), 2))
    edges = [pairs[i] for i in rng.choice(len(pairs), size=min(len(pairs), n), replace=False)]
    A = adjacency_matrix(edges, n).astype(float)
    if kind == "partition":
        inst, cost = embed_graph_partition(edges, n), lambda x: cut_size(A, x)
    else:
        inst, cost = embed_sparsest_subgraph(edges, n), lambda x: induced_edges(A, x)
    X = bit_matrix(n).astype(float)
    want = np.array([cost(x) for x in X])
    np.testing.assert_allclose(inst.energies(), want, atol=1e-9)


def test_dense_diagonal_matches_energies():
    inst = build_problem("portfolio", 5, seed=3)
    M = inst.to_dense()
    np.testing.assert_allclose(np.diag(M).real, inst.energies(), atol=1e-12)
    assert np.count_nonzero(M - np.diag(np.diag(M))) == 0


def test_partition_has_no_z_projection():
    inst = build_problem("partition", 8, graph="Reg3", seed=1)
    assert not inst.z_projection().h


# instance model ----------------------------------------------------------

def test_instance_validation():
    with pytest.raises(ValidationError):
        ProblemInstance(4, 0)
    with pytest.raises(ValidationError):
        ProblemInstance(4, 4)
    with pytest.raises(ValidationError):
        ProblemInstance(4, 2, h={5: 1.0})
    with pytest.raises(ValidationError):
        ProblemInstance(4, 2, J={(1, 1): 1.0})


def test_instance_json_round_trip(tmp_path):
    inst = build_problem("sparsest", 6, graph="Rnd2n", seed=9)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    again = load_instance(path)
    assert again == inst
    np.testing.assert_array_equal(again.energies(), inst.energies())


def test_instance_json_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 4,\n "k": }')
    with pytest.raises(ParseError, match="line 2"):
        load_instance(path)
    path.write_text('{"k": 2}')
    with pytest.raises(ParseError):
        load_instance(path)


# spectrum ----------------------------------------------------------------

def test_spectrum_bounds_portfolio_vs_full_enumeration():
    inst = build_problem("portfolio", 6, seed=7, k=2)
    energies = inst.energies()
    weights = np.array([bin(i).count("1") for i in range(64)])
    feas = energies[weights == 2]
    b = exact_spectrum_bounds(inst)
    assert b.e_min == feas.min() and b.e_max == feas.max()
    assert all(weights[m] == 2 for m in b.minimizers)


def test_spectrum_capacity():
    with pytest.raises(CapacityError):
        exact_spectrum_bounds(ProblemInstance(21, 10, h={0: 1.0}))


# random graphs -----------------------------------------------------------

def test_reg3_on_four_vertices_is_k4():
    assert random_graph("Reg3", 4, seed=123) == list(itertools.combinations(range(4), 2))


@pytest.mark.parametrize("seed", range(5))
def test_reg3_degrees(seed):
    edges = random_graph("reg3", 10, seed)
    deg = np.bincount(np.array(edges).ravel(), minlength=10)
    assert np.all(deg == 3) and len(set(edges)) == 15


def test_rnd2n_edges():
    edges = random_graph("Rnd2n", 8, seed=0)
    assert len(edges) == 16 == len(set(edges))
    assert all(u < v for u, v in edges)


def test_random_graph_deterministic():
    assert random_graph("Rnd2n", 9, 42) == random_graph("Rnd2n", 9, 42)
    assert random_graph("Reg3", 8, 42) == random_graph("Reg3", 8, 42)


def test_random_graph_infeasible():
    with pytest.raises(ValidationError):
        random_graph("Reg3", 5, 0)
    with pytest.raises(ValidationError):
        random_graph("Rnd2n", 4, 0)
    with pytest.raises(ValidationError):
        random_graph("grid", 4, 0)


def test_graph_file_round_trip(tmp_path):
    edges = random_graph("Rnd2n", 7, 1)
    path = tmp_path / "g.txt"
    write_graph(edges, path, "demo")
    n, again = read_graph(path)
    assert again == edges and n == max(max(e) for e in edges) + 1


def test_graph_file_errors(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("# comment\n0 1\n1 x\n")
    with pytest.raises(ParseError, match="line 3"):
        read_graph(path)
    path.write_text("0 1 2\n")
    with pytest.raises(ParseError, match="line 1"):
        read_graph(path)
    path.write_text("# n = 6\n0 1\n")
    assert read_graph(path)[0] == 6


# prices ------------------------------------------------------------------

def test_two_day_month():
    data = ingest_prices_text("date,ticker,close\n2024-03-01,AAA,100\n2024-03-04,AAA,110\n")
    np.testing.assert_allclose(data.returns["2024-03"], [0.10])
    np.testing.assert_allclose(data.covariance["2024-03"], [[0.0]])


def test_constant_prices():
    rows = ["date,ticker,close"] + [f"2024-05-{d:02d},{t},50" for d in (1, 2, 3) for t in "AB"]
    data = ingest_prices_text("\n".join(rows))
    np.testing.assert_array_equal(data.returns["2024-05"], [0, 0])
    np.testing.assert_array_equal(data.covariance["2024-05"], np.zeros((2, 2)))


def test_hand_computed_covariance():
    prices = {"A": [10, 11, 12.1, 11], "B": [20, 19, 21, 22], "C": [5, 5.5, 5.5, 6]}
    days = ["2023-07-03", "2023-07-05", "2023-07-06", "2023-07-07"]
    text = "date,ticker,close\n" + "\n".join(
        f"{d},{t},{prices[t][i]}" for i, d in enumerate(days) for t in prices)
    data = ingest_prices_text(text)
    # plain-python oracle
    rets = {t: [(v[i] - v[i - 1]) / v[i - 1] for i in range(1, 4)] for t, v in prices.items()}
    mean = {t: sum(r) / 3 for t, r in rets.items()}
    for a, ta in enumerate("ABC"):
        assert data.returns["2023-07"][a] == pytest.approx(mean[ta], abs=1e-15)
        for b, tb in enumerate("ABC"):
            cov = sum((rets[ta][i] - mean[ta]) * (rets[tb][i] - mean[tb]) for i in range(3)) / 3
            assert data.covariance["2023-07"][a, b] == pytest.approx(cov, abs=1e-15)
    assert np.linalg.eigvalsh(data.covariance["2023-07"]).min() > -1e-10


def test_missing_days_and_short_months():
    text = ("date,ticker,close\n2024-01-02,A,1\n2024-01-03,A,2\n2024-01-02,B,1\n2024-01-03,B,1\n"
            "2024-01-04,A,3\n2024-02-01,A,1\n2024-02-01,B,1\n")
    data = ingest_prices_text(text)
    assert data.months == ["2024-01"]
    assert any("2024-01-04" in w for w in data.warnings)
    assert any("2024-02" in w for w in data.warnings)


@pytest.mark.parametrize("bad, line", [
    ("date,ticker,close\n2024-01-02,A,1\n2024-13-03,A,2\n", 3),
    ("date,ticker,close\n2024-01-02,A\n", 2),
    ("date,ticker,close\n2024-01-02,A,-4\n", 2),
    ("date,ticker,close\n2024-01-02,A,1\n2024-01-02,A,2\n", 3),
    ("when,ticker,close\n", 1),
])
def test_malformed_rows(bad, line):
    with pytest.raises(ParseError, match=f"line {line}"):
        ingest_prices(io.StringIO(bad))


def test_top_ticker_selection_and_instance():
    rows = ["date,ticker,close"]
    series = {"B": [1, 2], "A": [1, 2], "C": [1, 1.5], "D": [1, 0.5]}
    for t, v in series.items():
        rows += [f"2024-06-03,{t},{v[0]}", f"2024-06-04,{t},{v[1]}"]
    data = ingest_prices_text("\n".join(rows))
    assert data.top_tickers(3) == ["A", "B", "C"]  # A and B tie; names break it
    inst = data.instance("2024-06", 3, k=1)
    assert inst.n == 3 and inst.k == 1 and "A,B,C" in inst.label
    with pytest.raises(ValidationError):
        data.instance("2024-07", 3)
    json.dumps(data.to_dict())


@given(st.integers(0, 2**32 - 1))
def test_covariance_is_psd(seed):
    rng = np.random.default_rng(seed)
    days = [f"2022-02-{d:02d}" for d in range(1, 12)]
    rows = ["date,ticker,close"]
    for t in "ABCD":
        price = 100.0
        for d in days:
            price *= float(np.exp(rng.normal(0, 0.05)))
            rows.append(f"{d},{t},{price!r}")
    cov = ingest_prices_text("\n".join(rows)).covariance["2022-02"]
    np.testing.assert_allclose(cov, cov.T, atol=0)
    assert np.linalg.eigvalsh(cov).min() > -1e-10
