import numpy as np
import pytest

from benders_atoms.cuts import CutPool
from benders_atoms.errors import SizeError
from benders_atoms.milp import OriginalProblem
from benders_atoms.qubo import (
    BinaryEncoding,
    LayoutEntry,
    PenaltyWeights,
    QuboModel,
    build_qubo,
    compute_bounds,
    decode,
)
from benders_atoms.samplers import (
    AnnealSampler,
    AnnealSchedule,
    ExactSampler,
    SampleSet,
    SamplerConfig,
    exact_minimize,
    get_sampler,
)


def bare_model(Q, constant=0.0):
    Q = np.asarray(Q, dtype=float)
    t = Q.shape[0]
    layout = tuple(
        LayoutEntry("x", i, BinaryEncoding(P=1, D=0, N=0, offset=i)) for i in range(t)
    )
    layout = layout + (LayoutEntry("phi", 0, BinaryEncoding(P=0, D=0, N=0, offset=t)),)
    return QuboModel(
        Q=(Q + Q.T) / 2.0,
        constant=constant,
        t=t,
        n=t,
        layout=layout,
        c_x=np.zeros(t),
        eq_coeffs=np.zeros((0, t)),
        eq_consts=np.zeros(0),
        eq_kinds=(),
    )


def test_exact_minimize_flat_landscape():
    model = bare_model(np.zeros((3, 3)), constant=1.5)
    bits, cost = exact_minimize(model)
    assert np.array_equal(bits, np.zeros(3))
    assert cost == pytest.approx(1.5)


def test_exact_minimize_positive_diagonal():
    model = bare_model(np.diag([1.0, 2.0, 3.0]))
    bits, cost = exact_minimize(model)
    assert np.array_equal(bits, np.zeros(3))
    assert cost == 0.0


def test_exact_minimize_single_bit():
    model = bare_model([[-1.0]], constant=0.25)
    bits, cost = exact_minimize(model)
    assert np.array_equal(bits, [1.0])
    assert cost == pytest.approx(-0.75)


def test_exact_minimize_lex_tiebreak():
    # two degenerate minima: bits (1,0) and (0,1); lexicographic prefers (0,1)
    Q = np.array([[-1.0, 1.0], [1.0, -1.0]])
    model = bare_model(Q)
    bits, cost = exact_minimize(model)
    assert cost == pytest.approx(-1.0)
    assert np.array_equal(bits, [0.0, 1.0])


def test_exact_minimize_size_guard():
    with pytest.raises(SizeError):
        exact_minimize(bare_model(np.zeros((25, 25))))


def test_exact_sampler_contract(poc):
    bounds = compute_bounds(poc, None)
    model = build_qubo(poc, None, PenaltyWeights(), bounds, eps=0.5)
    ss = ExactSampler().sample(model, SamplerConfig(shots=123, seed=0))
    assert ss.shots == 123
    assert len(ss.entries) == 1
    assert ss.entries[0].multiplicity == 123
    bits, cost = exact_minimize(model)
    assert np.array_equal(ss.best.bits, bits)
    assert ss.best.cost == cost


def test_poc_iteration2_decodes_to_optimum(poc):
    pool = CutPool()
    pool.add_optimality(np.array([5, 0, 0, 6, 3, 3, 0, 0], dtype=float), poc)
    bounds = compute_bounds(poc, pool)
    model = build_qubo(poc, pool, PenaltyWeights(), bounds, eps=0.5)
    bits, _cost = exact_minimize(model)
    d = decode(model, bits)
    assert np.array_equal(d.x, [1.0, 0.0])
    assert d.phi == pytest.approx(17.0)


def test_sampleset_sorted_and_costs(poc):
    bounds = compute_bounds(poc, None)
    model = build_qubo(poc, None, PenaltyWeights(), bounds, eps=0.5)
    ss = AnnealSampler().sample(model, SamplerConfig(shots=64, seed=5))
    assert ss.shots == 64
    assert sum(e.multiplicity for e in ss.entries) == 64
    costs = [e.cost for e in ss.entries]
    assert costs == sorted(costs)
    for e in ss.entries:
        assert e.cost == pytest.approx(model.cost(e.bits), abs=1e-9)
    # ties sorted lexicographically
    for a, b in zip(ss.entries, ss.entries[1:]):
        if a.cost == b.cost:
            assert a.key() < b.key()


def test_anneal_oracle_dominance(poc):
    bounds = compute_bounds(poc, None)
    model = build_qubo(poc, None, PenaltyWeights(), bounds, eps=0.5)
    _, best_cost = exact_minimize(model)
    ss = AnnealSampler().sample(model, SamplerConfig(shots=100, seed=7))
    assert ss.best.cost >= best_cost - 1e-9


def test_anneal_dominant_bit():
    Q = np.diag([-10.0, 0.1, 0.1])
    model = bare_model(Q)
    ss = AnnealSampler().sample(model, SamplerConfig(shots=100, seed=3))
    hits = sum(e.multiplicity for e in ss.entries if e.bits[0] == 1.0)
    assert hits >= 90


def test_anneal_zero_schedule_returns_initial_states():
    model = bare_model(np.diag([-5.0, -5.0]))
    cfg = SamplerConfig(shots=200, seed=11, schedule=AnnealSchedule(sweeps=0))
    ss = AnnealSampler().sample(model, cfg)
    # with no moves the states stay uniform-ish random, so all 4 patterns appear
    assert len(ss.entries) == 4


def test_anneal_deterministic():
    model = bare_model(np.array([[-1.0, 0.4], [0.4, -0.2]]))
    cfg = SamplerConfig(shots=50, seed=9)
    a = AnnealSampler().sample(model, cfg)
    b = AnnealSampler().sample(model, cfg)
    assert len(a.entries) == len(b.entries)
    for x, y in zip(a.entries, b.entries):
        assert np.array_equal(x.bits, y.bits)
        assert x.multiplicity == y.multiplicity


def test_anneal_two_bit_convergence_statistics():
    # unique minimizer (1,0) at -3, runner-up (1,1) at -2: gap 1
    Q = np.array([[-3.0, 1.0], [1.0, -1.0]])
    model = bare_model(Q)
    bits, _ = exact_minimize(model)
    ss = AnnealSampler().sample(model, SamplerConfig(shots=100, seed=17))
    at_min = sum(
        e.multiplicity for e in ss.entries if np.array_equal(e.bits, bits)
    )
    assert at_min >= 95


def test_get_sampler_names():
    assert get_sampler("exact").name == "exact"
    assert get_sampler("anneal").name == "anneal"
    with pytest.raises(ValueError):
        get_sampler("quantum-teleporter")


def test_sampleset_jsonable(poc):
    bounds = compute_bounds(poc, None)
    model = build_qubo(poc, None, PenaltyWeights(), bounds, eps=0.5)
    ss = ExactSampler().sample(model, SamplerConfig(shots=10, seed=0))
    payload = ss.to_jsonable()
    assert payload["shots"] == 10
    bitstring, mult, cost = payload["entries"][0]
    assert len(bitstring) == model.t and mult == 10
