import numpy as np
import pytest

from stcomp.algorithms import (
    AlgorithmState,
    StepSizes,
    check_observers,
    dual_sum,
    init_state,
    step_consensus_dc,
    step_consensus_oc,
    step_dpd_baseline,
    step_dpd_dc,
    step_dpd_fc,
    step_dpd_oc,
)
from stcomp.compressors import CompressorSpec
from stcomp.config import RunConfig
from stcomp.errors import ConfigError, ObserverConsistencyError
from stcomp.graph import build_ring
from stcomp.objectives import make_least_squares
from stcomp.runner import run

IDENTITY = CompressorSpec("identity")
SCALAR = CompressorSpec("scalarization")


def _iterate(step, state, rounds):
    for _ in range(rounds):
        state = step(state)
    return state


def test_dc_identity_preserves_average():
    g = build_ring(6)
    x = np.random.default_rng(0).standard_normal((6, 3))
    s = _iterate(lambda s: step_consensus_dc(s, g, IDENTITY, 0.1), init_state("consensus_dc", x), 50)
    np.testing.assert_allclose(s.x.mean(axis=0), x.mean(axis=0), atol=1e-14)


def test_dc_equal_rows_fixed_point():
    x = np.tile([1.0, -2.0, 3.0], (5, 1))
    for spec in (SCALAR, CompressorSpec("topk", k=1), CompressorSpec("uniform_quantizer")):
        s = step_consensus_dc(init_state("consensus_dc", x), build_ring(5), spec, 0.3)
        np.testing.assert_array_equal(s.x, x)


def test_dc_scalarization_reaches_consensus():
    x = np.random.default_rng(1).standard_normal((3, 4))
    s = _iterate(lambda s: step_consensus_dc(s, build_ring(3), SCALAR, 0.3), init_state("consensus_dc", x), 500)
    assert np.max(np.linalg.norm(s.x - s.x.mean(axis=0), axis=1)) < 1e-6


def test_oc_identity_consensus():
    x = np.random.default_rng(2).standard_normal((3, 2))
    s = _iterate(lambda s: step_consensus_oc(s, build_ring(3), IDENTITY, 0.1, 1.0), init_state("consensus_oc", x),
                 2000)
    assert np.max(np.linalg.norm(s.x - s.x.mean(axis=0), axis=1)) < 1e-6


def test_oc_identity_observers_lag_one_round():
    g = build_ring(4)
    s = init_state("consensus_oc", np.random.default_rng(3).standard_normal((4, 2)))
    for _ in range(5):
        prev = s.x
        s = step_consensus_oc(s, g, IDENTITY, 0.1, 1.0)
        np.testing.assert_array_equal(s.observers[np.arange(4), np.arange(4)], prev)


def test_oc_topk_consensus():
    g = build_ring(10)
    x = np.random.default_rng(4).standard_normal((10, 2))
    s = _iterate(lambda s: step_consensus_oc(s, g, CompressorSpec("topk", k=1), 0.05, 1.0),
                 init_state("consensus_oc", x), 6000)
    assert np.max(np.linalg.norm(s.x - s.x.mean(axis=0), axis=1)) < 1e-6
    check_observers(s, g)


def test_observer_tamper_detected():
    g = build_ring(4)
    s = step_consensus_oc(init_state("consensus_oc", np.ones((4, 2))), g, IDENTITY, 0.1, 1.0)
    obs = s.observers.copy()
    obs[1, 0, 0] = np.nextafter(obs[1, 0, 0], 10)
    with pytest.raises(ObserverConsistencyError):
        check_observers(AlgorithmState(x=s.x, observers=obs, round=s.round), g)


def _ls(n=10, d=5, seed=0):
    return make_least_squares(n, d, np.random.default_rng(seed))


def test_dpd_dc_equilibrium_is_fixed():
    obj, g, steps = _ls(), build_ring(10), StepSizes()
    s_star = obj.optimum()
    x = np.tile(s_star, (10, 1))
    v = -steps.eta * obj.gradients(x) / steps.beta
    for spec in (IDENTITY, SCALAR):
        s = AlgorithmState(x=x, v=v)
        for _ in range(20):
            s = step_dpd_dc(s, g, spec, obj, steps)
        assert np.max(np.abs(s.x - x)) <= 1e-12
        assert np.max(np.abs(s.v - v)) <= 1e-12


@pytest.mark.parametrize("name,step", [
    ("dpd_dc", lambda s, g, o, st: step_dpd_dc(s, g, SCALAR, o, st)),
    ("dpd_oc", lambda s, g, o, st: step_dpd_oc(s, g, CompressorSpec("topk", k=2), o, st)),
    ("dpd_fc", lambda s, g, o, st: step_dpd_fc(s, g, SCALAR, o, st)),
    ("dpd_baseline", lambda s, g, o, st: step_dpd_baseline(s, g, o, st)),
])
def test_dual_sum_stays_zero(name, step):
    obj, g, steps = _ls(), build_ring(10), StepSizes()
    s = init_state(name, np.random.default_rng(5).standard_normal((10, 5)))
    for _ in range(300):
        s = step(s, g, obj, steps)
        assert np.linalg.norm(dual_sum(s)) <= 1e-9


def test_fc_identity_tracks_baseline():
    # with an exact compressor sigma - z = L sigma is invariant, so w = L x
    obj, g, steps = _ls(), build_ring(10), StepSizes(kappa0=1.0)
    x0 = np.random.default_rng(6).standard_normal((10, 5))
    a, b = init_state("dpd_fc", x0), init_state("dpd_baseline", x0)
    for _ in range(2000):
        prev = a.x
        a = step_dpd_fc(a, g, IDENTITY, obj, steps)
        b = step_dpd_baseline(b, g, obj, steps)
        assert np.max(np.abs(a.x - b.x)) < 1e-10
        np.testing.assert_array_equal(a.sigma, prev)


def test_step_sizes_validation():
    with pytest.raises(ConfigError) as err:
        StepSizes(alpha=0.0)
    assert err.value.path == "steps.alpha"
    assert StepSizes().halved().kappa == 0.025


def _cfg(**kw):
    base = {"algorithm": "dpd_oc", "graph": {"kind": "ring", "n": 10},
            "objective": {"kind": "least_squares", "d": 5}, "compressor": {"kind": "uniform_quantizer"},
            "seed": 1, "max_rounds": 3000}
    base.update(kw)
    return RunConfig.from_dict(base)


def test_run_trace_decreases():
    rec = run(_cfg())
    sub = rec.trace.suboptimality
    assert sub[-1] < 1e-2 * sub[0]
    assert rec.bytes_per_round == 9
    assert rec.trace.cumulative_bytes[-1] == 9 * rec.trace.rounds[-1]


def test_run_without_target_runs_all_rounds():
    rec = run(_cfg(target_accuracy=None, max_rounds=250))
    assert rec.outcome.status == "exhausted"
    assert rec.trace.rounds[-1] == 250
    assert len(rec.trace) == 251


def test_run_is_deterministic():
    a, b = run(_cfg(compressor={"kind": "unbiased_lbits", "seed": 4}, max_rounds=400)), \
        run(_cfg(compressor={"kind": "unbiased_lbits", "seed": 4}, max_rounds=400))
    assert a.trace.to_csv() == b.trace.to_csv()


def test_run_divergence_retries_then_recovers():
    rec = run(_cfg(steps={"kappa": 1.5}, max_rounds=2000, target_accuracy=None))
    assert rec.retries
    assert rec.outcome.status == "exhausted"
    assert rec.notes["effective_steps"]["kappa"] < 1.5


def test_run_divergence_exhausts_budget():
    rec = run(_cfg(steps={"kappa": 50.0}, retry_halvings=1, max_rounds=500))
    assert rec.outcome.status == "diverged"
    assert len(rec.retries) == 2
    assert len(rec.trace) >= 1


def test_direct_compression_gate():
    with pytest.raises(ConfigError):
        run(_cfg(algorithm="dpd_dc", compressor={"kind": "topk", "k": 2}))
    with pytest.raises(ConfigError):
        run(_cfg(algorithm="dpd_dc", compressor={"kind": "unbiased_lbits", "seed": 1},
                 allow_unverified_delta=True))
    rec = run(_cfg(algorithm="dpd_dc", compressor={"kind": "topk", "k": 2}, allow_unverified_delta=True,
                   max_rounds=10))
    assert rec.notes["delta_hat"] > 0


def test_run_consensus_without_objective():
    cfg = RunConfig.from_dict({"algorithm": "consensus_oc", "graph": {"kind": "ring", "n": 6}, "dimension": 3,
                               "compressor": {"kind": "topk", "k": 1}, "steps": {"alpha": 0.1, "kappa0": 1.0},
                               "target_accuracy": 1e-8, "max_rounds": 20000})
    rec = run(cfg, verify_observers=True)
    assert rec.outcome.status == "converged"
    assert rec.trace.suboptimality is None
