import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from membandit.adversaries import Bernoulli, gen_shifting_phases
from membandit.cli import main
from membandit.core import MatrixRewardModel, RngStream, RunTrace, play
from membandit.flat import FlatPolicy
from membandit.harness import (
    ConfigError,
    ExperimentConfig,
    PolicyConfig,
    build_policy,
    curves_csv,
    default_checkpoints,
    doubling_stages,
    doubling_wrap,
    run_experiment,
    shifting_benchmark,
    shifting_regret,
    theoretical_bound,
    weak_benchmark,
    weak_regret,
)
from membandit.harness.bounds import BOUND_KINDS

from .oracles import brute_force_shifting


def _trace(arms, model):
    arms = np.asarray(arms)
    rewards = np.array([model.reward(int(a), t + 1) for t, a in enumerate(arms)])
    return RunTrace(arms, rewards, 0)


def test_weak_regret_examples():
    m = MatrixRewardModel([[1, 0], [1, 0]])
    np.testing.assert_array_equal(weak_regret(_trace([1, 1], m), m, [1, 2]), [1, 2])
    np.testing.assert_array_equal(weak_regret(_trace([0, 0], m), m, [1, 2]), [0, 0])


def test_weak_benchmark_is_prefix_best():
    m = MatrixRewardModel([[1, 0], [0, 1], [0, 1]])
    np.testing.assert_array_equal(weak_benchmark(m, [1, 2, 3]), [1, 1, 2])


def test_shifting_benchmark_example():
    m = MatrixRewardModel([[1, 0], [0, 1], [1, 0]])
    assert [shifting_benchmark(m, V)[-1] for V in (1, 2, 3)] == [2, 2, 3]


def test_shifting_benchmark_phases_collect_everything():
    m = gen_shifting_phases(16, 4, 10, 500)
    assert shifting_benchmark(m, 10)[-1] == 500


_small = st.integers(1, 4).flatmap(
    lambda K: arrays(np.float64, st.tuples(st.integers(1, 7), st.just(K)),
                     elements=st.sampled_from([0.0, 0.25, 0.5, 1.0])))


@settings(max_examples=60, deadline=None)
@given(_small, st.integers(1, 4))
def test_shifting_dp_matches_brute_force(R, V):
    m = MatrixRewardModel(R)
    cp = np.arange(1, m.T + 1)
    got = shifting_benchmark(m, V, cp)
    want = [brute_force_shifting(R[:t], V) for t in cp]
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 60), st.integers(1, 6)),
              elements=st.floats(0, 1)), st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_cross_oracle_identities(R, seed, V):
    m = MatrixRewardModel(R)
    cp = default_checkpoints(m.T, linear=7)
    arms = np.random.default_rng(seed).integers(0, m.K, m.T)
    tr = _trace(arms, m)
    np.testing.assert_allclose(weak_regret(tr, m, cp), shifting_regret(tr, m, 1, cp), atol=1e-9)
    assert np.all(weak_regret(tr, m, cp) <= shifting_regret(tr, m, V, cp) + 1e-9)
    unconstrained = np.cumsum(R.max(axis=1))[cp - 1]
    np.testing.assert_allclose(shifting_benchmark(m, m.T, cp), unconstrained, atol=1e-9)


def test_checkpoints():
    cp = default_checkpoints(1000)
    assert cp[0] == 1 and cp[-1] == 1000
    assert 512 in cp and 5 in cp
    assert np.all(np.diff(cp) > 0)
    assert default_checkpoints(1, linear=0).tolist() == [1]
    with pytest.raises(ValueError):
        weak_benchmark(MatrixRewardModel(np.zeros((4, 2))), [3, 2])


def test_bound_examples():
    b = theoretical_bound("weak_expected", 2 * 10**6, 100)
    assert b.value == pytest.approx(2464427.33781734, rel=1e-10) and b.in_regime
    s = theoretical_bound("shifting", 2 * 10**6, 100, V=1)
    k = (6 * math.sqrt(2) + 1) / (4 + 2 * math.sqrt(2))
    assert k == pytest.approx(1.3890872965260114)
    assert s.value / b.value == pytest.approx(k * math.sqrt(math.log(100 * 2e6) / math.log(100)))


@pytest.mark.parametrize("kind", BOUND_KINDS)
def test_bounds_increase_in_t_k_v(kind):
    kw = {"V": 2.0, "delta": 0.05}
    base = theoretical_bound(kind, 10**6, 64, **kw).value
    assert theoretical_bound(kind, 2 * 10**6, 64, **kw).value > base
    assert theoretical_bound(kind, 10**6, 128, **kw).value > base
    if kind in ("shifting", "shifting_unknownV", "exp3s"):
        assert theoretical_bound(kind, 10**6, 64, V=3.0, delta=0.05).value > base


def test_bounds_regime_flags():
    assert not theoretical_bound("shifting", 100, 16, V=10).in_regime
    assert theoretical_bound("shifting", 10**6, 16, V=10).in_regime
    assert not theoretical_bound("threelevel", 10**4, 5).in_regime
    with pytest.raises(ValueError):
        theoretical_bound("shifting", 100, 16)
    with pytest.raises(ValueError):
        theoretical_bound("nope", 100, 16)


def test_doubling_stages():
    assert [e - s + 1 for s, e, _ in doubling_stages(10)] == [1, 2, 4, 3]
    assert [h for _, _, h in doubling_stages(10)] == [1, 2, 4, 8]
    for k in range(1, 12):
        st_ = doubling_stages(2**k - 1)
        assert len(st_) == k and all(e - s + 1 == h for s, e, h in st_)


def test_doubling_releases_between_stages():
    T, K = 300, 6
    m = MatrixRewardModel(np.random.default_rng(0).random((T, K)))
    policy = doubling_wrap(lambda h, lg: FlatPolicy.tuned("exp3", K, h, lg), T)
    rng = RngStream(0).generator()
    starts = {s for s, _, _ in doubling_stages(T)}
    for t in range(1, T + 1):
        a = policy.select(t, rng)
        policy.observe(a, m.reward(a, t), t)
        assert policy.ledger.live_words == K
        if t + 1 in starts:
            assert policy._inner is not None
    assert policy.ledger.peak_words == K == policy.footprint
    policy.release()
    assert policy.ledger.live_words == 0


def test_doubling_regret_close_to_known_horizon():
    T, K = 10**4, 5
    model = Bernoulli([0.9] + [0.1] * (K - 1), T, seed=0)
    wrapped, plain = [], []
    for seed in range(10):
        w = doubling_wrap(lambda h, lg: FlatPolicy.tuned("exp3", K, h, lg), T)
        wrapped.append(weak_regret(play(w, model, RngStream(seed).generator()), model)[-1])
        p = FlatPolicy.tuned("exp3", K, T)
        plain.append(weak_regret(play(p, model, RngStream(seed).generator()), model)[-1])
    assert np.mean(wrapped) <= 4 * np.mean(plain)


def _cfg(**over):
    d = {
        "adversary": {"kind": "bernoulli", "means": [0.8, 0.5, 0.2, 0.1], "seed": 1},
        "policies": [{"name": "exp3", "kind": "exp3"},
                     {"name": "hlmc", "kind": "hlmc", "M": 4},
                     {"name": "ucbm", "kind": "ucbm", "M": 2}],
        "T": 2000,
        "replications": 3,
        "seed": 5,
        "checkpoints": {"linear": 10, "powers_of_two": False},
    }
    d.update(over)
    return d


def test_config_rejects_unknown_fields():
    for bad in ({"colour": 1}, {"policies": [{"name": "x", "kind": "exp3", "alpha": 1}]},
                {"regret": {"kind": "weak", "window": 3}},
                {"regret": {"kind": "shifting"}},
                {"policies": [{"name": "x", "kind": "softmax"}]},
                {"policies": [{"name": "x", "kind": "ucbm"}]},
                {"policies": [{"name": "x", "kind": "exp3"}, {"name": "x", "kind": "exp3s"}]},
                {"checkpoints": {"log": True}}):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(_cfg(**bad))


def test_config_round_trip():
    cfg = ExperimentConfig.from_dict(_cfg())
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_run_is_deterministic_and_order_free():
    cfg = ExperimentConfig.from_dict(_cfg())
    a = curves_csv(run_experiment(cfg))
    b = curves_csv(run_experiment(cfg))
    assert a == b
    assert a.startswith("t,policy,mean_regret,std_regret\n") and "\r" not in a
    c = curves_csv(run_experiment(cfg, workers=2))
    assert a == c


def test_replications_are_independent_streams():
    cfg = ExperimentConfig.from_dict(_cfg(replications=3))
    one = ExperimentConfig.from_dict(_cfg(replications=1))
    full, first = run_experiment(cfg), run_experiment(one)
    np.testing.assert_array_equal(full["exp3"].per_rep[0], first["exp3"].per_rep[0])
    assert np.all(first["exp3"].std == 0)
    line = curves_csv(first).splitlines()[1]
    assert line.split(",")[-1] == "0"


def test_build_policy_budget_violation():
    from membandit.core import BudgetViolation

    pc = PolicyConfig("hlmc", "hlmc", {"variant": "weak_expected"}, M=10)
    with pytest.raises(BudgetViolation):
        build_policy(pc, 100, 1000)


def _write(tmp_path, d):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(d))
    return str(p)


def test_cli_run_and_overrides(tmp_path, capsys):
    out = tmp_path / "out.csv"
    assert main(["run", "--config", _write(tmp_path, _cfg()), "--T", "500", "--runs", "2",
                 "--out", str(out)]) == 0
    text = out.read_bytes().decode()
    rows = text.splitlines()
    assert rows[0] == "t,policy,mean_regret,std_regret"
    assert rows[-1].startswith("500,ucbm,")


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["run", "--config", _write(tmp_path, _cfg(T=0))]) == 2
    tight = _cfg(adversary={"kind": "subphase_cycler", "K": 100, "M": 20},
                 policies=[{"name": "h", "kind": "hlmc", "M": 12}])
    assert main(["run", "--config", _write(tmp_path, tight)]) == 3
    assert main(["bounds", "--kind", "shifting", "--T", "100", "--K", "16", "--V", "10"]) == 4
    assert main(["bounds", "--kind", "weak_expected", "--T", "2000000", "--K", "100"]) == 0
    out = capsys.readouterr().out
    assert "weak_expected,2464427.34,true" in out


def test_cli_oracle(tmp_path, capsys):
    path = tmp_path / "m.csv"
    np.savetxt(path, [[1, 0], [0, 1], [1, 0]], delimiter=",")
    assert main(["oracle", "--matrix", str(path), "--V", "1", "3"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["weak_benchmark"] == 2 and report["best_arm"] == 0
    assert report["shifting_benchmark"] == {"1": 2.0, "3": 3.0}
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n")
    assert main(["oracle", "--matrix", str(bad)]) == 2
