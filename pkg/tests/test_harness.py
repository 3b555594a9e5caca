"""Monte Carlo harness: plans, determinism, aggregation, and rate fits."""

import math

import pytest

from shapeci.functions import Linear, OddPower, Square, ShapeClass
from shapeci.harness import (
    REGRESSION,
    WHITE_NOISE,
    ExperimentPlan,
    config_hash,
    plan_from_dict,
    rate_fit,
    result_to_csv,
    result_to_summary,
    run,
)
from shapeci.modulus import lower_bound_thm3

M = ShapeClass.MONOTONE
C = ShapeClass.CONVEX


def plan(**kw):
    base = dict(
        model=WHITE_NOISE,
        shape=M,
        function=Linear(k=1.0),
        n_values=(256,),
        replications=200,
    )
    base.update(kw)
    return ExperimentPlan(**base)


def test_plan_validation():
    with pytest.raises(ValueError):
        plan(model="panel")
    with pytest.raises(ValueError):
        plan(replications=50)
    with pytest.raises(ValueError):
        plan(replications=2_000_000)
    with pytest.raises(ValueError):
        plan(alpha=0.25)
    with pytest.raises(ValueError):
        plan(alpha=0.0)
    with pytest.raises(ValueError):
        plan(n_values=())
    with pytest.raises(ValueError):
        plan(n_values=(2,))
    with pytest.raises(ValueError):
        plan(n_values=(2**23,))
    with pytest.raises(ValueError):
        plan(workers=0)


def test_plan_class_check():
    with pytest.raises(ValueError):
        plan(shape=C, function=OddPower(k=1.0, r=3.0))
    # explicit opt-out for misspecification studies
    p = plan(shape=C, function=OddPower(k=1.0, r=3.0), allow_misspecified=True)
    assert p.allow_misspecified


def test_plan_regression_rules():
    reg = dict(model=REGRESSION, n_values=(64,))
    assert plan(**reg).model == REGRESSION
    with pytest.raises(ValueError):
        plan(**reg, t0=0.1)
    with pytest.raises(ValueError):
        plan(**reg, fixed_j=2)
    with pytest.raises(ValueError):
        plan(model=REGRESSION, shape=C, function=Square(), n_values=(4,))
    with pytest.raises(ValueError):
        plan(**reg, sigma=-1.0)


def test_plan_fixed_j_floor():
    with pytest.raises(ValueError):
        plan(fixed_j=1)  # monotone floor at the origin is 2
    assert plan(fixed_j=2).fixed_j == 2
    with pytest.raises(ValueError):
        plan(t0=0.3, fixed_j=3)  # floor rises away from the origin
    assert plan(t0=0.3, fixed_j=4).fixed_j == 4


def test_config_hash_ignores_workers():
    assert config_hash(plan(workers=1)) == config_hash(plan(workers=8))


def test_config_hash_sensitivity():
    h = config_hash(plan())
    assert len(h) == 16 and int(h, 16) >= 0
    assert config_hash(plan(alpha=0.1)) != h
    assert config_hash(plan(base_seed=5)) != h
    assert config_hash(plan(function=Linear(k=2.0))) != h
    # sigma only matters where it enters the sampling
    assert config_hash(plan(sigma=2.0)) == h
    r1 = config_hash(plan(model=REGRESSION, n_values=(64,), sigma=1.0))
    r2 = config_hash(plan(model=REGRESSION, n_values=(64,), sigma=2.0))
    assert r1 != r2


def test_run_basic_cell():
    res = run(plan(replications=400))
    assert res.config_hash == config_hash(res.plan)
    assert len(res.cells) == 1
    cell = res.cells[0]
    assert cell.n == 256 and cell.replications == 400
    assert 0.0 <= cell.coverage <= 1.0
    p = cell.coverage
    assert cell.coverage_se == pytest.approx(math.sqrt(p * (1 - p) / 400))
    assert cell.mean_length > 0 and cell.length_se >= 0
    assert sum(cell.j_hat_counts.values()) == 400
    lb = lower_bound_thm3(Linear(k=1.0), 256, 0.05)
    assert cell.length_ratio_to_lb == pytest.approx(cell.mean_length / lb)


def test_run_multiple_n():
    res = run(plan(n_values=(128, 512), replications=200))
    assert [c.n for c in res.cells] == [128, 512]
    # finer data should not lengthen the interval on average
    assert res.cells[1].mean_length < res.cells[0].mean_length


def test_run_deterministic_across_workers():
    a = result_to_csv(run(plan(replications=300, workers=1)))
    b = result_to_csv(run(plan(replications=300, workers=2)))
    assert a == b


def test_run_seed_changes_output():
    a = result_to_csv(run(plan(replications=200)))
    b = result_to_csv(run(plan(replications=200, base_seed=99)))
    assert a != b
    assert result_to_csv(run(plan(replications=200))) == a


def test_run_fixed_j():
    res = run(plan(fixed_j=3, replications=200))
    cell = res.cells[0]
    assert cell.j_hat_counts == {3: 200}
    assert cell.truncation_freq == 0.0


def test_run_off_origin_has_no_lb():
    res = run(plan(t0=0.25, replications=200))
    assert res.cells[0].length_ratio_to_lb is None


def test_run_regression_cell():
    res = run(
        plan(
            model=REGRESSION,
            shape=C,
            function=Square(),
            n_values=(64,),
            sigma=0.3,
            replications=300,
        )
    )
    cell = res.cells[0]
    assert cell.length_ratio_to_lb is None
    assert cell.coverage > 0.85
    assert sum(cell.j_hat_counts.values()) == 300


def test_csv_layout():
    res = run(plan(replications=200))
    text = result_to_csv(res)
    lines = text.splitlines()
    assert lines[0] == f"# config={res.config_hash} seed=0"
    assert lines[1] == "n,metric,value,stderr"
    metrics = [ln.split(",")[1] for ln in lines[2:]]
    for name in ("coverage", "mean_length", "empty_freq", "truncation_freq"):
        assert name in metrics
    cov_line = next(ln for ln in lines[2:] if ln.split(",")[1] == "coverage")
    n, _, value, se = cov_line.split(",")
    assert int(n) == 256
    assert float(value) == res.cells[0].coverage
    assert float(se) == res.cells[0].coverage_se
    jhat = [m for m in metrics if m.startswith("jhat_")]
    assert jhat and all(m[5:].isdigit() for m in jhat)


def test_summary_layout():
    res = run(plan(replications=200))
    s = result_to_summary(res)
    assert s["config"] == res.config_hash
    assert s["plan"]["model"] == WHITE_NOISE
    assert s["plan"]["sigma"] is None  # not a white-noise knob
    assert len(s["cells"]) == 1
    assert s["cells"][0]["n"] == 256
    assert isinstance(s["cells"][0]["j_hat_counts"], dict)


def test_plan_from_dict_minimal():
    p = plan_from_dict(
        {
            "shape": "monotone",
            "function": {"variant": "Linear", "params": {"k": 1.0}},
            "n": 256,
            "replications": 150,
        }
    )
    assert p.model == WHITE_NOISE
    assert p.n_values == (256,)
    assert p.function == Linear(k=1.0)


def test_plan_from_dict_rejects_garbage():
    good = {
        "shape": "monotone",
        "function": {"variant": "Linear", "params": {"k": 1.0}},
        "n": 256,
    }
    with pytest.raises(ValueError):
        plan_from_dict({**good, "bogus_key": 1})
    with pytest.raises(ValueError):
        plan_from_dict({**good, "n_values": [256, 512]})  # n and n_values
    with pytest.raises(ValueError):
        plan_from_dict({k: v for k, v in good.items() if k != "function"})
    with pytest.raises(ValueError):
        plan_from_dict({k: v for k, v in good.items() if k != "n"})
    with pytest.raises(ValueError):
        plan_from_dict({**good, "shape": "wavy"})


def test_rate_fit_exact_power_law():
    ns = [2**j for j in range(10, 17)]
    lengths = [3.7 * n ** (-1.0 / 3.0) for n in ns]
    fit = rate_fit(ns, lengths)
    assert fit.slope == pytest.approx(-1.0 / 3.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.7), abs=1e-10)
    assert fit.stderr == pytest.approx(0.0, abs=1e-12)


def test_rate_fit_validation():
    with pytest.raises(ValueError):
        rate_fit([100, 200, 400], [1.0, 0.8, 0.6])  # too few
    with pytest.raises(ValueError):
        rate_fit([100, 200, 300, 400], [1.0, 0.8, 0.7, 0.6])  # not geometric
    with pytest.raises(ValueError):
        rate_fit([100, 200, 400, 800], [1.0, 0.8])
