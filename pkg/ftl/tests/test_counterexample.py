import numpy as np
import pytest
from pydantic import ValidationError
from ftl import experiment
from ftl.errors import NumericFailure, SingularEvaluationError, UsageError
from ftl.geometry import (
    build_packing,
    covering_check,
    eval_f_n,
    eval_f_product,
    eval_g,
    find_zero_near,
    from_preset,
    oscillation_experiment,
    verify_zero_in_region,
    winding_number,
)
from ftl.geometry.counterexample import (
    RAY_POINTS,
    SHELLS,
    counterexample_box,
    fit_shell_growth,
    g_profile,
    interior_samples,
    shell_bound,
    shell_counts,
    stage_pairs,
)
from ftl.schemas import (
    CounterexampleParams,
    HSpec,
    Packing,
    SubsequenceRule,
    SuiteResult,
)
from .fixtures import small_config, small_params

BASE = (1 + 0j, 0j)


def test_schedules():
    assert CounterexampleParams().schedule() == [16, 32, 64]
    power = CounterexampleParams(rule=SubsequenceRule.power)
    assert power.schedule() == [256, 6561, 65536]
    assert CounterexampleParams.epsilon(16) == pytest.approx(0.5)
    assert CounterexampleParams.gamma(8) == pytest.approx(1 / 16)


def test_tail_bound_dominates_later_stages():
    params = CounterexampleParams()
    later = sum(
        params.epsilon(params.n_k(k))
        for k in range(params.stages + 1, params.stages + 60)
    )
    assert later <= params.tail_bound()
    power = CounterexampleParams(rule=SubsequenceRule.power, stages=4)
    assert power.tail_bound() == pytest.approx(0.2)


def test_stage_count_must_be_positive():
    with pytest.raises(ValidationError):
        CounterexampleParams(stages=0)
    with pytest.raises(ValidationError):
        CounterexampleParams(n0=1)


def test_winding_number():
    phi = 2 * np.pi * np.arange(64) / 64
    assert winding_number(np.exp(1j * phi)) == pytest.approx(1)
    assert winding_number(np.exp(2j * phi)) == pytest.approx(2)
    assert winding_number(2 + np.exp(1j * phi)) == pytest.approx(0)
    with pytest.raises(SingularEvaluationError):
        winding_number(np.exp(1j * phi) - 1)


def test_packing_structure(egg2, small_params):
    packing = build_packing(egg2, 0.1, 3, small_params)
    assert packing.centers[0] == BASE
    assert packing.radius == pytest.approx(1e-4)
    certificate = np.array(packing.maximality_certificate)
    assert len(certificate) == small_params.candidates
    assert np.sum(certificate == -1) == len(packing.centers)
    assert np.all(certificate < len(packing.centers))
    again = build_packing(egg2, 0.1, 3, small_params)
    assert again.centers == packing.centers
    for center in packing.centers:
        assert covering_check(egg2, packing, 1.0, center)


def test_g_arguments(egg2, small_params):
    packing = build_packing(egg2, 0.1, 3, small_params)
    with pytest.raises(UsageError):
        eval_g(egg2, packing, 1, BASE)
    with pytest.raises(UsageError):
        eval_g(egg2, packing, 16, BASE, truncation=1.5)


def test_g_is_nearly_bounded(egg2, small_params):
    packing = build_packing(egg2, 0.1, 3, small_params)
    box = counterexample_box(0.1, egg2.tau_global, small_params)
    samples = interior_samples(egg2, packing, box, 200, np.random.default_rng(1))
    for n in (8, 16, 32):
        z = (samples[:, 0], samples[:, 1])
        g = eval_g(egg2, packing, n, z, small_params.truncation)
        cap = 1 + small_params.g_excess_cap / n
        assert np.max(np.abs(g.value) + g.tail_bound) <= cap


def test_zero_near_base(egg2, small_params):
    packing = build_packing(egg2, 0.1, 3, small_params)
    zero = find_zero_near(egg2, packing, 0, 16, small_params)
    assert zero.winding_number >= 1
    assert zero.residual < small_params.zero_tolerance
    assert zero.delta_lower_check
    assert abs(eval_f_n(egg2, packing, 16, zero.w_nr, small_params.truncation)) < 1e-9
    assert zero.projection_deviation < packing.radius
    verdict = verify_zero_in_region(egg2, zero, BASE, small_params.region())
    assert verdict.verdict


def test_zeros_move_toward_centers(egg2, small_params):
    packing = build_packing(egg2, 0.1, 3, small_params)
    distances = [
        find_zero_near(egg2, packing, 0, n, small_params).distance_to_center
        for n in (16, 32, 64)
    ]
    assert distances[0] > distances[1] > distances[2]


def test_stages_certify_their_zeros(egg2_stages, small_params):
    assert [stage.n for stage in egg2_stages] == small_params.schedule()
    for stage in egg2_stages:
        assert stage.center_count == len(stage.zeros) > 0
        assert stage.membership_passed == stage.membership_pairs
        assert all(zero.winding_number >= 1 for zero in stage.zeros)
        assert all(zero.region_membership["all_w"] for zero in stage.zeros)
        assert (1 - stage.epsilon) * (1 + stage.A / stage.n) < 1


def test_product_vanishes_at_stage_zeros(egg2, egg2_stages, small_params):
    pairs = stage_pairs(egg2_stages)
    for stage in egg2_stages:
        zero = stage.zeros[0]
        value, moduli = eval_f_product(egg2, pairs, zero.w_nr, small_params.truncation)
        assert abs(value) < 1e-6
        assert len(moduli) == len(pairs)


def test_oscillation_at_base(egg2, egg2_stages, small_params):
    rows = oscillation_experiment(
        egg2,
        BASE,
        egg2_stages,
        [1e-2, 1e-3],
        region=small_params.region(),
        params=small_params,
    )
    assert len(rows) == 2
    for row in rows:
        assert row.passed
        assert row.low_value < small_params.low_threshold
        assert row.high_value > small_params.high_threshold
        assert row.low_delta <= row.scale and row.high_delta <= row.scale


def test_control_rows_use_the_normal_ray(egg2, egg2_stages, small_params):
    rows = oscillation_experiment(
        egg2,
        BASE,
        egg2_stages,
        [1e-3],
        region=small_params.region(),
        params=small_params,
        control=True,
    )
    assert rows[0].control
    assert rows[0].low_stage is None


def test_membership_and_oscillation_suites(egg2_stages):
    assert experiment.membership_suite(egg2_stages).passed
    assert not experiment.oscillation_suite([]).passed


def test_zero_rows(egg2_stages):
    rows = experiment.zero_rows(egg2_stages)
    assert len(rows) == sum(stage.center_count for stage in egg2_stages)
    assert {row.stage for row in rows} == {1, 2}


def test_pipeline_is_deterministic(tmp_path):
    cfg = small_config(tmp_path, counterexample=small_params(stages=1, base_points=1))
    first = experiment.run_counterexample(cfg)
    second = experiment.run_counterexample(cfg)
    assert first.json(exclude={"created_at"}) == second.json(exclude={"created_at"})
    assert {suite.name for suite in first.suites} == {
        "covering-constant",
        "g-bound",
        "zero-localization",
        "region-membership",
        "product-safety",
        "tail-bound",
        "oscillation",
        "finite-tables",
    }
    assert all(suite.passed for suite in first.suites)


def single_center(r: float = 0.1, tau: int = 4) -> Packing:
    return Packing(
        r=r,
        radius=r**tau,
        centers=[BASE],
        params=[(0.0, 0.0, 0.0)],
        maximality_certificate=[-1],
        candidate_count=1,
    )


def test_single_center_peaks_at_one(egg2):
    packing = single_center()
    for n in (2, 16, 64):
        assert eval_g(egg2, packing, n, BASE).value == pytest.approx(1.0, abs=1e-12)


def test_product_far_from_centers_is_one_minus_eps(egg2):
    packing = single_center()
    far = (0.5 + 0j, 0j)
    assert abs(eval_g(egg2, packing, 16, far).value) < 1e-100
    value, moduli = eval_f_product(egg2, [(16, packing)], far)
    assert value == pytest.approx(1 - CounterexampleParams.epsilon(16))
    assert moduli[0] == pytest.approx(0.5)


def test_center_count_shrinks_with_radius(egg2, small_params):
    box = counterexample_box(0.1, egg2.tau_global, small_params)
    counts = [
        len(build_packing(egg2, r, 3, small_params, box=box).centers)
        for r in (0.05, 0.1, 0.2, 0.3)
    ]
    assert counts == sorted(counts, reverse=True)
    assert counts[0] > counts[-1]


def test_zeros_at_the_default_radius(egg2, small_params):
    r = CounterexampleParams().r0
    packing = build_packing(egg2, r, 5, small_params)
    for index in range(min(3, len(packing.centers))):
        zero = find_zero_near(egg2, packing, index, 16, small_params)
        assert zero.winding_number == 1
        assert zero.residual < small_params.zero_tolerance


def test_zero_polish_at_small_radius(egg2):
    params = small_params(candidates=300)
    packing = build_packing(egg2, 0.0125, 3, params)
    for n in (16, 64):
        zero = find_zero_near(egg2, packing, 0, n, params)
        assert zero.winding_number == 1
        assert zero.residual < 1e-9
        assert zero.delta_lower_check


def test_inversion_respects_condition_cap(small_params):
    strict = from_preset("egg-m2", cond_max=1e-3)
    with pytest.raises(NumericFailure):
        find_zero_near(strict, single_center(), 0, 16, small_params)


def test_interior_samples_reach_the_boundary(egg2, small_params):
    packing = build_packing(egg2, 0.1, 3, small_params)
    box = counterexample_box(0.1, egg2.tau_global, small_params)
    samples = interior_samples(egg2, packing, box, 200, np.random.default_rng(2))
    assert len(samples) == 200 + RAY_POINTS * len(packing.centers)
    below = -egg2.rho_at(samples[:, 0], samples[:, 1])
    assert np.all(below > 0)
    assert below.min() < 1e-6 * packing.radius


def test_g_excess_decays(egg2, small_params):
    packing = build_packing(egg2, 0.1, 3, small_params)
    box = counterexample_box(0.1, egg2.tau_global, small_params)
    samples = interior_samples(egg2, packing, box, 200, np.random.default_rng(2))
    ns = np.array([8, 16, 32, 64])
    peaks, excess = np.array([g_profile(egg2, packing, n, samples) for n in ns]).T
    assert peaks.min() >= 1 - 1e-3
    A = max(n * max(e, p - 1, 0.0) for n, p, e in zip(ns, peaks, excess))
    assert A <= small_params.g_excess_cap
    assert np.all(peaks <= 1 + A / ns + 1e-12)
    assert np.all(excess > 0)
    exponent = -np.polyfit(np.log(ns), np.log(excess), 1)[0]
    assert exponent >= 0.7


def test_shell_counts_bound_the_excess(egg2, small_params):
    packing = build_packing(egg2, 0.1, 3, small_params)
    box = counterexample_box(0.1, egg2.tau_global, small_params)
    samples = interior_samples(egg2, packing, box, 200, np.random.default_rng(9))
    counts = shell_counts(egg2, packing, samples)
    assert len(counts) == SHELLS + 1
    assert counts[0] >= 1
    assert counts.sum() >= len(packing.centers)
    C, t = fit_shell_growth(counts)
    k = np.flatnonzero(counts[1:-1]) + 1
    assert np.all(counts[k] <= C * k**t * (1 + 1e-9))
    for n in (8, 16, 32):
        _, excess = g_profile(egg2, packing, n, samples)
        assert excess <= shell_bound(counts, C, t, n) * (1 + 1e-9)


def test_shell_growth_fit():
    counts = np.zeros(SHELLS + 1, dtype=int)
    counts[0] = 1
    counts[1:9] = [2 * k**2 for k in range(1, 9)]
    C, t = fit_shell_growth(counts)
    assert t == pytest.approx(2.0)
    assert C == pytest.approx(2.0)
    assert shell_bound(counts, C, t, 4) == pytest.approx(
        sum(2 * k**2 * (1 + k**2) ** -4.0 for k in range(1, SHELLS))
    )
    lone = np.zeros(SHELLS + 1, dtype=int)
    lone[[0, 3]] = [2, 5]
    assert fit_shell_growth(lone) == (5.0, 0.0)


def test_g_bound_suite(egg2_stages, egg2, small_params):
    maxima, counts, suite = experiment.g_bound_suite(
        egg2, egg2_stages[0], small_params, np.random.default_rng(4)
    )
    assert suite.passed, suite.detail
    assert set(maxima) == set(small_params.g_bound_n)
    assert min(maxima.values()) >= 1 - 1e-3
    assert suite.values["decay_exponent"] >= 0.7
    assert "shell_t" in suite.values
    assert len(counts) == SHELLS + 1


def test_loglog_regions_are_too_narrow_for_the_zeros(egg2_stages):
    # loglog over every positive double stays below 8
    ceiling = HSpec()(np.finfo(float).tiny)
    assert ceiling < 8
    assert max(stage.h2_needed for stage in egg2_stages) > ceiling
    for stage in egg2_stages:
        assert stage.h1_needed > 0


def test_finite_suite_flags_nan(egg2_stages):
    rows = []
    clean = experiment.finite_suite(egg2_stages, rows, [])
    assert clean.passed
    broken = SuiteResult(name="g-bound", passed=True, values={"A": np.nan})
    assert not experiment.finite_suite(egg2_stages, rows, [broken]).passed
