"""
The counterexample command: fit the stages, run every property suite and
write the run manifest plus the zero and oscillation tables.
"""
import datetime
import logging
from typing import Dict, List, Tuple
import numpy as np
from pydantic import BaseModel
from .errors import ExperimentFailure, SingularProductError, UsageError
from .geometry import DomainModel, from_config
from .geometry import counterexample as cx
from .schemas import (
    CounterexampleParams,
    HFamily,
    HSpec,
    OscillationRow,
    RunConfig,
    RunManifest,
    StageRecord,
    SuiteResult,
)
from .utils import (
    has_nan,
    output_path,
    parallel_map,
    spawn_rngs,
    write_csv,
    write_json,
)

logger = logging.getLogger(__name__)

STREAMS = ("covering", "g_bound", "zeros", "product", "oscillation")
TIGHTNESS = 1e-3
MIN_DECAY_EXPONENT = 0.7


class ZeroRow(BaseModel):
    stage: int
    n: int
    r: float
    center_index: int
    center1_re: float
    center1_im: float
    w1_re: float
    w1_im: float
    w2_re: float
    w2_im: float
    winding_number: int
    distance_to_center: float
    delta: float
    empirical_C: float
    residual: float
    inside: bool


ZERO_NOTES = {
    "stage": "stage index k",
    "n": "degree n_k of the stage",
    "r": "stage radius r",
    "center_index": "index of the packing center",
    "center1_re": "center, Re z1",
    "center1_im": "center, Im z1",
    "w1_re": "zero, Re z1",
    "w1_im": "zero, Im z1",
    "w2_re": "zero, Re z2",
    "w2_im": "zero, Im z2",
    "winding_number": "winding number of f_n on the certifying contour",
    "distance_to_center": "|w - zeta_j|",
    "delta": "distance of the zero to the boundary",
    "empirical_C": "delta / r^tau",
    "residual": "|f_n| at the polished zero",
    "inside": "zero lies in the broadened region at every sampled w",
}

OSCILLATION_NOTES = {
    "base1_re": "boundary base point, Re z1",
    "base1_im": "boundary base point, Im z1",
    "base2_re": "boundary base point, Re z2",
    "base2_im": "boundary base point, Im z2",
    "scale": "largest allowed distance to the boundary",
    "low_value": "|f| at the small witness (a stage zero)",
    "low_delta": "distance of the small witness to the boundary",
    "low_stage": "stage whose zero is the small witness",
    "high_value": "|f| at the large witness on the inward normal",
    "high_delta": "distance of the large witness to the boundary",
    "control": "row uses h1 = h2 = 1 and normal-ray witnesses only",
    "passed": "both witnesses were found",
}


class OscillationCsvRow(BaseModel):
    base1_re: float
    base1_im: float
    base2_re: float
    base2_im: float
    scale: float
    low_value: float = None
    low_delta: float = None
    low_stage: int = None
    high_value: float = None
    high_delta: float = None
    control: bool
    passed: bool


def _oscillation_csv(row: OscillationRow) -> OscillationCsvRow:
    (b1, b2) = row.base
    data = row.dict(exclude={"base"})
    return OscillationCsvRow(
        base1_re=b1.real, base1_im=b1.imag, base2_re=b2.real, base2_im=b2.imag, **data
    )


# suites


def covering_suite(
    domain: DomainModel, params: CounterexampleParams, rng
) -> SuiteResult:
    """covering constant fitted at r0 and r0 / 2 must agree within a factor of two"""
    tau = domain.tau_global
    fitted = {}
    for r in (params.r0, params.r0 / 2):
        box = cx.counterexample_box(r, tau, params)
        packing = cx.build_packing(domain, r, rng, params, box=box)
        samples = cx.sample_box(domain, box, params.cover_samples, rng)
        fitted[r] = cx.fit_K(domain, packing, samples)
    ratio = max(fitted.values()) / min(fitted.values())
    return SuiteResult(
        name="covering-constant",
        passed=ratio <= 2,
        detail=f"K by radius: {fitted}",
        values={f"K@{r:g}": K for r, K in fitted.items()},
    )


def g_bound_suite(
    domain: DomainModel, stage: StageRecord, params: CounterexampleParams, rng
) -> Tuple[Dict[int, float], List[int], SuiteResult]:
    """
    Samples reach down to MIN_DEPTH radii, where max |g| must come within
    1e-3 of one. The excess over one is carried by the non-dominant terms:
    their maximum E_n gives A = max n E_n, must decay at least like n^-0.7,
    and must stay below the bound built from the shell counts N_k <= C k^t.
    """
    tau = domain.tau_global
    box = cx.counterexample_box(stage.r, tau, params)
    samples = cx.interior_samples(domain, stage.packing, box, params.g_samples, rng)
    counts = cx.shell_counts(domain, stage.packing, samples)
    C, t = cx.fit_shell_growth(counts)
    maxima, excess, bounds = {}, {}, {}
    for n in params.g_bound_n:
        maxima[n], excess[n] = cx.g_profile(domain, stage.packing, n, samples)
        bounds[n] = cx.shell_bound(counts, C, t, n)
    A = max(n * max(excess[n], maxima[n] - 1, 0.0) for n in maxima)

    values = {f"max|g|@{n}": m for n, m in maxima.items()}
    values.update({f"excess@{n}": e for n, e in excess.items()})
    values.update({f"shell_bound@{n}": b for n, b in bounds.items()})
    values.update({f"N@{k}": float(c) for k, c in enumerate(counts[:-1]) if c})
    values.update({"N@far": float(counts[-1]), "shell_C": C, "shell_t": t, "A": A})

    tight = min(maxima.values()) >= 1 - TIGHTNESS
    shelled = all(excess[n] <= bounds[n] * (1 + 1e-9) for n in maxima)
    positive = [(n, e) for n, e in excess.items() if e > 0]
    decays = True
    if len(positive) >= 2:
        ns, es = np.array(positive).T
        exponent = float(-np.polyfit(np.log(ns), np.log(es), 1)[0])
        values["decay_exponent"] = exponent
        decays = exponent >= MIN_DECAY_EXPONENT
    passed = tight and shelled and decays and A <= params.g_excess_cap
    return maxima, [int(c) for c in counts], SuiteResult(
        name="g-bound",
        passed=passed,
        detail=(
            f"max |g| <= 1 + A/n with A = {A:.3g}; tight={tight}, "
            f"shell bound holds={shelled}, decays={decays}, t = {t:.3g}"
        ),
        values=values,
    )


def zeros_suite(
    domain: DomainModel, stage: StageRecord, params: CounterexampleParams
) -> SuiteResult:
    """certified zeros near every center for n0, 2 n0 and 4 n0 on one packing"""
    ns = [params.n0, 2 * params.n0, 4 * params.n0]
    packing = stage.packing
    runs = {
        n: parallel_map(
            lambda j: cx.find_zero_near(domain, packing, j, n, params),
            range(len(packing.centers)),
        )
        for n in ns
    }
    windings = all(z.winding_number >= 1 for zeros in runs.values() for z in zeros)
    polished = all(
        z.residual < params.zero_tolerance for zeros in runs.values() for z in zeros
    )
    decreasing = [
        all(
            runs[a][j].distance_to_center > runs[b][j].distance_to_center
            for a, b in zip(ns, ns[1:])
        )
        for j in range(len(packing.centers))
    ]
    share = sum(decreasing) / len(decreasing)
    return SuiteResult(
        name="zero-localization",
        passed=windings and polished and share >= 0.9,
        detail=(
            f"windings ok={windings}, polished={polished}, "
            f"decreasing share={share:.2f}"
        ),
        values={"decreasing_share": share},
    )


def membership_suite(stages: List[StageRecord]) -> SuiteResult:
    pairs = sum(s.membership_pairs for s in stages)
    passed = sum(s.membership_passed for s in stages)
    return SuiteResult(
        name="region-membership",
        passed=pairs > 0 and passed == pairs,
        detail=f"{passed}/{pairs} (center, w) pairs verified",
        values={f"r@{s.index}": s.r for s in stages},
    )


def product_suite(
    domain: DomainModel, stages: List[StageRecord], params: CounterexampleParams, rng
) -> SuiteResult:
    tau = domain.tau_global
    box = cx.counterexample_box(stages[0].r, tau, params)
    samples = cx.interior_samples(
        domain, stages[0].packing, box, params.product_samples, rng
    )
    pairs = cx.stage_pairs(stages)
    values = {}
    try:
        for k in range(1, len(pairs) + 1):
            f, _ = cx.eval_f_product(
                domain, pairs[:k], (samples[:, 0], samples[:, 1]), params.truncation
            )
            values[f"M@{k}"] = float(np.max(np.abs(f)))
    except SingularProductError as exc:
        return SuiteResult(
            name="product-safety", passed=False, detail=str(exc), values=values
        )
    safe = all(
        (1 - s.epsilon) * (1 + s.A / s.n) < 1 for s in stages
    ) and all(np.isfinite(v) for v in values.values())
    return SuiteResult(
        name="product-safety",
        passed=safe,
        detail="no singular factors at the sampled points",
        values=values,
    )


def tail_suite(
    domain: DomainModel, stage: StageRecord, params: CounterexampleParams, rng
) -> SuiteResult:
    """the reported tail bound dominates what a wider truncation adds"""
    tau = domain.tau_global
    box = cx.counterexample_box(stage.r, tau, params)
    samples = cx.interior_samples(domain, stage.packing, box, params.g_samples, rng)
    z = (samples[:, 0], samples[:, 1])
    near = cx.eval_g(domain, stage.packing, stage.n, z, params.truncation)
    far = cx.eval_g(domain, stage.packing, stage.n, z, 2 * params.truncation)
    gap = np.abs(far.value - near.value)
    ok = bool(np.all(gap <= near.tail_bound + 1e-15))
    return SuiteResult(
        name="tail-bound",
        passed=ok,
        detail="tail bound dominates the change between truncation radii",
        values={"max_gap": float(gap.max()), "max_bound": float(near.tail_bound.max())},
    )


def oscillation_suite(rows: List[OscillationRow]) -> SuiteResult:
    tested = [row for row in rows if not row.control]
    failed = [row for row in tested if not row.passed]
    highs = [row.high_value for row in tested if row.high_value is not None]
    return SuiteResult(
        name="oscillation",
        passed=bool(tested) and not failed,
        detail=(
            f"{len(tested) - len(failed)}/{len(tested)} (base, scale) rows "
            "with both witnesses"
        ),
        values={"min_high": min(highs, default=0.0)},
    )


def oscillation_bases(
    domain: DomainModel, stage: StageRecord, params: CounterexampleParams, rng
):
    box = cx.counterexample_box(stage.r, domain.tau_global, params)
    # keep bases away from the box edge so nearby zeros exist on both sides
    points = cx.sample_box(domain, box / 2, params.base_points, rng)
    return [tuple(p) for p in points]


def finite_suite(
    stages: List[StageRecord], rows: List[OscillationRow], suites: List[SuiteResult]
) -> SuiteResult:
    """no NaN anywhere in the zero table, the oscillation table or a suite's values"""
    tables = {
        "zeros": zero_rows(stages),
        "oscillation": [_oscillation_csv(row) for row in rows],
        "stages": stages,
    }
    tables.update({f"suite {s.name}": s.values for s in suites})
    bad = [name for name, table in tables.items() if has_nan(table)]
    return SuiteResult(
        name="finite-tables",
        passed=not bad,
        detail=f"NaN in {', '.join(bad)}" if bad else f"{len(tables)} tables finite",
    )


def run_counterexample(cfg: RunConfig) -> RunManifest:
    params = cfg.counterexample
    domain = from_config(cfg)
    if domain.symbolic_only:
        raise UsageError(f"{cfg.preset} is registered for symbolic use only")
    tau = domain.tau_global
    domain.table(tau)
    region = params.region()
    stage_names = [f"stage-{k}" for k in range(1, params.stages + 1)]
    rngs = spawn_rngs(cfg.seed, stage_names + list(STREAMS))

    stages = [
        cx.fit_stage(domain, k, params, region, rngs[name])
        for k, name in enumerate(stage_names, start=1)
    ]
    maxima, counts, g_bound = g_bound_suite(domain, stages[0], params, rngs["g_bound"])
    suites = [
        covering_suite(domain, params, rngs["covering"]),
        g_bound,
        zeros_suite(domain, stages[0], params),
        membership_suite(stages),
        product_suite(domain, stages, params, rngs["product"]),
        tail_suite(domain, stages[0], params, rngs["product"]),
    ]

    rows = []
    bases = oscillation_bases(domain, stages[0], params, rngs["oscillation"])
    for base in bases:
        rows.extend(
            cx.oscillation_experiment(
                domain, base, stages, params.scales, region=region, params=params
            )
        )
    flat = HSpec(family=HFamily.constant)
    control = region.copy(update={"h1": flat, "h2": flat})
    rows.extend(
        cx.oscillation_experiment(
            domain,
            bases[0],
            stages,
            params.scales,
            region=control,
            params=params,
            control=True,
        )
    )
    suites.append(oscillation_suite(rows))
    suites.append(finite_suite(stages, rows, suites))

    for suite in suites:
        log = logger.info if suite.passed else logger.warning
        verdict = "pass" if suite.passed else "FAIL"
        log("suite %s: %s (%s)", suite.name, verdict, suite.detail)

    return RunManifest(
        created_at=datetime.datetime.now(datetime.timezone.utc),
        command="counterexample",
        config=cfg,
        tau=tau,
        subsequence_tail_bound=params.tail_bound(),
        stages=stages,
        g_maxima=maxima,
        shell_counts=counts,
        shell_exponent=g_bound.values["shell_t"],
        oscillation=rows,
        suites=suites,
    )


def zero_rows(stages: List[StageRecord]) -> List[ZeroRow]:
    rows = []
    for stage in stages:
        for zero in stage.zeros:
            (c1, _), (w1, w2) = zero.center, zero.w_nr
            rows.append(
                ZeroRow(
                    stage=stage.index,
                    n=zero.n,
                    r=zero.r,
                    center_index=zero.center_index,
                    center1_re=c1.real,
                    center1_im=c1.imag,
                    w1_re=w1.real,
                    w1_im=w1.imag,
                    w2_re=w2.real,
                    w2_im=w2.imag,
                    winding_number=zero.winding_number,
                    distance_to_center=zero.distance_to_center,
                    delta=zero.delta,
                    empirical_C=zero.empirical_C,
                    residual=zero.residual,
                    inside=zero.region_membership.get("all_w", False),
                )
            )
    return rows


def cmd_counterexample(cfg: RunConfig) -> List:
    manifest = run_counterexample(cfg)
    files = [
        write_json(
            output_path(cfg.out_dir, "manifest", cfg.preset, cfg.seed, suffix=".json"),
            manifest,
        ),
        write_csv(
            output_path(cfg.out_dir, "zeros", cfg.preset, cfg.seed, suffix=".csv"),
            zero_rows(manifest.stages),
            ZERO_NOTES,
        ),
        write_csv(
            output_path(
                cfg.out_dir, "oscillation", cfg.preset, cfg.seed, suffix=".csv"
            ),
            [_oscillation_csv(row) for row in manifest.oscillation],
            OSCILLATION_NOTES,
        ),
    ]
    failed = [suite.name for suite in manifest.suites if not suite.passed]
    if failed:
        raise ExperimentFailure("property suite failed", suite=", ".join(failed))
    return files


def register(subparsers, parents):
    parser = subparsers.add_parser(
        "counterexample",
        parents=parents,
        help="run the staged construction and every property suite",
    )
    parser.set_defaults(func=cmd_counterexample)
    return parser
