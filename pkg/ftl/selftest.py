"""
Quick property suites over the symbolic core and the boundary geometry.
Runs in seconds and needs no counterexample stages.
"""
import datetime
import logging
from typing import List
import numpy as np
from .algebra import SYMBOLS, ConjPoly, GaussianRational
from .errors import ExperimentFailure
from .geometry import (
    DomainModel,
    PRESETS,
    decompose_in_frame,
    from_preset,
    point_geometry,
    sample_patch,
    unit_normal,
)
from .schemas import RunConfig, SelftestReport, SuiteResult
from .utils import has_nan, output_path, spawn_rngs, write_json

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
MIN_DERIVATIVE = 0.1


def random_poly(rng, terms: int = 4, top: int = 2) -> ConjPoly:
    """small random polynomial with Gaussian-integer coefficients"""
    out = {}
    for _ in range(terms):
        exp = tuple(int(e) for e in rng.integers(0, top + 1, 4))
        re, im = (int(c) for c in rng.integers(-5, 6, 2))
        out[exp] = GaussianRational(re, im)
    return ConjPoly(out)


def finite_difference(p: ConjPoly, var: str, z1: complex, z2: complex) -> complex:
    """Wirtinger derivative from central differences along both real axes"""
    h = FD_STEP
    holo = var in ("z1", "z2")
    first = var.endswith("1")

    def shifted(step):
        return p.evaluate(z1 + step, z2) if first else p.evaluate(z1, z2 + step)

    dx = (shifted(h) - shifted(-h)) / (2 * h)
    dy = (shifted(1j * h) - shifted(-1j * h)) / (2 * h)
    return (dx - 1j * dy) / 2 if holo else (dx + 1j * dy) / 2


def wirtinger_suite(rng, cases: int = 100) -> SuiteResult:
    """
    relative error of central differences against the symbolic derivative;
    cases whose derivative is below MIN_DERIVATIVE in modulus are redrawn
    """
    worst = 0.0
    done = 0
    while done < cases:
        p = random_poly(rng)
        var = SYMBOLS[int(rng.integers(0, 4))]
        z1, z2 = rng.uniform(-0.7, 0.7, 2) + 1j * rng.uniform(-0.7, 0.7, 2)
        exact = p.derivative(var).evaluate(z1, z2)
        if abs(exact) < MIN_DERIVATIVE:
            continue
        err = abs(finite_difference(p, var, z1, z2) - exact) / abs(exact)
        worst = max(worst, err)
        done += 1
    return SuiteResult(
        name="wirtinger",
        passed=worst <= 1e-6,
        detail=f"{cases} random cases, worst relative error {worst:.2e}",
        values={"worst": worst},
    )


def polarization_suite() -> SuiteResult:
    failed = []
    for name in PRESETS:
        domain = from_preset(name)
        if domain.kernel.diagonal() != domain.rho:
            failed.append(f"{name}: diagonal")
        if not domain.symbolic_only and domain.kernel.conjugate_swap() != domain.kernel:
            failed.append(f"{name}: conjugate symmetry")
    return SuiteResult(
        name="polarization",
        passed=not failed,
        detail="; ".join(failed) or f"{len(PRESETS)} presets exact",
    )


def dual_path_suite(
    domains: List[DomainModel], rng, samples: int = 100, degree: int = 4
) -> SuiteResult:
    """lambda from the explicit recursion against a numeric frame solve"""
    worst = 0.0
    checked = 0
    for domain in domains:
        table = domain.table(degree)
        for point in sample_patch(domain, samples, rng):
            for entry in table.entries:
                exact = entry.lambda_.evaluate(*point)
                _, _, lam, _ = decompose_in_frame(
                    entry.field, domain.frame, point, domain.cond_max
                )
                worst = max(worst, abs(exact - lam) / max(1.0, abs(exact)))
                checked += 1
    return SuiteResult(
        name="dual-path-lambda",
        passed=worst <= 1e-8,
        detail=f"{checked} (word, point) pairs, worst relative error {worst:.2e}",
        values={"worst": worst},
    )


def type_suite(rng, samples: int = 50) -> SuiteResult:
    sphere, egg2, egg3 = (from_preset(name) for name in ("sphere", "egg-m2", "egg-m3"))
    failures = []
    sphere_points = sample_patch(sphere, samples, rng)
    sphere_types = {sphere.point_type(p).tau_z for p in sphere_points}
    if sphere_types != {2}:
        failures.append(f"sphere types {sorted(sphere_types)}")
    for theta in np.linspace(-0.5, 0.5, 5):
        base = (complex(np.exp(1j * theta)), 0j)
        if egg2.point_type(base).tau_z != 4:
            failures.append(f"egg-m2 at theta={theta:g}")
        if egg3.point_type(base).tau_z != 6:
            failures.append(f"egg-m3 at theta={theta:g}")
    off_axis = [p for p in sample_patch(egg2, samples, rng) if abs(p[1]) > 1e-3]
    off_types = {egg2.point_type(p).tau_z for p in off_axis}
    if off_types != {2}:
        failures.append(f"egg-m2 off-axis types {sorted(off_types)}")
    return SuiteResult(
        name="types",
        passed=not failures,
        detail="; ".join(failures) or "sphere 2, egg-m2 4/2, egg-m3 6",
    )


def _normal_ray(domain: DomainModel, depths):
    b1, b2 = domain.base_point
    nu1, nu2 = unit_normal(domain, b1, b2)
    return [point_geometry(domain, (b1 - t * nu1, b2 - t * nu2)) for t in depths]


def scale_suite() -> SuiteResult:
    sphere, egg = from_preset("sphere"), from_preset("egg-m2")
    sphere_err = max(
        abs(g.D - np.sqrt(g.delta)) / np.sqrt(g.delta)
        for g in _normal_ray(sphere, np.geomspace(1e-8, 1e-2, 7))
    )
    (deep,) = _normal_ray(egg, [1e-8])
    exponent = np.log(deep.D) / np.log(deep.delta)
    passed = sphere_err <= 1e-10 and abs(exponent - 0.25) <= 0.02
    return SuiteResult(
        name="scale-law",
        passed=passed,
        detail=(
            f"sphere |D - sqrt(delta)| / sqrt(delta) <= {sphere_err:.2e}, "
            f"egg-m2 exponent {exponent:.4f}"
        ),
        values={"sphere_error": sphere_err, "egg_exponent": exponent},
    )


def sandwich_suite(rng, samples: int = 1000) -> SuiteResult:
    """
    Constructed points with |pi(z) - b| in [D/2, D] and delta <= D/4 must
    satisfy D/4 <= |z - b| <= 2D, on the sphere and on egg-m2. Chart offsets
    are scaled by D at the base point for the same depth, so they follow the
    sqrt(delta) law on the sphere and the (delta / 4)^(1/4) law on the egg.
    """
    counts = {}
    for name in ("sphere", "egg-m2"):
        domain = from_preset(name)
        base = np.array(domain.base_point)
        b_nu = unit_normal(domain, *domain.base_point)
        accepted = violations = 0
        for _ in range(20 * samples):
            if accepted == samples:
                break
            delta = 10 ** rng.uniform(-6, -2)
            inner = (base[0] - delta * b_nu[0], base[1] - delta * b_nu[1])
            scale = point_geometry(domain, inner).D
            direction = rng.normal(size=3)
            params = 0.75 * scale * direction / np.linalg.norm(direction)
            ((p1, p2),) = domain.chart(params)
            nu1, nu2 = unit_normal(domain, p1, p2)
            g = point_geometry(domain, (p1 - delta * nu1, p2 - delta * nu2))
            reach = np.linalg.norm(np.array(g.pi_z) - base)
            if not (g.D / 2 <= reach <= g.D and g.delta <= g.D / 4):
                continue
            accepted += 1
            distance = np.linalg.norm(np.array(g.z) - base)
            if not g.D / 4 <= distance <= 2 * g.D:
                violations += 1
        counts[name] = (accepted, violations)
    passed = all(a == samples and v == 0 for a, v in counts.values())
    values = {}
    for name, (accepted, violations) in counts.items():
        values[f"accepted@{name}"] = accepted
        values[f"violations@{name}"] = violations
    return SuiteResult(
        name="sandwich",
        passed=passed,
        detail="; ".join(
            f"{name}: {a} constructed samples, {v} violations"
            for name, (a, v) in counts.items()
        ),
        values=values,
    )


def run_selftest(cfg: RunConfig) -> SelftestReport:
    rngs = spawn_rngs(cfg.seed, ("wirtinger", "dual-path", "types", "sandwich"))
    dual = [from_preset("sphere"), from_preset("egg-m2")]
    suites = [
        wirtinger_suite(rngs["wirtinger"]),
        polarization_suite(),
        dual_path_suite(dual, rngs["dual-path"]),
        type_suite(rngs["types"]),
        scale_suite(),
        sandwich_suite(rngs["sandwich"]),
    ]
    for i, suite in enumerate(suites):
        if suite.passed and has_nan(suite.values):
            suites[i] = suite.copy(
                update={"passed": False, "detail": f"{suite.detail}; NaN in values"}
            )
    for suite in suites:
        log = logger.info if suite.passed else logger.warning
        verdict = "pass" if suite.passed else "FAIL"
        log("suite %s: %s (%s)", suite.name, verdict, suite.detail)
    return SelftestReport(
        created_at=datetime.datetime.now(datetime.timezone.utc),
        seed=cfg.seed,
        suites=suites,
    )


def cmd_selftest(cfg: RunConfig) -> List:
    report = run_selftest(cfg)
    path = write_json(
        output_path(cfg.out_dir, "selftest", cfg.seed, suffix=".json"), report
    )
    failed = [suite.name for suite in report.suites if not suite.passed]
    if failed:
        raise ExperimentFailure("property suite failed", suite=", ".join(failed))
    return [path]


def register(subparsers, parents):
    parser = subparsers.add_parser(
        "selftest",
        parents=parents,
        help="quick property suites over the symbolic core and boundary geometry",
    )
    parser.set_defaults(func=cmd_selftest)
    return parser
