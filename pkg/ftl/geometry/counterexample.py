"""
Construction of a bounded holomorphic function on the domain whose boundary
limits through broadened approach regions fail to exist.

Each stage packs the boundary patch with disjoint non-isotropic balls of
radius r, sums the peaking terms (r^tau / (R(z, zeta_j) - r^tau))^{2n} into
g, and uses f_n = 1 - eps_n - g, which has a zero close to every center. The
stages are combined into a finite product of disc automorphisms.
"""
import logging
import math
from typing import List, NamedTuple, Sequence, Tuple
import numpy as np
from ..errors import (
    NumericFailure,
    SingularEvaluationError,
    SingularProductError,
    UsageError,
)
from ..schemas import (
    CounterexampleParams,
    OscillationRow,
    Packing,
    RegionFamily,
    RegionSpec,
    RegionVerdict,
    StageRecord,
    ZeroRecord,
    as_point,
)
from ..utils import make_rng, parallel_map
from .boundary import evaluate_region, lambda_theta, point_geometry, unit_normal
from .domain import DomainModel

logger = logging.getLogger(__name__)

MAX_K_DOUBLINGS = 20
MAX_CONTOUR_POINTS = 2**14
START_CONTOUR_POINTS = 64
EPS = float(np.finfo(float).eps)
FLOOR_ULPS = 64
STALL_FACTOR = 1e-9
MIN_DEPTH = 1e-8
RAY_POINTS = 8
SHELLS = 128


class GValue(NamedTuple):
    value: complex
    tail_bound: float


def counterexample_box(r: float, tau: int, params: CounterexampleParams) -> np.ndarray:
    rt = r**tau
    return np.array([params.patch_theta, params.patch_z2, params.patch_z2]) * rt


def sample_box(domain: DomainModel, box: np.ndarray, count: int, rng) -> np.ndarray:
    params = make_rng(rng).uniform(-1.0, 1.0, (count, 3)) * box
    return domain.chart(params, box=box)


def centers_of(packing: Packing) -> Tuple[np.ndarray, np.ndarray]:
    centers = np.array(packing.centers, dtype=complex).reshape(-1, 2)
    return centers[:, 0], centers[:, 1]


# packing


def _ball_mask(
    domain, points: np.ndarray, center, r: float, lam_r: float
) -> np.ndarray:
    dist = np.linalg.norm(points - np.asarray(center), axis=1)
    R = domain.kernel.evaluate((points[:, 0], points[:, 1]), (center[0], center[1]))
    return (dist < r) & (np.abs(R) < lam_r)


def build_packing(
    domain: DomainModel,
    r: float,
    seed,
    params: CounterexampleParams = None,
    *,
    box: np.ndarray = None,
) -> Packing:
    """
    Greedy maximal family of pairwise disjoint balls beta_2(zeta, r) over a
    seeded candidate list. Candidate 0 is the base point. Disjointness and
    maximality are judged on the candidate list itself: a candidate is
    accepted iff its ball contains no candidate already inside an accepted ball.
    """
    params = params or CounterexampleParams()
    tau = domain.tau_global
    rt = r**tau
    if box is None:
        box = counterexample_box(r, tau, params)
    box = np.asarray(box, dtype=float)
    count = params.candidates
    if count < 1:
        raise UsageError("empty candidate list")

    rng = make_rng(seed)
    cand = np.zeros((count, 3))
    cand[1:] = rng.uniform(-1.0, 1.0, (count - 1, 3)) * box
    points = domain.chart(cand, box=box)
    lam_r = lambda_theta(domain, (points[:, 0], points[:, 1]), r)

    covered = np.zeros(count, dtype=bool)
    owner = np.full(count, -1)
    certificate = np.full(count, -1)
    accepted: List[int] = []
    for i in range(count):
        if covered[i]:
            certificate[i] = owner[i]
            continue
        inside = _ball_mask(domain, points, points[i], r, lam_r[i])
        shared = inside & covered
        if shared.any():
            certificate[i] = owner[np.flatnonzero(shared)[0]]
            continue
        owner[inside] = len(accepted)
        covered |= inside
        accepted.append(i)

    logger.info(
        "packing at r=%g: %d centers from %d candidates", r, len(accepted), count
    )
    return Packing(
        r=r,
        radius=rt,
        centers=[as_point(points[i]) for i in accepted],
        params=[tuple(float(v) for v in cand[i]) for i in accepted],
        maximality_certificate=certificate.tolist(),
        candidate_count=count,
    )


# covering


def covering_matrix(
    domain: DomainModel, packing: Packing, K: float, z1, z2
) -> np.ndarray:
    """membership of each sample (rows) in each V_r(zeta_j) (columns)"""
    c1, c2 = centers_of(packing)
    z1, z2 = np.atleast_1d(z1)[:, None], np.atleast_1d(z2)[:, None]
    dist = np.sqrt(np.abs(z1 - c1) ** 2 + np.abs(z2 - c2) ** 2)
    R = np.abs(domain.kernel.evaluate((z1, z2), (c1, c2)))
    lam = lambda_theta(domain, (c1, c2), K * packing.r)
    return (dist < K * packing.radius) & (R < lam)


def covering_check(domain: DomainModel, packing: Packing, K: float, zeta) -> bool:
    zeta = as_point(zeta)
    return bool(covering_matrix(domain, packing, K, zeta[0], zeta[1]).any())


def fit_K(domain: DomainModel, packing: Packing, samples: np.ndarray) -> float:
    """smallest power of two K for which every sample lies in some V_r(zeta_j)"""
    K = 1.0
    for _ in range(MAX_K_DOUBLINGS):
        member = covering_matrix(domain, packing, K, samples[:, 0], samples[:, 1])
        if member.any(axis=1).all():
            logger.info("covering constant K=%g at r=%g", K, packing.r)
            return K
        K *= 2
    raise NumericFailure(f"no covering constant up to {K:g} at r={packing.r:g}")


# g, f_n and the product


def _terms(domain, packing: Packing, n: int, z1, z2):
    c1, c2 = centers_of(packing)
    z1, z2 = np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex)
    R = domain.kernel.evaluate((z1[..., None], z2[..., None]), (c1, c2))
    rt = packing.radius
    gap = R - rt
    if np.any(np.abs(gap) <= 1e-14 * rt):
        raise SingularEvaluationError(
            f"R(z, zeta_j) = r^tau for some center at r={packing.r:g}"
        )
    return R, rt / gap


def eval_g(
    domain: DomainModel, packing: Packing, n: int, z, truncation: float = None
) -> GValue:
    """
    Sum of (r^tau / (R(z, zeta_j) - r^tau))^{2n} over centers with
    |R| <= truncation * r^tau, plus a bound on the discarded terms. Works on
    a single point or on arrays of points.
    """
    if n < 2:
        raise UsageError("n must be at least 2")
    if truncation is not None and truncation < 2:
        raise UsageError("truncation must be at least 2 radii")
    R, q = _terms(domain, packing, n, z[0], z[1])
    terms = q ** (2 * n)
    if truncation is None:
        value, tail = terms.sum(axis=-1), np.zeros(terms.shape[:-1])
    else:
        k = np.abs(R) / packing.radius
        keep = k <= truncation
        with np.errstate(divide="ignore", over="ignore"):
            bound = np.where(
                R.real <= 0, (1 + k**2) ** (-float(n)), (k - 1) ** (-2.0 * n)
            )
        value = np.where(keep, terms, 0).sum(axis=-1)
        tail = np.where(keep, 0.0, bound).sum(axis=-1)
    if np.ndim(value) == 0:
        return GValue(complex(value), float(tail))
    return GValue(value, tail)


def eval_f_n(
    domain: DomainModel, packing: Packing, n: int, z, truncation: float = None
):
    g = eval_g(domain, packing, n, z, truncation).value
    return 1 - CounterexampleParams.epsilon(n) - g


def eval_f_product(
    domain: DomainModel,
    stages: Sequence[Tuple[int, Packing]],
    z,
    truncation: float = None,
):
    """
    f = prod_k (a_k - g_k) / (1 - a_k g_k) with a_k = 1 - eps_{n_k}.
    Returns the value and the modulus of every factor.
    """
    value = 1.0 + 0j
    moduli = []
    for index, (n, packing) in enumerate(stages, start=1):
        a = 1 - CounterexampleParams.epsilon(n)
        g = eval_g(domain, packing, n, z, truncation).value
        den = 1 - a * g
        if np.any(np.abs(den) < 1e-12):
            raise SingularProductError(
                "denominator 1 - (1 - eps) g vanishes", stage=index
            )
        factor = (a - g) / den
        moduli.append(np.abs(factor))
        value = value * factor
    return value, moduli


# zeros


def _line(center, nu, u):
    return center[0] + u * nu[0], center[1] + u * nu[1]


def _kernel_on_line(domain: DomainModel, center, nu, u):
    """
    R(line(u), center) and its u-derivative. R is evaluated as
    R(center, center) plus the increment along the line, so its error scales
    with |R| instead of with the size of the individual monomials.
    """
    u = np.asarray(u, dtype=complex)
    h = (u * nu[0], u * nu[1])
    R = domain.kernel.evaluate(center, center) + domain.kernel.increment(center, h)
    z = _line(center, nu, u)
    dR = (
        domain.kernel_dz[0].evaluate(z, center) * nu[0]
        + domain.kernel_dz[1].evaluate(z, center) * nu[1]
    )
    return R, dR


def _invert_on_line(domain: DomainModel, center, nu, target, u0, scale: float):
    """
    Newton for R(line(u), center) = target. A miss counts as converged below
    1e-13 * scale or below a few ulps of the kernel values involved; Newton
    also stops once its steps stop shrinking on misses already that small.
    """
    u = np.array(u0, dtype=complex)
    target = np.asarray(target, dtype=complex)
    level = np.abs(target) + abs(domain.kernel.evaluate(center, center))
    tol = np.maximum(1e-13 * scale, FLOOR_ULPS * EPS * level)
    last = math.inf
    for _ in range(50):
        R, dR = _kernel_on_line(domain, center, nu, u)
        if np.any(np.abs(dR) * domain.cond_max < 1):
            raise NumericFailure(
                f"R is stationary on the normal line through {as_point(center)}"
            )
        miss = R - target
        if np.all(np.abs(miss) <= tol):
            return u
        step = miss / dR
        size = float(np.max(np.abs(step)))
        if size >= last and np.all(np.abs(miss) <= STALL_FACTOR * scale):
            logger.debug("inversion stalled at miss %.3g", float(np.max(np.abs(miss))))
            return u
        last = size
        u = u - step
    raise NumericFailure(
        f"could not invert R on the normal line through {as_point(center)}"
    )


def _f_on_line(domain, packing: Packing, n: int, index: int, nu, u, truncation=None):
    """
    f_n and its u-derivative along the complex-normal line through center
    index. The term of that center uses the centered kernel; the other
    centers sit at least a few radii away and are evaluated directly.
    """
    center = tuple(np.array(packing.centers[index], dtype=complex))
    c1, c2 = centers_of(packing)
    u = np.asarray(u, dtype=complex)
    z1, z2 = (np.asarray(v)[..., None] for v in _line(center, nu, u))
    R = np.array(domain.kernel.evaluate((z1, z2), (c1, c2)), dtype=complex)
    dR = (
        domain.kernel_dz[0].evaluate((z1, z2), (c1, c2)) * nu[0]
        + domain.kernel_dz[1].evaluate((z1, z2), (c1, c2)) * nu[1]
    )
    own, _ = _kernel_on_line(domain, center, nu, u)
    R[..., index] = own
    rt = packing.radius
    gap = R - rt
    if np.any(np.abs(gap) <= 1e-14 * rt):
        raise SingularEvaluationError(
            f"R(z, zeta_j) = r^tau for some center at r={packing.r:g}"
        )
    q = rt / gap
    if truncation is None:
        keep = np.ones(R.shape, dtype=bool)
    else:
        keep = np.abs(R) <= truncation * rt
    g = np.where(keep, q ** (2 * n), 0).sum(axis=-1)
    slope = np.where(keep, 2 * n * q ** (2 * n + 1) * dR, 0).sum(axis=-1) / rt
    return 1 - CounterexampleParams.epsilon(n) - g, slope


def winding_number(values: np.ndarray) -> float:
    """total change of argument along a closed sampled curve, in turns"""
    if np.any(values == 0):
        raise SingularEvaluationError("contour passes through a zero")
    closed = np.append(values, values[:1])
    return float(np.sum(np.angle(closed[1:] / closed[:-1])) / (2 * math.pi))


def _certify(domain, packing, n, index, nu, R0, u_seed, dR_seed, gamma, truncation):
    center = tuple(np.array(packing.centers[index], dtype=complex))
    rt = packing.radius
    history = []
    points = START_CONTOUR_POINTS
    while points <= MAX_CONTOUR_POINTS:
        phi = 2 * math.pi * np.arange(points) / points
        targets = R0 + gamma * rt * np.exp(1j * phi)
        u = _invert_on_line(
            domain, center, nu, targets, u_seed + (targets - R0) / dR_seed, rt
        )
        values, _ = _f_on_line(domain, packing, n, index, nu, u, truncation)
        history.append(int(round(winding_number(values))))
        if len(history) >= 3 and history[-1] == history[-2] == history[-3]:
            return history[-1], points
        points *= 2
    raise NumericFailure(
        f"winding sum around {as_point(center)} did not stabilise: {history}"
    )


def find_zero_near(
    domain: DomainModel,
    packing: Packing,
    index: int,
    n: int,
    params: CounterexampleParams = None,
) -> ZeroRecord:
    """
    Zero of f_n on the complex-normal line through center index, certified
    by the winding number of f_n around the circle
    R = R0 + gamma r^tau e^{i phi} and then polished by Newton.
    """
    params = params or CounterexampleParams()
    rt = packing.radius
    center = tuple(np.array(packing.centers[index], dtype=complex))
    nu = unit_normal(domain, *center)
    eps, gamma = params.epsilon(n), params.gamma(n)
    R0 = rt * (1 - (1 - eps) ** (-1.0 / (2 * n)))

    _, dR0 = _kernel_on_line(domain, center, nu, 0j)
    u_seed = complex(_invert_on_line(domain, center, nu, R0, R0 / dR0, rt))
    _, dR_seed = _kernel_on_line(domain, center, nu, u_seed)

    winding, contour_points = _certify(
        domain, packing, n, index, nu, R0, u_seed, dR_seed, gamma, params.truncation
    )
    if winding < 1:
        logger.warning(
            "no certified zero near center %d (winding %d, n=%d)", index, winding, n
        )

    u = u_seed
    for _ in range(50):
        value, slope = _f_on_line(domain, packing, n, index, nu, u, params.truncation)
        if abs(value) < 1e-14:
            break
        u = complex(u - value / slope)
    value, _ = _f_on_line(domain, packing, n, index, nu, u, params.truncation)
    residual = float(abs(value))
    if residual >= params.zero_tolerance:
        logger.warning("zero near center %d polished only to %.3g", index, residual)

    z = _line(center, nu, u)
    geometry = point_geometry(domain, z)
    w_nr = as_point(z)
    c_n = (1 - eps) ** (-1.0 / (2 * n)) - 1
    return ZeroRecord(
        center=as_point(center),
        center_index=index,
        n=n,
        r=packing.r,
        w_nr=w_nr,
        winding_number=winding,
        contour_points=contour_points,
        distance_to_center=float(np.linalg.norm(np.subtract(w_nr, center))),
        projection_deviation=float(np.linalg.norm(np.subtract(geometry.pi_z, center))),
        delta=geometry.delta,
        empirical_C=geometry.delta / rt,
        residual=residual,
        geometry=geometry,
        delta_lower_check=geometry.delta > 0.5 * c_n * rt,
    )


def verify_zero_in_region(
    domain: DomainModel, zero: ZeroRecord, w, spec: RegionSpec
) -> RegionVerdict:
    """both broadened-region inequalities for the zero w_nr seen from base w"""
    return evaluate_region(domain, spec, as_point(w), zero.geometry)


# stages


def _covering_samples(domain, packing, index, K, box, count, rng):
    """w points of V_r(zeta_index), the center itself first"""
    pool = sample_box(domain, box, 20 * count, rng)
    inside = covering_matrix(domain, packing, K, pool[:, 0], pool[:, 1])[:, index]
    chosen = pool[inside][: count - 1]
    return [packing.centers[index]] + [as_point(p) for p in chosen]


def interior_samples(
    domain: DomainModel, packing: Packing, box, count: int, rng
) -> np.ndarray:
    """
    count points below random boundary points of the box at depths
    log-uniform in [MIN_DEPTH, 2] radii, followed by RAY_POINTS points on the
    inward normal ray of every center over the same depth range.
    """
    rng = make_rng(rng)
    base = sample_box(domain, box, count, rng)
    log_depth = rng.uniform(math.log(MIN_DEPTH), math.log(2.0), count)
    depth = packing.radius * np.exp(log_depth)
    c1, c2 = centers_of(packing)
    ray = packing.radius * np.geomspace(MIN_DEPTH, 2.0, RAY_POINTS)
    base = np.concatenate([base, np.repeat(np.stack([c1, c2], axis=1), RAY_POINTS, 0)])
    depth = np.concatenate([depth, np.tile(ray, len(c1))])
    nu1, nu2 = unit_normal(domain, base[:, 0], base[:, 1])
    return np.stack([base[:, 0] - depth * nu1, base[:, 1] - depth * nu2], axis=1)


def max_g(domain, packing, n, samples, truncation=None) -> float:
    g = eval_g(domain, packing, n, (samples[:, 0], samples[:, 1]), truncation)
    return float(np.max(np.abs(g.value) + g.tail_bound))


def g_profile(domain, packing: Packing, n: int, samples) -> Tuple[float, float]:
    """
    Largest |g| over the samples, and the largest sum of |term| over all
    centers but the dominant one. Wherever the dominant term has modulus at
    most one, |g| - 1 is bounded by that sum.
    """
    _, q = _terms(domain, packing, n, samples[:, 0], samples[:, 1])
    terms = q ** (2 * n)
    peak = float(np.abs(terms.sum(axis=-1)).max())
    moduli = np.sort(np.abs(terms), axis=-1)
    return peak, float(moduli[..., :-1].sum(axis=-1).max())


def shell_counts(
    domain: DomainModel, packing: Packing, samples, shells: int = SHELLS
) -> np.ndarray:
    """
    N_k, the largest number over the samples of centers with
    k <= |R(z, zeta_j)| / r^tau < k + 1, for k < shells; the last entry
    counts the centers farther out.
    """
    c1, c2 = centers_of(packing)
    z = (samples[:, 0][:, None], samples[:, 1][:, None])
    R = domain.kernel.evaluate(z, (c1, c2))
    k = np.minimum(np.floor(np.abs(R) / packing.radius).astype(int), shells)
    counts = np.stack([np.bincount(row, minlength=shells + 1) for row in k])
    return counts.max(axis=0)


def fit_shell_growth(counts: np.ndarray) -> Tuple[float, float]:
    """
    (C, t) with N_k <= C k^t on the occupied shells k >= 1, t by least squares
    in log-log
    """
    k = np.arange(1, len(counts) - 1, dtype=float)
    N = np.asarray(counts[1:-1], dtype=float)
    used = N > 0
    if used.sum() < 2:
        return float(N.max(initial=0.0)), 0.0
    t = float(np.polyfit(np.log(k[used]), np.log(N[used]), 1)[0])
    return float(np.max(N[used] / k[used] ** t)), t


def shell_bound(counts: np.ndarray, C: float, t: float, n: int) -> float:
    """
    bound on the non-dominant part of |g| from the shell counts: every center
    in shell k contributes at most (1 + k^2)^-n when Re R <= 0
    """
    shells = len(counts) - 1
    k = np.arange(1, shells, dtype=float)
    near = max(int(counts[0]) - 1, 0)
    middle = float(np.sum(C * k**t * (1 + k**2) ** (-float(n))))
    far = float(counts[-1]) * (1.0 + shells**2) ** (-float(n))
    return near + middle + far


def fit_stage(
    domain: DomainModel,
    index: int,
    params: CounterexampleParams,
    region: RegionSpec,
    rng,
) -> StageRecord:
    """
    Build stage index: halve r from r0 until every sampled (center, w) pair
    places the stage zero inside the broadened region based at w.
    """
    rng = make_rng(rng)
    tau = domain.tau_global
    n = params.n_k(index)
    r = params.r0
    comparable = RegionSpec(family=RegionFamily.comparable)
    for halvings in range(params.max_halvings + 1):
        box = counterexample_box(r, tau, params)
        packing = build_packing(domain, r, rng, params, box=box)
        K = fit_K(domain, packing, sample_box(domain, box, params.cover_samples, rng))
        packing = packing.copy(update={"K": K})
        zeros = parallel_map(
            lambda j: find_zero_near(domain, packing, j, n, params),
            range(len(packing.centers)),
        )
        pairs = passed = 0
        h1_needed = h2_needed = 0.0
        checked = []
        for j, zero in enumerate(zeros):
            ws = _covering_samples(domain, packing, j, K, box, params.w_per_center, rng)
            verdicts = [verify_zero_in_region(domain, zero, w, region) for w in ws]
            pairs += len(verdicts)
            passed += sum(v.verdict for v in verdicts)
            for w in ws:
                plain = verify_zero_in_region(domain, zero, w, comparable)
                h1_needed = max(h1_needed, plain.lhs1 / plain.rhs1)
                h2_needed = max(h2_needed, plain.lhs2 / plain.rhs2)
            home = verdicts[0]
            checked.append(
                zero.copy(
                    update={
                        "region_membership": {
                            "cond1": home.cond1,
                            "cond2": home.cond2,
                            "verdict": home.verdict,
                            "all_w": all(v.verdict for v in verdicts),
                        }
                    }
                )
            )
        logger.info(
            "stage %d (n=%d, r=%g): %d/%d zero memberships verified, "
            "broadening needed h1=%.3g h2=%.3g",
            index,
            n,
            r,
            passed,
            pairs,
            h1_needed,
            h2_needed,
        )
        if passed == pairs or halvings == params.max_halvings:
            break
        r /= 2

    samples = interior_samples(domain, packing, box, params.product_samples, rng)
    peak, excess = g_profile(domain, packing, n, samples)
    A = n * max(excess, peak - 1, 0.0)
    eps = params.epsilon(n)
    if (1 - eps) * (1 + A / n) >= 1:
        logger.warning(
            "stage %d: (1 - eps)(1 + A/n) >= 1, product may be singular", index
        )
    return StageRecord(
        index=index,
        n=n,
        r=r,
        epsilon=eps,
        gamma=params.gamma(n),
        A=A,
        K=K,
        center_count=len(packing.centers),
        halvings=halvings,
        membership_pairs=pairs,
        membership_passed=passed,
        empirical_C=min(z.empirical_C for z in checked),
        h1_needed=h1_needed,
        h2_needed=h2_needed,
        packing=packing,
        zeros=checked,
    )


def stage_pairs(stages: Sequence[StageRecord]) -> List[Tuple[int, Packing]]:
    return [(s.n, s.packing) for s in stages]


def oscillation_experiment(
    domain: DomainModel,
    zeta,
    stages: Sequence[StageRecord],
    scales: Sequence[float],
    *,
    region: RegionSpec,
    params: CounterexampleParams = None,
    control: bool = False,
    ray_points: int = 25,
) -> List[OscillationRow]:
    """
    For every scale s look for a point of the region at base zeta with
    delta <= s where |f| is tiny (a stage zero) and one where |f| is large
    (on the inward normal ray). With control=True both witnesses are taken
    from the normal ray only.
    """
    params = params or CounterexampleParams()
    zeta = as_point(zeta)
    pairs = stage_pairs(stages)
    nu = unit_normal(domain, *zeta)
    zeros = sorted(
        ((st.index, z) for st in stages for z in st.zeros),
        key=lambda item: np.linalg.norm(np.subtract(item[1].w_nr, zeta)),
    )
    rows = []
    for s in scales:
        low = low_delta = low_stage = None
        if not control:
            for stage_index, zero in zeros:
                if zero.delta > s:
                    continue
                if not evaluate_region(domain, region, zeta, zero.geometry).verdict:
                    continue
                f = eval_f_product(domain, pairs, zero.w_nr, params.truncation)[0]
                value = float(abs(f))
                if value < params.low_threshold:
                    low, low_delta = value, zero.delta
                    low_stage = stage_index
                    break

        t = np.geomspace(s / 1000, s, ray_points)
        ray = (zeta[0] - t * nu[0], zeta[1] - t * nu[1])
        values = np.abs(eval_f_product(domain, pairs, ray, params.truncation)[0])
        high = high_delta = None
        for i in np.argsort(-values):
            geometry = point_geometry(domain, (ray[0][i], ray[1][i]))
            if geometry.delta > s:
                continue
            if not evaluate_region(domain, region, zeta, geometry).verdict:
                continue
            if values[i] > params.high_threshold:
                high, high_delta = float(values[i]), geometry.delta
            break
        if control:
            i = int(np.argmin(values))
            if values[i] < params.low_threshold:
                low, low_delta = float(values[i]), float(t[i])
        rows.append(
            OscillationRow(
                base=zeta,
                scale=s,
                low_value=low,
                low_delta=low_delta,
                low_stage=low_stage,
                high_value=high,
                high_delta=high_delta,
                control=control,
                passed=low is not None and high is not None,
            )
        )
    return rows
