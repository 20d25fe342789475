"""
Per-point boundary geometry: Euclidean normal projection, the anisotropic
scale D(z), the weighted invariant sum Lambda^theta, non-isotropic boundary
balls and the three approach-region predicates.
"""
import logging
import numpy as np
from ..errors import ChartError, TypeExceedsError
from ..schemas import PointGeometry, RegionFamily, RegionSpec, RegionVerdict, as_point
from .domain import DomainModel

logger = logging.getLogger(__name__)

MAX_PROJECTION_STEPS = 100


def _real(z1, z2) -> np.ndarray:
    return np.array([z1.real, z1.imag, z2.real, z2.imag])


def _complex(x: np.ndarray):
    return complex(x[0], x[1]), complex(x[2], x[3])


def _residual(domain: DomainModel, x: np.ndarray, mu: float, target: np.ndarray):
    z1, z2 = _complex(x)
    g1, g2 = domain.gradient(z1, z2)
    g = 2 * _real(g1, g2)
    return np.append(x - target + mu * g, domain.rho_at(z1, z2)), g


def project_to_boundary(
    domain: DomainModel, z, tube_cap: float = None
) -> PointGeometry:
    """
    Nearest boundary point by damped Newton on
        w - z + mu * grad rho(w) = 0,  rho(w) = 0
    in the five real unknowns (w, mu).
    """
    z = as_point(z)
    tube_cap = domain.patch.spec.tube_cap if tube_cap is None else tube_cap
    rho_z = domain.rho_at(*z)
    if abs(rho_z) > tube_cap:
        raise ChartError(
            f"{z} is outside the tubular neighbourhood (|rho| = {abs(rho_z):.3g})"
        )

    target = _real(*z)
    g1, g2 = domain.gradient(*z)
    g = 2 * _real(g1, g2)
    norm2 = float(g @ g)
    if norm2 == 0:
        raise ChartError(f"gradient of rho vanishes at {z}")
    mu = rho_z / norm2
    x = target - mu * g

    F, g = _residual(domain, x, mu, target)
    err = np.linalg.norm(F)
    for step in range(MAX_PROJECTION_STEPS):
        if err <= 1e-15:
            break
        H = domain.hessian(*_complex(x))
        J = np.zeros((5, 5))
        J[:4, :4] = np.eye(4) + mu * H
        J[:4, 4] = g
        J[4, :4] = g
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > domain.cond_max:
            raise ChartError(
                f"projection Jacobian is ill-conditioned near {_complex(x)} "
                f"(condition number {cond:.3g})"
            )
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise ChartError(f"projection Jacobian is singular near {_complex(x)}")
        damping = 1.0
        while damping > 1e-9:
            x_new, mu_new = x + damping * delta[:4], mu + damping * delta[4]
            F_new, g_new = _residual(domain, x_new, mu_new, target)
            err_new = np.linalg.norm(F_new)
            if err_new < err:
                break
            damping /= 2
        else:
            # no decrease possible: rounding floor
            if err < 1e-12:
                break
            raise ChartError(f"projection of {z} stalled at residual {err:.3g}")
        x, mu, F, g, err = x_new, mu_new, F_new, g_new, err_new
        logger.debug("projection step %d residual %.3g", step, err)
    else:
        if err > 1e-12:
            raise ChartError(
                f"projection of {z} did not converge in {MAX_PROJECTION_STEPS} steps"
            )

    pi = _complex(x)
    if not abs(domain.rho_at(*pi)) < domain.boundary_tol:
        raise ChartError(f"projection of {z} left the boundary at {pi}")
    diff = np.array(z) - np.array(pi)
    delta = float(np.linalg.norm(diff))
    nu = np.array(domain.gradient(*pi))
    nu = nu / np.linalg.norm(nu)
    delta_n = min(float(abs(np.vdot(nu, diff))), delta)
    return PointGeometry(z=z, pi_z=as_point(pi), delta=delta, delta_n=delta_n)


def unit_normal(domain: DomainModel, z1, z2):
    """outward unit complex normal (rho_zb1, rho_zb2) / |.|"""
    n1, n2 = domain.gradient(z1, z2)
    norm = np.sqrt(np.abs(n1) ** 2 + np.abs(n2) ** 2)
    return n1 / norm, n2 / norm


def capital_D(domain: DomainModel, z, geometry: PointGeometry = None) -> float:
    """min over k in [2, tau] of (delta / Lambda_k)^(1/k) at the projection of z"""
    geometry = geometry or project_to_boundary(domain, z)
    tau = domain.tau_global
    lam = domain.capital_lambdas(*geometry.pi_z, upto=tau)[2:]
    if not np.any(lam > domain.type_tol):
        raise TypeExceedsError(
            f"every Lambda_k at {geometry.pi_z} is below {domain.type_tol:g} "
            f"up to tau = {tau}",
            point=geometry.pi_z,
            k_max=tau,
        )
    ks = np.arange(2, tau + 1)
    keep = lam > 0
    return float(np.min((geometry.delta / lam[keep]) ** (1.0 / ks[keep])))


def with_scale(domain: DomainModel, geometry: PointGeometry) -> PointGeometry:
    """fill tau_z and D into a projected geometry"""
    report = domain.point_type(geometry.pi_z)
    return geometry.copy(
        update={"tau_z": report.tau_z, "D": capital_D(domain, None, geometry)}
    )


def point_geometry(domain: DomainModel, z) -> PointGeometry:
    return with_scale(domain, project_to_boundary(domain, z))


def lambda_theta(domain: DomainModel, point, theta):
    """sum over k in [2, tau] of theta^k Lambda_k(point); theta may be an array"""
    tau = domain.tau_global
    lam = domain.capital_lambdas(point[0], point[1], upto=tau)
    theta = np.asarray(theta, dtype=float)
    out = sum(theta**k * lam[k] for k in range(2, tau + 1))
    return float(out) if np.ndim(out) == 0 else out


def kernel_modulus(domain: DomainModel, z, w):
    return np.abs(domain.kernel.evaluate(z, w))


def ball_contains(domain: DomainModel, center, r: float, candidate) -> bool:
    center, candidate = as_point(center), as_point(candidate)
    if np.linalg.norm(np.subtract(candidate, center)) >= r:
        return False
    size = kernel_modulus(domain, candidate, center)
    return bool(size < lambda_theta(domain, center, r))


def evaluate_region(
    domain: DomainModel, spec: RegionSpec, base, geometry: PointGeometry
) -> RegionVerdict:
    """apply one family's two inequalities to an already projected and scaled point"""
    base = as_point(base)
    D = geometry.D
    pi, z = np.array(geometry.pi_z), np.array(geometry.z)
    R = float(kernel_modulus(domain, geometry.pi_z, base))
    if spec.family == RegionFamily.alpha:
        lhs1, rhs1 = np.linalg.norm(pi - base), spec.alpha * D
        rhs2 = lambda_theta(domain, base, spec.alpha * D)
    elif spec.family == RegionFamily.comparable:
        lhs1, rhs1 = np.linalg.norm(z - base), D
        rhs2 = lambda_theta(domain, base, D)
    else:
        lhs1, rhs1 = np.linalg.norm(z - base), spec.h1(geometry.delta_n) * D
        rhs2 = spec.h2(geometry.delta_n) * lambda_theta(domain, base, D)
    cond1, cond2 = bool(lhs1 < rhs1), bool(R < rhs2)
    return RegionVerdict(
        family=spec.family,
        cond1=cond1,
        cond2=cond2,
        verdict=cond1 and cond2,
        lhs1=float(lhs1),
        rhs1=float(rhs1),
        lhs2=R,
        rhs2=float(rhs2),
        geometry=geometry,
    )


def region_contains(domain: DomainModel, spec: RegionSpec, base, z) -> RegionVerdict:
    return evaluate_region(domain, spec, base, point_geometry(domain, z))
