import logging
import math
import threading
import warnings
from typing import Callable, Dict, List
import numpy as np
from scipy.stats import qmc
from ..algebra import ConjPoly, PolarizedKernel, Z1, ZB1, Z2, ZB2, polarize
from ..errors import ChartError, DomainError, TypeExceedsError, UsageError
from ..schemas import PatchSpec, Point, RunConfig, as_point
from ..utils import make_rng
from . import crgeom

logger = logging.getLogger(__name__)

BASE_POINT: Point = (1 + 0j, 0j)


class BoundaryPatch:
    """
    Chart box U around the base point.

    Parameters are (theta, x, y). The chart starts at (e^{i theta}, x + iy)
    and Newton-solves rho(t e^{i theta}, x + iy) = 0 for real t > 0, i.e. it
    walks along the complex-normal line of the base point rotated by theta.
    """

    def __init__(self, spec: PatchSpec = None):
        self.spec = spec or PatchSpec()
        if self.spec.resolution < 1:
            raise UsageError("patch resolution must be at least 1")

    @property
    def half_widths(self) -> np.ndarray:
        s = self.spec
        return np.array([s.theta_half, s.z2_half, s.z2_half])

    def grid(self, resolution: int = None) -> np.ndarray:
        """parameter grid, shape (resolution**3, 3), centered for odd resolution"""
        n = self.spec.resolution if resolution is None else resolution
        if n < 1:
            raise UsageError("empty patch grid")
        axes = [
            np.linspace(-h, h, n) if n > 1 else np.zeros(1) for h in self.half_widths
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


class DomainModel:
    """
    A bounded domain {rho < 0} near the base point (1, 0) together with the
    derived objects every computation needs: polarized kernel, tangential
    frame, cached commutator tables and the patch chart.
    """

    def __init__(
        self,
        name: str,
        rho: ConjPoly,
        *,
        radius_bound: float = 1.0,
        patch: PatchSpec = None,
        symbolic_only: bool = False,
        k_max: int = crgeom.DEFAULT_K_MAX,
        type_tol: float = 1e-8,
        boundary_tol: float = 1e-10,
        cond_max: float = 1e12,
    ):
        self.name = name
        self.rho = rho
        self.radius_bound = radius_bound
        self.patch = BoundaryPatch(patch)
        self.symbolic_only = symbolic_only
        self.k_max = k_max
        self.type_tol = type_tol
        self.boundary_tol = boundary_tol
        self.cond_max = cond_max
        self.base_point = BASE_POINT
        self.table_cache: Dict[int, crgeom.CommutatorTable] = {}
        self._frame = None
        self._tau = None
        self._lock = threading.RLock()

        if not symbolic_only and not rho.is_real():
            raise DomainError(f"{name}: the defining function is not real valued")
        if abs(rho.evaluate(*BASE_POINT)) > 1e-14:
            raise DomainError(f"{name}: the base point (1, 0) is not on the boundary")
        self.kernel: PolarizedKernel = polarize(rho)
        self.kernel_dz = (self.kernel.derivative_z(0), self.kernel.derivative_z(1))
        self.d = (rho.derivative(Z1), rho.derivative(Z2))
        self.db = (rho.derivative(ZB1), rho.derivative(ZB2))
        for label, poly in (("z1", self.d[0]), ("zb1", self.db[0])):
            if abs(poly.evaluate(*BASE_POINT)) == 0:
                raise DomainError(
                    f"{name}: d rho / d {label} vanishes at the base point"
                )
        # A[j][k] = rho_{z_j z_k}, B[j][k] = rho_{z_j zb_k}
        self.A = [[self.d[j].derivative(s) for s in (Z1, Z2)] for j in range(2)]
        self.B = [[self.d[j].derivative(s) for s in (ZB1, ZB2)] for j in range(2)]

    def __repr__(self):
        return f"DomainModel({self.name!r})"

    @property
    def frame(self) -> crgeom.Frame:
        with self._lock:
            if self._frame is None:
                self._frame = crgeom.frame_of(self.rho)
        return self._frame

    def table(self, k_max: int = None) -> crgeom.CommutatorTable:
        return crgeom.build_table(self, self.k_max if k_max is None else k_max)

    def rho_at(self, z1, z2):
        return self.rho.evaluate(z1, z2).real

    def gradient(self, z1, z2):
        """(rho_{zb1}, rho_{zb2}), half the real gradient read as a complex vector"""
        return self.db[0].evaluate(z1, z2), self.db[1].evaluate(z1, z2)

    def hessian(self, z1, z2) -> np.ndarray:
        """real Hessian in the coordinates (x1, y1, x2, y2)"""
        A = [[p.evaluate(z1, z2) for p in row] for row in self.A]
        B = [[p.evaluate(z1, z2) for p in row] for row in self.B]
        H = np.empty((4, 4))
        for j in range(2):
            for k in range(2):
                H[2 * j, 2 * k] = 2 * (A[j][k] + B[j][k]).real
                H[2 * j, 2 * k + 1] = -2 * (A[j][k] + B[k][j]).imag
                H[2 * j + 1, 2 * k + 1] = 2 * (B[j][k] - A[j][k]).real
        for j in range(2):
            for k in range(2):
                H[2 * k + 1, 2 * j] = H[2 * j, 2 * k + 1]
        return H

    def capital_lambdas(self, z1, z2, upto: int = None) -> np.ndarray:
        upto = self.tau_global if upto is None else upto
        return self.table(upto).capital_lambdas(z1, z2, upto=upto)

    def point_type(self, point, tol: float = None):
        return crgeom.point_type(
            self, point, self.type_tol if tol is None else tol, self.k_max
        )

    def types_at(self, z1: np.ndarray, z2: np.ndarray, tol: float = None) -> np.ndarray:
        """vectorized point type, TypeExceedsError names the first untyped point"""
        tol = self.type_tol if tol is None else tol
        z1, z2 = np.atleast_1d(z1), np.atleast_1d(z2)
        types = np.zeros(z1.shape, dtype=int)
        for k in range(2, self.k_max + 1):
            open_ = types == 0
            if not open_.any():
                break
            lam = self.table(k).capital_lambdas(z1[open_], z2[open_], upto=k)[k]
            hit = np.flatnonzero(open_)[lam > tol]
            types[hit] = k
        if (types == 0).any():
            i = int(np.flatnonzero(types == 0)[0])
            point = as_point((z1[i], z2[i]))
            raise TypeExceedsError(
                f"Lambda_k <= {tol:g} for every k <= {self.k_max} at {point}",
                point=point,
                k_max=self.k_max,
            )
        return types

    # chart

    def chart(self, params: np.ndarray, *, box: np.ndarray = None) -> np.ndarray:
        """map (theta, x, y) rows to boundary points, a complex array of shape (n, 2)"""
        spec = self.patch.spec
        params = np.atleast_2d(np.asarray(params, dtype=float))
        box = self.patch.half_widths if box is None else box
        outside = np.any(np.abs(params) > box * (1 + 1e-12), axis=1)
        if outside.any():
            bad = params[np.flatnonzero(outside)[0]]
            raise ChartError(
                f"chart parameters {tuple(bad)} lie outside the validity box"
            )
        rotation = np.exp(1j * params[:, 0])
        z2 = params[:, 1] + 1j * params[:, 2]
        t = np.ones(len(params))
        for iteration in range(spec.chart_iterations):
            z1 = t * rotation
            value = self.rho.evaluate(z1, z2).real
            slope = 2 * (self.d[0].evaluate(z1, z2) * rotation).real
            if np.any(slope == 0):
                raise ChartError("chart Newton step met a critical point of rho")
            t = t - value / slope
            # one step past the tolerance leaves |rho| at rounding level
            if np.all(np.abs(value) < spec.chart_tolerance):
                break
        else:
            z1 = t * rotation
            value = self.rho.evaluate(z1, z2).real
            if not np.all(np.abs(value) < spec.chart_tolerance):
                i = int(np.argmax(np.abs(value)))
                raise ChartError(
                    f"chart did not converge at parameters {tuple(params[i])} "
                    f"(|rho| = {abs(value[i]):.3g})"
                )
        logger.debug(
            "chart converged in %d iterations for %d points", iteration, len(params)
        )
        return np.stack([t * rotation, z2], axis=1)

    def patch_points(self, resolution: int = None) -> np.ndarray:
        return self.chart(self.patch.grid(resolution))

    @property
    def tau_global(self) -> int:
        if self.symbolic_only:
            raise DomainError(f"{self.name} is registered for symbolic use only")
        with self._lock:
            if self._tau is None:
                points = self.patch_points()
                self._tau = int(self.types_at(points[:, 0], points[:, 1]).max())
                logger.info(
                    "%s: tau over the %d patch grid points is %d",
                    self.name,
                    len(points),
                    self._tau,
                )
        return self._tau


def sample_patch(domain: DomainModel, count: int, seed) -> List[Point]:
    """
    Seeded quasi-uniform boundary samples in U. The first sample is always the
    chart center, i.e. the base point.
    """
    if count < 1:
        raise UsageError("sample count must be positive")
    params = np.zeros((count, 3))
    if count > 1:
        sobol = qmc.Sobol(d=3, scramble=True, seed=make_rng(seed))
        with warnings.catch_warnings():
            # balance warning for counts that are not powers of two
            warnings.simplefilter("ignore", UserWarning)
            unit = sobol.random(count - 1)
        params[1:] = (2 * unit - 1) * domain.patch.half_widths
    points = domain.chart(params)
    radius = np.linalg.norm(points, axis=1)
    if np.any(radius > domain.radius_bound + 1e-12):
        raise DomainError(
            f"{domain.name}: patch sample outside the radius bound "
            f"{domain.radius_bound}"
        )
    return [as_point(p) for p in points]


def tau_global(domain: DomainModel) -> int:
    return domain.tau_global


# presets


def _z(name: str) -> ConjPoly:
    return ConjPoly.symbol(name)


def sphere_rho() -> ConjPoly:
    return _z("z1") * _z("zb1") + _z("z2") * _z("zb2") - 1


def egg_rho(m: int) -> ConjPoly:
    return _z("z1") * _z("zb1") + (_z("z2") * _z("zb2")) ** m - 1


def quartic_rho() -> ConjPoly:
    return _z("z1") * _z("zb1") + _z("z2") ** 2 * _z("zb1") ** 2 - 1


def egg_radius_bound(m: int) -> float:
    """sup |z| on the boundary: maximize 1 - s^m + s over s = |z2|^2 in [0, 1]"""
    if m == 1:
        return 1.0
    s = m ** (-1.0 / (m - 1))
    return math.sqrt(1 - s**m + s)


PRESETS: Dict[str, Callable[..., DomainModel]] = {
    "sphere": lambda **kw: DomainModel("sphere", sphere_rho(), radius_bound=1.0, **kw),
    "egg-m2": lambda **kw: DomainModel(
        "egg-m2", egg_rho(2), radius_bound=egg_radius_bound(2), **kw
    ),
    "egg-m3": lambda **kw: DomainModel(
        "egg-m3", egg_rho(3), radius_bound=egg_radius_bound(3), **kw
    ),
    "quartic": lambda **kw: DomainModel(
        "quartic", quartic_rho(), radius_bound=math.inf, symbolic_only=True, **kw
    ),
}


def from_preset(name: str, **kwargs) -> DomainModel:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise UsageError(
            f"unknown domain preset {name!r}, expected one of {sorted(PRESETS)}"
        )
    return factory(**kwargs)


def from_config(cfg: RunConfig) -> DomainModel:
    """the configured preset with the run's patch, k_max and tolerances"""
    return from_preset(
        cfg.preset, patch=cfg.patch, k_max=cfg.k_max, **cfg.tolerances.dict()
    )
