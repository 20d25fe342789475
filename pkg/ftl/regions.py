import logging
from typing import List
import numpy as np
from pydantic import BaseModel
from .errors import UsageError
from .geometry import (
    DomainModel,
    evaluate_region,
    from_config,
    point_geometry,
    unit_normal,
)
from .schemas import RegionFamily, RegionSpec, RunConfig
from .sweeps import Sweep
from .utils import output_path

logger = logging.getLogger(__name__)


class RegionRow(BaseModel):
    family: RegionFamily
    theta: float
    depth: float
    z1_re: float
    z1_im: float
    z2_re: float
    z2_im: float
    pi1_re: float
    pi1_im: float
    pi2_re: float
    pi2_im: float
    delta: float
    delta_n: float
    tau_z: int
    D: float
    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float
    cond1: bool
    cond2: bool
    verdict: bool


class RegionSliceSweep(Sweep):
    RowCls = RegionRow
    max_chunk = 256
    header_notes = {
        "family": "approach region family (alpha, comparable, broadened)",
        "theta": "rotation of the boundary point below z",
        "depth": "distance walked along the inward unit normal",
        "z1_re": "interior point, Re z1",
        "z1_im": "interior point, Im z1",
        "z2_re": "interior point, Re z2",
        "z2_im": "interior point, Im z2",
        "pi1_re": "normal projection, Re z1",
        "pi1_im": "normal projection, Im z1",
        "pi2_re": "normal projection, Re z2",
        "pi2_im": "normal projection, Im z2",
        "delta": "Euclidean distance to the boundary",
        "delta_n": "complex-normal component of z - pi(z)",
        "tau_z": "type at pi(z)",
        "D": "anisotropic scale D(z)",
        "lhs1": "left side of the first inequality",
        "rhs1": "right side of the first inequality",
        "lhs2": "|R(pi(z), base)|",
        "rhs2": "right side of the second inequality",
        "cond1": "first inequality holds",
        "cond2": "second inequality holds",
        "verdict": "both inequalities hold",
    }

    def __init__(self, domain: DomainModel, specs: List[RegionSpec], base, **kwargs):
        super().__init__(**kwargs)
        self.domain = domain
        self.specs = specs
        self.base = base

    def evaluate(self, point):
        theta, depth, z = point
        geometry = point_geometry(self.domain, z)
        rows = []
        for spec in self.specs:
            verdict = evaluate_region(self.domain, spec, self.base, geometry)
            (p1, p2), (z1, z2) = geometry.pi_z, geometry.z
            rows.append(
                RegionRow(
                    family=spec.family,
                    theta=theta,
                    depth=depth,
                    z1_re=z1.real,
                    z1_im=z1.imag,
                    z2_re=z2.real,
                    z2_im=z2.imag,
                    pi1_re=p1.real,
                    pi1_im=p1.imag,
                    pi2_re=p2.real,
                    pi2_im=p2.imag,
                    delta=geometry.delta,
                    delta_n=geometry.delta_n,
                    tau_z=geometry.tau_z,
                    D=geometry.D,
                    lhs1=verdict.lhs1,
                    rhs1=verdict.rhs1,
                    lhs2=verdict.lhs2,
                    rhs2=verdict.rhs2,
                    cond1=verdict.cond1,
                    cond2=verdict.cond2,
                    verdict=verdict.verdict,
                )
            )
        return rows


def slice_points(domain: DomainModel, cfg: RunConfig) -> list:
    """(theta, depth, z) over a tangential x depth grid below the base circle"""
    s = cfg.slice
    if s.tangential_points < 1 or s.depth_points < 1:
        raise UsageError("empty region slice")
    if not 0 < s.depth_min <= s.depth_max:
        raise UsageError("slice depths must satisfy 0 < depth_min <= depth_max")
    thetas = np.linspace(-s.tangential_half, s.tangential_half, s.tangential_points)
    depths = np.geomspace(s.depth_min, s.depth_max, s.depth_points)
    params = np.zeros((len(thetas), 3))
    params[:, 0] = thetas
    boundary = domain.chart(params)
    nu1, nu2 = unit_normal(domain, boundary[:, 0], boundary[:, 1])
    points = []
    for i, theta in enumerate(thetas):
        for depth in depths:
            z = (boundary[i, 0] - depth * nu1[i], boundary[i, 1] - depth * nu2[i])
            points.append((float(theta), float(depth), z))
    return points


def region_specs(cfg: RunConfig) -> List[RegionSpec]:
    spec = cfg.region
    return [
        spec.copy(update={"family": RegionFamily.alpha}),
        spec.copy(update={"family": RegionFamily.comparable}),
        spec.copy(update={"family": RegionFamily.broadened}),
    ]


def cmd_region_slice(cfg: RunConfig) -> List:
    domain = from_config(cfg)
    if domain.symbolic_only:
        raise UsageError(f"{cfg.preset} is registered for symbolic use only")
    tau = domain.tau_global
    domain.table(max(tau, 2))
    sweep = RegionSliceSweep(domain, region_specs(cfg), domain.base_point)
    result = sweep.run(slice_points(domain, cfg))
    for family in RegionFamily:
        inside = sum(row.verdict for row in result.rows if row.family == family)
        logger.info(
            "%s: %d slice points inside the %s region",
            cfg.preset,
            inside,
            family.value,
        )
    path = output_path(cfg.out_dir, "region-slice", cfg.preset, suffix=".csv")
    return [sweep.write(path, result)]


def register(subparsers, parents):
    parser = subparsers.add_parser(
        "region-slice",
        parents=parents,
        help="region membership over a tangential x depth slice",
    )
    parser.add_argument("--alpha", type=float, help="aperture of the alpha region")
    parser.set_defaults(func=cmd_region_slice)
    return parser
