import json
import logging
from collections import Counter
from functools import lru_cache
from typing import Dict, List
import numpy as np
from pydantic import BaseModel, Field, create_model
from .errors import NumericFailure, UsageError
from .geometry import DomainModel, from_config
from .schemas import RunConfig
from .sweeps import Sweep
from .utils import output_path, write_json

logger = logging.getLogger(__name__)


class TypeMapSummary(BaseModel):
    preset: str = Field(..., example="egg-m2")
    k_max: int = Field(..., example=8)
    tau: int = Field(..., example=4)
    points: int = Field(..., example=729)
    failed: int = Field(..., example=0)
    type_counts: Dict[int, int] = Field(..., example={2: 720, 4: 9})


@lru_cache(maxsize=None)
def type_row_model(k_max: int):
    fields = {
        "theta": (float, ...),
        "x": (float, ...),
        "y": (float, ...),
        "z1_re": (float, ...),
        "z1_im": (float, ...),
        "z2_re": (float, ...),
        "z2_im": (float, ...),
    }
    fields.update({f"lambda_{k}": (float, ...) for k in range(2, k_max + 1)})
    fields["tau_z"] = (int, ...)
    return create_model(f"TypeRowK{k_max}", **fields)


class TypeMapSweep(Sweep):
    """Lambda_2..Lambda_kmax and the point type over the patch parameter grid"""

    max_chunk = 512

    def __init__(self, domain: DomainModel, chunk: int = 64, threads: int = None):
        super().__init__(chunk, threads)
        self.domain = domain
        self.k_max = domain.k_max
        self.RowCls = type_row_model(self.k_max)
        self.header_notes = {
            "theta": "chart rotation of z1",
            "x": "chart real part of z2",
            "y": "chart imaginary part of z2",
            "z1_re": "boundary point, Re z1",
            "z1_im": "boundary point, Im z1",
            "z2_re": "boundary point, Re z2",
            "z2_im": "boundary point, Im z2",
            "tau_z": "smallest k with Lambda_k above the type tolerance",
        }
        self.header_notes.update(
            {
                f"lambda_{k}": f"Lambda_{k} at the point"
                for k in range(2, self.k_max + 1)
            }
        )

    def evaluate(self, point):
        params = np.asarray(point)
        (z1, z2), = self.domain.chart(params)
        report = self.domain.point_type((z1, z2))
        lam = self.domain.table(self.k_max).capital_lambdas(z1, z2)
        row = {
            "theta": params[0],
            "x": params[1],
            "y": params[2],
            "z1_re": z1.real,
            "z1_im": z1.imag,
            "z2_re": z2.real,
            "z2_im": z2.imag,
            "tau_z": report.tau_z,
        }
        row.update({f"lambda_{k}": float(lam[k]) for k in range(2, self.k_max + 1)})
        return [self.RowCls(**row)]


def cmd_typemap(cfg: RunConfig) -> List:
    domain = from_config(cfg)
    if domain.symbolic_only:
        raise UsageError(f"{cfg.preset} is registered for symbolic use only")
    grid = domain.patch.grid()
    table = domain.table(cfg.k_max)
    logger.info(
        "%s: %d commutator entries up to degree %d", cfg.preset, len(table), cfg.k_max
    )

    sweep = TypeMapSweep(domain)
    result = sweep.run(list(grid))
    counts = Counter(row.tau_z for row in result.rows)
    if not counts:
        raise NumericFailure(f"{cfg.preset}: every patch point failed")
    summary = TypeMapSummary(
        preset=cfg.preset,
        k_max=cfg.k_max,
        tau=max(counts),
        points=result.meta.total_points,
        failed=result.meta.failed,
        type_counts=dict(sorted(counts.items())),
    )
    files = [
        sweep.write(
            output_path(cfg.out_dir, "typemap", cfg.preset, suffix=".csv"), result
        ),
        write_json(
            output_path(cfg.out_dir, "typemap", cfg.preset, "summary", suffix=".json"),
            summary,
        ),
    ]
    table_path = output_path(cfg.out_dir, "commutators", cfg.preset, suffix=".json")
    with open(table_path, "w") as f:
        json.dump(table.to_json(), f)
    files.append(table_path)
    logger.info("%s: tau over the grid is %d", cfg.preset, summary.tau)
    return files


def register(subparsers, parents):
    parser = subparsers.add_parser(
        "typemap", parents=parents, help="point types and Lambda_k over the patch grid"
    )
    parser.set_defaults(func=cmd_typemap)
    return parser
