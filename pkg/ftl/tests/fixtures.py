import numpy as np
from ftl.geometry import fit_stage, unit_normal
from ftl.schemas import CounterexampleParams, PatchSpec, RunConfig, SliceSpec
from ftl.utils import spawn_rngs


def small_params(**kwargs) -> CounterexampleParams:
    values = dict(
        stages=2,
        candidates=2000,
        cover_samples=200,
        w_per_center=5,
        g_bound_n=[8, 16, 32],
        g_samples=200,
        product_samples=200,
        base_points=2,
    )
    values.update(kwargs)
    return CounterexampleParams(**values)


def small_config(out_dir, **kwargs) -> RunConfig:
    values = dict(
        out_dir=str(out_dir),
        k_max=4,
        patch=PatchSpec(resolution=3),
        slice=SliceSpec(tangential_points=3, depth_points=4),
        counterexample=small_params(),
    )
    values.update(kwargs)
    return RunConfig(**values)


def fitted_stages(domain, params: CounterexampleParams, seed: int = 7) -> list:
    names = [f"stage-{k}" for k in range(1, params.stages + 1)]
    rngs = spawn_rngs(seed, names)
    region = params.region()
    return [
        fit_stage(domain, k, params, region, rngs[name])
        for k, name in enumerate(names, start=1)
    ]


def normal_ray_point(domain, depth: float, theta: float = 0.0, z2: complex = 0j):
    """point at the given depth below the chart point (theta, Re z2, Im z2)"""
    ((p1, p2),) = domain.chart(np.array([theta, z2.real, z2.imag]))
    nu1, nu2 = unit_normal(domain, p1, p2)
    return (complex(p1 - depth * nu1), complex(p2 - depth * nu2))
