"""Covariant convolution of a tensor field with a shared kernel.

    out(x) = sqrt|g(x)| * sum_i w_i <K(x, v_i), f|_{exp_x v_i}(x)>

where f|_y(x) is f at y parallel transported back to x along the geodesic
and <,> pairs the kernel's dual slots with the input slots (see
tensors.contract). Terms are summed in node order.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import RankMismatchError
from .fields import TensorField, sample, transport_to_center
from .geometry import ChartManifold, as_point, volume_density
from .kernel import SharedKernel, share_kernel, sharing_path
from .tensors import TensorValue, contract

logger = logging.getLogger(__name__)


@dataclass
class ConvolutionSpec:
    manifold: ChartManifold
    kernel: SharedKernel
    sharing_mode: str = "chart-segment"
    output_points: list = field(default_factory=list)
    steps: int | None = None

    def points(self) -> list[np.ndarray]:
        if self.sharing_mode == "none" or not self.output_points:
            return [self.kernel.ref_point]
        return [as_point(self.manifold, p) for p in self.output_points]


def _check_ranks(k: SharedKernel, f: TensorField):
    if k.rank_in != f.rank:
        raise RankMismatchError(
            f"Kernel expects input rank {k.rank_in.as_list()}, field has rank {f.rank.as_list()}"
        )


def convolve_at(m: ChartManifold, k: SharedKernel, f: TensorField, n_steps: int | None = None) -> TensorValue:
    """Output of the convolution at the kernel's base point."""
    _check_ranks(k, f)
    x = as_point(m, k.ref_point)
    terms = []
    for i, (v, w) in enumerate(zip(k.quad.nodes, k.quad.weights)):
        value = transport_to_center(m, f, x, v, n_steps)
        terms.append(w * contract(k.coeffs[i], value.components, k.rank_in, k.rank_out))
    total = np.sum(np.stack(terms), axis=0)
    return TensorValue(k.rank_out, x, volume_density(m, x) * total)


def convolve_field(spec: ConvolutionSpec, f: TensorField) -> list[TensorValue]:
    """Share the kernel to every output point and convolve there.

    With sharing_mode "none" only the reference point is evaluated.
    """
    _check_ranks(spec.kernel, f)
    m, k = spec.manifold, spec.kernel
    outputs = []
    for p in spec.points():
        if np.array_equal(p, k.ref_point):
            local = k
        else:
            path = sharing_path(m, k.ref_point, p, spec.sharing_mode, spec.steps)
            local = share_kernel(m, k, path)
        outputs.append(convolve_at(m, local, f, spec.steps))
    logger.info("Convolved %s field at %d points on %s", f.rank.as_list(), len(outputs), m.name)
    return outputs


def planar_correlation(k: SharedKernel, f: TensorField, x=None) -> TensorValue:
    """sum_i w_i K_i f(x + v_i): ordinary correlation in flat Cartesian coordinates."""
    _check_ranks(k, f)
    x = k.ref_point if x is None else np.asarray(x, dtype=float)
    terms = [
        w * contract(k.coeffs[i], sample(f, x + v).components, k.rank_in, k.rank_out)
        for i, (v, w) in enumerate(zip(k.quad.nodes, k.quad.weights))
    ]
    return TensorValue(k.rank_out, x, np.sum(np.stack(terms), axis=0))
