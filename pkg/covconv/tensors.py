"""Tensor values in a chart's coordinate basis.

Components are stored as a numpy array with one axis per slot, contravariant
slots first, covariant slots after: a rank (N_o, N_i) value at a point of a
d-dimensional chart has shape (d,) * (N_o + N_i).
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, RankMismatchError


@dataclass(frozen=True)
class TensorRank:
    n_out: int = 0  # contravariant slots
    n_in: int = 0  # covariant slots

    def __post_init__(self):
        if self.n_out < 0 or self.n_in < 0:
            raise ValueError(f"Tensor rank must be nonnegative, got {self}")

    @property
    def order(self) -> int:
        return self.n_out + self.n_in

    def shape(self, dim: int) -> tuple[int, ...]:
        return (dim,) * self.order

    def component_count(self, dim: int) -> int:
        return dim**self.order

    def as_list(self) -> list[int]:
        return [self.n_out, self.n_in]

    @classmethod
    def from_list(cls, values) -> "TensorRank":
        n_out, n_in = values
        return cls(int(n_out), int(n_in))


SCALAR = TensorRank(0, 0)
VECTOR = TensorRank(1, 0)
COVECTOR = TensorRank(0, 1)


@dataclass(frozen=True, eq=False)
class TensorValue:
    rank: TensorRank
    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        base = np.array(self.base, dtype=float).reshape(-1)
        comps = np.array(self.components, dtype=float)
        dim = base.shape[0]
        if comps.shape != self.rank.shape(dim):
            # accept flat component lists in row-major multi-index order
            if comps.size == self.rank.component_count(dim):
                comps = comps.reshape(self.rank.shape(dim))
            else:
                raise RankMismatchError(
                    f"Components of shape {comps.shape} do not fit rank "
                    f"({self.rank.n_out},{self.rank.n_in}) in dimension {dim}"
                )
        if not np.all(np.isfinite(comps)):
            raise NumericalError("Tensor components must be finite")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return self.base.shape[0]


def zero_tensor(rank: TensorRank, base) -> TensorValue:
    dim = np.asarray(base).reshape(-1).shape[0]
    return TensorValue(rank, base, np.zeros(rank.shape(dim)))


def multi_indices(rank: TensorRank, dim: int) -> list[str]:
    """Row-major multi-index labels, '' for scalars, '01' for slot values (0, 1)."""
    return ["".join(str(i) for i in idx) for idx in itertools.product(range(dim), repeat=rank.order)]


def act_on_slots(components: np.ndarray, matrix: np.ndarray, axes, transpose=False) -> np.ndarray:
    """Apply `matrix` to each listed axis: T'^{..a..} = M^a_b T^{..b..}.

    With transpose=True the contraction runs over the matrix's first index,
    T'_{..a..} = M^b_a T_{..b..}, which is how covariant slots take J^{-1}.
    """
    out = components
    contract_axis = 0 if transpose else 1
    for axis in axes:
        out = np.moveaxis(np.tensordot(matrix, out, axes=([contract_axis], [axis])), 0, axis)
    return out


def push_tensor(T: TensorValue, J, J_inv=None, base=None) -> TensorValue:
    """Change the frame of a tensor value.

    Each contravariant slot is contracted with J and each covariant slot with
    the transpose of J_inv. `base` optionally relabels the base point (e.g. with
    the coordinates of the same point in a new chart).
    """
    J = np.asarray(J, dtype=float)
    if J_inv is None:
        try:
            J_inv = np.linalg.inv(J)
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"Cannot push a tensor with a singular Jacobian: {e}") from e
    else:
        J_inv = np.asarray(J_inv, dtype=float)
    if abs(np.linalg.det(J)) < 1e-14:
        raise NumericalError("Cannot push a tensor with a singular Jacobian")

    n_out = T.rank.n_out
    comps = act_on_slots(T.components, J, range(n_out))
    comps = act_on_slots(comps, J_inv, range(n_out, T.rank.order), transpose=True)
    return TensorValue(T.rank, T.base if base is None else base, comps)


def kernel_rank(rank_in: TensorRank, rank_out: TensorRank) -> TensorRank:
    """Rank of a kernel coefficient mapping rank_in fields to rank_out fields.

    Slot layout (contravariant first, as for any TensorValue):
      [out contravariant][dual of input covariant] [out covariant][dual of input contravariant]
    """
    return TensorRank(rank_out.n_out + rank_in.n_in, rank_out.n_in + rank_in.n_out)


def contract(kernel_components: np.ndarray, value_components: np.ndarray,
             rank_in: TensorRank, rank_out: TensorRank) -> np.ndarray:
    """Pair kernel dual slots with the input's slots in listed order.

    The result has the rank_out layout.
    """
    a, b = rank_in.n_out, rank_in.n_in
    c, e = rank_out.n_out, rank_out.n_in
    kernel_axes = [c + b + e + i for i in range(a)] + [c + j for j in range(b)]
    value_axes = list(range(a)) + [a + j for j in range(b)]
    return np.tensordot(kernel_components, value_components, axes=(kernel_axes, value_axes))
