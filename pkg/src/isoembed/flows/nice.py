"""Additive-coupling flow with a final per-dimension scaling layer.

Each coupling leaves the conditioning half of the columns untouched and
adds a learned shift to the other half, so couplings are exactly invertible
and contribute nothing to the log-determinant; the only volume change comes
from the final diagonal scaling, whose log-determinant is the sum of the
log scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..errors import NumericError
from ..rng import PinnedRng
from .coupling import CouplingNet, parity_indices


@dataclass(frozen=True)
class NiceSpec:
    """Architecture knobs: number of couplings and hidden widths per net."""

    couplings: int = 4
    hidden: tuple[int, ...] = (1000, 1000, 1000, 1000, 1000)

    def __post_init__(self):
        if self.couplings < 1:
            raise ValueError("couplings must be >= 1")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be >= 1")


class NiceModel:
    arch_tag = 0

    def __init__(self, dim: int, spec: NiceSpec, couplings, log_scale: ad.Tensor):
        if dim < 2:
            raise ValueError("flow dimension must be >= 2")
        self.dim = dim
        self.spec = spec
        self.couplings = couplings  # list of (parity, CouplingNet)
        self.log_scale = log_scale

    @classmethod
    def build(cls, dim: int, spec: NiceSpec = NiceSpec(), seed: int = 0) -> "NiceModel":
        rng = PinnedRng(seed)
        couplings = []
        for i in range(spec.couplings):
            parity = i % 2
            cond, moved = parity_indices(dim, parity)
            net = CouplingNet.build(len(cond), len(moved), spec.hidden, rng)
            couplings.append((parity, net))
        return cls(dim, spec, couplings, ad.parameter(np.zeros(dim)))

    def parameters(self) -> list[ad.Tensor]:
        params = []
        for _, net in self.couplings:
            params.extend(net.parameters())
        params.append(self.log_scale)
        return params

    def forward_tensors(self, x: ad.Tensor) -> tuple[ad.Tensor, ad.Tensor]:
        n = x.data.shape[0]
        logdet = ad.constant(np.zeros(n))
        h = x
        for i, (parity, net) in enumerate(self.couplings):
            cond_idx, moved_idx = parity_indices(self.dim, parity)
            cond = ad.take_cols(h, cond_idx)
            moved = ad.add(ad.take_cols(h, moved_idx), net.tensor_apply(cond))
            h = ad.assemble_cols(self.dim, [(cond_idx, cond), (moved_idx, moved)])
            if not np.isfinite(h.data).all():
                raise NumericError(f"nice coupling {i} produced non-finite values")
        z = ad.mul(h, ad.exp(self.log_scale))
        if not np.isfinite(z.data).all():
            raise NumericError("nice scaling layer produced non-finite values")
        logdet = ad.add(logdet, ad.total(self.log_scale))
        return z, logdet

    def inverse(self, z: np.ndarray) -> np.ndarray:
        h = np.asarray(z, dtype=np.float64) * np.exp(-self.log_scale.data)
        for i, (parity, net) in reversed(list(enumerate(self.couplings))):
            cond_idx, moved_idx = parity_indices(self.dim, parity)
            shift = net.numpy_apply(h[:, cond_idx])
            h[:, moved_idx] -= shift
            if not np.isfinite(h).all():
                raise NumericError(f"nice coupling {i} inverse produced non-finite values")
        return h
