"""Backend selection for structure evaluation.

The compiled extension is used when it imports; set ``OCFSIM_PURE_PYTHON=1`` to
force the pure-Python fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _purekernel
from .network import Network

try:
    if os.environ.get("OCFSIM_PURE_PYTHON"):
        raise ImportError("pure Python backend requested")
    from . import _kernel as _compiled
except ImportError:
    _compiled = None

COMPILED = _compiled is not None
BACKEND = "compiled" if COMPILED else "python"


def kernel_args(net: Network) -> tuple:
    topo, cfg = net.topology, net.config
    n, L, T = topo.n_sbs, cfg.sues_per_sbs, topo.total_subchannels
    unit_sub = np.array(topo.initial_subchannels, dtype=np.int64).reshape(n, cfg.subchannels_per_sbs)
    mbs_int = (net.gains.mbs_sue[:, :, None] * net.mbs_power[None, None, :]).reshape(n, L, T)
    return (
        unit_sub,
        np.arange(cfg.subchannels_per_sbs, dtype=np.int64) % L,
        net.sbs_power,
        net.gains.sbs_sue,
        mbs_int,
        net.broadcast,
        net.noise_mw,
        cfg.p_lim_mw,
        cfg.tdma_slots,
        cfg.rate_scale,
    )


def make_kernel(net: Network, backend: str | None = None):
    backend = backend or BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled.Kernel(*kernel_args(net))
    if backend == "python":
        return _purekernel.Kernel(*kernel_args(net))
    raise ValueError(f"unknown backend {backend!r}")
