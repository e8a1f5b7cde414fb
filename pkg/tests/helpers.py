"""Hand-built networks with explicit gains for exact tests."""
import numpy as np

from ocfsim.network import NetworkConfig, Topology, build_network


def hand_network(initial, total_subchannels, sbs_sue, mbs_sue=None, sbs_xy=None,
                 mue_subchannels=None, sues_per_sbs=1, **config):
    """Network whose link gains are set directly.

    ``sbs_sue[j][i][u]`` is the gain from SBS j to SUE u of SBS i. By default SBSs sit
    10 m apart on a line and the MBS is silent on every subchannel the SBSs use.
    """
    n = len(initial)
    M = len(initial[0])
    T = total_subchannels
    if mue_subchannels is None:
        mue_subchannels = (T - 1,)
    if sbs_xy is None:
        sbs_xy = [(1000.0 + 10.0 * i, 1000.0) for i in range(n)]
    sbs_xy = np.array(sbs_xy, dtype=float).reshape(n, 2)
    cfg = NetworkConfig(
        n_sbs=n, sues_per_sbs=sues_per_sbs, n_mues=len(mue_subchannels), total_subchannels=T,
        subchannels_per_sbs=M, **config,
    )
    topo = Topology(
        mbs=np.array([1000.0, 1000.0]),
        sbs=sbs_xy,
        sues=np.repeat(sbs_xy[:, None, :], sues_per_sbs, axis=1) + 1.0,
        mues=np.zeros((len(mue_subchannels), 2)) + 500.0,
        initial_subchannels=tuple(tuple(t) for t in initial),
        mue_subchannels=tuple(mue_subchannels),
        total_subchannels=T,
    )
    net = build_network(topo, cfg)
    if mbs_sue is None:
        mbs_sue = np.full((n, sues_per_sbs), 1e-30)
    return net.with_gains(sbs_sue=np.array(sbs_sue, dtype=float), mbs_sue=np.array(mbs_sue, dtype=float))


def snr_gain(snr, net):
    """Gain giving a received SNR of ``snr`` for one SBS transmitting at its per-subchannel power."""
    return snr * net.noise_mw / net.sbs_power[0]
