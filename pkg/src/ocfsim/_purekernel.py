"""Pure-Python structure evaluation, used when the compiled kernel is unavailable.

A structure is given as a label array ``labels[i, m]``: unit m of SBS i belongs
to the coalition carrying that label. Evaluation builds every coalition's TDMA
schedule, marks which SBSs transmit on which subchannel, and sums the Shannon
rates with interference from SBSs active on the same subchannel in any other
coalition. Coalitions whose broadcast cost exceeds the power limit are worth 0.
"""
import math

import numpy as np


class Kernel:
    def __init__(self, unit_sub, sue, p_sbs, g_sbs, mbs_int, bcast, noise, p_lim, slots, scale):
        self.unit_sub = np.asarray(unit_sub, dtype=np.int64).tolist()
        self.unit_sue = np.asarray(sue, dtype=np.int64).tolist()
        self.p_sbs = np.asarray(p_sbs, dtype=float).tolist()
        self.g_sbs = np.asarray(g_sbs, dtype=float).tolist()
        self.mbs_int = np.asarray(mbs_int, dtype=float).tolist()
        self.bcast = np.asarray(bcast, dtype=float).tolist()
        self.n = len(self.unit_sub)
        self.m = len(self.unit_sub[0]) if self.n else 0
        self.noise = float(noise)
        self.p_lim = float(p_lim)
        self.slots = int(slots)
        self.scale = float(scale)

    def evaluate(self, labels):
        """Return (payoffs[N], {label: value}, system value)."""
        n, S = self.n, self.slots
        lab = np.asarray(labels).tolist()
        order_seen: list[int] = []
        counts: dict[int, list[int]] = {}
        pools: dict[int, set[int]] = {}
        for i in range(n):
            for m in range(self.m):
                a = lab[i][m]
                if a not in counts:
                    order_seen.append(a)
                    counts[a] = [0] * n
                    pools[a] = set()
                counts[a][i] += 1
                pools[a].add(self.unit_sub[i][m])

        cells: dict[int, dict[tuple[int, int, int], int]] = {}
        active: dict[int, list[int]] = {}
        for a in order_seen:
            cnt = counts[a]
            members = sorted((i for i in range(n) if cnt[i]), key=lambda i: (-cnt[i], i))
            units = sum(cnt)
            plist = sorted(pools[a])
            ncells = len(plist) * S
            quota = [cnt[i] * ncells // units for i in members]
            rem = [cnt[i] * ncells % units for i in members]
            for pos in sorted(range(len(members)), key=lambda p: (-rem[p], p))[: ncells - sum(quota)]:
                quota[pos] += 1
            own: dict[tuple[int, int, int], int] = {}
            pos = 0
            for i, q in zip(members, quota):
                sues = [self.unit_sue[m] for m in range(self.m) if lab[i][m] == a]
                for t in range(q):
                    key = (i, plist[(pos + t) // S], sues[(t // S) % len(sues)])
                    own[key] = own.get(key, 0) + 1
                pos += q
            cells[a] = own
            for i, k in {(i, k) for i, k, _ in own}:
                active.setdefault(k, [0] * n)[i] += 1

        payoffs = np.zeros(n)
        values = {}
        total = 0.0
        for a in order_seen:
            cnt = counts[a]
            support = [i for i in range(n) if cnt[i]]
            units = sum(cnt)
            cost = 0.0
            if len(support) > 1:
                for i in support:
                    cost += max(self.bcast[i][j] for j in support if j != i)
            value = 0.0
            if cost <= self.p_lim:
                own = cells[a]
                on_air = {(j, k) for j, k, _ in own}
                for i, k, u in sorted(own):
                    im = self.mbs_int[i][u][k]
                    isb = 0.0
                    act = active[k]
                    for j in range(n):
                        b = act[j] - (1 if (j, k) in on_air else 0)
                        if b > 0:
                            isb += self.p_sbs[j] * self.g_sbs[j][i][u]
                    sig = self.p_sbs[i] * self.g_sbs[i][i][u]
                    value += (own[i, k, u] / S) * math.log2(1.0 + sig / (self.noise + im + isb)) * self.scale
            values[a] = value
            total += value
            for i in support:
                payoffs[i] += (cnt[i] / units) * value
        return payoffs, values, total

    def system_value(self, labels):
        return self.evaluate(labels)[2]
