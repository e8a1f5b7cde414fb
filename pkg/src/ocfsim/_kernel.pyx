# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled structure evaluation: labels -> per-SBS payoffs and system value.

Mirrors ``ocfsim._purekernel.Kernel`` exactly; see that module for the algorithm.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport log2
from libc.stdlib cimport calloc, free, malloc

cnp.import_array()


cdef class Kernel:
    cdef readonly Py_ssize_t n, m, n_sub, n_sue
    cdef readonly int slots
    cdef readonly double noise, p_lim, scale
    cdef long long[:, ::1] unit_sub
    cdef long long[::1] unit_sue
    cdef double[::1] p_sbs
    cdef double[:, :, ::1] g_sbs
    cdef double[:, :, ::1] mbs_int
    cdef double[:, ::1] bcast

    def __init__(self, unit_sub, sue, p_sbs, g_sbs, mbs_int, bcast,
                 double noise, double p_lim, int slots, double scale):
        self.unit_sub = np.ascontiguousarray(unit_sub, dtype=np.int64)
        self.unit_sue = np.ascontiguousarray(sue, dtype=np.int64)
        self.p_sbs = np.ascontiguousarray(p_sbs, dtype=np.float64)
        self.g_sbs = np.ascontiguousarray(g_sbs, dtype=np.float64)
        self.mbs_int = np.ascontiguousarray(mbs_int, dtype=np.float64)
        self.bcast = np.ascontiguousarray(bcast, dtype=np.float64)
        self.n = self.unit_sub.shape[0]
        self.m = self.unit_sub.shape[1]
        self.n_sub = self.mbs_int.shape[2]
        self.n_sue = self.g_sbs.shape[2]
        self.noise = noise
        self.p_lim = p_lim
        self.slots = slots
        self.scale = scale

    def evaluate(self, labels):
        """Return (payoffs[N], {label: value}, system value)."""
        cdef long long[:, ::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
        payoffs = np.zeros(self.n, dtype=np.float64)
        cdef double[::1] pay = payoffs
        cdef Py_ssize_t n_units = self.n * self.m
        cdef long long maxlab = 0
        cdef Py_ssize_t i, mm
        for i in range(self.n):
            for mm in range(self.m):
                if lab[i, mm] > maxlab:
                    maxlab = lab[i, mm]
        values_arr = np.zeros(n_units if n_units > 0 else 1, dtype=np.float64)
        labels_arr = np.zeros(n_units if n_units > 0 else 1, dtype=np.int64)
        cdef double[::1] vals = values_arr
        cdef long long[::1] labs = labels_arr
        cdef int ncoal = 0
        cdef double total = 0.0
        if n_units > 0:
            ncoal = self._run(lab, maxlab, pay, vals, labs, &total)
        return payoffs, {int(labs[c]): float(vals[c]) for c in range(ncoal)}, total

    def system_value(self, labels):
        return self.evaluate(labels)[2]

    cdef int _run(self, long long[:, ::1] lab, long long maxlab, double[::1] pay,
                  double[::1] vals, long long[::1] labs, double* total_out):
        cdef Py_ssize_t n = self.n, M = self.m, T = self.n_sub, L = self.n_sue
        cdef int S = self.slots
        cdef Py_ssize_t nu = n * M
        cdef int* cmap = <int*> malloc((maxlab + 1) * sizeof(int))
        cdef int* cnt = <int*> calloc(nu * n, sizeof(int))
        cdef int* pool = <int*> calloc(nu * T, sizeof(int))
        cdef int* cells = <int*> calloc(nu * n * T, sizeof(int))
        cdef int* active = <int*> calloc(T * n, sizeof(int))
        cdef int* order = <int*> malloc(n * sizeof(int))
        cdef long long* quota = <long long*> malloc(n * sizeof(long long))
        cdef long long* rem = <long long*> malloc(n * sizeof(long long))
        cdef int* plist = <int*> malloc(T * sizeof(int))
        cdef int* start = <int*> calloc(nu * n, sizeof(int))
        cdef int* quot = <int*> calloc(nu * n, sizeof(int))
        cdef int* sues = <int*> malloc(M * sizeof(int))
        cdef Py_ssize_t i, j, mm, k, c, a, b, pos, cell, stop
        cdef int ncoal = 0, nmem, npool, tmp, u, best, left, nsue, run_k, run_u, run_n, t
        cdef long long units, ncells
        cdef double cost, worst, rate, im, isb, sig, value, total = 0.0

        for a in range(maxlab + 1):
            cmap[a] = -1
        for i in range(n):
            for mm in range(M):
                a = lab[i, mm]
                if cmap[a] < 0:
                    cmap[a] = ncoal
                    labs[ncoal] = a
                    ncoal += 1
                c = cmap[a]
                cnt[c * n + i] += 1
                pool[c * T + self.unit_sub[i, mm]] = 1

        # schedules
        for c in range(ncoal):
            nmem = 0
            units = 0
            for i in range(n):
                if cnt[c * n + i] > 0:
                    order[nmem] = <int> i
                    nmem += 1
                    units += cnt[c * n + i]
            # insertion sort by (-count, id)
            for a in range(1, nmem):
                tmp = order[a]
                b = a - 1
                while b >= 0 and cnt[c * n + order[b]] < cnt[c * n + tmp]:
                    order[b + 1] = order[b]
                    b -= 1
                order[b + 1] = tmp
            npool = 0
            for k in range(T):
                if pool[c * T + k]:
                    plist[npool] = <int> k
                    npool += 1
            ncells = npool * S
            left = <int> ncells
            for a in range(nmem):
                quota[a] = cnt[c * n + order[a]] * ncells // units
                rem[a] = cnt[c * n + order[a]] * ncells % units
                left -= <int> quota[a]
            while left > 0:
                best = 0
                for a in range(1, nmem):
                    if rem[a] > rem[best]:
                        best = <int> a
                quota[best] += 1
                rem[best] = -1
                left -= 1
            pos = 0
            for a in range(nmem):
                stop = pos + quota[a]
                start[c * n + order[a]] = <int> pos
                quot[c * n + order[a]] = <int> quota[a]
                for cell in range(pos, stop):
                    k = plist[cell // S]
                    cells[(c * n + order[a]) * T + k] += 1
                pos = stop
            for a in range(nmem):
                i = order[a]
                for k in range(T):
                    if cells[(c * n + i) * T + k] > 0:
                        active[k * n + i] += 1

        # values
        for c in range(ncoal):
            cost = 0.0
            nmem = 0
            units = 0
            for i in range(n):
                if cnt[c * n + i] > 0:
                    nmem += 1
                    units += cnt[c * n + i]
            if nmem > 1:
                for i in range(n):
                    if cnt[c * n + i] > 0:
                        worst = 0.0
                        for j in range(n):
                            if j != i and cnt[c * n + j] > 0 and self.bcast[i, j] > worst:
                                worst = self.bcast[i, j]
                        cost += worst
            value = 0.0
            if cost <= self.p_lim:
                npool = 0
                for k in range(T):
                    if pool[c * T + k]:
                        plist[npool] = <int> k
                        npool += 1
                rate = 0.0
                for i in range(n):
                    if quot[c * n + i] == 0:
                        continue
                    nsue = 0
                    for mm in range(M):
                        if cmap[lab[i, mm]] == c:
                            sues[nsue] = <int> self.unit_sue[mm]
                            nsue += 1
                    # runs of consecutive cells with the same (subchannel, SUE)
                    run_n = 0
                    run_k = -1
                    run_u = -1
                    for t in range(quot[c * n + i] + 1):
                        if t < quot[c * n + i]:
                            k = plist[(start[c * n + i] + t) // S]
                            u = sues[(t // S) % nsue]
                            if k == run_k and u == run_u:
                                run_n += 1
                                continue
                        if run_n > 0:
                            im = self.mbs_int[i, run_u, run_k]
                            isb = 0.0
                            for j in range(n):
                                b = active[run_k * n + j]
                                if cells[(c * n + j) * T + run_k] > 0:
                                    b -= 1
                                if b > 0:
                                    isb += self.p_sbs[j] * self.g_sbs[j, i, run_u]
                            sig = self.p_sbs[i] * self.g_sbs[i, i, run_u]
                            rate += (<double> run_n / S) * log2(1.0 + sig / (self.noise + im + isb)) * self.scale
                        if t < quot[c * n + i]:
                            run_k = <int> k
                            run_u = u
                            run_n = 1
                value = rate
            vals[c] = value
            total += value
            for i in range(n):
                if cnt[c * n + i] > 0:
                    pay[i] += (<double> cnt[c * n + i] / units) * value

        free(cmap); free(cnt); free(pool); free(cells); free(active)
        free(order); free(quota); free(rem); free(plist)
        free(start); free(quot); free(sues)
        total_out[0] = total
        return ncoal
