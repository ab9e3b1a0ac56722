# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled round loop.

Mirrors ``kernel.py`` step for step: same SplitMix64 draws in the same order,
same floating-point expression order.  Only fresh worlds are accepted (no
trust state yet), and the role-based rule base must be empty.
"""
from libc.math cimport acos, cos, exp, floor, fmod, log, pow, sin, sqrt
from libc.stdint cimport int64_t, uint64_t
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

import numpy as np

cdef double TWO_PI = 6.283185307179586
cdef double PI = 3.141592653589793
cdef double INV_2_53 = 1.0 / 9007199254740992.0

# kind codes follow world.ProviderKind; level index 0..4 is PERFECT..WORST
cdef int GOOD = 0, ORDINARY = 1, INTERMITTENT = 2, BAD = 3
cdef int FIRE = 0, CA_OLD = 1, CA_NEW = 2
cdef double MIN_SUCC[5]
MIN_SUCC[:] = [10.0, 5.0, 0.0, -5.0, -10.0]
cdef int LEVEL_VALUE[5]
LEVEL_VALUE[:] = [10, 5, 0, -5, -10]
cdef double KIND_LO[4]
cdef double KIND_HI[4]
cdef double KIND_SIGMA[4]
KIND_LO[:] = [5.0, 0.0, -5.0, -10.0]
KIND_HI[:] = [10.0, 5.0, 5.0, 0.0]
KIND_SIGMA[:] = [1.0, 2.0, 0.0, 2.0]
cdef int NO_LEVEL = 99


cdef struct Rating:
    int rnd
    double value


cdef struct Report:
    bint present
    double value
    double reliability


cdef inline double clamp_ug(double x) nogil:
    if x > 10.0:
        x = 10.0
    if x < -10.0:
        x = -10.0
    return x


cdef class _Sim:
    cdef uint64_t state
    # parameters
    cdef double threshold, alpha, beta
    cdef int H, BF, RL
    cdef double lam, g_i, g_w, g_c, w_i, w_w, w_c, explore
    cdef double world_radius, r0
    cdef double act_lo, act_hi
    cdef double p_cpc, p_ppc, p_clc, p_plc, dphi, p_mu, drift, p_switch
    cdef int run_id
    # agents
    cdef int NC, NP
    cdef vector[int64_t] pid
    cdef vector[int] kind
    cdef vector[double] mu
    cdef vector[int64_t] cid
    cdef vector[int] group
    cdef vector[double] activity
    cdef vector[int] count
    cdef vector[double] loc_r, loc_phi, loc_theta, px, py, pz
    cdef int64_t next_pid, next_cid
    # trust state
    cdef vector[vector[double]] ca_w
    cdef vector[unordered_map[int64_t, int]] ca_idx
    cdef vector[int] ca_bad
    cdef vector[unordered_map[int64_t, vector[Rating]]] ratings
    cdef vector[vector[Rating]] certified
    # geometry
    cdef bint dirty
    cdef vector[vector[int]] acq
    cdef vector[vector[int]] near
    cdef vector[int] stamp
    cdef int gen
    # logs
    cdef vector[int] o_round, o_group, o_index, o_level
    cdef vector[int64_t] o_cid, o_pid
    cdef vector[double] o_ug

    # ------------------------------------------------------------ rng
    cdef inline uint64_t next_u64(self):
        cdef uint64_t z
        self.state += 0x9E3779B97F4A7C15ULL
        z = self.state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
        return z ^ (z >> 31)

    cdef inline double random(self):
        return <double>(self.next_u64() >> 11) * INV_2_53

    cdef inline double uniform(self, double a, double b):
        return a + (b - a) * self.random()

    cdef inline int randbelow(self, int n):
        cdef int k = <int>(self.random() * n)
        return k if k < n else n - 1

    cdef inline double normal(self, double m, double s):
        cdef double u1 = 1.0 - self.random()
        cdef double u2 = self.random()
        cdef double z = sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)
        return m + s * z

    cdef void shuffle(self, vector[int]& v):
        cdef int i, j, t
        i = <int>v.size() - 1
        while i > 0:
            j = self.randbelow(i + 1)
            t = v[i]; v[i] = v[j]; v[j] = t
            i -= 1

    cdef void sample_into(self, vector[int]& pool, int k):
        """Partial Fisher-Yates in place; the first k entries are the sample."""
        cdef int n = <int>pool.size()
        cdef int i, j, t
        for i in range(k):
            j = i + self.randbelow(n - i)
            t = pool[i]; pool[i] = pool[j]; pool[j] = t
        pool.resize(k)

    # ------------------------------------------------------------ agents
    cdef void set_cart(self, int node):
        cdef double rs = self.loc_r[node] * sin(self.loc_theta[node])
        self.px[node] = rs * cos(self.loc_phi[node])
        self.py[node] = rs * sin(self.loc_phi[node])
        self.pz[node] = self.loc_r[node] * cos(self.loc_theta[node])

    cdef void random_location(self, int node):
        cdef double u = self.random()
        cdef double v = self.random()
        cdef double w = self.random()
        self.loc_r[node] = self.world_radius * pow(u, 1.0 / 3.0)
        self.loc_phi[node] = TWO_PI * w
        self.loc_theta[node] = acos(1.0 - 2.0 * v)
        self.set_cart(node)

    cdef void sample_mu(self, int slot):
        cdef int k = self.kind[slot]
        if k == INTERMITTENT:
            self.mu[slot] = 0.0
        else:
            self.mu[slot] = self.uniform(KIND_LO[k], KIND_HI[k])

    cdef void reset_provider_state(self, int slot):
        cdef int i
        for i in range(10):
            self.ca_w[slot * 10 + i].clear()
            self.ca_idx[slot * 10 + i].clear()
        self.ca_bad[slot * 2] = 0
        self.ca_bad[slot * 2 + 1] = 0
        self.certified[slot].clear()

    cdef void replace_consumer(self, int slot):
        self.cid[slot] = self.next_cid
        self.next_cid += 1
        self.random_location(slot)
        self.activity[slot] = self.uniform(self.act_lo, self.act_hi)
        self.count[slot] = 0
        self.ratings[slot].clear()
        self.dirty = True

    cdef void replace_provider(self, int slot):
        self.pid[slot] = self.next_pid
        self.next_pid += 1
        self.random_location(self.NC + slot)
        self.sample_mu(slot)
        self.reset_provider_state(slot)
        self.dirty = True

    # ------------------------------------------------------------ geometry
    cdef inline double dist2(self, int a, int b):
        cdef double dx = self.px[a] - self.px[b]
        cdef double dy = self.py[a] - self.py[b]
        cdef double dz = self.pz[a] - self.pz[b]
        return dx * dx + dy * dy + dz * dz

    cdef void refresh(self):
        cdef int n = self.NC + self.NP
        cdef int i, j
        cdef double lim = self.r0 * self.r0
        if not self.dirty:
            return
        for i in range(n):
            self.acq[i].clear()
        for i in range(self.NC):
            self.near[i].clear()
        for i in range(n):
            for j in range(n):
                if i != j and self.dist2(i, j) <= lim:
                    self.acq[i].push_back(j)
                    if i < self.NC and j >= self.NC:
                        self.near[i].push_back(j - self.NC)
        self.dirty = False

    # ------------------------------------------------------------ performance
    cdef double sample_performance(self, int slot):
        cdef int k = self.kind[slot]
        if k == INTERMITTENT:
            return clamp_ug(self.uniform(-5.0, 5.0))
        return clamp_ug(self.normal(self.mu[slot], KIND_SIGMA[k]))

    cdef double degrade(self, double raw, double d):
        cdef double slope
        if d <= self.r0:
            return raw
        slope = (10.0 - -10.0) / (2.0 * self.world_radius - self.r0)
        return clamp_ug(raw - slope * (d - self.r0))

    # ------------------------------------------------------------ FIRE
    cdef Report trust(self, vector[Rating]& recs, int now, double gamma):
        cdef Report rep
        cdef size_t i, n = recs.size()
        cdef vector[double] w
        cdef double tw = 0.0, twv = 0.0, dev = 0.0, value
        rep.present = False
        rep.value = 0.0
        rep.reliability = 0.0
        if n == 0:
            return rep
        w.resize(n)
        for i in range(n):
            w[i] = exp(-(now - recs[i].rnd) / self.lam)
        for i in range(n):
            tw += w[i]
            twv += w[i] * recs[i].value
        if tw <= 0.0:
            return rep
        value = twv / tw
        for i in range(n):
            dev += w[i] * abs(recs[i].value - value)
        rep.present = True
        rep.value = value
        rep.reliability = (1.0 - exp(-gamma * tw)) * (1.0 - (dev / tw) / 2.0)
        return rep

    cdef Report witness(self, int cnode, int64_t target, int now):
        cdef vector[int] frontier, asked, fresh
        cdef vector[Rating] collected
        cdef int depth, node, nb
        cdef size_t a, b
        cdef unordered_map[int64_t, vector[Rating]].iterator it
        self.gen += 1
        self.stamp[cnode] = self.gen
        frontier.push_back(cnode)
        for depth in range(self.RL):
            asked.clear()
            for a in range(frontier.size()):
                node = frontier[a]
                fresh.clear()
                for b in range(self.acq[node].size()):
                    nb = self.acq[node][b]
                    if self.stamp[nb] != self.gen:
                        fresh.push_back(nb)
                if <int>fresh.size() > self.BF:
                    self.sample_into(fresh, self.BF)
                for b in range(fresh.size()):
                    self.stamp[fresh[b]] = self.gen
                    asked.push_back(fresh[b])
            frontier.clear()
            for a in range(asked.size()):
                node = asked[a]
                if node < self.NC and self.group[node] == FIRE:
                    it = self.ratings[node].find(target)
                    if it != self.ratings[node].end() and deref_size(it) > 0:
                        append_ratings(collected, it)
                        continue
                frontier.push_back(node)
            if frontier.size() == 0:
                break
        return self.trust(collected, now, self.g_w)

    cdef void fire_interaction(self, int slot, int now):
        cdef vector[int]* cand = &self.near[slot]
        cdef size_t n = cand.size()
        cdef size_t i
        cdef int ps, chosen = -1
        cdef int64_t p, best_id = 0
        cdef vector[int] unrated
        cdef vector[int] rated
        cdef vector[double] rated_val
        cdef Report it_r, wr_r, cr_r
        cdef double num, den, coef, best_v
        cdef vector[Rating] empty
        cdef unordered_map[int64_t, vector[Rating]].iterator itr
        cdef double raw, ug
        cdef Rating rec
        if n == 0:
            return
        for i in range(n):
            ps = cand[0][i]
            p = self.pid[ps]
            itr = self.ratings[slot].find(p)
            if itr != self.ratings[slot].end():
                it_r = self.trust(deref_vec(itr), now, self.g_i)
            else:
                it_r = self.trust(empty, now, self.g_i)
            wr_r = self.witness(slot, p, now)
            cr_r = self.trust(self.certified[ps], now, self.g_c)
            num = 0.0
            den = 0.0
            coef = 0.0
            if it_r.present:
                num += self.w_i * it_r.reliability * it_r.value
                den += self.w_i * it_r.reliability
                coef += self.w_i
            if wr_r.present:
                num += self.w_w * wr_r.reliability * wr_r.value
                den += self.w_w * wr_r.reliability
                coef += self.w_w
            if cr_r.present:
                num += self.w_c * cr_r.reliability * cr_r.value
                den += self.w_c * cr_r.reliability
                coef += self.w_c
            if den <= 0.0:
                unrated.push_back(ps)
            else:
                rated.push_back(ps)
                rated_val.push_back(num / den)
        if rated.size() == 0:
            chosen = unrated[self.randbelow(<int>unrated.size())]
        elif unrated.size() > 0 and self.random() < self.explore:
            chosen = unrated[self.randbelow(<int>unrated.size())]
        else:
            chosen = rated[0]
            best_id = self.pid[chosen]
            best_v = rated_val[0]
            for i in range(1, rated.size()):
                p = self.pid[rated[i]]
                if rated_val[i] > best_v or (rated_val[i] == best_v and p < best_id):
                    chosen = rated[i]
                    best_id = p
                    best_v = rated_val[i]
        raw = self.sample_performance(chosen)
        ug = self.degrade(raw, sqrt(self.dist2(slot, self.NC + chosen)))
        rec.rnd = now
        rec.value = ug / 10.0
        push_bounded(self.ratings[slot][self.pid[chosen]], rec, self.H)
        offer_certified(self.certified[chosen], rec, self.H)
        self.count[slot] += 1
        self.emit(now, slot, ug, self.pid[chosen], NO_LEVEL)

    # ------------------------------------------------------------ CA
    cdef void ca_escalation(self, int slot, int now):
        cdef vector[int] order
        cdef int li, k, ps, var, base, idx, lj
        cdef int64_t c = self.cid[slot]
        cdef size_t m
        cdef double w, total, raw, ug
        cdef bint served, success, thinks_bad
        cdef unordered_map[int64_t, int].iterator f
        if self.near[slot].size() == 0:
            return
        var = 1 if self.group[slot] == CA_NEW else 0
        for li in range(5):
            order = self.near[slot]
            self.shuffle(order)
            served = False
            for k in range(<int>order.size()):
                ps = order[k]
                base = (ps * 2 + var) * 5
                thinks_bad = var == 1 and self.ca_bad[ps * 2 + var] != 0 and li <= 2
                f = self.ca_idx[base + li].find(c)
                if f == self.ca_idx[base + li].end():
                    if thinks_bad:
                        w = 0.45
                    elif self.ca_w[base + li].size() > 0:
                        total = 0.0
                        for m in range(self.ca_w[base + li].size()):
                            total += self.ca_w[base + li][m]
                        w = total / self.ca_w[base + li].size()
                    else:
                        w = 0.5
                    idx = <int>self.ca_w[base + li].size()
                    self.ca_w[base + li].push_back(w)
                    self.ca_idx[base + li][c] = idx
                else:
                    idx = deref_idx(f)
                    if thinks_bad:
                        self.ca_w[base + li][idx] = 0.45
                    w = self.ca_w[base + li][idx]
                if served or not (w >= self.threshold):
                    continue
                raw = self.sample_performance(ps)
                ug = self.degrade(raw, sqrt(self.dist2(slot, self.NC + ps)))
                success = ug >= MIN_SUCC[li]
                if success:
                    w = w + self.alpha * (1.0 - w)
                    if w > 1.0:
                        w = 1.0
                else:
                    w = w - self.beta * (1.0 - w)
                    if w < 0.0:
                        w = 0.0
                self.ca_w[base + li][idx] = w
                if var == 1:
                    if ug <= 0.0:
                        self.ca_bad[ps * 2 + var] = 1
                    else:
                        self.ca_bad[ps * 2 + var] = 0
                for lj in range(li):
                    f = self.ca_idx[base + lj].find(c)
                    if f == self.ca_idx[base + lj].end():
                        continue
                    idx = deref_idx(f)
                    if self.ca_w[base + lj][idx] < self.threshold and ug >= MIN_SUCC[lj]:
                        self.ca_w[base + lj][idx] = self.threshold
                served = True
                self.count[slot] += 1
                self.emit(now, slot, ug, self.pid[ps], LEVEL_VALUE[li])
            if served:
                return

    cdef void emit(self, int now, int slot, double ug, int64_t p, int level):
        self.o_round.push_back(now)
        self.o_cid.push_back(self.cid[slot])
        self.o_group.push_back(self.group[slot])
        self.o_index.push_back(self.count[slot])
        self.o_ug.push_back(ug)
        self.o_pid.push_back(p)
        self.o_level.push_back(level)

    # ------------------------------------------------------------ dynamics
    cdef void dynamics(self):
        cdef int i, k, cap, cnt, moved = 0
        cdef int others[3]
        cdef vector[int] pool
        cdef double a, b
        if self.p_mu > 0.0:
            for i in range(self.NP):
                if self.kind[i] == INTERMITTENT:
                    continue
                if self.random() < self.p_mu:
                    self.mu[i] = clamp_ug(self.mu[i] + self.uniform(-self.drift, self.drift))
        if self.p_switch > 0.0:
            for i in range(self.NP):
                if self.random() < self.p_switch:
                    cnt = 0
                    for k in range(4):
                        if k != self.kind[i]:
                            others[cnt] = k
                            cnt += 1
                    self.kind[i] = others[self.randbelow(3)]
                    self.sample_mu(i)
        if self.p_clc > 0.0 or self.p_plc > 0.0:
            if self.p_clc > 0.0:
                for i in range(self.NC):
                    if self.random() < self.p_clc:
                        a = self.uniform(-self.dphi, self.dphi)
                        b = self.uniform(-self.dphi, self.dphi)
                        self.move(i, a, b)
                        moved += 1
            if self.p_plc > 0.0:
                for i in range(self.NP):
                    if self.random() < self.p_plc:
                        a = self.uniform(-self.dphi, self.dphi)
                        b = self.uniform(-self.dphi, self.dphi)
                        self.move(self.NC + i, a, b)
                        moved += 1
            if moved:
                self.dirty = True
        if self.p_cpc > 0.0:
            cap = <int>floor(self.p_cpc * self.NC)
            cnt = self.randbelow(cap + 1)
            pool.clear()
            for i in range(self.NC):
                pool.push_back(i)
            self.sample_into(pool, cnt)
            for i in range(cnt):
                self.replace_consumer(pool[i])
        if self.p_ppc > 0.0:
            cap = <int>floor(self.p_ppc * self.NP)
            cnt = self.randbelow(cap + 1)
            pool.clear()
            for i in range(self.NP):
                pool.push_back(i)
            self.sample_into(pool, cnt)
            for i in range(cnt):
                self.replace_provider(pool[i])

    cdef void move(self, int node, double dphi, double dtheta):
        cdef double phi = fmod(self.loc_phi[node] + dphi, TWO_PI)
        cdef double theta
        if phi < 0.0:
            phi += TWO_PI
        if phi >= TWO_PI:
            phi -= TWO_PI
        theta = self.loc_theta[node] + dtheta
        if theta < 0.0:
            theta = -theta
        elif theta > PI:
            theta = TWO_PI - theta
        self.loc_phi[node] = phi
        self.loc_theta[node] = theta
        self.set_cart(node)

    # ------------------------------------------------------------ driver
    cdef void run(self, int rounds):
        cdef int t, i
        cdef vector[int] active
        active.resize(self.NC)
        for t in range(1, rounds + 1):
            for i in range(self.NC):
                if self.random() < self.activity[i]:
                    active[i] = 1
                else:
                    active[i] = 0
            self.refresh()
            for i in range(self.NC):
                if active[i] and self.group[i] == FIRE:
                    self.fire_interaction(i, t)
            for i in range(self.NC):
                if active[i] and self.group[i] != FIRE:
                    self.ca_escalation(i, t)
            self.dynamics()


cdef extern from *:
    """
    #include <unordered_map>
    #include <vector>
    template <class It> static inline size_t deref_size(It it) { return it->second.size(); }
    template <class It> static inline int deref_idx(It it) { return it->second; }
    template <class It> static inline auto& deref_vec(It it) { return it->second; }
    template <class V, class It> static inline void append_ratings(V& out, It it) {
        out.insert(out.end(), it->second.begin(), it->second.end());
    }
    template <class V, class R> static inline void push_bounded(V& v, const R& r, int cap) {
        if ((int)v.size() >= cap) v.erase(v.begin());
        v.push_back(r);
    }
    template <class V, class R> static inline void offer_certified(V& v, const R& r, int cap) {
        if ((int)v.size() < cap) { v.push_back(r); return; }
        size_t lo = 0;
        for (size_t i = 1; i < v.size(); ++i) if (v[i].value < v[lo].value) lo = i;
        if (r.value > v[lo].value) { v.erase(v.begin() + lo); v.push_back(r); }
    }
    """
    size_t deref_size[It](It it)
    int deref_idx[It](It it)
    vector[Rating]& deref_vec[It](It it)
    void append_ratings[V, It](V& out, It it)
    void push_bounded[V, R](V& v, R& r, int cap)
    void offer_certified[V, R](V& v, R& r, int cap)


def simulate(dict snap, int rounds, int run_id=0):
    """Run ``rounds`` rounds from a freshly initialized world snapshot.

    ``snap`` is produced by :func:`catrust.backend.snapshot`; returns the log
    columns as numpy arrays.
    """
    cdef _Sim s = _Sim()
    cdef int i, n
    s.state = <uint64_t>snap["rng_state"]
    s.threshold = snap["threshold"]; s.alpha = snap["alpha"]; s.beta = snap["beta"]
    s.H = snap["history_size"]; s.BF = snap["branching_factor"]; s.RL = snap["referral_length"]
    s.lam = snap["recency_scale"]
    s.g_i = snap["gamma_i"]; s.g_w = snap["gamma_w"]; s.g_c = snap["gamma_c"]
    s.w_i = snap["w_i"]; s.w_w = snap["w_w"]; s.w_c = snap["w_c"]
    s.explore = snap["exploration"]
    s.world_radius = snap["world_radius"]; s.r0 = snap["operational_radius"]
    s.act_lo = snap["activity_min"]; s.act_hi = snap["activity_max"]
    s.p_cpc = snap["p_cpc"]; s.p_ppc = snap["p_ppc"]; s.p_clc = snap["p_clc"]
    s.p_plc = snap["p_plc"]; s.dphi = snap["delta_phi_max"]; s.p_mu = snap["p_mu_c"]
    s.drift = snap["drift_magnitude"]; s.p_switch = snap["p_profile_switch"]
    s.run_id = run_id
    s.NC = len(snap["consumer_id"])
    s.NP = len(snap["provider_id"])
    n = s.NC + s.NP
    s.next_pid = snap["next_provider_id"]
    s.next_cid = snap["next_consumer_id"]
    for i in range(s.NP):
        s.pid.push_back(snap["provider_id"][i])
        s.kind.push_back(snap["kind"][i])
        s.mu.push_back(snap["mu"][i])
    for i in range(s.NC):
        s.cid.push_back(snap["consumer_id"][i])
        s.group.push_back(snap["group"][i])
        s.activity.push_back(snap["activity"][i])
        s.count.push_back(0)
    s.loc_r.resize(n); s.loc_phi.resize(n); s.loc_theta.resize(n)
    s.px.resize(n); s.py.resize(n); s.pz.resize(n)
    for i in range(n):
        s.loc_r[i] = snap["r"][i]
        s.loc_phi[i] = snap["phi"][i]
        s.loc_theta[i] = snap["theta"][i]
        s.set_cart(i)
    s.ca_w.resize(s.NP * 10)
    s.ca_idx.resize(s.NP * 10)
    s.ca_bad.resize(s.NP * 2)
    s.ratings.resize(s.NC)
    s.certified.resize(s.NP)
    s.acq.resize(n)
    s.near.resize(s.NC)
    s.stamp.resize(n)
    s.gen = 0
    s.dirty = True
    s.run(rounds)
    m = s.o_ug.size()
    out = {
        "run_id": np.full(m, run_id, dtype=np.int32),
        "round": np.asarray(<list>s.o_round, dtype=np.int32),
        "consumer_id": np.asarray(<list>s.o_cid, dtype=np.int64),
        "group": np.asarray(<list>s.o_group, dtype=np.int8),
        "interaction_index": np.asarray(<list>s.o_index, dtype=np.int32),
        "ug": np.asarray(<list>s.o_ug, dtype=np.float64),
        "provider_id": np.asarray(<list>s.o_pid, dtype=np.int64),
        "level": np.asarray(<list>s.o_level, dtype=np.int16),
    }
    return out

