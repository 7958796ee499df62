"""Edge-colored Poisson branching-process estimators: lazy core sampling,
friend counting with exact frontier typing, and Monte Carlo estimators of the
friend-count distribution and of the infinite-class density."""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .analytic import (
    classify_lambda,
    extended_type_distribution,
    survival_theta,
)
from .params import LambdaVector, as_lambda

# per-sample probability that the certified-alive shortcut or a typing
# shortcut mislabels an outcome; far below MC noise at any feasible sample
# count
CERT_EPS = 1e-12


class CoreOverflow(Exception):
    """Core exploration hit the node cap; the sample is censored."""


class _PoissonStream:
    """Buffered Poisson draws from a Generator."""

    __slots__ = ("lam", "rng", "buf", "_arr", "_i")

    def __init__(self, lam: float, rng: np.random.Generator, buf: int = 16384):
        self.lam = lam
        self.rng = rng
        self.buf = buf
        self._arr = rng.poisson(lam, buf)
        self._i = 0

    def draw(self) -> int:
        i = self._i
        if i >= self.buf:
            self._arr = self.rng.poisson(self.lam, self.buf)
            i = 0
        self._i = i + 1
        return int(self._arr[i])


class _UniformStream:
    __slots__ = ("rng", "buf", "_arr", "_i")

    def __init__(self, rng: np.random.Generator, buf: int = 16384):
        self.rng = rng
        self.buf = buf
        self._arr = rng.random(buf)
        self._i = 0

    def draw(self) -> float:
        i = self._i
        if i >= self.buf:
            self._arr = self.rng.random(self.buf)
            i = 0
        self._i = i + 1
        return float(self._arr[i])


# ---------------------------------------------------------------------------
# Core sampling (rho, b) by lazy chronology-state growth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoreSample:
    rho: int
    b: tuple[int, ...]
    string_counts: dict[tuple[int, ...], int]


class CoreSampler:
    """Samples the joint law of (rho(r), b(r)) on the branching-process tree.

    Grows only core nodes (root-path chronology of length <= k-2); children
    introducing the (k-1)-th distinct color are counted into the boundary
    vector and never expanded. Exact on trees because each node's chronology
    string is determined by its unique root path.
    """

    def __init__(self, lam, rng: np.random.Generator, node_cap: int = 10**6):
        self.lam = as_lambda(lam)
        if not classify_lambda(self.lam).assumption_holds:
            raise ValueError(
                "core sampling requires every color subset of size <= k-2 "
                "to have total intensity < 1")
        self.k = self.lam.k
        self.node_cap = node_cap
        self._streams = [_PoissonStream(self.lam[c], rng) for c in range(self.k)]

    def sample(self) -> CoreSample:
        k = self.k
        full = (1 << k) - 1
        streams = self._streams
        rho = 0
        b = [0] * k
        counts: dict[tuple[int, ...], int] = {}
        queue: list[tuple[tuple[int, ...], int]] = [((), 0)]
        while queue:
            s, smask = queue.pop()
            rho += 1
            if rho > self.node_cap:
                raise CoreOverflow(f"core node cap {self.node_cap} exceeded")
            counts[s] = counts.get(s, 0) + 1
            for c in range(k):
                nch = streams[c].draw()
                if nch == 0:
                    continue
                if (smask >> c) & 1:
                    queue.extend([(s, smask)] * nch)
                elif len(s) + 1 <= k - 2:
                    queue.extend([(s + (c,), smask | (1 << c))] * nch)
                else:
                    # boundary: the path now uses all colors but one
                    missing = full & ~(smask | (1 << c))
                    b[missing.bit_length() - 1] += nch
        return CoreSample(rho, tuple(b), counts)


def sample_core(lam, rng: np.random.Generator,
                node_cap: int = 10**6) -> tuple[int, tuple[int, ...]]:
    """One exact joint sample of (rho(r), b(r))."""
    s = CoreSampler(lam, rng, node_cap).sample()
    return s.rho, s.b


def mc_f_infinity(lam, samples: int, rng: np.random.Generator,
                  node_cap: int = 10**6) -> tuple[float, float]:
    """Monte Carlo estimate of the infinite-class density: the sample mean of
    prod_i (1 - (1 - theta_i)^{b_i}) over i.i.d. core samples.

    Returns exactly (0.0, 0.0) outside the fully supercritical regime.
    """
    lam = as_lambda(lam)
    if not classify_lambda(lam).fully_supercritical:
        return 0.0, 0.0
    theta = [survival_theta(lam.lambda_without(i)) for i in range(lam.k)]
    miss = [1.0 - t for t in theta]
    sampler = CoreSampler(lam, rng, node_cap)
    total = 0.0
    total_sq = 0.0
    for _ in range(samples):
        b = sampler.sample().b
        val = 1.0
        for i in range(lam.k):
            val *= 1.0 - miss[i] ** b[i]
        total += val
        total_sq += val * val
    mean = total / samples
    var = max(0.0, total_sq / samples - mean * mean)
    return mean, math.sqrt(var / samples)


def mc_string_subtree_counts(lam, samples: int,
                             rng: np.random.Generator) -> np.ndarray:
    """(samples, k) array of the sizes of the length-1 chronology layers
    |R_(i)(r)|, vectorized across samples.

    Layer i is the total progeny of a Poisson(lambda_i) process started from
    Poisson(lambda_i) root children; generation sizes are drawn jointly via
    Poisson additivity. Requires every lambda_i < 1 so the layers are finite.
    """
    lam = as_lambda(lam)
    if any(x >= 1.0 for x in lam):
        raise ValueError("per-color intensities must be < 1")
    out = np.empty((samples, lam.k), dtype=np.int64)
    for i in range(lam.k):
        active = rng.poisson(lam[i], samples)
        total = active.copy()
        alive = np.flatnonzero(active)
        guard = 0
        while alive.size:
            nxt = rng.poisson(lam[i] * active[alive])
            total[alive] += nxt
            active[alive] = nxt
            alive = alive[nxt > 0]
            guard += 1
            if guard > 100_000:
                raise CoreOverflow("runaway subcritical layer growth")
        out[:, i] = total
    return out


def mc_phi1_estimate(lam, z: dict[tuple[int, ...], float], samples: int,
                     rng: np.random.Generator) -> tuple[float, float]:
    """MC estimate of E[prod_i z_(i)^{|R_(i)(r)|}] with its standard error."""
    lam = as_lambda(lam)
    zvec = np.array([z[(i,)] for i in range(lam.k)])
    if np.any(zvec <= 0.0) or np.any(zvec > 1.0):
        raise ValueError("z values must lie in (0, 1]")
    counts = mc_string_subtree_counts(lam, samples, rng)
    vals = np.exp(counts @ np.log(zvec))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


# ---------------------------------------------------------------------------
# Friend counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FriendCountOutcome:
    """finite(ell) or censored(reason), reason in {depth-cap, node-cap}."""

    kind: str  # "finite" | "censored"
    ell: int | None = None
    reason: str | None = None

    @staticmethod
    def finite(ell: int) -> "FriendCountOutcome":
        if ell < 1:
            raise ValueError("the root is always its own friend")
        return FriendCountOutcome("finite", ell=ell)

    @staticmethod
    def censored(reason: str) -> "FriendCountOutcome":
        if reason not in ("depth-cap", "node-cap"):
            raise ValueError("unknown censoring reason")
        return FriendCountOutcome("censored", reason=reason)


class FriendCountSampler:
    """Samples the root's friend count on the branching-process tree.

    Growth is restricted to nodes whose root path avoids at least one color
    (k-bit avoid-mask per node); color i's avoiding cluster is declared dead
    at the first level with no mask-bit-i node. Every member of a dead
    cluster is materialized by then, so friends are counted over the arena:
    v is a friend iff for every color i either the root path avoids i or both
    endpoints are i-avoiding connected to infinity through descendants.

    The alive_i flags are resolved by propagating through materialized
    children and drawing one memoized extended type per fully unrevealed
    node (typing is exact: the type is a function of the node's own subtree).
    When every cluster's frontier reaches a size whose total extinction
    probability is below CERT_EPS, the sample is censored immediately instead
    of growing to depth_cap; the mislabel probability is <= k * CERT_EPS.
    """

    def __init__(self, lam, rng: np.random.Generator,
                 depth_cap: int = 40, node_cap: int = 10**6):
        self.lam = as_lambda(lam)
        if not classify_lambda(self.lam).assumption_holds:
            raise ValueError(
                "friend counting requires every color subset of size <= k-2 "
                "to have total intensity < 1")
        self.k = self.lam.k
        self.depth_cap = depth_cap
        self.node_cap = node_cap
        self.theta = [survival_theta(self.lam.lambda_without(i))
                      for i in range(self.k)]
        self.cert = []
        for t in self.theta:
            if t <= 0.0:
                self.cert.append(None)  # this cluster dies almost surely
            else:
                self.cert.append(max(1, math.ceil(math.log(CERT_EPS)
                                                  / math.log1p(-t))))
        phat = extended_type_distribution(self.lam)
        gmasks = sorted(phat)
        cum = []
        acc = 0.0
        for gm in gmasks:
            acc += phat[gm]
            cum.append(acc)
        self._type_masks = gmasks
        self._type_cum = cum
        self._streams = [_PoissonStream(self.lam[c], rng) for c in range(self.k)]
        self._uniform = _UniformStream(rng)

    def sample(self) -> FriendCountOutcome:
        k = self.k
        full = (1 << k) - 1
        draws = [s.draw for s in self._streams]
        cert = self.cert
        masks = [full]
        kids: dict[tuple[int, int], range] = {}
        level = range(0, 1)
        # counts of current-level nodes per avoid-mask value
        mask_counts = [0] * (full + 1)
        mask_counts[full] = 1
        depth = 0
        while True:
            cnt = [0] * k
            for m, c in enumerate(mask_counts):
                if c:
                    for i in range(k):
                        if (m >> i) & 1:
                            cnt[i] += c
            dead = [i for i in range(k) if cnt[i] == 0]
            if dead:
                return self._count_friends(masks, kids, level.start, dead)
            if depth >= self.depth_cap:
                return FriendCountOutcome.censored("depth-cap")
            if len(masks) > self.node_cap:
                return FriendCountOutcome.censored("node-cap")
            if all(cert[i] is not None and cnt[i] >= cert[i] for i in range(k)):
                # every avoiding cluster is certified to survive to depth_cap
                return FriendCountOutcome.censored("depth-cap")
            mask_counts = [0] * (full + 1)
            for u in level:
                a = masks[u]
                for c in range(k):
                    cm = a & ~(1 << c)
                    if cm:
                        nch = draws[c]()
                        if nch:
                            base = len(masks)
                            masks.extend([cm] * nch)
                            kids[(u, c)] = range(base, base + nch)
                            mask_counts[cm] += nch
            level = range(level.stop, len(masks))
            depth += 1

    def _count_friends(self, masks, kids, frontier_start, dead) -> FriendCountOutcome:
        # level-synchronous growth makes the reveal state implicit: nodes
        # before the frontier have every admissible color drawn, frontier
        # nodes have none
        full = (1 << self.k) - 1
        drawn = [
            (full if m & (m - 1) else full & ~m) if u < frontier_start else 0
            for u, m in enumerate(masks)
        ]
        return self._resolve_friends(masks, drawn, kids, dead)

    def _resolve_friends(self, masks, drawn, kids, dead) -> FriendCountOutcome:
        k = self.k
        streams = self._streams
        deadmask = 0
        for i in dead:
            deadmask |= 1 << i
        n0 = len(masks)
        type_memo: dict[int, int] = {}
        alive_memo: dict[tuple[int, int], bool] = {}
        tmasks, tcum = self._type_masks, self._type_cum

        def typed(u: int) -> int:
            gm = type_memo.get(u)
            if gm is None:
                gm = tmasks[bisect_left(tcum, self._uniform.draw())]
                type_memo[u] = gm
            return gm

        def alive(j: int, u: int) -> bool:
            key = (u, j)
            res = alive_memo.get(key)
            if res is not None:
                return res
            if drawn[u] == 0:
                res = bool((typed(u) >> j) & 1)
            else:
                # reveal any not-yet-drawn colors; their children are fully
                # unrevealed and will be typed on demand
                du = drawn[u]
                for c in range(k):
                    if not (du >> c) & 1:
                        nch = streams[c].draw()
                        du |= 1 << c
                        if nch:
                            base = len(masks)
                            cm = masks[u] & ~(1 << c)
                            masks.extend([cm] * nch)
                            drawn.extend([0] * nch)
                            kids[(u, c)] = list(range(base, base + nch))
                drawn[u] = du
                res = False
                for c in range(k):
                    if c == j:
                        continue
                    for w in kids.get((u, c), ()):
                        if alive(j, w):
                            res = True
                            break
                    if res:
                        break
            alive_memo[key] = res
            return res

        count = 0
        for v in range(n0):
            mv = masks[v]
            if mv & deadmask != deadmask:
                continue
            ok = True
            for j in range(k):
                if (mv >> j) & 1:
                    continue
                if not (alive(j, 0) and alive(j, v)):
                    ok = False
                    break
            if ok:
                count += 1
        return FriendCountOutcome.finite(count)


def sample_friend_count(lam, rng: np.random.Generator, depth_cap: int = 40,
                        node_cap: int = 10**6) -> FriendCountOutcome:
    """One sample of the root's friend count (finite or censored)."""
    return FriendCountSampler(lam, rng, depth_cap, node_cap).sample()


@dataclass(frozen=True)
class McHistogram:
    """Empirical friend-count frequencies; finite counts are kept sparsely so
    the finite frequencies and the censored mass sum to 1 exactly."""

    samples: int
    finite_counts: dict[int, int]
    censored_counts: dict[str, int] = field(default_factory=dict)

    @property
    def censored(self) -> int:
        return sum(self.censored_counts.values())

    def frequency(self, ell: int) -> float:
        return self.finite_counts.get(ell, 0) / self.samples

    @property
    def censored_mass(self) -> float:
        return self.censored / self.samples

    def stderr(self, ell: int) -> float:
        p = self.frequency(ell)
        return math.sqrt(p * (1.0 - p) / self.samples)

    def censored_stderr(self) -> float:
        p = self.censored_mass
        return math.sqrt(p * (1.0 - p) / self.samples)

    def dense(self, ell_max: int) -> list[float]:
        return [self.frequency(ell) for ell in range(1, ell_max + 1)]

    def to_json_dict(self) -> dict:
        return {
            "samples": self.samples,
            "histogram": {str(ell): c for ell, c in
                          sorted(self.finite_counts.items())},
            "censored": dict(self.censored_counts),
            "censored_mass": self.censored_mass,
        }


def mc_component_size_distribution(lam, samples: int, ell_max: int,
                                   rng: np.random.Generator,
                                   depth_cap: int = 40,
                                   node_cap: int = 10**6) -> McHistogram:
    """Empirical friend-count distribution over i.i.d. tree samples.

    Censored outcomes (every avoiding cluster still alive at the caps) are
    excluded from the finite numerators but kept in the denominator; the
    censored mass estimates the infinite-class density plus truncation bias.
    """
    if ell_max < 1:
        raise ValueError("ell_max must be >= 1")
    sampler = FriendCountSampler(lam, rng, depth_cap, node_cap)
    finite: dict[int, int] = {}
    censored: dict[str, int] = {}
    for _ in range(samples):
        out = sampler.sample()
        if out.kind == "finite":
            finite[out.ell] = finite.get(out.ell, 0) + 1
        else:
            censored[out.reason] = censored.get(out.reason, 0) + 1
    return McHistogram(samples, finite, censored)
