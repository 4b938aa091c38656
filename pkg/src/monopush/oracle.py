"""Formula-free estimates of pushforward densities and volumes.

Nothing here uses the closed forms of :mod:`monopush.monomial_core`; the
only shared type is :class:`ExponentData`. Monte Carlo draws are made from
counter-based Philox streams keyed by ``(seed, stream)``, one stream per
fixed-size chunk of one atom's samples, so the estimate does not depend on
how many workers process the chunks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError
from .exponents import ExponentData

DEFAULT_CHUNK = 1 << 18


class UnsupportedDimensionError(DomainError):
    pass


@dataclass(frozen=True)
class HistogramEstimate:
    bin_edges: np.ndarray
    bin_density: np.ndarray
    bin_stderr: np.ndarray
    samples: int
    seed: int
    mass: float
    mass_stderr: float

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def to_csv(self) -> str:
        lines = ["q_lo,q_hi,density,stderr"]
        for lo, hi, d, s in zip(
            self.bin_edges[:-1], self.bin_edges[1:], self.bin_density, self.bin_stderr
        ):
            lines.append(f"{lo!r},{hi!r},{d!r},{s!r}")
        return "\n".join(lines) + "\n"


def rng_for(seed: int, stream: int) -> np.random.Generator:
    """Philox generator keyed by ``(seed, stream)``."""
    if seed < 0 or stream < 0:
        raise DomainError("seed and stream must be unsigned")
    key = (int(stream) << 64) | (int(seed) & ((1 << 64) - 1))
    return np.random.Generator(np.random.Philox(key=key))


def signed_power(x: np.ndarray, a: float) -> np.ndarray:
    """``x**a`` for integer ``a`` keeping the sign; ``|x|**a`` otherwise."""
    mag = np.abs(x) ** a
    if float(a).is_integer() and int(a) % 2 == 1:
        return np.sign(x) * mag
    return mag


def monomial(x: np.ndarray, A) -> np.ndarray:
    out = np.ones(x.shape[0])
    for j, a in enumerate(A):
        if a != 0:
            out = out * signed_power(x[:, j], a)
    return out


def _default_range(atoms):
    top = 0.0
    negative = False
    for atom in atoms:
        A = atom.exponents.A
        reach = 1.0
        for (lo, hi), a in zip(atom.box.intervals, A):
            reach *= max(abs(lo), abs(hi)) ** a
            if lo < 0 and float(a).is_integer() and int(a) % 2 == 1:
                negative = True
        top = max(top, reach)
    return (-top if negative else 0.0), top


def _allocate(weights, total):
    """Largest-remainder split of ``total`` samples proportional to ``weights``."""
    w = np.asarray(weights, dtype=float)
    share = w / w.sum() * total
    base = np.floor(share).astype(int)
    rest = total - base.sum()
    order = np.argsort(-(share - base), kind="stable")
    base[order[:rest]] += 1
    return base


def mc_histogram(
    atoms,
    samples: int,
    seed: int,
    bins: int,
    q_range=None,
    log_bins: bool = False,
    log_min: float | None = None,
    weight=None,
    workers: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> HistogramEstimate:
    """Weighted histogram of ``x**A`` under uniform draws from each atom's box.

    Each draw carries ``coeff * vol(box) * |x**B| * weight(x)`` divided by the
    number of draws for its atom, so the bin sums estimate the pushforward
    mass per bin. Samples are split between atoms in proportion to
    ``|coeff| * vol(box)``. ``weight`` is an optional vectorised function of
    the ``(m, n)`` sample array multiplying every draw.

    With ``log_bins`` the edges are geometric from ``log_min`` (default
    ``1e-6`` of the top) to the top of the range, which must be positive.
    """
    atoms = [a for a in atoms]
    if not atoms:
        raise DomainError("empty atom set")
    if samples < 10_000:
        raise DomainError("need at least 1e4 samples")
    if bins < 10:
        raise DomainError("need at least 10 bins")
    lo, hi = _default_range(atoms) if q_range is None else q_range
    if log_bins:
        lo = hi * 1e-6 if log_min is None else log_min
        if not 0 < lo < hi:
            raise DomainError("log bins need 0 < q_min < q_max")
        edges = np.geomspace(lo, hi, bins + 1)
    else:
        edges = np.linspace(lo, hi, bins + 1)

    live = [a for a in atoms if a.coeff != 0]
    if not live:
        raise DomainError("all atoms have zero coefficient")
    counts = _allocate([abs(a.coeff) * a.box.volume for a in live], int(samples))

    tasks = []
    stream = 0
    for idx, (atom, m) in enumerate(zip(live, counts)):
        for start in range(0, int(m), chunk):
            tasks.append((idx, stream, min(chunk, int(m) - start)))
            stream += 1

    def run(task):
        idx, stream_id, size = task
        atom = live[idx]
        m = counts[idx]
        rng = rng_for(seed, stream_id)
        box = np.array(atom.box.intervals)
        x = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((size, box.shape[0]))
        w = np.full(size, atom.coeff * atom.box.volume / m)
        for j, b in enumerate(atom.exponents.B):
            if b != 0:
                w = w * np.abs(x[:, j]) ** b
        if weight is not None:
            w = w * weight(x)
        q = monomial(x, atom.exponents.A)
        pos = np.searchsorted(edges, q, side="right") - 1
        pos[q == edges[-1]] = bins - 1
        inside = (pos >= 0) & (pos < bins)
        s1 = np.bincount(pos[inside], weights=w[inside], minlength=bins)
        s2 = np.bincount(pos[inside], weights=w[inside] ** 2, minlength=bins)
        return idx, s1, s2, w.sum(), (w**2).sum()

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    # reduce in task order so the sums do not depend on scheduling
    k = len(live)
    S1 = np.zeros((k, bins))
    S2 = np.zeros((k, bins))
    T1 = np.zeros(k)
    T2 = np.zeros(k)
    for idx, s1, s2, t1, t2 in results:
        S1[idx] += s1
        S2[idx] += s2
        T1[idx] += t1
        T2[idx] += t2

    N = counts.astype(float)[:, None]
    # variance of the per-atom mean of Y = N w, then summed over atoms
    var = np.clip((N * S2 - S1**2) / (N - 1), 0.0, None).sum(axis=0)
    Nt = counts.astype(float)
    mass_var = np.clip((Nt * T2 - T1**2) / (Nt - 1), 0.0, None).sum()
    widths = np.diff(edges)
    return HistogramEstimate(
        edges,
        S1.sum(axis=0) / widths,
        np.sqrt(var) / widths,
        int(samples),
        int(seed),
        float(T1.sum()),
        float(math.sqrt(mass_var)),
    )


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float


def _fibre_grid(e: ExponentData, q: float, resolution: int) -> float:
    n = e.n
    fibre = max(i for i in range(n) if e.A[i] > 0)
    others = [i for i in range(n) if i != fibre]
    af, bf = e.A[fibre], e.B[fibre]
    mid = (np.arange(resolution) + 0.5) / resolution

    # Each outer axis runs over the part of [0, 1] where the region is still
    # reachable given the axes before it, so the integrand is smooth on the
    # grid; midpoints are laid out on that mapped interval.
    P = np.array([1.0])
    W = np.array([1.0])
    for i in others:
        a, b = e.A[i], e.B[i]
        lower = (q / P) ** (1.0 / a) if a > 0 else np.zeros_like(P)
        lower = np.minimum(lower, 1.0)
        x = lower[..., None] + (1.0 - lower[..., None]) * mid
        W = W[..., None] * (1.0 - lower[..., None]) / resolution * x**b
        P = P[..., None] * x**a
    log_t = np.minimum(np.log(q / P) / af, 0.0)
    inner = -np.expm1((bf + 1.0) * log_t) / (bf + 1.0)
    return float(np.sum(W * inner))


def quadrature_volume(e: ExponentData, q: float, resolution: int = 256) -> QuadratureResult:
    """Mass of ``{x in [0,1]**n : x**A > q}`` under ``x**B dx`` by tensor quadrature.

    The last axis with a positive map exponent is integrated exactly along
    each fibre. The remaining axes use a midpoint grid, each axis mapped onto
    the interval where ``x**A > q`` is still attainable, at ``resolution``
    and ``2 * resolution`` points per axis; the two are combined by
    Richardson extrapolation and their difference is the reported error.
    """
    if e.n > 3:
        raise UnsupportedDimensionError(f"tensor quadrature supports n <= 3, got n = {e.n}")
    if resolution < 64:
        raise DomainError("resolution must be at least 64")
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    coarse = _fibre_grid(e, q, resolution)
    fine = _fibre_grid(e, q, 2 * resolution)
    value = (4.0 * fine - coarse) / 3.0
    # summation rounding floor, for integrands the grid resolves exactly
    err = abs(fine - coarse) + 1e-13 * abs(value)
    return QuadratureResult(value, err)


def fibre_density(f, e: ExponentData, q: float, epsabs: float = 1e-13) -> float:
    """Density at ``q != 0`` of ``x**A`` pushed from ``f * |x**B|`` on ``[-1, 1]**2``.

    Integrates over the fibre ``x**A = q`` parametrised by the axis whose map
    exponent is not the one equal to 1. ``f`` takes ``(x1, x2)`` scalars.
    """
    if e.n != 2:
        raise UnsupportedDimensionError("fibre_density handles n = 2")
    if e.A[1] == 1:
        free, solved = 0, 1
    elif e.A[0] == 1:
        free, solved = 1, 0
    else:
        raise DomainError("fibre_density needs one map exponent equal to 1")
    if q == 0:
        raise DomainError("fibre integral is singular at q = 0")
    a, b_free, b_solved = e.A[free], e.B[free], e.B[solved]

    def integrand(u):
        pu = signed_power(np.array([u]), a)[0]
        v = q / pu
        if abs(v) > 1.0:
            return 0.0
        x = [0.0, 0.0]
        x[free], x[solved] = u, v
        return f(*x) * abs(u) ** b_free * abs(v) ** b_solved / abs(pu)

    start = abs(q) ** (1.0 / a) if a > 0 else 0.0
    total = 0.0
    for lo, hi in ((-1.0, -start), (start, 1.0)):
        if hi > lo:
            val, _ = integrate.quad(integrand, lo, hi, epsabs=epsabs, epsrel=1e-12, limit=200)
            total += val
    return total


@dataclass(frozen=True)
class ComparisonReport:
    centers: np.ndarray
    z: np.ndarray
    pass_fraction: float
    max_abs_z: float
    threshold: float = 5.0
    required: float = 0.95

    @property
    def passed(self) -> bool:
        return self.pass_fraction >= self.required

    def as_record(self) -> dict:
        return {
            "bins": int(self.z.size),
            "pass_fraction": self.pass_fraction,
            "max_abs_z": self.max_abs_z if math.isfinite(self.max_abs_z) else "inf",
            "threshold_sigma": self.threshold,
            "passed": self.passed,
        }


def compare(profile, est: HistogramEstimate, threshold: float = 5.0) -> ComparisonReport:
    """z-scores ``(profile - estimate) / stderr`` per bin.

    The profile is read at the bin centres by linear interpolation; bins
    whose centre lies outside the profile grid are skipped. Best fed with a
    bin-averaged profile, which removes curvature bias.
    """
    grid = np.asarray(profile.grid, dtype=float)
    vals = np.asarray(profile.values, dtype=float)
    centers = est.centers
    use = (centers >= grid[0]) & (centers <= grid[-1])
    if not np.any(use):
        raise DomainError("profile and histogram ranges do not overlap")
    closed = np.interp(centers[use], grid, vals)
    diff = closed - est.bin_density[use]
    se = est.bin_stderr[use]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / se, np.where(diff == 0, 0.0, np.inf))
    ok = np.abs(z) <= threshold
    return ComparisonReport(
        centers[use], z, float(ok.mean()), float(np.max(np.abs(z))), threshold
    )


def wynn_epsilon(seq) -> float:
    """Limit of a sequence by Wynn's epsilon algorithm.

    Exact (up to rounding) for sequences ``L + sum_j p_j(k) r_j**k`` with
    enough terms, which is what a density sampled on a geometric q-grid is.
    Returns the highest-order even-column estimate.
    """
    s = [float(v) for v in seq]
    if not s:
        raise DomainError("empty sequence")
    prev = [0.0] * (len(s) + 1)
    cur = s[:]
    best = s[-1]
    col = 0
    while len(cur) > 1:
        nxt = []
        for i in range(len(cur) - 1):
            d = cur[i + 1] - cur[i]
            if d == 0.0:
                # the column has converged; the limit is at hand
                return cur[i] if col % 2 == 0 else best
            nxt.append(prev[i + 1] + 1.0 / d)
        prev, cur = cur, nxt
        col += 1
        if col % 2 == 0:
            best = cur[-1]
    return best
