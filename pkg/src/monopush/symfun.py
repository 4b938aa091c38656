"""Complete homogeneous symmetric polynomials and divided differences of exp.

Everything downstream reduces to one quantity: the divided difference of
``t -> exp(t*s)`` over a finite node set ``z_1..z_l``::

    [z_1..z_l] exp(. s) = sum_{i>=0} h_{i-l+1}(z) s**i / i!
                        = sum_r exp(z_r s) / prod_{j!=r} (z_r - z_j)

The second (partial-fraction) form is only defined for distinct nodes and
cancels badly as nodes approach each other. The series is defined for any
nodes but cancels badly when ``|z| * |s|`` is large. ``exp_divided_difference``
picks between them and a scaling-and-squaring evaluation that is safe in
both regimes.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, EvaluationError

SERIES_TERM_CAP = 10_000
PATH_SWITCH_GAP = 0.05
DEFAULT_CLUSTER_RTOL = 1e-9

# closed forms whose terms exceed the result by more than this are redone
# by the series path (about four digits lost at worst)
CANCELLATION_LIMIT = 1e4
BASE_TAYLOR_EXTRA = 16

PARTIAL_FRACTION = "partial-fraction"
CONFLUENT = "confluent"
SERIES = "series"


def _as_nodes(nodes) -> np.ndarray:
    z = np.asarray(nodes, dtype=float).reshape(-1)
    if z.size == 0:
        raise DomainError("node set must be nonempty")
    if not np.all(np.isfinite(z)):
        raise DomainError("nodes must be finite")
    return z


def complete_homogeneous(k: int, nodes: Sequence[float]) -> float:
    """h_k of the nodes; 0 for k < 0 and 1 for k == 0."""
    z = _as_nodes(nodes)
    k = int(k)
    if k < 0:
        return 0.0
    return float(complete_homogeneous_table(k, z)[k])


def complete_homogeneous_table(kmax: int, nodes: Sequence[float]) -> np.ndarray:
    """Return ``[h_0, ..., h_kmax]`` of the nodes.

    Adds one node at a time through ``h_k(z, y) = h_k(z) + y h_{k-1}(z, y)``,
    which is the generating function ``prod 1/(1 - z_i t)`` read off
    coefficient by coefficient.
    """
    z = _as_nodes(nodes)
    h = np.zeros(int(kmax) + 1)
    if kmax < 0:
        return h
    h[0] = 1.0
    # h currently holds h_k() of zero variables: 1, 0, 0, ...
    for y in z:
        for k in range(1, len(h)):
            h[k] = h[k] + y * h[k - 1]
    return h


def h_tail_bound(k: int, n: int, max_abs: float) -> float:
    """Upper bound ``C(k+n-1, n-1) * max_abs**k`` on ``|h_k|`` over n nodes."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if k < 0:
        return 0.0
    return math.comb(k + n - 1, n - 1) * float(max_abs) ** k


def sylvester_power_sum(nodes: Sequence[float], d: int) -> float:
    """``sum_r x_r**d / prod_{j!=r}(x_r - x_j)``; equals h_{d-n+1} for distinct nodes."""
    x = _as_nodes(nodes)
    total = 0.0
    for r, xr in enumerate(x):
        others = np.delete(x, r)
        total += xr**d / np.prod(xr - others)
    return float(total)


def sylvester_unit_sum(nodes: Sequence[float]) -> float:
    """``sum_i prod_{j!=i} x_j/(x_j - x_i)``, which is identically 1."""
    x = _as_nodes(nodes)
    total = 0.0
    for i, xi in enumerate(x):
        others = np.delete(x, i)
        total += np.prod(others / (others - xi))
    return float(total)


class Cluster(NamedTuple):
    value: float
    multiplicity: int
    indices: tuple


def cluster_nodes(nodes: Sequence[float], tol: float) -> list[Cluster]:
    """Single-linkage clustering of the nodes at distance ``tol``.

    Clusters come back sorted by value; ``value`` is the member mean.
    """
    z = _as_nodes(nodes)
    if not tol > 0:
        raise DomainError("cluster tolerance must be positive")
    order = np.argsort(z, kind="stable")
    groups = [[int(order[0])]]
    for prev, cur in zip(order[:-1], order[1:]):
        if z[cur] - z[prev] > tol:
            groups.append([])
        groups[-1].append(int(cur))
    return [Cluster(float(np.mean(z[g])), len(g), tuple(sorted(g))) for g in groups]


def default_cluster_tol(nodes) -> float:
    z = _as_nodes(nodes)
    return DEFAULT_CLUSTER_RTOL * max(1.0, float(np.max(np.abs(z))))


class _Neumaier:
    """Compensated running sum, elementwise over arrays."""

    def __init__(self, shape):
        self.total = np.zeros(shape)
        self.comp = np.zeros(shape)

    def add(self, v):
        t = self.total + v
        big = np.abs(self.total) >= np.abs(v)
        self.comp += np.where(big, (self.total - t) + v, (v - t) + self.total)
        self.total = t

    def value(self):
        return self.total + self.comp


def exp_series(nodes: Sequence[float], s, rel_tol: float = 1e-16):
    """Sum ``sum_{i>=0} h_{i-n+1}(nodes) s**i / i!`` with a certified tail.

    Terms are accumulated in increasing ``i`` with compensated summation and
    the loop stops once the remaining tail, bounded through
    :func:`h_tail_bound`, is below ``rel_tol`` times the running value.
    ``s`` may be an array; the result then has its shape.

    Raises
    ------
    EvaluationError
        If the bound has not closed after ``SERIES_TERM_CAP`` terms.
    """
    z = _as_nodes(nodes)
    if not 0.0 < rel_tol < 1.0:
        raise DomainError("rel_tol must lie in (0, 1)")
    s_arr = np.asarray(s, dtype=float)
    scalar = s_arr.ndim == 0
    s_arr = np.atleast_1d(s_arr).reshape(-1)
    if not np.all(np.isfinite(s_arr)):
        raise DomainError("s must be finite")

    n = z.size
    w = z[:, None] * s_arr[None, :]
    x = float(np.max(np.abs(z))) * np.abs(s_arr)
    prefactor = s_arr ** (n - 1)

    # u[r] = h_k(w_1..w_r) / (k+n-1)!, so the i-th term is prefactor * u[-1]
    # with i = k+n-1; the k-th term is bounded by x**k / (k! (n-1)!).
    u = np.full((n, s_arr.size), 1.0 / math.factorial(n - 1))
    acc = _Neumaier(s_arr.size)
    acc.add(u[-1])
    bound = np.full(s_arr.size, 1.0 / math.factorial(n - 1))
    done = np.zeros(s_arr.size, dtype=bool)
    for k in range(1, SERIES_TERM_CAP + 1):
        u = np.cumsum(w * u, axis=0) / (k + n - 1)
        acc.add(u[-1])
        bound = bound * x / k
        # tail from k+1 on is geometric with ratio x/(k+2) once that is < 1
        ratio = x / (k + 2)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            tail = np.where(ratio < 1.0, bound * x / (k + 1) / (1.0 - ratio), np.inf)
            tail = np.where(x == 0.0, 0.0, tail)
        if not np.all(np.isfinite(acc.total)):
            raise EvaluationError("series overflowed", acc.value(), tail)
        done = tail <= rel_tol * np.abs(acc.total)
        if np.all(done):
            break
    else:
        raise EvaluationError(
            f"series not certified after {SERIES_TERM_CAP} terms",
            prefactor * acc.value(),
            tail * np.abs(prefactor),
        )
    out = prefactor * acc.value()
    return float(out[0]) if scalar else out


def _partial_fraction(z, s):
    total = np.zeros_like(s)
    size = np.zeros_like(s)
    for r, zr in enumerate(z):
        term = np.exp(zr * s) / np.prod(zr - np.delete(z, r))
        total = total + term
        size = size + np.abs(term)
    return total, size


def hermite_coefficients(clusters) -> list[np.ndarray]:
    """Per cluster, the polynomial ``P_l`` with ``[nodes] exp(. s) = sum_l exp(v_l s) P_l(s)``.

    Entry ``k`` of each array is the coefficient of ``s**k``.
    """
    out = []
    for l, cl in enumerate(clusters):
        m = cl.multiplicity
        # Taylor coefficients at cl.value of prod_{j != l} (t - v_j)**(-m_j)
        g = np.zeros(m)
        g[0] = 1.0
        for j, other in enumerate(clusters):
            if j == l:
                continue
            d = cl.value - other.value
            mj = other.multiplicity
            factor = np.array(
                [math.comb(mj + p - 1, p) * (-1.0 / d) ** p for p in range(m)]
            ) * d ** (-mj)
            g = np.convolve(g, factor)[:m]
        # Taylor coefficients of exp(t s) at cl.value are exp(v s) s^k / k!
        out.append(np.array([g[m - 1 - k] / math.factorial(k) for k in range(m)]))
    return out


def _confluent(clusters, s):
    """Hermite form: one generalised residue per cluster of coincident nodes."""
    total = np.zeros_like(s)
    size = np.zeros_like(s)
    for cl, coeffs in zip(clusters, hermite_coefficients(clusters)):
        part = np.zeros_like(s)
        part_size = np.zeros_like(s)
        for k, ck in enumerate(coeffs):
            term = s**k * ck
            part = part + term
            part_size = part_size + np.abs(term)
        scale = np.exp(cl.value * s)
        total = total + scale * part
        size = size + scale * part_size
    return total, size


def _scaled_squaring(z, s):
    """exp(s Z)[0, -1] for the bidiagonal node matrix Z by scaling and squaring.

    The base matrix holds divided differences over every contiguous run of
    the sorted, centred nodes at ``s / 2**J`` (the same series as
    :func:`exp_series`, for all runs at once); squaring never cancels because
    entry (i, j) of every factor has sign ``sign(s)**(j-i)``.
    """
    z = np.sort(z)
    n = z.size
    mu = 0.5 * (z[0] + z[-1])
    zc = z - mu
    radius = float(np.max(np.abs(zc)))
    with np.errstate(divide="ignore"):
        reach = radius * np.abs(s) / 0.5
        J = np.where(reach > 1.0, np.ceil(np.log2(np.where(reach > 1.0, reach, 1.0))), 0.0)
    J = J.astype(int)
    sigma = s / 2.0**J
    # Taylor polynomial of exp(sigma (Z - mu)); with |sigma| * radius <= 1/2
    # the tail past order d + BASE_TAYLOR_EXTRA of every order-d entry is
    # below e * 0.5**16 / 16! relative, i.e. under 1e-17.
    Z = np.diag(zc) + np.diag(np.ones(n - 1), 1)
    N = sigma[:, None, None] * Z[None, :, :]
    eye = np.broadcast_to(np.eye(n), N.shape)
    T = eye.copy()
    for k in range(n - 1 + BASE_TAYLOR_EXTRA, 0, -1):
        T = eye + (N @ T) / k
    for it in range(int(J.max()) if J.size else 0):
        sel = J > it
        T[sel] = T[sel] @ T[sel]
    return T[:, 0, n - 1] * np.exp(mu * s)


def choose_path(nodes, gap: float = PATH_SWITCH_GAP, cluster_tol: float | None = None) -> str:
    """Evaluation path ``exp_divided_difference`` takes for these nodes."""
    z = _as_nodes(nodes)
    tol = default_cluster_tol(z) if cluster_tol is None else cluster_tol
    clusters = cluster_nodes(z, tol)
    reps = np.array([c.value for c in clusters])
    min_gap = float(np.min(np.diff(reps))) if reps.size > 1 else np.inf
    if min_gap < gap:
        return SERIES
    if all(c.multiplicity == 1 for c in clusters):
        return PARTIAL_FRACTION
    return CONFLUENT


def exp_divided_difference(
    nodes: Sequence[float],
    s,
    method: str = "auto",
    gap: float = PATH_SWITCH_GAP,
    cluster_tol: float | None = None,
):
    """Divided difference of ``t -> exp(t*s)`` over the nodes.

    ``method`` is one of ``"auto"``, ``"partial-fraction"``, ``"confluent"``
    or ``"series"``. In auto mode the partial-fraction form is used when all
    nodes are separated by at least ``gap``, the confluent (Hermite) form when
    coincident clusters are separated by ``gap``, and scaling-and-squaring of
    the series otherwise. Auto mode also re-evaluates by the series any entry
    where a closed form cancelled by more than ``CANCELLATION_LIMIT``; this
    happens for many nodes at small ``|s|``.

    Returns ``(value, path)``. ``value`` has the shape of ``s``; ``path`` is
    a string for scalar ``s`` and an array of strings otherwise.
    """
    z = _as_nodes(nodes)
    s_arr = np.asarray(s, dtype=float)
    scalar = s_arr.ndim == 0
    s_arr = np.atleast_1d(s_arr).reshape(-1)
    if not np.all(np.isfinite(s_arr)):
        raise DomainError("s must be finite")
    tol = default_cluster_tol(z) if cluster_tol is None else cluster_tol

    path = choose_path(z, gap, tol) if method == "auto" else method
    size = None
    if path == PARTIAL_FRACTION:
        if len(cluster_nodes(z, tol)) != z.size:
            raise DomainError("partial-fraction form needs pairwise distinct nodes")
        out, size = _partial_fraction(z, s_arr)
    elif path == CONFLUENT:
        out, size = _confluent(cluster_nodes(z, tol), s_arr)
    elif path == SERIES:
        out = _scaled_squaring(z, s_arr)
    else:
        raise DomainError(f"unknown method {method!r}")

    paths = np.full(s_arr.size, path, dtype=object)
    if method == "auto" and size is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            bad = ~(size <= CANCELLATION_LIMIT * np.abs(out))
        if np.any(bad):
            out = out.copy()
            out[bad] = _scaled_squaring(z, s_arr[bad])
            paths[bad] = SERIES
    if scalar:
        return float(out[0]), str(paths[0])
    return out, paths
