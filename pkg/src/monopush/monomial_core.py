"""Volume, density and continuity at 0 for the monomial local model.

The model is the pushforward of ``x**B dx`` on ``[0, 1]**n`` (or
``|x**B| dx`` on ``[-1, 1]**n``) under ``x -> x**A``. With
``c_i = (b_i + 1) / a_i`` over the axes where ``a_i > 0`` and ``kappa`` the
product of ``1/a_i`` over those axes times ``1/(b_i + 1)`` over the rest,

    V(q)   = kappa * (-1)**n * [c_1, ..., c_n, 0] exp(. log q)
    rho(q) = -V'(q) = kappa * [1 - c_1, ..., 1 - c_n] exp(. (-log q))

where ``[..] exp(. s)`` is the divided difference of ``t -> exp(t s)``
(see :mod:`monopush.symfun`). For distinct nodes the latter is
``kappa * sum_i q**(c_i - 1) / prod_{j != i} (c_j - c_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import symfun
from .errors import DomainError
from .exponents import ExponentData

LIMIT = "limit"
OUTSIDE = "outside"


class FRSCase(str, Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    OUTSIDE = "Outside"


class Parity(str, Enum):
    SOME_ODD = "SomeOdd"
    ALL_EVEN = "AllEven"
    NON_INTEGER = "NonInteger"


@dataclass(frozen=True)
class Spectrum:
    """Nodes ``c_i`` over the axes with ``a_i > 0``, the prefactor and clusters."""

    active_nodes: tuple
    active_axes: tuple
    prefactor: float
    clusters: tuple
    cluster_tol: float

    @property
    def n(self) -> int:
        return len(self.active_nodes)

    @property
    def min_gap(self) -> float:
        reps = [c.value for c in self.clusters]
        return min((b - a for a, b in zip(reps, reps[1:])), default=math.inf)


def derive_spectrum(e: ExponentData, cluster_tol: float | None = None) -> Spectrum:
    axes = tuple(i for i, a in enumerate(e.A) if a > 0)
    nodes = tuple((e.B[i] + 1.0) / e.A[i] for i in axes)
    kappa = math.prod(1.0 / e.A[i] for i in axes)
    kappa *= math.prod(1.0 / (e.B[i] + 1.0) for i in range(e.n) if e.A[i] == 0)
    if cluster_tol is None:
        cluster_tol = symfun.DEFAULT_CLUSTER_RTOL * max(nodes)
    if not cluster_tol > 0:
        raise DomainError("cluster_tol must be positive")
    clusters = tuple(symfun.cluster_nodes(nodes, cluster_tol))
    return Spectrum(nodes, axes, kappa, clusters, float(cluster_tol))


def _open_unit(q):
    q_arr = np.asarray(q, dtype=float)
    if not np.all((q_arr > 0) & (q_arr < 1)):
        raise DomainError("q must lie in the open interval (0, 1)")
    return q_arr


def volume_with_path(e: ExponentData, q, path: str = "auto", cluster_tol: float | None = None):
    """Mass of ``{x in [0,1]**n : x**A > q}`` under ``x**B dx``, with the path used.

    ``path="partial-fraction"`` evaluates the closed form for distinct
    ``c_i``; ``"series"`` the log-power series (confluence safe);
    ``"confluent"`` the per-cluster closed form; ``"auto"`` chooses.
    ``cluster_tol`` sets which nodes count as coincident (see
    :func:`derive_spectrum`).
    """
    q_arr = _open_unit(q)
    spec = derive_spectrum(e, cluster_tol)
    c = np.array(spec.active_nodes)
    n = spec.n
    nodes = np.append(c, 0.0)
    if path == symfun.PARTIAL_FRACTION:
        if len(spec.clusters) != n:
            raise DomainError("partial-fraction form needs pairwise distinct c_i")
        total = np.full(q_arr.shape, 1.0 / np.prod(c))
        for i in range(n):
            denom = c[i] * np.prod(np.delete(c, i) - c[i])
            total = total - q_arr ** c[i] / denom
        out = spec.prefactor * total
        paths = np.full(q_arr.shape, path, dtype=object)
    else:
        dd, paths = symfun.exp_divided_difference(
            nodes, np.log(q_arr), method=path, cluster_tol=spec.cluster_tol
        )
        out = spec.prefactor * (-1.0) ** n * np.asarray(dd)
    if q_arr.ndim == 0:
        return float(out), str(np.asarray(paths).reshape(-1)[0])
    return out, np.asarray(paths).reshape(q_arr.shape)


def volume(e: ExponentData, q, path: str = "auto", cluster_tol: float | None = None):
    """``V(A, B, q)`` for ``q`` in (0, 1); see :func:`volume_with_path`."""
    return volume_with_path(e, q, path, cluster_tol)[0]


def density_unit_cube_with_path(e: ExponentData, q, path: str = "auto", cluster_tol: float | None = None):
    q_arr = _open_unit(q)
    spec = derive_spectrum(e, cluster_tol)
    nodes = 1.0 - np.array(spec.active_nodes)
    dd, paths = symfun.exp_divided_difference(
        nodes, -np.log(q_arr), method=path, cluster_tol=spec.cluster_tol
    )
    out = spec.prefactor * np.asarray(dd)
    if q_arr.ndim == 0:
        return float(out), str(np.asarray(paths).reshape(-1)[0])
    return out.reshape(q_arr.shape), np.asarray(paths).reshape(q_arr.shape)


def density_unit_cube(e: ExponentData, q, path: str = "auto", cluster_tol: float | None = None):
    """Density at ``q`` in (0, 1) of the pushforward of ``x**B dx`` on ``[0,1]**n``."""
    return density_unit_cube_with_path(e, q, path, cluster_tol)[0]


@dataclass(frozen=True)
class ZeroLimit:
    """``lim rho(q)`` as ``q -> 0+`` and the leading behaviour ``q**p (-log q)**m``."""

    value: float
    power: float
    log_power: int

    @property
    def leading_exponents(self):
        return (self.power, self.log_power)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


def limit_at_zero(e: ExponentData) -> ZeroLimit:
    spec = derive_spectrum(e)
    tol = spec.cluster_tol
    c = np.array(spec.active_nodes)
    lowest = spec.clusters[0]
    power = lowest.value - 1.0
    log_power = lowest.multiplicity - 1

    at_one = np.abs(c - 1.0) <= tol
    if np.any(c < 1.0 - tol) or at_one.sum() >= 2:
        value = math.inf
    elif at_one.sum() == 1:
        value = spec.prefactor / float(np.prod(c[~at_one] - 1.0))
        power = 0.0
    else:
        value = 0.0
    if abs(power) <= tol:
        power = 0.0
    return ZeroLimit(value, power, log_power)


def log_expansion(e: ExponentData) -> list[tuple[float, np.ndarray]]:
    """Pairs ``(c, P)`` with ``rho(t) = kappa * sum t**(c - 1) * P(-log t)`` exactly on (0, 1).

    One pair per cluster of the spectrum, in increasing ``c``; entry ``k`` of
    ``P`` is the coefficient of ``(-log t)**k``.
    """
    spec = derive_spectrum(e)
    shifted = [symfun.Cluster(1.0 - cl.value, cl.multiplicity, cl.indices) for cl in spec.clusters]
    return [(1.0 - cl.value, P) for cl, P in zip(shifted, symfun.hermite_coefficients(shifted))]


def density_unit_interval_with_path(e: ExponentData, q):
    """Unit-cube density extended to ``q >= 0``: the limit at 0, zero from 1 on."""
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any(q_arr < 0) or not np.all(np.isfinite(q_arr)):
        raise DomainError("q must be finite and >= 0")
    values = np.zeros(q_arr.shape)
    paths = np.full(q_arr.shape, OUTSIDE, dtype=object)
    inner = (q_arr > 0) & (q_arr < 1)
    if np.any(inner):
        values[inner], paths[inner] = density_unit_cube_with_path(e, q_arr[inner])
    at_zero = q_arr == 0
    if np.any(at_zero):
        values[at_zero] = limit_at_zero(e).value
        paths[at_zero] = LIMIT
    if np.ndim(q) == 0:
        return float(values[0]), str(paths[0])
    return values, paths


def parity_of(A) -> Parity:
    if not all(float(a).is_integer() for a in A):
        return Parity.NON_INTEGER
    if any(int(a) % 2 == 1 for a in A):
        return Parity.SOME_ODD
    return Parity.ALL_EVEN


def signed_factor(e: ExponentData, require_integer_A: bool = True):
    """Reflection factor and evenness flag relating ``[-1,1]**n`` to ``[0,1]**n``.

    With some odd map exponent half of the ``2**n`` orthants land on each
    side of 0, so the density is ``2**(n-1)`` times the unit-cube density of
    ``|q|``. Otherwise every orthant lands on ``q >= 0`` and the factor is
    ``2**n``. Non-integer ``A`` is read as ``|x|**A`` unless
    ``require_integer_A`` is set.
    """
    parity = parity_of(e.A)
    if parity is Parity.NON_INTEGER and require_integer_A:
        raise DomainError("parity needs integer map exponents")
    if parity is Parity.SOME_ODD:
        return 2.0 ** (e.n - 1), True
    return 2.0**e.n, False


def density_signed_cube_with_path(e: ExponentData, q, require_integer_A: bool = True):
    factor, even = signed_factor(e, require_integer_A)
    q_arr = np.atleast_1d(np.asarray(q, dtype=float))
    if not np.all(np.isfinite(q_arr)):
        raise DomainError("q must be finite")
    arg = np.abs(q_arr) if even else np.where(q_arr >= 0, q_arr, 1.0)
    values, paths = density_unit_interval_with_path(e, arg)
    values = factor * values
    if not even:
        neg = q_arr < 0
        values[neg] = 0.0
        paths[neg] = OUTSIDE
    if np.ndim(q) == 0:
        return float(values[0]), str(paths[0])
    return values, paths


def density_signed_cube(e: ExponentData, q, require_integer_A: bool = True):
    """Density at ``q`` of the pushforward of ``|x**B| dx`` on ``[-1, 1]**n``."""
    return density_signed_cube_with_path(e, q, require_integer_A)[0]


@dataclass(frozen=True)
class ContinuityVerdict:
    frs_case: FRSCase
    parity: Parity
    limit_at_zero: float
    leading_exponents: tuple
    distinguished_axis: int | None = None

    def as_record(self) -> dict:
        limit = self.limit_at_zero
        return {
            "frs_case": self.frs_case.value,
            "parity": self.parity.value,
            "limit_at_zero": limit if math.isfinite(limit) else "inf",
            "leading_exponents": list(self.leading_exponents),
            "distinguished_axis": self.distinguished_axis,
        }


def frs_case(e: ExponentData):
    """Which admissible exponent case holds, and the distinguished axis for Case2."""
    if all(a <= b for a, b in zip(e.A, e.B)):
        return FRSCase.CASE1, None
    for i, a in enumerate(e.A):
        if a == 1 and all(e.A[j] <= e.B[j] for j in range(e.n) if j != i):
            return FRSCase.CASE2, i
    return FRSCase.OUTSIDE, None


def classify(e: ExponentData) -> ContinuityVerdict:
    if not e.is_integer:
        raise DomainError("classification needs integer exponents")
    case, axis = frs_case(e)
    lim = limit_at_zero(e)
    return ContinuityVerdict(case, parity_of(e.A), lim.value, lim.leading_exponents, axis)
