"""Signed combinations of box atoms and their pushforward densities.

A :class:`BoxAtom` is the measure ``coeff * 1_box * |x**B| dx``. Its
pushforward under ``x**A`` is reduced to the unit-cube density by

1. splitting the box at 0 so every piece lies in a closed orthant,
2. writing an orthant box by inclusion-exclusion over ``[0, e_i]`` corners,
3. reading each ``prod [0, e_i]`` as a quarter of the symmetric box
   ``prod [-e_i, e_i]`` and rescaling ``x_i = e_i y_i``.

When some map exponent is odd, the pushforward of an orthant box lives on
one side of 0 only, so reflected atoms carry an ``orientation`` (+1 or -1):
the side of the real line they land on. Unoriented symmetric atoms give
even densities.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import monomial_core as mc
from .errors import DomainError
from .exponents import ExponentData


@dataclass(frozen=True)
class Box:
    intervals: tuple

    def __post_init__(self):
        iv = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        if not iv:
            raise DomainError("a box needs at least one interval")
        for lo, hi in iv:
            if not lo < hi:
                raise DomainError(f"empty interval [{lo}, {hi}]")
            if lo < -1.0 or hi > 1.0:
                raise DomainError(f"interval [{lo}, {hi}] leaves [-1, 1]")
        object.__setattr__(self, "intervals", iv)

    @property
    def n(self) -> int:
        return len(self.intervals)

    @property
    def volume(self) -> float:
        return math.prod(hi - lo for lo, hi in self.intervals)

    @property
    def center(self) -> tuple:
        return tuple(0.5 * (lo + hi) for lo, hi in self.intervals)

    @property
    def is_symmetric(self) -> bool:
        return all(lo == -hi for lo, hi in self.intervals)

    @property
    def half_widths(self) -> tuple:
        return tuple(hi for _, hi in self.intervals)

    def in_orthant(self) -> bool:
        return all(lo >= 0 or hi <= 0 for lo, hi in self.intervals)


def weighted_length(lo: float, hi: float, b: float) -> float:
    """``int_lo^hi |x|**b dx``, splitting at 0 if needed."""

    def prim(t):
        # odd antiderivative of |x|**b
        return math.copysign(abs(t) ** (b + 1.0), t) / (b + 1.0)

    return prim(hi) - prim(lo)


@dataclass(frozen=True)
class BoxAtom:
    coeff: float
    box: Box
    exponents: ExponentData
    orientation: int | None = None

    def __post_init__(self):
        if self.box.n != self.exponents.n:
            raise DomainError("box dimension does not match the exponents")
        if self.orientation not in (None, 1, -1):
            raise DomainError("orientation must be None, +1 or -1")

    @property
    def mass(self) -> float:
        """Signed total mass ``coeff * int_box |x**B| dx``."""
        return self.coeff * math.prod(
            weighted_length(lo, hi, b) for (lo, hi), b in zip(self.box.intervals, self.exponents.B)
        )

    def scaled(self, factor: float) -> "BoxAtom":
        return replace(self, coeff=self.coeff * factor)


@dataclass(frozen=True)
class AtomSet:
    atoms: tuple = ()

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if atoms and len({a.box.n for a in atoms}) != 1:
            raise DomainError("atoms must share the ambient dimension")
        object.__setattr__(self, "atoms", atoms)

    def __iter__(self):
        return iter(self.atoms)

    def __len__(self):
        return len(self.atoms)

    def __add__(self, other: "AtomSet") -> "AtomSet":
        return AtomSet(self.atoms + tuple(other.atoms))

    def scaled(self, factor: float) -> "AtomSet":
        return AtomSet(tuple(a.scaled(factor) for a in self.atoms))

    @property
    def mass(self) -> float:
        return math.fsum(a.mass for a in self.atoms)

    def shared_A(self) -> tuple:
        As = {a.exponents.A for a in self.atoms}
        if len(As) != 1:
            raise DomainError("atoms must share the map exponents A")
        return As.pop()


@dataclass
class DensityProfile:
    grid: np.ndarray
    values: np.ndarray
    paths: list = field(default_factory=list)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise DomainError("grid and values must be matching 1-d sequences")
        if np.any(np.diff(self.grid) <= 0):
            raise DomainError("grid must be strictly increasing")
        if not self.paths:
            self.paths = [""] * len(self.grid)
        self.paths = [str(p) for p in self.paths]

    def to_csv(self) -> str:
        lines = ["q,density,path"]
        for q, v, p in zip(self.grid, self.values, self.paths):
            lines.append(f"{float(q)!r},{_fmt(v)},{p}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        rows = [
            {"q": float(q), "density": float(v) if math.isfinite(v) else "inf", "path": p}
            for q, v, p in zip(self.grid, self.values, self.paths)
        ]
        return json.dumps(rows, indent=1) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "DensityProfile":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "q,density,path":
            raise DomainError("profile CSV must start with the header q,density,path")
        grid, values, paths = [], [], []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != 3:
                raise DomainError(f"line {lineno}: expected 3 fields, got {len(parts)}")
            try:
                grid.append(float(parts[0]))
                values.append(float(parts[1]))
            except ValueError:
                raise DomainError(f"line {lineno}: non-numeric field") from None
            paths.append(parts[2])
        return cls(np.array(grid), np.array(values), paths)


def _fmt(v) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def kbox(k: int, r: Sequence[int]) -> Box:
    """Grid cell ``prod [-1 + 2 r_i/(2k+1), -1 + 2 (r_i+1)/(2k+1)]``."""
    if k < 1:
        raise DomainError("k must be a positive integer")
    width = 2 * k + 1
    intervals = []
    for ri in r:
        if not 0 <= ri < width:
            raise DomainError(f"cell index {ri} outside 0..{width - 1}")
        lo = Fraction(-1) + Fraction(2 * ri, width)
        hi = Fraction(-1) + Fraction(2 * (ri + 1), width)
        intervals.append((float(lo), float(hi)))
    return Box(tuple(intervals))


def approximate_by_boxes(f: Callable, k: int, exponents: ExponentData) -> AtomSet:
    """Piecewise-constant approximation of ``f`` sampled at cell centres.

    ``f`` takes a point as a tuple of floats. One atom per cell of the
    ``(2k+1)**n`` grid, zero coefficients included.
    """
    n = exponents.n
    atoms = []
    for r in itertools.product(range(2 * k + 1), repeat=n):
        box = kbox(k, r)
        atoms.append(BoxAtom(float(f(box.center)), box, exponents))
    return AtomSet(tuple(atoms))


def split_at_zero(atom: BoxAtom) -> AtomSet:
    """Cut the box at 0 on every axis it straddles."""
    pieces = []
    for (lo, hi) in atom.box.intervals:
        pieces.append([(lo, 0.0), (0.0, hi)] if lo < 0 < hi else [(lo, hi)])
    return AtomSet(
        tuple(replace(atom, box=Box(tuple(choice))) for choice in itertools.product(*pieces))
    )


def reflect_decompose(atom: BoxAtom) -> AtomSet:
    """Rewrite an orthant box atom over symmetric boxes ``prod [-e_i, e_i]``.

    Per axis ``1_[l, h] = 1_[0, h] - 1_[0, l]`` on the folded axis, and
    ``prod [0, e_i]`` carries ``2**-n`` of the mass of ``prod [-e_i, e_i]``
    against the reflection-invariant weight. Corners with some ``e_i = 0``
    vanish. With some odd map exponent the result is oriented towards the
    side of 0 the original box maps to.
    """
    box = atom.box
    if not box.in_orthant():
        raise DomainError("box straddles 0; split it first")
    if atom.orientation is not None:
        raise DomainError("atom is already reflected")
    A = atom.exponents.A
    sign = 1
    folded = []
    for (lo, hi), a in zip(box.intervals, A):
        if hi <= 0:
            lo, hi = -hi, -lo
            if float(a).is_integer() and int(a) % 2 == 1:
                sign = -sign
        folded.append((lo, hi))
    _, even = mc.signed_factor(atom.exponents, require_integer_A=False)
    orientation = sign if even else None

    n = box.n
    out = []
    for corner in itertools.product((0, 1), repeat=n):
        ends = [hi if c == 0 else lo for (lo, hi), c in zip(folded, corner)]
        if any(e == 0 for e in ends):
            continue
        coeff = atom.coeff * (-1) ** sum(corner) * 2.0**-n
        sym = Box(tuple((-e, e) for e in ends))
        out.append(BoxAtom(coeff, sym, atom.exponents, orientation))
    return AtomSet(tuple(out))


def _scaled_arguments(atom: BoxAtom):
    lam = np.array(atom.box.half_widths)
    e = atom.exponents
    Lam = float(np.prod(lam ** np.array(e.A)))
    weight = float(np.prod(lam ** (np.array(e.B) + 1.0)))
    return Lam, weight


def scaled_density(atom: BoxAtom, q, require_integer_A: bool = False):
    """Density of a symmetric-box atom via ``x_i = lambda_i y_i``.

    Equals ``coeff * prod(lambda**(B+1)) * rho(q / Lambda) / Lambda`` with
    ``Lambda = prod(lambda**A)`` and ``rho`` the signed-cube density. An
    oriented atom keeps only the side ``orientation * q > 0``, doubled, and
    at ``q = 0`` reports the mean of its one-sided limits.
    """
    return _scaled_density_with_path(atom, q, require_integer_A)[0]


def _support_ratio(q, Lam):
    """``q / Lam`` inside the support ``|q| < Lam``, else 1 (a point with zero density).

    Guards against ``Lam`` underflowing for boxes with tiny half-widths.
    """
    inside = np.abs(q) < Lam
    return np.where(inside, q / np.where(inside, Lam, 1.0), 1.0)


def _scaled_contribution(scale, Lam, rho):
    """``scale * rho / Lam``, taken as 0 wherever ``rho`` is 0 (e.g. when ``Lam`` underflowed)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = scale * rho / Lam
    return np.where(rho == 0, 0.0, out)


def _side_factor(orientation, q):
    """2 on the oriented side, 0 on the other, 1 at q = 0 (mean of the one-sided limits)."""
    return np.where(orientation * q > 0, 2.0, np.where(q == 0, 1.0, 0.0))


def _scaled_density_with_path(atom: BoxAtom, q, require_integer_A=False):
    if not atom.box.is_symmetric:
        raise DomainError("scaled_density needs a symmetric box")
    Lam, weight = _scaled_arguments(atom)
    q_arr = np.asarray(q, dtype=float)
    rho, paths = mc.density_signed_cube_with_path(atom.exponents, _support_ratio(q_arr, Lam), require_integer_A)
    out = _scaled_contribution(atom.coeff * weight, Lam, np.asarray(rho))
    if atom.orientation is not None:
        side = _side_factor(atom.orientation, q_arr)
        out = side * out
        paths = np.where(side > 0, paths, mc.OUTSIDE)
        if np.ndim(q) == 0:
            paths = paths.item()
    if np.ndim(q) == 0:
        return float(out), str(paths)
    return out, paths


def _orthant_gap(atom: BoxAtom) -> float:
    """Lower bound of ``|x**A|`` on an orthant box (0 if it touches a zero of the map)."""
    gap = 1.0
    for (lo, hi), a in zip(atom.box.intervals, atom.exponents.A):
        if a > 0:
            gap *= min(abs(lo), abs(hi)) ** a
    return gap


def _symmetric_atoms_with_gap(atoms: Iterable[BoxAtom]) -> list[tuple[BoxAtom, float]]:
    """Symmetric atoms paired with the gap of the orthant piece they came from.

    The reflected atoms of a piece cancel exactly on ``|q| < gap``; keeping
    the gap lets callers zero that range instead of summing large
    cancelling terms (or ``inf - inf`` at ``q = 0``).
    """
    out = []
    for atom in atoms:
        if atom.box.is_symmetric and atom.orientation is None:
            out.append((atom, 0.0))
            continue
        for piece in split_at_zero(atom):
            gap = _orthant_gap(piece)
            out.extend((sym, gap) for sym in reflect_decompose(piece))
    return out


def symmetric_atoms(atoms: Iterable[BoxAtom]) -> list[BoxAtom]:
    """Every atom rewritten over symmetric boxes."""
    return [a for a, _ in _symmetric_atoms_with_gap(atoms)]


def _zero_value(e: ExponentData, members, rtol: float = 1e-10) -> float:
    """Exact density at ``q = 0`` of a group of symmetric atoms sharing exponents.

    Every atom is ``W * rho(q/Lam)/Lam`` with ``rho`` a sum of
    ``t**(c-1) P(-log t)`` terms, so the group is ``sum q**(c-1) Q(-log q)``
    with ``Q`` polynomial. Divergent terms that cancel between atoms are
    dropped; any that survive give an infinite value of their sign. Summing
    the atoms' own limits instead would produce ``inf - inf``.
    """
    factor, _ = mc.signed_factor(e, require_integer_A=False)
    spec = mc.derive_spectrum(e)
    A = np.array(e.A, dtype=float)
    W, ell = [], []
    for atom in members:
        _, weight = _scaled_arguments(atom)
        W.append(atom.coeff * weight)
        ell.append(float(np.sum(A * np.log(atom.box.half_widths))))
    W, ell = np.array(W), np.array(ell)
    for c, P in mc.log_expansion(e):
        # P(s + ell) as a polynomial in s, per atom
        m = P.size
        shift = np.zeros((ell.size, m))
        for j, pj in enumerate(P):
            for i in range(j + 1):
                shift[:, i] += pj * math.comb(j, i) * ell ** (j - i)
        terms = (W * np.exp(-c * ell))[:, None] * shift
        Q = terms.sum(axis=0)
        live = np.abs(Q) > rtol * np.abs(terms).sum(axis=0)
        if c > 1.0 + spec.cluster_tol:
            break
        top = int(np.nonzero(live)[0].max()) if live.any() else -1
        if c < 1.0 - spec.cluster_tol and top >= 0 or top >= 1:
            return math.copysign(math.inf, Q[top])
        if top == 0:
            return factor * spec.prefactor * float(Q[0])
    return 0.0


_PATH_RANK = {mc.OUTSIDE: 0, "partial-fraction": 1, "confluent": 2, "series": 3, mc.LIMIT: 4}


def assemble_density(atoms: AtomSet, grid) -> DensityProfile:
    """Sum of atom densities on the grid, with the evaluation path per point.

    Atoms sharing ``B`` are evaluated in one vectorised call. The path tag
    of a point is the least benign path any atom took there.
    """
    atoms = AtomSet(tuple(atoms))
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing")
    if len(atoms) == 0:
        raise DomainError("empty atom set")
    atoms.shared_A()

    total = np.zeros(grid.size)
    rank = np.zeros(grid.size, dtype=int)
    names = {v: k for k, v in _PATH_RANK.items()}
    groups: dict = {}
    for atom, gap in _symmetric_atoms_with_gap(atoms):
        groups.setdefault((atom.exponents, atom.orientation), []).append((atom, gap))
    for (e, orientation), members in groups.items():
        group = [a for a, _ in members]
        gaps = np.array([g for _, g in members])
        Lam = np.array([_scaled_arguments(a)[0] for a in group])
        weight = np.array([_scaled_arguments(a)[1] for a in group])
        coeff = np.array([a.coeff for a in group])
        args = _support_ratio(grid[None, :], Lam[:, None])
        rho, paths = mc.density_signed_cube_with_path(e, args.reshape(-1), False)
        rho = np.asarray(rho).reshape(args.shape)
        paths = np.asarray(paths).reshape(args.shape)
        contrib = _scaled_contribution((coeff * weight)[:, None], Lam[:, None], rho)
        if orientation is not None:
            side = _side_factor(orientation, grid)[None, :]
            contrib = side * contrib
            paths = np.where(side > 0, paths, mc.OUTSIDE)
        # zero coefficients contribute nothing, including infinities at q = 0
        contrib = np.where(coeff[:, None] == 0, 0.0, contrib)
        contrib = np.where(np.abs(grid)[None, :] < gaps[:, None], 0.0, contrib)
        at_zero = grid == 0
        if np.any(at_zero):
            near = [a for a, g in zip(group, gaps) if g == 0 and a.coeff != 0]
            contrib[:, at_zero] = 0.0
            contrib[0, at_zero] = _zero_value(e, near) if near else 0.0
            paths[:, at_zero] = mc.LIMIT
        total += contrib.sum(axis=0)
        group_rank = np.vectorize(_PATH_RANK.get)(paths).max(axis=0)
        rank = np.maximum(rank, group_rank)
    return DensityProfile(grid, total, [names[r] for r in rank])


def _signed_mass(e: ExponentData, lo, hi):
    """Mass of the signed-cube pushforward on ``[lo, hi]`` (arrays, lo <= hi)."""
    factor, even = mc.signed_factor(e, require_integer_A=False)

    def upper_tail(t):
        # mass of (t, 1] for the unit cube, t in [0, 1]
        t = np.clip(t, 0.0, 1.0)
        out = np.zeros(t.shape)
        out[t == 0] = e.total_mass()
        inner = (t > 0) & (t < 1)
        if np.any(inner):
            out[inner] = mc.volume(e, t[inner])
        return out

    def unit_mass(a, b):
        a = np.clip(a, 0.0, 1.0)
        b = np.clip(b, 0.0, 1.0)
        return np.where(b > a, upper_tail(a) - upper_tail(b), 0.0)

    pos = unit_mass(np.maximum(lo, 0.0), np.maximum(hi, 0.0))
    if not even:
        return factor * pos
    neg = unit_mass(np.maximum(-hi, 0.0), np.maximum(-lo, 0.0))
    return factor * (pos + neg)


def assemble_bin_average(atoms: AtomSet, edges) -> DensityProfile:
    """Exact mean density over each bin ``[edges[i], edges[i+1]]``.

    Uses bin masses from the volume function, so it carries no
    discretisation error; the grid of the result is the bin centres.
    """
    atoms = AtomSet(tuple(atoms))
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("edges must be strictly increasing")
    atoms.shared_A()
    lo, hi = edges[:-1], edges[1:]
    mass = np.zeros(lo.size)
    for atom in symmetric_atoms(atoms):
        Lam, weight = _scaled_arguments(atom)
        a, b = lo / Lam, hi / Lam
        if atom.orientation is None:
            m = _signed_mass(atom.exponents, a, b)
        else:
            # the folded orthant mass sits on one side, doubled
            a_s, b_s = np.sort(np.stack([atom.orientation * a, atom.orientation * b]), axis=0)
            m = 2.0 * _signed_mass(atom.exponents, np.maximum(a_s, 0.0), np.maximum(b_s, 0.0))
        mass += atom.coeff * weight * m
    centers = 0.5 * (lo + hi)
    return DensityProfile(centers, mass / (hi - lo), ["bin-average"] * lo.size)


def marginalize(atom: BoxAtom, drop) -> BoxAtom:
    """Integrate out axes with zero map exponent (Fubini).

    The coefficient picks up ``int_lo^hi |x|**b dx`` for every dropped axis.
    """
    drop = set(int(i) for i in drop)
    n = atom.box.n
    if not drop or not drop < set(range(n)):
        raise DomainError("drop must be a nonempty proper subset of the axes")
    e = atom.exponents
    for i in drop:
        if e.A[i] != 0:
            raise DomainError(f"axis {i} has a_i = {e.A[i]:g} > 0; it is not fibre-constant")
    factor = math.prod(weighted_length(*atom.box.intervals[i], e.B[i]) for i in drop)
    keep = [i for i in range(n) if i not in drop]
    return BoxAtom(
        atom.coeff * factor,
        Box(tuple(atom.box.intervals[i] for i in keep)),
        ExponentData(tuple(e.A[i] for i in keep), tuple(e.B[i] for i in keep)),
        atom.orientation,
    )


def _atom_from_record(rec, where: str) -> BoxAtom:
    if not isinstance(rec, dict):
        raise DomainError(f"{where}: expected an object with coeff, box, A, B")
    for key in ("coeff", "box", "A", "B"):
        if key not in rec:
            raise DomainError(f"{where}: missing field '{key}'")
    try:
        coeff = float(rec["coeff"])
    except (TypeError, ValueError):
        raise DomainError(f"{where}: field 'coeff' is not a number") from None
    box = rec["box"]
    if not isinstance(box, list) or not all(isinstance(p, list) and len(p) == 2 for p in box):
        raise DomainError(f"{where}: field 'box' must be a list of [lo, hi] pairs")
    try:
        e = ExponentData(tuple(rec["A"]), tuple(rec["B"]))
        return BoxAtom(coeff, Box(tuple(tuple(p) for p in box)), e)
    except (DomainError, TypeError, ValueError) as exc:
        raise DomainError(f"{where}: {exc}") from None


def parse_atoms(text: str, source: str = "<atoms>") -> AtomSet:
    """Parse atoms from a JSON array or from JSON lines (one atom per line)."""
    stripped = text.lstrip()
    atoms = []
    if stripped.startswith("["):
        try:
            records = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"{source}:{exc.lineno}: {exc.msg}") from None
        for idx, rec in enumerate(records):
            atoms.append(_atom_from_record(rec, f"{source}: atom {idx}"))
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DomainError(f"{source}:{lineno}: {exc.msg}") from None
            atoms.append(_atom_from_record(rec, f"{source}:{lineno}"))
    if not atoms:
        raise DomainError(f"{source}: no atoms")
    return AtomSet(tuple(atoms))


def load_atoms(path) -> AtomSet:
    path = Path(path)
    return parse_atoms(path.read_text(), str(path))


def dump_atoms(atoms: AtomSet) -> str:
    """JSON-lines text for the atoms (orientation is not serialised)."""
    lines = []
    for a in atoms:
        if a.orientation is not None:
            raise DomainError("oriented atoms are internal and cannot be written")
        rec = {
            "coeff": a.coeff,
            "box": [list(iv) for iv in a.box.intervals],
            "A": list(a.exponents.A),
            "B": list(a.exponents.B),
        }
        lines.append(json.dumps(rec))
    return "\n".join(lines) + "\n"
