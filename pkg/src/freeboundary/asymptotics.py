"""Executable asymptotics: equidistribution weights, the orthogonality
functional, annular rapid-decay sums, convolution bounds, and the good-
vector-bound growth experiment.

Sphere sums exploit an exactness of the word-metric tree: a coefficient
<pi~(g)v, w> for step vectors of letter depth d depends on g only through
(|g|, first d letters, last d letters) once |g| >= 2d.  Summing over a
sphere therefore reduces to a few hundred classes whose cardinalities are
entries of powers of the letter-adjacency matrix -- exact integers -- so
sweeps stay exact at any radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .boundary import Cylinder, CylinderRectangle, shadow_pair
from .measures import BoundaryMeasure, ps_measure
from .representation import (
    StepFunction,
    inner_product,
    matrix_coefficient,
    norm_sq,
    normalized_coefficient,
)
from .scalars import QSqrt, as_float, exact_str
from .words import (
    GroupContext,
    Letters,
    MetricSpec,
    ReducedWord,
    canonical_letters,
    enumerate_annulus,
    hat_projection,
    invert_letters,
    sphere_size,
)


class BudgetError(RuntimeError):
    """A sweep would enumerate more elements than the configured budget."""


class CoverError(RuntimeError):
    """The double shadows failed to cover at the configured rho and h."""


# -- letter adjacency counts ---------------------------------------------

_ADJ_POWERS: Dict[Tuple[int, int], List[List[int]]] = {}


def _letter_index(s: int, k: int) -> int:
    return 2 * (abs(s) - 1) + (0 if s > 0 else 1)


def _adjacency_power(k: int, m: int) -> List[List[int]]:
    """A^m with A[x][y] = 1 iff y may follow x in a reduced word; exact."""
    key = (k, m)
    if key in _ADJ_POWERS:
        return _ADJ_POWERS[key]
    size = 2 * k
    letters = canonical_letters(k)
    if m == 0:
        out = [[1 if i == j else 0 for j in range(size)] for i in range(size)]
    elif m == 1:
        out = [
            [0 if letters[j] == -letters[i] else 1 for j in range(size)]
            for i in range(size)
        ]
    else:
        half = _adjacency_power(k, m // 2)
        out = _mat_mul(half, half)
        if m % 2:
            out = _mat_mul(out, _adjacency_power(k, 1))
    _ADJ_POWERS[key] = out
    return out


def _mat_mul(a: List[List[int]], b: List[List[int]]) -> List[List[int]]:
    size = len(a)
    return [
        [sum(a[i][l] * b[l][j] for l in range(size)) for j in range(size)]
        for i in range(size)
    ]


def count_prefix_suffix(prefix: Letters, suffix: Letters, n: int, k: int) -> int:
    """Number of reduced words of length n with the given first and last
    letters (disjoint segments, n >= len(prefix) + len(suffix))."""
    m = n - len(prefix) - len(suffix)
    if m < 0:
        raise ValueError("segments overlap")
    if m == 0:
        return 1 if prefix[-1] != -suffix[0] else 0
    power = _adjacency_power(k, m)
    row = power[_letter_index(prefix[-1], k)]
    letters = canonical_letters(k)
    return sum(row[_letter_index(y, k)] for y in letters if y != -suffix[0])


def class_representative(prefix: Letters, suffix: Letters, n: int, k: int) -> Letters:
    m = n - len(prefix) - len(suffix)
    if m == 0:
        return prefix + suffix
    letters = canonical_letters(k)
    mid: List[int] = []
    prev = prefix[-1]
    for i in range(m):
        for cand in letters:
            if cand == -prev:
                continue
            if i == m - 1 and cand == -suffix[0]:
                continue
            mid.append(cand)
            prev = cand
            break
    return prefix + tuple(mid) + suffix


@dataclass
class ClassEntry:
    """One aggregation class of a weight family: every member g shares the
    normalized coefficients of step vectors up to the stated depth."""

    mass: Fraction
    rep: ReducedWord
    count: int


def sphere_classes(n: int, d: int, k: int) -> List[Tuple[Letters, Letters, int]]:
    """(prefix, suffix, count) classes of S_n at depth d, n >= 2d >= 2."""
    out = []
    spheres = list(enumerate_annulus(d, 0, MetricSpec.word(k)))
    for pw in spheres:
        for sw in spheres:
            c = count_prefix_suffix(pw.letters, sw.letters, n, k)
            if c:
                out.append((pw.letters, sw.letters, c))
    return out


# -- canonical depth-m indexing of the letter tree ------------------------


class SphereGrid:
    """Canonical index of the depth-m words; cylinders map to index
    intervals because descendants are contiguous in canonical order."""

    def __init__(self, k: int, m: int):
        self.k = k
        self.m = m
        self.letters = canonical_letters(k)
        self.size = sphere_size(m, k)
        self._pos = {s: i for i, s in enumerate(self.letters)}
        b = 2 * k - 1
        self._weights = [b ** (m - 1 - i) for i in range(m)]

    def interval(self, stem: Letters) -> Tuple[int, int]:
        if len(stem) > self.m:
            raise ValueError("stem deeper than the grid")
        if not stem:
            return 0, self.size
        lo = self._pos[stem[0]] * self._weights[0]
        for i in range(1, len(stem)):
            pos = self._pos[stem[i]]
            forbidden = self._pos[-stem[i - 1]]
            pos -= pos > forbidden
            lo += pos * self._weights[i]
        return lo, lo + (2 * self.k - 1) ** (self.m - len(stem))

    def index_of(self, word: Letters) -> int:
        if len(word) != self.m:
            raise ValueError("need a depth-m word")
        return self.interval(word)[0]

    def unrank(self, idx: int) -> Letters:
        out: List[int] = []
        for i in range(self.m):
            pos, idx = divmod(idx, self._weights[i])
            if i == 0:
                out.append(self.letters[pos])
            else:
                allowed = [s for s in self.letters if s != -out[-1]]
                out.append(allowed[pos])
        return tuple(out)


def _resolution_depth(R, ctx: GroupContext) -> int:
    min_len = float(ctx.metric.min_letter_length)
    return int(math.ceil(float(R + ctx.h) / (2.0 * min_len))) + 1


# -- weight families -------------------------------------------------------


@dataclass(frozen=True)
class UniformSphere:
    n: int


@dataclass(frozen=True)
class ShadowPartition:
    rho: float
    h: float
    resolution: int
    order: str = "canonical"


class WeightFamily:
    """A probability weighting of an annulus.

    Uniform sphere weights stay implicit (the support would be |S_n|
    words); shadow-partition weights carry their nonzero support as a
    compact array plus exact per-element masses (integer multiples of the
    squared grid-cell mass for the word metric).
    """

    def __init__(
        self,
        R,
        ctx: GroupContext,
        provenance,
        words: Optional[List[Letters]] = None,
        numerators: Optional[np.ndarray] = None,
        unit_sq: Optional[Fraction] = None,
        float_masses: Optional[np.ndarray] = None,
        annulus_size: Optional[int] = None,
    ):
        self.R = R
        self.ctx = ctx
        self.provenance = provenance
        self.words = words
        self.numerators = numerators
        self.unit_sq = unit_sq
        self.float_masses = float_masses
        self.annulus_size = annulus_size
        self._class_cache: Dict[int, List[ClassEntry]] = {}
        self._index: Optional[Dict[Letters, int]] = None

    # -- basic shape ------------------------------------------------------

    @property
    def uniform(self) -> bool:
        return isinstance(self.provenance, UniformSphere)

    @property
    def exact(self) -> bool:
        return self.uniform or self.unit_sq is not None

    def support_size(self) -> int:
        if self.uniform:
            return sphere_size(self.provenance.n, self.ctx.k)
        return len(self.words)

    def total(self):
        if self.uniform:
            return Fraction(1)
        if self.unit_sq is not None:
            return int(self.numerators.sum()) * self.unit_sq
        return float(self.float_masses.sum())

    def max_mass(self):
        if self.uniform:
            return Fraction(1, self.support_size())
        if self.unit_sq is not None:
            return int(self.numerators.max()) * self.unit_sq
        return float(self.float_masses.max())

    def mass_of(self, g: ReducedWord):
        if self.uniform:
            n = self.provenance.n
            return Fraction(1, self.support_size()) if len(g) == n else Fraction(0)
        if self._index is None:
            self._index = {w: i for i, w in enumerate(self.words)}
        i = self._index.get(g.letters)
        if i is None:
            return Fraction(0) if self.exact else 0.0
        if self.unit_sq is not None:
            return int(self.numerators[i]) * self.unit_sq
        return float(self.float_masses[i])

    def entries(self) -> Iterator[Tuple[ReducedWord, object]]:
        if self.uniform:
            n = self.provenance.n
            mass = Fraction(1, self.support_size())
            for g in enumerate_annulus(n, 0, self.ctx.metric):
                yield g, mass
            return
        for i, w in enumerate(self.words):
            g = ReducedWord(w, _reduced=True)
            if self.unit_sq is not None:
                yield g, int(self.numerators[i]) * self.unit_sq
            else:
                yield g, float(self.float_masses[i])

    # -- aggregation ------------------------------------------------------

    def class_entries(self, d: int) -> List[ClassEntry]:
        """Aggregated masses per coefficient class at depth d (word metric)."""
        if self.ctx.metric.kind != "word":
            raise ValueError("class aggregation is exact only for the word metric")
        d = max(1, d)
        if d in self._class_cache:
            return self._class_cache[d]
        k = self.ctx.k
        out: List[ClassEntry] = []
        if self.uniform:
            n = self.provenance.n
            size = self.support_size()
            if n < 2 * d:
                for g in enumerate_annulus(n, 0, self.ctx.metric):
                    out.append(ClassEntry(Fraction(1, size), g, 1))
            else:
                for p, s, c in sphere_classes(n, d, k):
                    rep = ReducedWord(class_representative(p, s, n, k), _reduced=True)
                    out.append(ClassEntry(Fraction(c, size), rep, c))
        else:
            buckets: Dict[Tuple, Tuple[int, Letters]] = {}
            for i, w in enumerate(self.words):
                n = len(w)
                key = (n, w) if n < 2 * d else (n, w[:d], w[n - d:])
                num = int(self.numerators[i]) if self.numerators is not None else self.float_masses[i]
                if key in buckets:
                    total, rep, cnt = buckets[key]
                    buckets[key] = (total + num, rep, cnt + 1)
                else:
                    buckets[key] = (num, w, 1)
            for key, (total, rep, cnt) in buckets.items():
                mass = total * self.unit_sq if self.unit_sq is not None else total
                out.append(ClassEntry(mass, ReducedWord(rep, _reduced=True), cnt))
        self._class_cache[d] = out
        return out

    def pair_table(self, d1: int, d2: int) -> Dict[Tuple[Letters, Letters], object]:
        """Aggregated mass per (hat(g) prefix of depth d1, check(g) prefix
        of depth d2)."""
        table: Dict[Tuple[Letters, Letters], object] = {}

        def add(key, mass):
            table[key] = table.get(key, Fraction(0) if self.exact else 0.0) + mass

        if self.uniform:
            n = self.provenance.n
            d = max(d1, d2, 1)
            size = self.support_size()
            if n >= max(2 * d, d1 + d2):
                for p, s, c in sphere_classes(n, d, self.ctx.k):
                    add((p[:d1], invert_letters(s)[:d2]), Fraction(c, size))
                return table
            for g in enumerate_annulus(n, 0, self.ctx.metric):
                key = (
                    hat_projection(g).prefix_letters(d1),
                    hat_projection(~g).prefix_letters(d2),
                )
                add(key, Fraction(1, size))
            return table
        for i, w in enumerate(self.words):
            g = ReducedWord(w, _reduced=True)
            key = (
                hat_projection(g).prefix_letters(d1),
                hat_projection(~g).prefix_letters(d2),
            )
            mass = int(self.numerators[i]) * self.unit_sq if self.unit_sq is not None else float(self.float_masses[i])
            add(key, mass)
        return table


def sphere_weights(n: int, ctx: GroupContext) -> WeightFamily:
    """Uniform mass 1/|S_n| on the word-metric sphere S_n."""
    if ctx.metric.kind != "word":
        raise ValueError("sphere weights require the word metric")
    if n < 0:
        raise ValueError("n must be >= 0")
    return WeightFamily(n, ctx, UniformSphere(n), annulus_size=sphere_size(n, ctx.k))


@dataclass
class CoverReport:
    covered: bool
    witness: Optional[CylinderRectangle]
    R: float
    rho: float
    h: float
    resolution: int
    annulus_size: int


def check_shadow_cover(R, ctx: GroupContext, budget: int = 10_000_000) -> CoverReport:
    """Exact finite check that double shadows of the annulus cover the
    boundary square, at the canonical resolution depth.

    Failure is a valid outcome (it calibrates rho and h); the witness is
    an uncovered rectangle of depth-m cylinders.
    """
    m = _resolution_depth(R, ctx)
    grid = SphereGrid(ctx.k, m)
    if grid.size**2 > 64 * budget:
        raise BudgetError(f"cover grid {grid.size}^2 exceeds budget")
    occupied = np.zeros((grid.size, grid.size), dtype=bool)
    count = 0
    for g in enumerate_annulus(R, ctx.h, ctx.metric):
        count += 1
        if count > budget:
            raise BudgetError(f"annulus at R={R} exceeds budget {budget}")
        rect = shadow_pair(g, ctx)
        rlo, rhi = grid.interval(rect.first.stem)
        clo, chi = grid.interval(rect.second.stem)
        occupied[rlo:rhi, clo:chi] = True
    covered = bool(occupied.all())
    witness = None
    if not covered:
        i, j = np.argwhere(~occupied)[0]
        witness = CylinderRectangle(Cylinder(grid.unrank(int(i))), Cylinder(grid.unrank(int(j))))
    return CoverReport(covered, witness, R, ctx.rho, ctx.h, m, count)


def build_partition_weights(R, ctx: GroupContext, budget: int = 10_000_000) -> WeightFamily:
    """Greedy shadow-partition weights: sweep the annulus in canonical
    order, give each element the product mass of the not-yet-claimed part
    of its double shadow, claim it.

    Masses are exact (integer multiples of the squared cell mass) for the
    word metric.  If any resolution cell stays unclaimed the cover has
    failed and the builder raises instead of renormalizing.
    """
    m = _resolution_depth(R, ctx)
    grid = SphereGrid(ctx.k, m)
    if grid.size**2 > 64 * budget:
        raise BudgetError(f"partition grid {grid.size}^2 exceeds budget")
    metric = ctx.metric
    exact = metric.kind == "word"
    mu = ps_measure(ctx)
    occupied = np.zeros((grid.size, grid.size), dtype=bool)

    cell_masses: Optional[np.ndarray] = None
    unit_sq: Optional[Fraction] = None
    if exact:
        unit = Fraction(1, 2 * ctx.k) * Fraction(1, 2 * ctx.k - 1) ** (m - 1)
        unit_sq = unit * unit
    else:
        cell_masses = np.empty(grid.size, dtype=np.float64)

        def fill(stem: Letters, mass: float):
            if len(stem) == m:
                cell_masses[grid.index_of(stem)] = mass
                return
            for s in canonical_letters(ctx.k):
                if stem and s == -stem[-1]:
                    continue
                step = mu.pi0[s] if not stem else mu.trans[(stem[-1], s)]
                fill(stem + (s,), mass * float(step))

        fill((), 1.0)

    words: List[Letters] = []
    numerators: List[int] = []
    float_masses: List[float] = []
    count = 0
    for g in enumerate_annulus(R, ctx.h, metric):
        count += 1
        if count > budget:
            raise BudgetError(f"annulus at R={R} exceeds budget {budget}")
        rect = shadow_pair(g, ctx)
        rlo, rhi = grid.interval(rect.first.stem)
        clo, chi = grid.interval(rect.second.stem)
        sub = occupied[rlo:rhi, clo:chi]
        free = ~sub
        taken = int(free.sum())
        if taken:
            if exact:
                words.append(g.letters)
                numerators.append(taken)
            else:
                mass = float(np.outer(cell_masses[rlo:rhi], cell_masses[clo:chi])[free].sum())
                words.append(g.letters)
                float_masses.append(mass)
            sub[:] = True
    if not occupied.all():
        raise CoverError(
            f"shadows at R={R}, rho={ctx.rho}, h={ctx.h} do not cover; "
            "raise rho or h (renormalizing would fake the cover)"
        )
    provenance = ShadowPartition(ctx.rho, ctx.h, m)
    if exact:
        fam = WeightFamily(
            R,
            ctx,
            provenance,
            words=words,
            numerators=np.array(numerators, dtype=np.int64),
            unit_sq=unit_sq,
            annulus_size=count,
        )
        assert fam.total() == 1
        return fam
    return WeightFamily(
        R,
        ctx,
        provenance,
        words=words,
        float_masses=np.array(float_masses, dtype=np.float64),
        annulus_size=count,
    )


# -- boundary-pair observables and equidistribution ------------------------


class PairStepFunction:
    """Finitely-valued function on the boundary square: disjoint cylinder
    rectangles with values, zero elsewhere."""

    def __init__(self, cells: Sequence[Tuple[Cylinder, Cylinder, object]], k: int):
        self.cells = tuple(cells)
        self.k = k
        for i in range(len(self.cells)):
            for j in range(i + 1, len(self.cells)):
                a, b = self.cells[i], self.cells[j]
                if not (a[0].disjoint(b[0]) or a[1].disjoint(b[1])):
                    raise ValueError("rectangles overlap")

    @classmethod
    def rectangle(cls, first: Cylinder, second: Cylinder, k: int, value=Fraction(1)) -> "PairStepFunction":
        return cls([(first, second, value)], k)

    @classmethod
    def constant(cls, value, k: int) -> "PairStepFunction":
        return cls([(Cylinder(()), Cylinder(()), value)], k)

    @classmethod
    def product(cls, f1: StepFunction, f2: StepFunction) -> "PairStepFunction":
        cells = []
        for c1, v1 in f1.cells:
            for c2, v2 in f2.cells:
                cells.append((c1, c2, v1 * v2))
        return cls(cells, f1.k)

    def depths(self) -> Tuple[int, int]:
        d1 = max((len(c[0].stem) for c in self.cells), default=0)
        d2 = max((len(c[1].stem) for c in self.cells), default=0)
        return d1, d2

    def value_at_prefixes(self, p1: Letters, p2: Letters):
        for first, second, val in self.cells:
            if p1[: len(first.stem)] == first.stem and p2[: len(second.stem)] == second.stem:
                return val
        return Fraction(0)

    def integral(self, mu: BoundaryMeasure):
        total = Fraction(0) if mu.exact else 0.0
        for first, second, val in self.cells:
            total = total + val * mu.mass(first) * mu.mass(second)
        return total


def equidistribution_pairing(F: PairStepFunction, weights: WeightFamily, mu: BoundaryMeasure):
    """(sum_g w(g) F(hat g, check g), integral of F against mu x mu)."""
    d1, d2 = F.depths()
    table = weights.pair_table(d1, d2)
    lhs = Fraction(0) if weights.exact else 0.0
    for (p1, p2), mass in table.items():
        lhs = lhs + mass * F.value_at_prefixes(p1, p2)
    return lhs, F.integral(mu)


def equidistribution_error(F: PairStepFunction, weights: WeightFamily, mu: BoundaryMeasure):
    lhs, rhs = equidistribution_pairing(F, weights, mu)
    return abs(lhs - rhs)


def rectangle_error_table(weights: WeightFamily, mu: BoundaryMeasure, depth: int) -> Dict[Tuple[Letters, Letters], object]:
    """Errors |J'-mass - product mass| for every depth x depth rectangle."""
    table = weights.pair_table(depth, depth)
    out: Dict[Tuple[Letters, Letters], object] = {}
    words = [w.letters for w in enumerate_annulus(depth, 0, MetricSpec.word(weights.ctx.k))]
    for u in words:
        mu_u = mu.mass_letters(u)
        for v in words:
            got = table.get((u, v), Fraction(0) if weights.exact else 0.0)
            out[(u, v)] = abs(got - mu_u * mu.mass_letters(v))
    return out


def max_rectangle_error(weights: WeightFamily, mu: BoundaryMeasure, max_depth: int):
    """Max equidistribution error over all rectangles of depth <= max_depth
    (both factors range over depths 0..max_depth independently)."""
    table = weights.pair_table(max_depth, max_depth)
    worst = Fraction(0) if weights.exact else 0.0
    k = weights.ctx.k
    stems: List[Letters] = [()]
    for d in range(1, max_depth + 1):
        stems.extend(w.letters for w in enumerate_annulus(d, 0, MetricSpec.word(k)))
    for u in stems:
        mass_u = mu.mass_letters(u)
        for v in stems:
            got = Fraction(0) if weights.exact else 0.0
            for (p1, p2), mass in table.items():
                if p1[: len(u)] == u and p2[: len(v)] == v:
                    got = got + mass
            err = abs(got - mass_u * mu.mass_letters(v))
            if err > worst:
                worst = err
    return worst


def max_uniform_rectangle_error(weights: WeightFamily, mu: BoundaryMeasure, depth: int):
    """Max equidistribution error over rectangles of exact depth x depth.

    Probing at depths finer than the shadow stems is what exposes a
    nonzero error on the tree: at or below the stem depth the greedy
    partition reproduces product masses exactly.
    """
    tab = weights.pair_table(depth, depth)
    k = weights.ctx.k
    n_d = sphere_size(depth, k)
    worst = Fraction(0) if weights.exact else 0.0
    for (u, v), mass in tab.items():
        err = abs(mass - mu.mass_letters(u) * mu.mass_letters(v))
        if err > worst:
            worst = err
    if len(tab) < n_d * n_d:
        if mu.metric.kind == "word":
            cell = Fraction(1, 2 * k) * Fraction(1, 2 * k - 1) ** (depth - 1)
            absent = cell * cell
            if absent > worst:
                worst = absent
        else:
            stems = [w.letters for w in enumerate_annulus(depth, 0, MetricSpec.word(k))]
            for u in stems:
                mu_u = mu.mass_letters(u)
                for v in stems:
                    if (u, v) not in tab:
                        cand = mu_u * mu.mass_letters(v)
                        if cand > worst:
                            worst = cand
    return worst


# -- test functions and the orthogonality functional -----------------------


@dataclass
class TestFunction:
    """Continuous function on the compactification: a boundary step part
    composed with the retraction, plus a finitely supported interior
    perturbation (vanishing at infinity, hence continuous)."""

    __test__ = False  # not a pytest class despite the Test prefix

    boundary: StepFunction
    interior: Dict[ReducedWord, object] = field(default_factory=dict)

    @classmethod
    def one(cls, k: int) -> "TestFunction":
        return cls(StepFunction.constant(Fraction(1), k))

    @classmethod
    def from_boundary(cls, sf: StepFunction) -> "TestFunction":
        return cls(sf)

    def value_at_group(self, g: ReducedWord):
        base = self.boundary.value_at(hat_projection(g))
        extra = self.interior.get(g)
        return base if extra is None else base + extra

    def depth(self) -> int:
        return self.boundary.depth()


def phi_r(
    f1: TestFunction,
    f2: TestFunction,
    v1: StepFunction,
    v2: StepFunction,
    w1: StepFunction,
    w2: StepFunction,
    weights: WeightFamily,
    mu: BoundaryMeasure,
):
    """The orthogonality functional: the weighted annulus average of
    f1(g) f2(g^-1) <pi~(g)v1, w1> conj(<pi~(g)v2, w2>).

    Word metric: summed exactly over coefficient classes; the value lives
    in Q(sqrt(omega)).  Other metrics iterate the explicit support.
    """

    def term(g: ReducedWord, with_interior: bool):
        if with_interior:
            a = f1.value_at_group(g)
            b = f2.value_at_group(~g)
        else:
            a = f1.boundary.value_at(hat_projection(g))
            b = f2.boundary.value_at(hat_projection(~g))
        nc1 = normalized_coefficient(g, v1, w1, mu)
        nc2 = normalized_coefficient(g, v2, w2, mu)
        return a * b * nc1 * nc2

    exact = mu.exact and weights.exact
    total = QSqrt(0, 0, int(mu.omega)) if exact else 0.0
    if weights.ctx.metric.kind == "word":
        d = max(
            1,
            v1.depth(),
            v2.depth(),
            w1.depth(),
            w2.depth(),
            f1.depth(),
            f2.depth(),
        )
        for entry in weights.class_entries(d):
            total = total + entry.mass * term(entry.rep, with_interior=False)
    else:
        for g, mass in weights.entries():
            total = total + mass * term(g, with_interior=False)
    corrections = set(f1.interior) | {~g for g in f2.interior}
    for g0 in corrections:
        mass = weights.mass_of(g0)
        if mass:
            total = total + mass * (term(g0, True) - term(g0, False))
    return total


def phi_r_pairs(
    f1: TestFunction,
    f2: TestFunction,
    pairs: Sequence[Tuple[StepFunction, StepFunction]],
    weights: WeightFamily,
    mu: BoundaryMeasure,
) -> List[List[object]]:
    """Phi_R for every ordered combination of coefficient slots.

    Entry [i][j] is phi_r with (v1, w1) = pairs[i], (v2, w2) = pairs[j];
    the normalized coefficients are computed once per class per pair, so
    a full combination grid costs no more than one slot pair would.
    Interior perturbations are not supported on this batched path.
    """
    if f1.interior or f2.interior:
        raise ValueError("batched phi requires interior-free test functions")
    d = max(
        1,
        f1.depth(),
        f2.depth(),
        max(max(v.depth(), w.depth()) for v, w in pairs),
    )
    exact = mu.exact and weights.exact
    zero = QSqrt(0, 0, int(mu.omega)) if exact else 0.0
    out: List[List[object]] = [[zero for _ in pairs] for _ in pairs]
    if weights.ctx.metric.kind == "word":
        stream: Iterable[Tuple[object, ReducedWord]] = (
            (entry.mass, entry.rep) for entry in weights.class_entries(d)
        )
    else:
        stream = ((mass, g) for g, mass in weights.entries())
    for mass, g in stream:
        a = f1.boundary.value_at(hat_projection(g))
        b = f2.boundary.value_at(hat_projection(~g))
        factor = mass * a * b
        ncs = [normalized_coefficient(g, v, w, mu) for v, w in pairs]
        for i in range(len(pairs)):
            row = out[i]
            for j in range(len(pairs)):
                row[j] = row[j] + factor * ncs[i] * ncs[j]
    return out


def orthogonality_target(
    f1: TestFunction,
    f2: TestFunction,
    v1: StepFunction,
    v2: StepFunction,
    w1: StepFunction,
    w2: StepFunction,
    mu: BoundaryMeasure,
):
    """<f2|bd v1, v2> * conj(<w1, f1|bd w2>), the theorem's limit value."""
    left = inner_product(f2.boundary.multiply(v1), v2, mu)
    right = inner_product(w1, f1.boundary.multiply(w2), mu)
    return left * right


# -- sweep reports and fits -------------------------------------------------


def _loglinear_fit(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float, float]:
    """Least squares y = a*x + b; returns (a, b, r2)."""
    n = len(xs)
    xbar = sum(xs) / n
    ybar = sum(ys) / n
    sxx = sum((x - xbar) ** 2 for x in xs)
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    if sxx == 0:
        return math.nan, ybar, math.nan
    a = sxy / sxx
    b = ybar - a * xbar
    ss_res = sum((y - (a * x + b)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - ybar) ** 2 for y in ys)
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return a, b, r2


def fit_decay(grid: Sequence[float], errors: Sequence[float]) -> Tuple[Optional[float], Optional[float], List[float]]:
    """Fit log(err) ~ -c * x over the top half of the grid, skipping exact
    zeros (they are reported, not fitted).  Returns (c, r2, window)."""
    half = len(grid) // 2
    xs, ys = [], []
    for x, e in list(zip(grid, errors))[half:]:
        fe = as_float(e)
        if fe > 0:
            xs.append(float(x))
            ys.append(math.log(fe))
    if len(xs) < 2:
        return None, None, xs
    a, _, r2 = _loglinear_fit(xs, ys)
    return -a, r2, xs


def fit_growth(grid: Sequence[int], values: Sequence[float]) -> Tuple[Optional[float], Optional[float], List[float]]:
    """Fit log(q) ~ beta * log(1+n) over the top half of the grid."""
    half = len(grid) // 2
    xs, ys = [], []
    for n, q in list(zip(grid, values))[half:]:
        fq = as_float(q)
        if fq > 0:
            xs.append(math.log(1.0 + n))
            ys.append(math.log(fq))
    if len(xs) < 2:
        return None, None, xs
    a, _, r2 = _loglinear_fit(xs, ys)
    return a, r2, xs


@dataclass
class SweepReport:
    name: str
    param: str
    grid: List
    values: List[float]
    values_exact: List[str]
    targets: List[float]
    targets_exact: List[str]
    abs_errors: List[float]
    rel_errors: List[float]
    fitted_exponent: Optional[float] = None
    fit_r2: Optional[float] = None
    fit_window: List[float] = field(default_factory=list)
    reference_rate: Optional[float] = None
    constants: Dict[str, float] = field(default_factory=dict)
    verdict: str = ""
    passed: bool = True
    partial: bool = False
    extras: Dict[str, List] = field(default_factory=dict)

    def rows(self) -> List[dict]:
        out = []
        for i, x in enumerate(self.grid):
            row = {
                self.param: x,
                "value": self.values[i],
                "value_exact": self.values_exact[i],
                "target": self.targets[i],
                "target_exact": self.targets_exact[i],
                "abs_error": self.abs_errors[i],
                "rel_error": self.rel_errors[i],
            }
            for key, col in self.extras.items():
                row[key] = col[i]
            out.append(row)
        return out

    def summary(self) -> dict:
        return {
            "name": self.name,
            "fitted_exponent": self.fitted_exponent,
            "fit_r2": self.fit_r2,
            "fit_window": self.fit_window,
            "reference_rate": self.reference_rate,
            "constants": self.constants,
            "verdict": self.verdict,
            "passed": self.passed,
            "partial": self.partial,
        }


def orthogonality_sweep(
    f1: TestFunction,
    f2: TestFunction,
    v1: StepFunction,
    v2: StepFunction,
    w1: StepFunction,
    w2: StepFunction,
    grid: Sequence,
    ctx: GroupContext,
    mu: BoundaryMeasure,
    weights_kind: str = "sphere",
    budget: int = 10_000_000,
    tolerance: float = 0.05,
    rel_floor: Fraction = Fraction(1, 16),
) -> SweepReport:
    """Phi_R along a grid against the theorem's limit, with decay fit
    against the modulus-of-continuity reference rate eps/2."""
    target = orthogonality_target(f1, f2, v1, v2, w1, w2, mu)
    tgt_f = as_float(target)
    values, values_exact, abs_errors, rel_errors = [], [], [], []
    partial = False
    spent = 0
    used_grid = []
    for R in grid:
        cost = (
            len(sphere_classes(R, 2, ctx.k)) if weights_kind == "sphere" and ctx.metric.kind == "word"
            else sphere_size(int(math.ceil(float(R))), ctx.k)
        )
        spent += cost
        if spent > budget:
            partial = True
            break
        if weights_kind == "sphere":
            weights = sphere_weights(R, ctx)
        elif weights_kind == "shadow":
            weights = build_partition_weights(R, ctx, budget=budget)
        else:
            raise ValueError(f"unknown weights kind {weights_kind!r}")
        val = phi_r(f1, f2, v1, v2, w1, w2, weights, mu)
        err = abs(val - target)
        floor = rel_floor if abs(target) < rel_floor else abs(target)
        rel = err / floor
        used_grid.append(R)
        values.append(as_float(val))
        values_exact.append(exact_str(val))
        abs_errors.append(as_float(err))
        rel_errors.append(as_float(rel))
    exponent, r2, window = fit_decay(used_grid, abs_errors)
    passed = bool(rel_errors and rel_errors[-1] <= tolerance) and not partial
    verdict = "PASS" if passed else "FAIL"
    return SweepReport(
        name="orthogonality",
        param="R",
        grid=used_grid,
        values=values,
        values_exact=values_exact,
        targets=[tgt_f] * len(used_grid),
        targets_exact=[exact_str(target)] * len(used_grid),
        abs_errors=abs_errors,
        rel_errors=rel_errors,
        fitted_exponent=exponent,
        fit_r2=r2,
        fit_window=window,
        reference_rate=float(ctx.epsilon) / 2.0,
        verdict=verdict,
        passed=passed,
        partial=partial,
    )


# -- annular rapid decay and GVB --------------------------------------------


def sphere_sum_sq(v: StepFunction, w: StepFunction, n: int, mu: BoundaryMeasure, ctx: GroupContext):
    """sum over S_n of <pi(g)v, w>^2, exactly (word metric)."""
    if ctx.metric.kind != "word":
        raise ValueError("sphere sums require the word metric")
    d = max(1, v.depth(), w.depth())
    total = QSqrt(0, 0, int(mu.omega))
    if n == 0:
        coef = matrix_coefficient(ReducedWord(()), v, w, mu)
        return _as_qsqrt(coef, mu) * _as_qsqrt(coef, mu)
    if n < 2 * d:
        for g in enumerate_annulus(n, 0, ctx.metric):
            coef = _as_qsqrt(matrix_coefficient(g, v, w, mu), mu)
            total = total + coef * coef
        return total
    for p, s, c in sphere_classes(n, d, ctx.k):
        rep = ReducedWord(class_representative(p, s, n, ctx.k), _reduced=True)
        coef = _as_qsqrt(matrix_coefficient(rep, v, w, mu), mu)
        total = total + c * (coef * coef)
    return total


def _as_qsqrt(x, mu: BoundaryMeasure) -> QSqrt:
    if isinstance(x, QSqrt):
        return x
    return QSqrt(x, 0, int(mu.omega))


def annular_rd_ratio(v: StepFunction, w: StepFunction, n: int, mu: BoundaryMeasure, ctx: GroupContext) -> float:
    """r_n = (sum_{S_n} <pi(g)v,w>^2)^(1/2) / ((1+n) ||v|| ||w||)."""
    total = sphere_sum_sq(v, w, n, mu, ctx)
    scale = as_float(norm_sq(v, mu)) * as_float(norm_sq(w, mu))
    return math.sqrt(as_float(total)) / ((1 + n) * math.sqrt(scale))


def rd_sweep(
    v: StepFunction,
    w: StepFunction,
    grid: Sequence[int],
    ctx: GroupContext,
    mu: BoundaryMeasure,
    lower_band: float = 0.3,
) -> SweepReport:
    ratios = []
    sums_exact = []
    for n in grid:
        ratios.append(annular_rd_ratio(v, w, n, mu, ctx))
        sums_exact.append(exact_str(sphere_sum_sq(v, w, n, mu, ctx)))
    sup_r = max(ratios)
    band = [r for n, r in zip(grid, ratios) if n >= 2]
    inf_r = min(band) if band else min(ratios)
    passed = inf_r >= lower_band and math.isfinite(sup_r)
    return SweepReport(
        name="annular-rd",
        param="n",
        grid=list(grid),
        values=ratios,
        values_exact=sums_exact,
        targets=[1.0] * len(grid),
        targets_exact=["bounded"] * len(grid),
        abs_errors=[0.0] * len(grid),
        rel_errors=[0.0] * len(grid),
        constants={"sup_ratio": sup_r, "inf_ratio_n_ge_2": inf_r},
        verdict="PASS" if passed else "FAIL",
        passed=passed,
    )


def gvb_growth(
    v: StepFunction,
    w: StepFunction,
    grid: Sequence[int],
    ctx: GroupContext,
    mu: BoundaryMeasure,
    exponent_band: Tuple[float, float] = (1.8, 2.2),
) -> SweepReport:
    """q_n = sum_{S_n} <pi(g)v,w>^2 and its growth exponent in (1+n).

    Unbounded q_n with exponent about 2 is the computational content of
    the monotony argument: no vector can satisfy the good-vector bound,
    hence the verdict "GVB fails".
    """
    qs = []
    qs_exact = []
    ratios = []
    scale = as_float(norm_sq(v, mu)) * as_float(norm_sq(w, mu))
    for n in grid:
        q = sphere_sum_sq(v, w, n, mu, ctx)
        qs.append(as_float(q))
        qs_exact.append(exact_str(q))
        ratios.append(as_float(q) / ((1 + n) ** 2 * scale))
    exponent, r2, window = fit_growth(list(grid), qs)
    growing = qs[-1] > 2.0 * qs[0]
    in_band = exponent is not None and exponent_band[0] <= exponent <= exponent_band[1]
    passed = bool(growing and in_band)
    verdict = "GVB fails" if passed else "inconclusive"
    return SweepReport(
        name="gvb-growth",
        param="n",
        grid=list(grid),
        values=qs,
        values_exact=qs_exact,
        targets=[0.0] * len(grid),
        targets_exact=["unbounded"] * len(grid),
        abs_errors=[0.0] * len(grid),
        rel_errors=[0.0] * len(grid),
        fitted_exponent=exponent,
        fit_r2=r2,
        fit_window=window,
        reference_rate=2.0,
        constants={"ratio_min": min(ratios), "ratio_max": max(ratios)},
        verdict=verdict,
        passed=passed,
        extras={"ratio": ratios},
    )


# -- group-algebra convolution ----------------------------------------------


def convolve(
    phi: Dict[ReducedWord, object],
    psi: Dict[ReducedWord, object],
    budget: int = 10_000_000,
) -> Dict[ReducedWord, object]:
    """(phi * psi)(g) = sum_x phi(x) psi(x^-1 g) over finite supports."""
    if len(phi) * len(psi) > budget:
        raise BudgetError(f"convolution support product {len(phi)}x{len(psi)} exceeds budget")
    out: Dict[ReducedWord, object] = {}
    for x, a in phi.items():
        for y, b in psi.items():
            g = x * y
            prev = out.get(g)
            out[g] = a * b if prev is None else prev + a * b
    return {g: val for g, val in out.items() if val}


def l2_norm_sq(phi: Dict[ReducedWord, object]):
    total: object = Fraction(0)
    for val in phi.values():
        total = total + val * val
    return total


def annulus_indicator(R, h, metric: MetricSpec) -> Dict[ReducedWord, object]:
    return {g: Fraction(1) for g in enumerate_annulus(R, h, metric)}


@dataclass
class FiberReport:
    max_by_defect: Dict[int, int]  # p -> max fiber size over |g| = R+R'-2p
    extremal_ok: bool              # fiber size exactly 1 whenever p = 0
    bound_ok: bool                 # max fiber at defect p <= 2k(2k-1)^(p-1)
    pairs_checked: List[Tuple[int, int]]


def fiber_size_report(r_max: int, k: int) -> FiberReport:
    """Exhaustive forward-product census of the fibers
    {x in S_R : x^-1 g in S_R'}: counts of g = x z over S_R x S_R'."""
    metric = MetricSpec.word(k)
    spheres = {
        r: [g.letters for g in enumerate_annulus(r, 0, metric)] for r in range(1, r_max + 1)
    }
    from .words import multiply_letters

    max_by_defect: Dict[int, int] = {}
    extremal_ok = True
    pairs = []
    for R in range(1, r_max + 1):
        for Rp in range(1, r_max + 1):
            pairs.append((R, Rp))
            counts: Dict[Letters, int] = {}
            for x in spheres[R]:
                for z in spheres[Rp]:
                    g = multiply_letters(x, z)
                    counts[g] = counts.get(g, 0) + 1
            for g, c in counts.items():
                p = (R + Rp - len(g)) // 2
                if p == 0 and c != 1:
                    extremal_ok = False
                if c > max_by_defect.get(p, 0):
                    max_by_defect[p] = c
    bound_ok = all(
        c <= (2 * k * (2 * k - 1) ** (p - 1) if p >= 1 else 1)
        for p, c in max_by_defect.items()
    )
    return FiberReport(max_by_defect, extremal_ok, bound_ok, pairs)


@dataclass
class ConvolutionCheck:
    grid: List[Tuple[int, int, int]]
    max_restricted_ratio: float
    max_full_ratio_over_1pR: float
    trials: int


def rd_convolution_check(
    triples: Sequence[Tuple[int, int, int]],
    ctx: GroupContext,
    trials: int = 3,
    seed: int = 0,
    budget: int = 10_000_000,
) -> ConvolutionCheck:
    """Random annulus-supported functions: record the worst observed
    restricted-convolution norm ratio and the full ratio divided by 1+R."""
    rng = np.random.default_rng(seed)
    metric = ctx.metric
    worst_restricted = 0.0
    worst_full = 0.0
    values = [-3, -2, -1, 1, 2, 3]
    for (R, Rp, Rpp) in triples:
        supp_phi = [g for g in enumerate_annulus(R, ctx.h, metric)]
        supp_psi = [g for g in enumerate_annulus(Rp, ctx.h, metric)]
        for _ in range(trials):
            phi = {g: Fraction(values[rng.integers(len(values))]) for g in supp_phi}
            psi = {g: Fraction(values[rng.integers(len(values))]) for g in supp_psi}
            conv = convolve(phi, psi, budget=budget)
            norm_sq_product = l2_norm_sq(phi) * l2_norm_sq(psi)
            restricted = sum(
                val * val for g, val in conv.items() if abs(metric.length_of(g.letters) - Rpp) <= ctx.h
            )
            full = sum(val * val for val in conv.values())
            worst_restricted = max(worst_restricted, math.sqrt(float(restricted / norm_sq_product)))
            worst_full = max(
                worst_full, math.sqrt(float(full / norm_sq_product)) / (1.0 + float(R))
            )
    return ConvolutionCheck(list(triples), worst_restricted, worst_full, trials)
