"""Finite linear symplectic groups, their orbit types, and invariants."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from gmpy2 import mpq

from .errors import GroupBoundError, StructuralError
from .linalg import (
    Matrix,
    det,
    format_matrix,
    identity,
    is_symplectic,
    mat_vec,
    matmul,
    matrix,
    nullspace,
    shape,
    sub,
)
from .poly import BasePoly, poly_compose
from .scalar import rational
from .weyl import WeylForm, act_group_element, act_on_poly

__all__ = [
    "FiniteGroup",
    "CheckReport",
    "StratumDescriptor",
    "enumerate_group",
    "check_symplectic_action",
    "orbit_type_stratification",
    "isotropy_indices",
    "classify_point",
    "reynolds_average",
    "verify_hilbert_basis",
    "DEFAULT_GROUP_BOUND",
]

DEFAULT_GROUP_BOUND = 64


@dataclass
class CheckReport:
    """Outcome of a report-valued check. ``violations`` lists what failed."""

    ok: bool
    violations: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": self.violations, **self.details}


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    elements: tuple[Matrix, ...]
    generator_indices: tuple[int, ...]
    dim: int

    @cached_property
    def index(self) -> dict[Matrix, int]:
        return {g: i for i, g in enumerate(self.elements)}

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @cached_property
    def identity_index(self) -> int:
        return self.index[identity(self.dim)]

    @cached_property
    def table(self) -> tuple[tuple[int, ...], ...]:
        """table[a][b] is the index of elements[a] @ elements[b]."""
        idx = self.index
        return tuple(tuple(idx[matmul(a, b)] for b in self.elements) for a in self.elements)

    @cached_property
    def inverses(self) -> tuple[int, ...]:
        e = self.identity_index
        return tuple(row.index(e) for row in self.table)

    @property
    def generators(self) -> tuple[Matrix, ...]:
        return tuple(self.elements[i] for i in self.generator_indices)

    def closure(self, indices) -> frozenset[int]:
        """Subgroup generated by the given element indices."""
        out = {self.identity_index, *indices}
        frontier = list(out)
        while frontier:
            nxt = []
            for a in frontier:
                for b in list(out):
                    for c in (self.table[a][b], self.table[b][a]):
                        if c not in out:
                            out.add(c)
                            nxt.append(c)
            frontier = nxt
        return frozenset(out)

    def conjugate(self, sub_indices, g: int) -> frozenset[int]:
        gi = self.inverses[g]
        t = self.table
        return frozenset(t[t[g][h]][gi] for h in sub_indices)


def enumerate_group(generators, bound: int = DEFAULT_GROUP_BOUND, dim: int | None = None) -> FiniteGroup:
    """Close a set of invertible rational matrices under multiplication."""
    gens = [matrix(g) if not isinstance(g, tuple) else g for g in generators]
    if dim is None:
        if not gens:
            raise StructuralError("dim is required when there are no generators")
        dim = shape(gens[0])[0]
    for g in gens:
        if shape(g) != (dim, dim):
            raise StructuralError(f"generator of shape {shape(g)} in dimension {dim}")
        if det(g) == 0:
            raise StructuralError(f"generator {format_matrix(g)} is not invertible")
    e = identity(dim)
    elements = [e]
    seen = {e: 0}
    frontier = [e]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                c = matmul(g, a)
                if c not in seen:
                    if len(elements) >= bound:
                        raise GroupBoundError(f"group not finite within bound {bound}")
                    seen[c] = len(elements)
                    elements.append(c)
                    nxt.append(c)
        frontier = nxt
    # in a finite group the inverses are positive powers, so left multiplication suffices
    gen_idx = tuple(seen[g] for g in gens)
    return FiniteGroup(tuple(elements), gen_idx, dim)


def check_symplectic_action(group: FiniteGroup, dim: int | None = None) -> CheckReport:
    dim = group.dim if dim is None else dim
    bad = []
    for i, g in enumerate(group.elements):
        if shape(g) != (dim, dim) or not is_symplectic(g):
            bad.append({"index": i, "matrix": format_matrix(g)})
    return CheckReport(not bad, bad)


@dataclass(frozen=True)
class StratumDescriptor:
    isotropy_class: tuple[tuple[int, ...], ...]
    fixed_dim: int
    is_principal: bool

    @property
    def isotropy_order(self) -> int:
        return len(self.isotropy_class[0])

    @property
    def class_size(self) -> int:
        return len(self.isotropy_class)

    def contains(self, subgroup) -> bool:
        return tuple(sorted(subgroup)) in self.isotropy_class

    def to_dict(self) -> dict:
        return {
            "isotropy_order": self.isotropy_order,
            "class_size": self.class_size,
            "fixed_dim": self.fixed_dim,
            "principal": self.is_principal,
            "isotropy_class": [list(h) for h in self.isotropy_class],
        }


def all_subgroups(group: FiniteGroup, budget: int = DEFAULT_GROUP_BOUND) -> list[frozenset[int]]:
    if group.order > budget:
        raise GroupBoundError(f"group of order {group.order} exceeds the subgroup-enumeration budget {budget}")
    trivial = frozenset({group.identity_index})
    found = {trivial}
    queue = [trivial]
    while queue:
        h = queue.pop()
        for g in range(group.order):
            if g in h:
                continue
            k = group.closure(h | {g})
            if k not in found:
                found.add(k)
                queue.append(k)
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def _fixed_space(group: FiniteGroup, sub_indices) -> list[tuple[mpq, ...]]:
    e = identity(group.dim)
    rows = []
    for h in sub_indices:
        rows.extend(sub(group.elements[h], e))
    return nullspace(tuple(rows), group.dim)


def _pointwise_stabilizer(group: FiniteGroup, basis) -> frozenset[int]:
    return frozenset(
        i for i, g in enumerate(group.elements) if all(mat_vec(g, v) == tuple(v) for v in basis)
    )


def orbit_type_stratification(group: FiniteGroup, dim: int | None = None, budget: int = DEFAULT_GROUP_BOUND):
    """Occupied orbit types of a finite linear action, one descriptor per conjugacy class.

    H is occupied iff the pointwise stabiliser of Fix(H) is H itself; the
    generic point of Fix(H) then has isotropy exactly H.
    """
    if dim is not None and dim != group.dim:
        raise StructuralError(f"group acts on dimension {group.dim}, not {dim}")
    occupied = {}
    for h in all_subgroups(group, budget):
        basis = _fixed_space(group, h)
        if _pointwise_stabilizer(group, basis) == h:
            occupied[h] = len(basis)
    classes = []
    assigned = set()
    for h in sorted(occupied, key=lambda s: (len(s), sorted(s))):
        if h in assigned:
            continue
        cls = {group.conjugate(h, g) for g in range(group.order)}
        assigned |= cls
        classes.append((tuple(sorted(tuple(sorted(c)) for c in cls)), occupied[h]))
    top = max(fd for _, fd in classes)
    descriptors = [StratumDescriptor(c, fd, fd == top) for c, fd in classes]
    descriptors.sort(key=lambda d: (d.fixed_dim, d.class_size, d.isotropy_class))
    return descriptors


def isotropy_indices(group: FiniteGroup, point) -> frozenset[int]:
    point = tuple(rational(v) for v in point)
    return frozenset(i for i, g in enumerate(group.elements) if mat_vec(g, point) == point)


def classify_point(strata, group: FiniteGroup, point) -> StratumDescriptor:
    stab = isotropy_indices(group, point)
    hits = [d for d in strata if d.contains(stab)]
    if len(hits) != 1:
        raise StructuralError(f"point {point} matches {len(hits)} strata")
    return hits[0]


def reynolds_average(f, group: FiniteGroup):
    """(1/|G|) sum_g g.f for a BasePoly or a WeylForm."""
    if isinstance(f, BasePoly):
        total = BasePoly.zero(f.nvars)
        for g in group.elements:
            total = total + act_on_poly(f, g)
    elif isinstance(f, WeylForm):
        total = WeylForm.zero(f.policy)
        for g in group.elements:
            total = total + act_group_element(f, g)
    else:
        raise TypeError(f"cannot average {type(f).__name__}")
    return total / group.order


def verify_hilbert_basis(polys, group: FiniteGroup, relations=()) -> CheckReport:
    """Check invariance and homogeneity of each polynomial and that each relation
    vanishes after substitution. Generation of the invariant ring is not checked."""
    invariant = []
    homogeneous = []
    for p in polys:
        invariant.append(all(act_on_poly(p, g) == p for g in group.elements))
        homogeneous.append(bool(p) and p.is_homogeneous())
    rel_ok = [not poly_compose(r, list(polys)) for r in relations]
    violations = []
    for i, (inv, hom) in enumerate(zip(invariant, homogeneous)):
        if not inv:
            violations.append({"polynomial": i, "failure": "not invariant"})
        if not hom:
            violations.append({"polynomial": i, "failure": "not homogeneous"})
    for i, ok in enumerate(rel_ok):
        if not ok:
            violations.append({"relation": i, "failure": "does not vanish"})
    return CheckReport(
        not violations,
        violations,
        {"invariant": invariant, "homogeneous": homogeneous, "relations": rel_ok},
    )
