"""Linear symplectic charts with finite symmetry and their connections.

Christoffel data are lowered symbols Gamma_ijk with

    nabla_{d/dx_i} d/dx_j = sum_{k,l} Gamma_ijk omega_kl d/dx_l

stored as ``{(i, j, k): BasePoly}`` with 0-based indices and zero entries omitted.
A torsionfree connection is symmetric in (i, j); it is also symplectic exactly
when Gamma is fully symmetric.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations, product
from pathlib import Path

from .errors import ParseError, StructuralError
from .groups import DEFAULT_GROUP_BOUND, CheckReport, FiniteGroup, enumerate_group
from .linalg import (
    Matrix,
    format_matrix,
    inverse,
    matmul,
    matrix,
    shape,
    standard_symplectic,
    transpose,
)
from .poly import BasePoly, poly_diff, poly_subst_linear
from .scalar import Scalar
from .text import format_poly, parse_poly
from .weyl import TruncationPolicy

__all__ = [
    "Chart",
    "Christoffel",
    "clean_christoffel",
    "symmetric_christoffel",
    "is_torsionfree",
    "is_fully_symmetric",
    "nabla_omega",
    "symplectize_connection",
    "transform_christoffel",
    "check_connection_invariance",
    "average_christoffel",
    "constant_metric_christoffel",
    "poisson_bracket",
    "check_chart_morphism",
    "load_chart",
    "chart_from_dict",
    "chart_to_dict",
]

Christoffel = dict  # {(i, j, k): BasePoly}


def clean_christoffel(gamma, dim: int) -> Christoffel:
    out = {}
    for key, p in gamma.items():
        key = tuple(key)
        if len(key) != 3 or any(not 0 <= i < dim for i in key):
            raise StructuralError(f"Christoffel index {key} out of range for dimension {dim}")
        if not isinstance(p, BasePoly):
            p = BasePoly.constant(dim, p)
        if p.nvars != dim:
            raise StructuralError(f"Christoffel entry {key} has {p.nvars} variables, expected {dim}")
        if p:
            out[key] = p
    return out


def symmetric_christoffel(entries, dim: int) -> Christoffel:
    """Spread each given entry over all permutations of its index triple."""
    out = {}
    for key, p in clean_christoffel(entries, dim).items():
        for perm in set(permutations(key)):
            if perm in out and out[perm] != p:
                raise StructuralError(f"conflicting values for permutations of {key}")
            out[perm] = p
    return out


def _get(gamma, key, dim) -> BasePoly:
    return gamma.get(key) or BasePoly.zero(dim)


def is_torsionfree(gamma: Christoffel) -> bool:
    return all(gamma.get((j, i, k)) == p for (i, j, k), p in gamma.items())


def is_fully_symmetric(gamma: Christoffel) -> bool:
    return is_torsionfree(gamma) and all(gamma.get((i, k, j)) == p for (i, j, k), p in gamma.items())


def _scalar(v) -> Scalar:
    return Scalar(v)


def nabla_omega(gamma: Christoffel, dim: int) -> Christoffel:
    """Components (nabla_i omega)(d_j, d_k) for the constant standard form."""
    w = standard_symplectic(dim)
    # omega(nabla_i d_j, d_k) = sum_{m,l} Gamma_ijm w_ml w_lk
    ww = matmul(w, w)
    wwt = matmul(w, transpose(w))
    out = {}
    for i, j, k in product(range(dim), repeat=3):
        total = BasePoly.zero(dim)
        for m in range(dim):
            if ww[m][k]:
                total = total - _get(gamma, (i, j, m), dim) * _scalar(ww[m][k])
            # omega(d_j, nabla_i d_k) = sum_{m,l} Gamma_ikm w_ml w_jl
            if wwt[m][j]:
                total = total - _get(gamma, (i, k, m), dim) * _scalar(wwt[m][j])
        if total:
            out[(i, j, k)] = total
    return out


def symplectize_connection(christoffel_in: Christoffel, chart_or_dim) -> Christoffel:
    """Correct a torsionfree connection to a torsionfree symplectic one.

    Delta'(a, b, c) = (nabla omega(c, a, b) + nabla omega(b, a, c)) / 3, lifted
    through omega(., Delta(b, c)) = Delta'(., b, c) and added to the input.
    """
    dim = chart_or_dim.dim if isinstance(chart_or_dim, Chart) else int(chart_or_dim)
    gamma = clean_christoffel(christoffel_in, dim)
    if not is_torsionfree(gamma):
        raise StructuralError("input connection has torsion (Gamma_ijk not symmetric in i, j)")
    nw = nabla_omega(gamma, dim)
    third = Scalar(1, 0) / 3
    delta_prime = {}
    for a, b, c in product(range(dim), repeat=3):
        v = (_get(nw, (c, a, b), dim) + _get(nw, (b, a, c), dim)) * third
        if v:
            delta_prime[(a, b, c)] = v
    w = standard_symplectic(dim)
    winv = inverse(w)
    # Delta^l_bc = sum_a winv[l][a] Delta'_abc; lowered E_bcm = sum_l Delta^l_bc winv[l][m]
    out = dict(gamma)
    for b, c, m in product(range(dim), repeat=3):
        total = BasePoly.zero(dim)
        for l in range(dim):
            if not winv[l][m]:
                continue
            for a in range(dim):
                if winv[l][a] and (a, b, c) in delta_prime:
                    total = total + delta_prime[(a, b, c)] * _scalar(winv[l][a] * winv[l][m])
        if total:
            out[(b, c, m)] = _get(out, (b, c, m), dim) + total
    return {k: p for k, p in out.items() if p}


def transform_christoffel(gamma: Christoffel, g: Matrix, dim: int) -> Christoffel:
    """The (0,3)-tensor g.Gamma: (g.Gamma)_ijk(x) = sum M_ai M_bj M_ck Gamma_abc(M x), M = g^-1."""
    m = inverse(g)
    moved = {key: poly_subst_linear(p, m) for key, p in gamma.items()}
    out = {}
    for i, j, k in product(range(dim), repeat=3):
        total = BasePoly.zero(dim)
        for (a, b, c), p in moved.items():
            coeff = m[a][i] * m[b][j] * m[c][k]
            if coeff:
                total = total + p * _scalar(coeff)
        if total:
            out[(i, j, k)] = total
    return out


def average_christoffel(gamma: Christoffel, group: FiniteGroup) -> Christoffel:
    dim = group.dim
    total: dict = {}
    for g in group.elements:
        for key, p in transform_christoffel(gamma, g, dim).items():
            total[key] = total[key] + p if key in total else p
    return {k: p / group.order for k, p in total.items() if p}


def constant_metric_christoffel(metric, dim: int) -> Christoffel:
    """Levi-Civita symbols of a constant metric, which all vanish.

    The metric is still validated (symmetric, nondegenerate) so the call
    documents a genuine riemannian input.
    """
    g = matrix(metric)
    if shape(g) != (dim, dim):
        raise StructuralError(f"metric of shape {shape(g)} in dimension {dim}")
    if g != transpose(g):
        raise StructuralError("metric is not symmetric")
    inverse(g)
    return {}


def poisson_bracket(f: BasePoly, g: BasePoly) -> BasePoly:
    """{f, g} = sum_j (df/dx_j dg/dx_{n+j} - df/dx_{n+j} dg/dx_j)."""
    if f.nvars != g.nvars or f.nvars % 2:
        raise StructuralError(f"bracket needs an even common dimension, got {f.nvars} and {g.nvars}")
    n = f.nvars // 2
    total = BasePoly.zero(f.nvars)
    for j in range(n):
        total = total + poly_diff(f, j) * poly_diff(g, n + j) - poly_diff(f, n + j) * poly_diff(g, j)
    return total


@dataclass(frozen=True, eq=False)
class Chart:
    dim: int
    generators: tuple[Matrix, ...] = ()
    christoffel: Christoffel = field(default_factory=dict)
    policy: TruncationPolicy | None = None
    group_bound: int = DEFAULT_GROUP_BOUND

    def __post_init__(self):
        if self.dim <= 0 or self.dim % 2:
            raise StructuralError(f"chart dimension must be even and positive, got {self.dim}")
        gens = tuple(g if isinstance(g, tuple) else matrix(g) for g in self.generators)
        for g in gens:
            if shape(g) != (self.dim, self.dim):
                raise StructuralError(f"generator of shape {shape(g)} on a chart of dimension {self.dim}")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "christoffel", clean_christoffel(self.christoffel, self.dim))
        if self.policy is None:
            object.__setattr__(self, "policy", TruncationPolicy(4, self.dim))
        elif self.policy.dim != self.dim:
            raise StructuralError(f"policy dimension {self.policy.dim} does not match chart {self.dim}")

    @cached_property
    def group(self) -> FiniteGroup:
        return enumerate_group(self.generators, self.group_bound, self.dim)

    @property
    def n_max(self) -> int:
        return self.policy.n_max

    def with_christoffel(self, gamma: Christoffel) -> Chart:
        return Chart(self.dim, self.generators, gamma, self.policy, self.group_bound)

    def with_policy(self, policy: TruncationPolicy) -> Chart:
        return Chart(self.dim, self.generators, self.christoffel, policy, self.group_bound)

    def with_n_max(self, n_max: int) -> Chart:
        return self.with_policy(self.policy.with_n_max(n_max))


def check_connection_invariance(chart: Chart) -> CheckReport:
    bad = []
    for idx, g in enumerate(chart.group.elements):
        if transform_christoffel(chart.christoffel, g, chart.dim) != chart.christoffel:
            bad.append({"index": idx, "matrix": format_matrix(g)})
    return CheckReport(not bad, bad)


def check_chart_morphism(source: Chart, target: Chart, phi, iota) -> CheckReport:
    """Check phi^T omega_target phi = omega_source, phi h = iota(h) phi and iota(h) in G_target.

    ``iota`` maps each source generator index to a target matrix.
    """
    phi = phi if isinstance(phi, tuple) else matrix(phi)
    if shape(phi) != (target.dim, source.dim) or source.dim > target.dim:
        raise StructuralError(f"phi of shape {shape(phi)} cannot map dimension {source.dim} into {target.dim}")
    pullback = matmul(matmul(transpose(phi), standard_symplectic(target.dim)), phi) == standard_symplectic(
        source.dim
    )
    equivariant = []
    in_target = []
    target_elems = set(target.group.elements)
    for i, h in enumerate(source.generators):
        img = iota[i]
        img = img if isinstance(img, tuple) else matrix(img)
        equivariant.append(matmul(phi, h) == matmul(img, phi))
        in_target.append(img in target_elems)
    violations = []
    if not pullback:
        violations.append({"condition": "pullback", "detail": "phi^T omega phi != omega"})
    violations += [{"condition": "equivariance", "generator": i} for i, ok in enumerate(equivariant) if not ok]
    violations += [{"condition": "iota", "generator": i} for i, ok in enumerate(in_target) if not ok]
    return CheckReport(
        not violations,
        violations,
        {"pullback": pullback, "equivariance": equivariant, "iota_in_target": in_target},
    )


# -- chart description files -------------------------------------------------------

_KEY = re.compile(r"^\s*\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)\s*$")


def chart_from_dict(data: dict, n_max: int | None = None, pi_sign: int = -1) -> Chart:
    try:
        dim = int(data["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"chart description needs an integer 'dim': {exc}") from None
    gens = []
    for gi, g in enumerate(data.get("generators", [])):
        try:
            gens.append(matrix(g))
        except (ValueError, ZeroDivisionError) as exc:
            raise StructuralError(f"generator {gi}: {exc}") from None
    gamma = {}
    for key, text in data.get("christoffel", {}).items():
        m = _KEY.match(key)
        if not m:
            raise StructuralError(f"Christoffel key {key!r} is not of the form '(i,j,k)'")
        idx = tuple(int(v) - 1 for v in m.groups())
        try:
            gamma[idx] = parse_poly(str(text), dim)
        except ParseError as exc:
            raise ParseError(f"Christoffel entry {key}: {exc.args[0]}", exc.text, exc.pos) from None
    if n_max is None:
        n_max = int(data.get("n_max", 4))
    return Chart(dim, tuple(gens), gamma, TruncationPolicy(n_max, dim, pi_sign))


def load_chart(path, n_max: int | None = None, pi_sign: int = -1) -> Chart:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", text, exc.colno - 1, exc.lineno) from None
    return chart_from_dict(data, n_max, pi_sign)


def chart_to_dict(chart: Chart) -> dict:
    return {
        "dim": chart.dim,
        "generators": [format_matrix(g) for g in chart.generators],
        "christoffel": {
            f"({i + 1},{j + 1},{k + 1})": format_poly(p) for (i, j, k), p in sorted(chart.christoffel.items())
        },
        "n_max": chart.n_max,
    }
