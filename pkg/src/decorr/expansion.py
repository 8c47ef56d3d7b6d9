"""Inclusion-exclusion cluster expansion of e^{-beta H} and its identities.

For a configuration I of interaction centers inside the lattice interior,
the alternating sum over sub-configurations

    T_I^{base} = sum_{M subset I} (-1)^{|I| - |M|} exp(-beta (H0_base + sum_{x in M} v_x))

isolates the part of the Boltzmann operator in which every center of I
participates.  Summing T over all I resums exactly to e^{-beta H}; each term
factorizes over R-connected components; and normalized traces of terms
("weights") obey a swapping identity that decouples distant observables.
Every identity is checked numerically here, with machine-level residuals.

Precision: the alternating sum cancels to roughly (2a q^{(2R+1)^D})^{|I|} of
the individual summand scale, so double arithmetic leaves relative noise of
order 1e-16 / weight -- far too coarse for third-order weights.  All weight
computations therefore run in clongdouble (80-bit extended) through the
Jacobi eigensolver in :mod:`decorr.algebra`, combined with the exact
zero-pattern block split: the split keeps structurally-exact zeros exact
(pure rotations would smear the ground sector at large beta), and the
extended mantissa pushes the cancellation noise below 1e-13 relative even
for weights of order 1e-50.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .algebra import GlobalOperator, embed, herm_eig, herm_exp, op_norm
from .lattice import (
    LatticeGeometry,
    Region,
    closure,
    interior,
    r_connected_set,
    set_distance,
    supercluster_decompose,
)
from .model import HamiltonianSpec, build_restricted, is_nonpositive

MAX_TERM_SIZE = 20  # 2^|I| exponentials per term
MAX_RESUM_INTERIOR = 12
MAX_SWEEP_INTERIOR = 6  # 4^|interior| (I, J) pairs
ZERO_FLOOR = 1e-300


def _dtype(extended: bool):
    return np.clongdouble if extended else np.complex128


def _rel(lhs, rhs) -> float:
    scale = max(abs(float(lhs)), abs(float(rhs)), ZERO_FLOOR)
    return abs(float(lhs) - float(rhs)) / scale


# ---------------------------------------------------------------------------
# terms
# ---------------------------------------------------------------------------

def yarotsky_term(
    I: Region, base: Region, spec: HamiltonianSpec, beta: float, extended: bool = True
) -> GlobalOperator:
    """The alternating-sum term T_I^{base} on the region ``base``.

    Requires I inside the lattice interior and closure(I) inside base, so
    every interaction of I acts within the base region.  A center of I with
    no interaction carries v_x = 0, and the in/out halves of the alternating
    sum cancel exactly: the term is a structural zero, returned without
    computing any exponentials.
    """
    if len(I) > MAX_TERM_SIZE:
        raise ValueError(f"|I| = {len(I)} exceeds the term cap {MAX_TERM_SIZE}")
    geo = spec.geometry
    if not I.issubset(interior(spec.sites, geo)):
        raise ValueError("configuration must lie in the lattice interior")
    if not closure(I, geo).issubset(base):
        raise ValueError("base region must contain the closure of I")
    dt = _dtype(extended)
    q = spec.q
    dim = q ** len(base)
    if any(x not in spec.interactions for x in I):
        return GlobalOperator(base, q, np.zeros((dim, dim), dtype=dt))
    H0 = np.zeros((dim, dim), dtype=dt)
    for z in base:
        H0 += embed(spec.onsite[z].astype(dt), Region([z]), base, q).matrix
    v_emb = {
        x: embed(spec.interactions[x].matrix.astype(dt), spec.interactions[x].support, base, q).matrix
        for x in I
    }
    total = np.zeros((dim, dim), dtype=dt)
    for m_size in range(len(I) + 1):
        sign = (-1) ** (len(I) - m_size)
        for M in itertools.combinations(I, m_size):
            HM = H0.copy()
            for x in M:
                HM += v_emb[x]
            total += sign * herm_exp(HM, -beta)
    return GlobalOperator(base, q, total)


def global_term(
    I: Region, spec: HamiltonianSpec, beta: float, extended: bool = True
) -> GlobalOperator:
    """T_I on the whole lattice: free Boltzmann factor outside closure(I)."""
    geo = spec.geometry
    cl = closure(I, geo)
    rest = spec.sites - cl
    q = spec.q
    dt = _dtype(extended)
    inner = yarotsky_term(I, cl, spec, beta, extended=extended)
    dim_rest = q ** len(rest)
    H0r = np.zeros((dim_rest, dim_rest), dtype=dt)
    for z in rest:
        H0r += embed(spec.onsite[z].astype(dt), Region([z]), rest, q).matrix
    outer = herm_exp(H0r, -beta)
    full = embed(outer, rest, spec.sites, q).matrix @ embed(
        inner.matrix, cl, spec.sites, q
    ).matrix
    return GlobalOperator(spec.sites, q, full)


def verify_resummation(spec: HamiltonianSpec, beta: float, extended: bool = True) -> float:
    """Relative Frobenius residual of sum_I T_I against e^{-beta H}.

    The sum runs over all subsets of the lattice interior (configurations on
    centers without interactions contribute exact zeros but are included --
    the resummation identity is about the full subset lattice).
    """
    geo = spec.geometry
    inter = interior(spec.sites, geo)
    if len(inter) > MAX_RESUM_INTERIOR:
        raise ValueError(
            f"interior of size {len(inter)} exceeds the resummation cap "
            f"{MAX_RESUM_INTERIOR}"
        )
    dt = _dtype(extended)
    _, _, H = build_restricted(spec, spec.sites)
    ref = herm_exp(H.matrix.astype(dt), -beta)
    acc = np.zeros_like(ref)
    for k in range(len(inter) + 1):
        for I in itertools.combinations(inter, k):
            acc += global_term(Region(I), spec, beta, extended=extended).matrix
    diff = acc - ref
    num = np.sqrt(np.abs(diff * diff.conj()).sum().real)
    den = np.sqrt(np.abs(ref * ref.conj()).sum().real)
    return float(num / max(den, ZERO_FLOOR))


def term_norm_scan(
    spec: HamiltonianSpec, beta: float, max_size: int = 3, extended: bool = False
) -> list[tuple[Region, float, float]]:
    """(I, ||T_I^{cl I}||, (2a)^|I|) for all interior configurations up to max_size.

    The norm bound has exponential headroom, so the default double-precision
    path is ample here.
    """
    geo = spec.geometry
    inter = interior(spec.sites, geo)
    rows = []
    for k in range(1, max_size + 1):
        for I in itertools.combinations(inter, k):
            I = Region(I)
            if any(x not in spec.interactions for x in I):
                continue
            T = yarotsky_term(I, closure(I, geo), spec, beta, extended=extended)
            rows.append((I, op_norm(T.matrix), (2 * spec.a) ** len(I)))
    return rows


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

def _free_partition(region: Region, spec: HamiltonianSpec, beta: float) -> np.longdouble:
    """Z0 over a region: product of single-site traces (exact factorization)."""
    z = np.longdouble(1.0)
    for site in region:
        w = herm_eig(spec.onsite[site].astype(np.clongdouble)).eigenvalues
        z *= np.exp(-np.longdouble(beta) * w).sum()
    return z


def _weight_hp(I: Region, spec: HamiltonianSpec, beta: float) -> np.longdouble:
    cl = closure(I, spec.geometry)
    T = yarotsky_term(I, cl, spec, beta, extended=True)
    tr = np.trace(T.matrix).real
    return tr / _free_partition(cl, spec, beta)


def _observable_weight_hp(
    I: Region, O: GlobalOperator, spec: HamiltonianSpec, beta: float
) -> np.longdouble:
    base = closure(I, spec.geometry) | O.region
    T = yarotsky_term(I, base, spec, beta, extended=True)
    O_emb = embed(O.matrix.astype(np.clongdouble), O.region, base, spec.q).matrix
    tr = np.trace(O_emb @ T.matrix).real
    return tr / _free_partition(base, spec, beta)


def weight(I: Region, spec: HamiltonianSpec, beta: float) -> float:
    """Normalized trace weight w(I) = tr T_I^{cl I} / Z0_{cl I}.

    Both trace and normalization live on the closure of I only; the rest of
    the lattice cancels exactly between numerator and denominator.
    """
    return float(_weight_hp(I, spec, beta))


def observable_weight(
    I: Region, O: GlobalOperator, spec: HamiltonianSpec, beta: float
) -> float:
    """w(I; O) = tr(O T_I^{cl I + supp O}) / Z0_{cl I + supp O}."""
    return float(_observable_weight_hp(I, O, spec, beta))


def _product_observable(A: GlobalOperator, B: GlobalOperator, q: int) -> GlobalOperator:
    if not A.region.isdisjoint(B.region):
        raise ValueError("product observable requires disjoint supports")
    both = A.region | B.region
    mat = embed(A.matrix, A.region, both, q).matrix @ embed(B.matrix, B.region, both, q).matrix
    return GlobalOperator(both, q, mat)


@dataclass(frozen=True)
class FactorizationCheck:
    lhs: float
    rhs: float
    rel_residual: float


def verify_factorization(
    I1: Region,
    O1: GlobalOperator,
    I2: Region,
    O2: GlobalOperator,
    spec: HamiltonianSpec,
    beta: float,
) -> FactorizationCheck:
    """w(I1 + I2; O1 O2) against w(I1; O1) w(I2; O2) for distant halves.

    Requires I1 + supp(O1) and I2 + supp(O2) to be mutually non-R-connected
    (distance > 2R), which makes the alternating sum split as a tensor
    product and the normalized traces factor exactly.
    """
    part1 = I1 | O1.region
    part2 = I2 | O2.region
    if set_distance(part1, part2) <= 2 * spec.geometry.R:
        raise ValueError("the two halves are R-connected; factorization does not apply")
    O12 = _product_observable(O1, O2, spec.q)
    lhs = _observable_weight_hp(I1 | I2, O12, spec, beta)
    rhs = _observable_weight_hp(I1, O1, spec, beta) * _observable_weight_hp(
        I2, O2, spec, beta
    )
    return FactorizationCheck(lhs=float(lhs), rhs=float(rhs), rel_residual=_rel(lhs, rhs))


# ---------------------------------------------------------------------------
# swapping
# ---------------------------------------------------------------------------

def swap_configurations(I: Region, J: Region, X: Region, Y: Region, R: int):
    """Exchange the I- and J-content of the supercluster holding X.

    Decomposes I + J + X + Y into R-connected components; with S1 the
    component containing X (which must not contain Y), returns

        I' = (J & S1) + (I - S1),   J' = (I & S1) + (J - S1).

    The map is an involution on pairs satisfying the separation event, and
    it preserves the supercluster decomposition itself.
    """
    dec = supercluster_decompose([I, J, X, Y], R)
    if not dec.in_different_components(X, Y):
        raise ValueError("swap undefined: X and Y lie in the same supercluster")
    S1 = dec.component_of(X[0])
    I_new = (J & S1) | (I - S1)
    J_new = (I & S1) | (J - S1)
    return I_new, J_new


@dataclass(frozen=True)
class SwapCheck:
    lhs: float
    rhs: float
    rel_residual: float
    per_pair_max: float
    n_event_pairs: int
    n_configs: int


def verify_swap_identity(
    spec: HamiltonianSpec,
    A: GlobalOperator,
    B: GlobalOperator,
    beta: float,
) -> SwapCheck:
    """Exhaustive check of the swapped-weight identity on a small lattice.

    Over all pairs (I, J) of interior configurations satisfying the event
    "X and Y lie in different superclusters of I + J + X + Y":

        sum w(I) w(J; AB)  =  sum w(I; A) w(J; B),

    and term by term w(I) w(J; AB) = w(I'; A) w(J'; B) with (I', J') the
    swapped pair.  X = supp A, Y = supp B must be further than 2R apart
    (otherwise the event never holds and the check is vacuous).
    """
    geo = spec.geometry
    X, Y = A.region, B.region
    if set_distance(X, Y) <= 2 * geo.R:
        raise ValueError("supports of A and B must be further than 2R apart")
    inter = interior(spec.sites, geo)
    if len(inter) > MAX_SWEEP_INTERIOR:
        raise ValueError(
            f"interior of size {len(inter)} exceeds the sweep cap {MAX_SWEEP_INTERIOR}"
        )
    AB = _product_observable(A, B, spec.q)

    configs = [
        Region(c)
        for k in range(len(inter) + 1)
        for c in itertools.combinations(inter, k)
    ]
    w = {c: _weight_hp(c, spec, beta) for c in configs}
    wa = {c: _observable_weight_hp(c, A, spec, beta) for c in configs}
    wb = {c: _observable_weight_hp(c, B, spec, beta) for c in configs}
    wab = {c: _observable_weight_hp(c, AB, spec, beta) for c in configs}

    lhs = np.longdouble(0.0)
    rhs = np.longdouble(0.0)
    per_pair_max = 0.0
    n_pairs = 0
    for I in configs:
        for J in configs:
            dec = supercluster_decompose([I, J, X, Y], geo.R)
            if not dec.in_different_components(X, Y):
                continue
            n_pairs += 1
            lhs += w[I] * wab[J]
            rhs += wa[I] * wb[J]
            I2, J2 = swap_configurations(I, J, X, Y, geo.R)
            I3, J3 = swap_configurations(I2, J2, X, Y, geo.R)
            if (I3, J3) != (I, J):
                raise AssertionError("swap failed to be an involution")
            per_pair_max = max(
                per_pair_max, _rel(w[I] * wab[J], wa[I2] * wb[J2])
            )
    return SwapCheck(
        lhs=float(lhs),
        rhs=float(rhs),
        rel_residual=_rel(lhs, rhs),
        per_pair_max=per_pair_max,
        n_event_pairs=n_pairs,
        n_configs=len(configs),
    )


# ---------------------------------------------------------------------------
# supercluster class resummation
# ---------------------------------------------------------------------------

def _interacting_partition(
    region: Region, spec: HamiltonianSpec, beta: float
) -> np.longdouble:
    """Z over a region, as a longdouble sum over double-precision eigenvalues.

    No extended-precision solve here: a partition function is a sum of
    positive terms, so unlike the alternating weight sums it carries no
    cancellation and LAPACK doubles already give ~1e-15 relative accuracy.
    """
    if len(region) == 0:
        return np.longdouble(1.0)
    _, _, H = build_restricted(spec, region)
    w = herm_eig(H.matrix).eigenvalues
    return np.exp(-np.longdouble(beta) * w).sum()


@dataclass(frozen=True)
class SuperclusterCheck:
    lhs_weight: float
    rhs_weight: float
    rel_residual_weight: float
    lhs_observable: float
    rhs_observable: float
    rel_residual_observable: float
    ratio: float
    n_class_pairs: int


def verify_supercluster_resummation(
    I0: Region,
    J0: Region,
    A: GlobalOperator,
    B: GlobalOperator,
    spec: HamiltonianSpec,
    beta: float,
) -> SuperclusterCheck:
    """Resum the class of pairs whose supercluster through X, Y is exactly S0.

    S0 = I0 + J0 + X + Y must be R-connected.  The class consists of pairs
    (I0 + I', J0 + J') with I', J' ranging over configurations in the
    interior of the reduced lattice L' = L - closure(S0); interior separation
    keeps every added site non-R-connected to S0, so the class is exactly
    the set of pairs with X- and Y-supercluster S0.  Two identities are
    checked, one weighting J with the product AB, one splitting A and B:

        sum w(I) w(J; AB) = w(I0) w(J0; AB) (Z_{L'} / Z0_{L'})^2
        sum w(I; A) w(J; B) = w(I0; A) w(J0; B) (Z_{L'} / Z0_{L'})^2
    """
    geo = spec.geometry
    X, Y = A.region, B.region
    S0 = I0 | J0 | X | Y
    if not r_connected_set(S0, geo.R):
        raise ValueError("I0 + J0 + X + Y must be a single R-connected cluster")
    inter = interior(spec.sites, geo)
    if not (I0.issubset(inter) and J0.issubset(inter)):
        raise ValueError("I0 and J0 must lie in the lattice interior")
    lattice_rest = spec.sites - closure(S0, geo)
    geo_rest = LatticeGeometry(D=geo.D, R=geo.R, sites=lattice_rest)
    inter_rest = interior(lattice_rest, geo_rest)
    if len(inter_rest) > MAX_SWEEP_INTERIOR:
        raise ValueError(
            f"restricted interior of size {len(inter_rest)} exceeds the cap "
            f"{MAX_SWEEP_INTERIOR}"
        )
    AB = _product_observable(A, B, spec.q)

    addons = [
        Region(c)
        for k in range(len(inter_rest) + 1)
        for c in itertools.combinations(inter_rest, k)
    ]
    lhs_w = np.longdouble(0.0)
    lhs_o = np.longdouble(0.0)
    n_pairs = 0
    for Iadd in addons:
        I = I0 | Iadd
        wI = _weight_hp(I, spec, beta)
        waI = _observable_weight_hp(I, A, spec, beta)
        for Jadd in addons:
            J = J0 | Jadd
            dec = supercluster_decompose([I, J, X, Y], geo.R)
            if dec.component_of(X[0]) != S0:
                raise AssertionError("class member lost the supercluster S0")
            n_pairs += 1
            lhs_w += wI * _observable_weight_hp(J, AB, spec, beta)
            lhs_o += waI * _observable_weight_hp(J, B, spec, beta)

    ratio = _interacting_partition(lattice_rest, spec, beta) / _free_partition(
        lattice_rest, spec, beta
    )
    rhs_w = _weight_hp(I0, spec, beta) * _observable_weight_hp(J0, AB, spec, beta) * ratio**2
    rhs_o = (
        _observable_weight_hp(I0, A, spec, beta)
        * _observable_weight_hp(J0, B, spec, beta)
        * ratio**2
    )
    return SuperclusterCheck(
        lhs_weight=float(lhs_w),
        rhs_weight=float(rhs_w),
        rel_residual_weight=_rel(lhs_w, rhs_w),
        lhs_observable=float(lhs_o),
        rhs_observable=float(rhs_o),
        rel_residual_observable=_rel(lhs_o, rhs_o),
        ratio=float(ratio),
        n_class_pairs=n_pairs,
    )


# ---------------------------------------------------------------------------
# partition ratios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartitionRatio:
    ratio: float
    bound: float
    bound_ok: bool
    split_product_le_full: bool  # Z_{L - cl S} * Z_{cl S} <= Z_L
    free_le_power: bool  # Z0_{cl S} <= q^{|cl S|}
    interacting_ge_one: bool  # Z_{cl S} >= 1
    cl_size: int


def partition_ratio(S: Region, spec: HamiltonianSpec, beta: float) -> PartitionRatio:
    """Z_{L - cl S} Z0_{cl S} / Z_L and the chain of bounds certifying it.

    Valid for specs whose interactions are all negative semidefinite (apply
    normalize_nonpositive first): dropping nonpositive interactions can only
    raise energies, hence lower partition functions -- that gives
    Z_{L - cl S} Z_{cl S} <= Z_L; combined with Z_{cl S} >= 1 (zero ground
    energy) and Z0_{cl S} <= q^{|cl S|} <= (q^{(2R+1)^D})^{|S|} the ratio is
    bounded by C^{|S|} with C = q^{(2R+1)^D}.
    """
    geo = spec.geometry
    if not r_connected_set(S, geo.R):
        raise ValueError("S must be R-connected")
    if not S.issubset(spec.sites):
        raise ValueError("S must lie inside the lattice")
    if not is_nonpositive(spec):
        raise ValueError(
            "partition ratio bounds require nonpositive interactions; "
            "apply normalize_nonpositive first"
        )
    cl = closure(S, geo)
    rest = spec.sites - cl

    z_rest = _interacting_partition(rest, spec, beta)
    z_cl = _interacting_partition(cl, spec, beta)
    z_full = _interacting_partition(spec.sites, spec, beta)
    z0_cl = _free_partition(cl, spec, beta)

    ratio = float(z_rest * z0_cl / z_full)
    C = spec.q ** ((2 * geo.R + 1) ** geo.D)
    bound = float(C ** len(S))
    slack = 1e-9
    return PartitionRatio(
        ratio=ratio,
        bound=bound,
        bound_ok=ratio <= bound * (1 + slack),
        split_product_le_full=float(z_rest * z_cl) <= float(z_full) * (1 + slack),
        free_le_power=float(z0_cl) <= spec.q ** len(cl) * (1 + slack),
        interacting_ge_one=float(z_cl) >= 1 - slack,
        cl_size=len(cl),
    )


# ---------------------------------------------------------------------------
# combinatorial identity and covariance reconstruction
# ---------------------------------------------------------------------------

def subset_sum_identity_check(F_size: int, p: float) -> tuple[float, float]:
    """Explicit sum_{E subset F} p^|E| against the closed form (1+p)^|F|.

    The left side really iterates all 2^F_size subsets (capped at 20).
    """
    if F_size < 0 or F_size > 20:
        raise ValueError("F_size must be between 0 and 20")
    lhs = np.longdouble(0.0)
    for mask in range(1 << F_size):
        lhs += np.longdouble(p) ** bin(mask).count("1")
    return float(lhs), float((1.0 + p) ** F_size)


def covariance_from_expansion(
    spec: HamiltonianSpec, A: GlobalOperator, B: GlobalOperator, beta: float
) -> float:
    """Reconstruct Cov(A, B) from configuration weights alone.

    Cov = (Z0/Z)^2 * sum_{I,J} [w(I) w(J; AB) - w(I; A) w(J; B)]; the double
    sum factorizes into products of single sums, which is how it is
    evaluated.  Exact for any lattice small enough to enumerate.
    """
    geo = spec.geometry
    inter = interior(spec.sites, geo)
    if len(inter) > MAX_SWEEP_INTERIOR:
        raise ValueError(
            f"interior of size {len(inter)} exceeds the sweep cap {MAX_SWEEP_INTERIOR}"
        )
    AB = _product_observable(A, B, spec.q)
    configs = [
        Region(c)
        for k in range(len(inter) + 1)
        for c in itertools.combinations(inter, k)
    ]
    sum_w = np.longdouble(0.0)
    sum_a = np.longdouble(0.0)
    sum_b = np.longdouble(0.0)
    sum_ab = np.longdouble(0.0)
    for c in configs:
        sum_w += _weight_hp(c, spec, beta)
        sum_a += _observable_weight_hp(c, A, spec, beta)
        sum_b += _observable_weight_hp(c, B, spec, beta)
        sum_ab += _observable_weight_hp(c, AB, spec, beta)
    z_full = _interacting_partition(spec.sites, spec, beta)
    z_free = _free_partition(spec.sites, spec, beta)
    scale = (z_free / z_full) ** 2
    return float(scale * (sum_w * sum_ab - sum_a * sum_b))
