"""Hamiltonian classes: gapped on-site parts plus form-bounded interactions.

The models treated here have H = H0 + V with H0 = sum_z h_z strictly local,
every h_z positive semidefinite with a simple ground state at energy exactly
zero and spectral gap >= 1, and V = sum_x v_x where v_x is supported on the
radius-R ball around its center x (only centers whose ball lies inside the
lattice contribute).  Each interaction carries a certified relative form
bound:

    |<psi, v_x psi>| <= (a / (2R+1)^D) <psi, H0_{B_R(x)} psi>,

and the certificate is computed, not assumed: the generalized eigenproblem
of v against K = H0_ball / (2R+1)^D is solved exactly on the complement of
ker K, after checking that v annihilates the kernel (a nonzero kernel block
would make no finite constant work, and physically it couples the
unperturbed ground state to itself or to excited states).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .algebra import GlobalOperator, embed, herm_eig, op_norm
from .lattice import LatticeGeometry, Region, Site, ball, chain_geometry, l1_distance

# single-site operator basis (q = 2)
SIGMA0 = np.eye(2, dtype=complex)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA = (SIGMA0, SIGMA1, SIGMA2, SIGMA3)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
NUMBER = np.diag([0.0, 1.0]).astype(complex)  # N = (1 - sigma3)/2

PAULI_BY_NAME = {"I": SIGMA0, "X": SIGMA1, "Y": SIGMA2, "Z": SIGMA3, "N": NUMBER}

KERNEL_TOL = 1e-12


class CertificationError(ValueError):
    """Raised when an interaction admits no valid relative form bound."""

    def __init__(self, message: str, center: Site | None = None):
        super().__init__(message)
        self.center = center


class CouplingRangeError(ValueError):
    """A two-site coupling reaches farther than the declared radius R."""


@dataclass(frozen=True)
class GapCheck:
    ok: bool
    ground_energy: float
    gap: float
    ground_degeneracy: int


def gap_check(h: np.ndarray, tol: float = 1e-9) -> GapCheck:
    """Check one on-site term: PSD, simple ground state at 0, gap >= 1."""
    w = herm_eig(h).eigenvalues
    e0 = float(w[0])
    degeneracy = int(np.sum(w <= e0 + tol))
    gap = float(w[degeneracy] - e0) if len(w) > degeneracy else np.inf
    ok = abs(e0) <= tol and degeneracy == 1 and gap >= 1 - tol
    return GapCheck(ok=ok, ground_energy=e0, gap=gap, ground_degeneracy=degeneracy)


@dataclass(frozen=True)
class InteractionTerm:
    """One interaction v_x: a Hermitian operator on ``support`` centered at x."""

    center: Site
    support: Region
    matrix: np.ndarray


@dataclass
class HamiltonianSpec:
    """A lattice, on-site terms, certified interactions, and their metadata.

    ``a`` is the certified form-bound constant (max over interaction
    centers), ``h_sup``/``v_sup`` the largest operator norms among the
    on-site and interaction terms.
    """

    geometry: LatticeGeometry
    q: int
    onsite: dict[Site, np.ndarray]
    interactions: dict[Site, InteractionTerm]
    a: float
    h_sup: float
    v_sup: float
    model: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def sites(self) -> Region:
        return self.geometry.sites


def certify_form_bound(
    interaction: InteractionTerm,
    onsite: Mapping[Site, np.ndarray],
    geometry: LatticeGeometry,
    q: int,
) -> float:
    """Minimal a' >= 0 with -a'K <= v <= a'K, K = H0_ball / (2R+1)^D.

    The ball Hamiltonian is diagonalized; eigenvectors with eigenvalue below
    KERNEL_TOL (relative to the top of the spectrum) span ker K.  v must
    vanish on ker K and between ker K and its complement -- otherwise no
    constant exists and certification fails.  On the complement the optimal
    constant is the largest |eigenvalue| of D^{-1/2} U* v U D^{-1/2}.
    """
    x = interaction.center
    B = ball(x, geometry.R, geometry)
    full_ball = ball(x, geometry.R, geometry, clip=False)
    if len(B) != len(full_ball):
        raise CertificationError(
            f"interaction ball around {x} sticks out of the lattice", center=x
        )
    if not interaction.support.issubset(B):
        raise CertificationError(
            f"interaction at {x} is supported outside its radius-R ball", center=x
        )
    card = (2 * geometry.R + 1) ** geometry.D
    dim = q ** len(B)
    H0B = np.zeros((dim, dim), dtype=complex)
    for z in B:
        H0B += embed(onsite[z], Region([z]), B, q).matrix
    K = H0B / card
    V = embed(interaction.matrix, interaction.support, B, q).matrix

    eig = herm_eig(K)
    w, U = eig.eigenvalues, eig.eigenvectors
    ktol = KERNEL_TOL * max(1.0, float(w[-1]))
    n0 = int(np.sum(w <= ktol))
    W = U.conj().T @ V @ U
    vtol = KERNEL_TOL * max(1.0, op_norm(V))
    if n0 > 0:
        kk = np.max(np.abs(W[:n0, :n0]))
        kr = np.max(np.abs(W[:n0, n0:])) if n0 < dim else 0.0
        if kk > vtol or kr > vtol:
            raise CertificationError(
                f"interaction at {x} does not vanish on the ground sector of its "
                f"ball (kernel block {kk:.2e}, cross block {kr:.2e})",
                center=x,
            )
    if n0 == dim:
        return 0.0
    d_inv = 1.0 / np.sqrt(w[n0:])
    Wt = (W[n0:, n0:] * d_inv[None, :]) * d_inv[:, None]
    Wt = (Wt + Wt.conj().T) / 2
    return float(np.max(np.abs(np.linalg.eigvalsh(Wt))))


def make_spec(
    geometry: LatticeGeometry,
    q: int,
    onsite: Mapping[Site, np.ndarray],
    interactions: Mapping[Site, InteractionTerm],
    model: str = "custom",
    params: dict | None = None,
) -> HamiltonianSpec:
    """Assemble and certify a spec: gap checks, form bounds, metadata."""
    for z in geometry.sites:
        if z not in onsite:
            raise ValueError(f"missing on-site term at {z}")
        chk = gap_check(onsite[z])
        if not chk.ok:
            raise ValueError(
                f"on-site term at {z} violates the gap condition: "
                f"ground energy {chk.ground_energy:.2e}, gap {chk.gap:.3f}, "
                f"degeneracy {chk.ground_degeneracy}"
            )
    a = 0.0
    for x, term in interactions.items():
        if term.center != x:
            raise ValueError("interaction dict key must equal the term center")
        a = max(a, certify_form_bound(term, onsite, geometry, q))
    if a >= 1:
        raise CertificationError(f"certified constant a = {a:.4f} is not below 1")
    h_sup = max((op_norm(h) for h in onsite.values()), default=0.0)
    v_sup = max((op_norm(t.matrix) for t in interactions.values()), default=0.0)
    return HamiltonianSpec(
        geometry=geometry,
        q=q,
        onsite=dict(onsite),
        interactions=dict(interactions),
        a=float(a),
        h_sup=float(h_sup),
        v_sup=float(v_sup),
        model=model,
        params=dict(params or {}),
    )


# ---------------------------------------------------------------------------
# anisotropic nearest-neighbour spin chain / lattice builder
# ---------------------------------------------------------------------------

def _pair_key(x: Site, y: Site) -> tuple[Site, Site]:
    return (x, y) if x <= y else (y, x)


def _coupling_map(values, sites: Region, R: int, hermitian: bool) -> dict:
    """Normalize scalar or per-pair coupling input to {ordered pair: value}.

    A scalar J means J on every ordered pair at l1 distance exactly 1
    (nearest neighbours), zero elsewhere.
    """
    if values is None:
        return {}
    if np.isscalar(values):
        J = complex(values)
        if J == 0:
            return {}
        out = {}
        for x in sites:
            for y in sites:
                if l1_distance(x, y) == 1:
                    out[(x, y)] = J
        return out
    out = {}
    for entry in values.items() if isinstance(values, dict) else values:
        if isinstance(values, dict):
            (x, y), val = entry
        else:
            x, y, re, im = entry
            val = complex(re, im)
        x = (x,) if isinstance(x, int) else tuple(x)
        y = (y,) if isinstance(y, int) else tuple(y)
        out[(x, y)] = complex(val)
    for (x, y), val in out.items():
        if x == y:
            raise ValueError(f"coupling on the diagonal pair ({x}, {x}) is not allowed")
        partner = out.get((y, x), 0.0)
        expected = np.conj(val) if hermitian else val
        if abs(partner - expected) > 1e-12 * max(1.0, abs(val)):
            raise ValueError(f"coupling map is not symmetric on pair ({x}, {y})")
    return out


def xxz_spec(
    extent,
    lam: float = 0.0,
    seed: int = 0,
    J12=0.0,
    J3=0.0,
    R: int = 1,
) -> HamiltonianSpec:
    """Random-field anisotropic spin model on a chain or explicit region.

    On-site terms h_z = (1 + lam * omega_z) N_z with omega_z drawn uniformly
    from [0, 1), one draw per site in canonical order from a seeded PCG64
    stream.  Interactions collect, for every unordered pair {x, y} inside
    some radius-R ball,

        (J12(x,y) + J12(y,x)) (sp_x sm_y + sm_x sp_y)
      + (J3(x,y) + J3(y,x)) N_x N_y,

    assigned to the lexicographically smaller endpoint as center.  Pairs
    whose center ball sticks out of the lattice are omitted (open-boundary
    convention: the interaction sum runs over interior centers only).
    Couplings between sites farther than R apart raise CouplingRangeError.
    """
    if isinstance(extent, LatticeGeometry):
        geometry = extent
    elif isinstance(extent, int):
        geometry = chain_geometry(extent, R)
    else:
        geometry = LatticeGeometry(D=len(next(iter(extent))), R=R, sites=Region(extent))
    sites = geometry.sites

    rng = np.random.default_rng(seed)
    omega = rng.random(len(sites))
    onsite = {
        z: (1.0 + lam * float(omega[i])) * NUMBER for i, z in enumerate(sites)
    }

    j12 = _coupling_map(J12, sites, geometry.R, hermitian=True)
    j3 = _coupling_map(J3, sites, geometry.R, hermitian=False)

    hop = np.kron(SIGMA_PLUS, SIGMA_MINUS) + np.kron(SIGMA_MINUS, SIGMA_PLUS)
    nn = np.kron(NUMBER, NUMBER)
    pair_terms: dict[tuple[Site, Site], np.ndarray] = {}
    for (x, y) in set(j12) | set(j3):
        key = _pair_key(x, y)
        if key in pair_terms:
            continue
        d = l1_distance(*key)
        if d > geometry.R:
            raise CouplingRangeError(
                f"pair {key} at distance {d} exceeds the interaction radius {geometry.R}"
            )
        c12 = j12.get(key, 0.0) + j12.get(key[::-1], 0.0)
        c3 = j3.get(key, 0.0) + j3.get(key[::-1], 0.0)
        if abs(c12.imag) > 1e-14 or abs(complex(c3).imag) > 1e-14:
            raise ValueError("assembled pair coefficients must be real")
        # legs of the 4x4 blocks follow canonical order, i.e. key[0] first
        pair_terms[key] = c12.real * hop + complex(c3).real * nn

    interactions: dict[Site, InteractionTerm] = {}
    for (x, y), mat in sorted(pair_terms.items()):
        center = x  # lexicographically smaller endpoint
        full_ball = ball(center, geometry.R, geometry, clip=False)
        if not full_ball.issubset(sites):
            continue  # boundary pair: no interior center owns it
        pair_region = Region([x, y])
        if center in interactions:
            old = interactions[center]
            support = old.support | pair_region
            m = embed(old.matrix, old.support, support, 2).matrix + embed(
                mat, pair_region, support, 2
            ).matrix
            interactions[center] = InteractionTerm(center, support, m)
        else:
            interactions[center] = InteractionTerm(center, pair_region, mat)

    params = {
        "lambda": lam,
        "seed": seed,
        "J12": J12 if np.isscalar(J12) else sorted((x, y, v.real, v.imag) for (x, y), v in j12.items()),
        "J3": J3 if np.isscalar(J3) else sorted((x, y, v.real, v.imag) for (x, y), v in j3.items()),
    }
    return make_spec(geometry, 2, onsite, interactions, model="xxz", params=params)


# ---------------------------------------------------------------------------
# restriction and normalization
# ---------------------------------------------------------------------------

def build_restricted(spec: HamiltonianSpec, S: Region):
    """(H0_S, V_S, H_S) on S: all on-site terms in S, interactions with ball in S."""
    if not S.issubset(spec.sites):
        raise ValueError("restriction region is not contained in the lattice")
    q = spec.q
    dim = q ** len(S)
    H0 = np.zeros((dim, dim), dtype=complex)
    for z in S:
        H0 += embed(spec.onsite[z], Region([z]), S, q).matrix
    V = np.zeros((dim, dim), dtype=complex)
    for x, term in spec.interactions.items():
        if ball(x, spec.geometry.R, spec.geometry).issubset(S):
            V += embed(term.matrix, term.support, S, q).matrix
    return (
        GlobalOperator(S, q, H0),
        GlobalOperator(S, q, V),
        GlobalOperator(S, q, H0 + V),
    )


def interaction_centers(spec: HamiltonianSpec, S: Region) -> Region:
    """Centers whose interaction survives restriction to S."""
    return Region(
        x
        for x in spec.interactions
        if ball(x, spec.geometry.R, spec.geometry).issubset(S)
    )


def is_nonpositive(spec: HamiltonianSpec, tol: float = 1e-12) -> bool:
    """True iff every interaction term is negative semidefinite."""
    for term in spec.interactions.values():
        w = herm_eig(term.matrix).eigenvalues
        if float(w[-1]) > tol * max(1.0, abs(float(w[0]))):
            return False
    return True


def normalize_nonpositive(spec: HamiltonianSpec) -> HamiltonianSpec:
    """Rewrite H = H0' + V' with every interaction negative semidefinite.

    Subtracting the form bound makes each interaction nonpositive:
    v'_x = v_x - atilde * H0_{B_R(x)} with atilde = a / (2R+1)^D.  The
    on-site terms absorb the subtraction: h'_z = (1 + atilde * m_z) h_z,
    where m_z counts the interaction balls containing z, so the total
    Hamiltonian is unchanged identically (in the bulk of a regular lattice
    m_z is the full ball cardinality; near the boundary the multiplicity
    correction keeps the identity exact).  Gap and zero ground energy of the
    on-site terms survive since 1 + atilde * m_z >= 1, and the recertified
    constant obeys a_new <= 2 atilde (2R+1)^D / (1 + atilde).
    """
    if not spec.interactions:
        return spec
    geometry, q = spec.geometry, spec.q
    card = (2 * geometry.R + 1) ** geometry.D
    atilde = spec.a / card

    mult = {z: 0 for z in spec.sites}
    for x in spec.interactions:
        for z in ball(x, geometry.R, geometry):
            mult[z] += 1
    onsite = {z: (1.0 + atilde * mult[z]) * h for z, h in spec.onsite.items()}

    interactions = {}
    for x, term in spec.interactions.items():
        B = ball(x, geometry.R, geometry)
        dim = q ** len(B)
        ball_h0 = np.zeros((dim, dim), dtype=complex)
        for z in B:
            ball_h0 += embed(spec.onsite[z], Region([z]), B, q).matrix
        m = embed(term.matrix, term.support, B, q).matrix - atilde * ball_h0
        interactions[x] = InteractionTerm(x, B, m)

    params = dict(spec.params)
    params["normalized_from_a"] = spec.a
    return make_spec(geometry, q, onsite, interactions, model="custom", params=params)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, complex)]


def _matrix_from_json(data) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data])


def spec_to_json(spec: HamiltonianSpec) -> dict:
    out = {
        "D": spec.geometry.D,
        "R": spec.geometry.R,
        "q": spec.q,
        "lattice": spec.sites.to_json(),
        "model": spec.model,
    }
    if spec.model == "xxz":
        out.update(
            {
                "lambda": spec.params.get("lambda", 0.0),
                "seed": spec.params.get("seed", 0),
                "J12": spec.params.get("J12", 0.0),
                "J3": spec.params.get("J3", 0.0),
            }
        )
    else:
        out["onsite"] = [[list(z), _matrix_to_json(h)] for z, h in sorted(spec.onsite.items())]
        out["interactions"] = [
            [list(x), t.support.to_json(), _matrix_to_json(t.matrix)]
            for x, t in sorted(spec.interactions.items())
        ]
    return out


def spec_from_json(data: dict) -> HamiltonianSpec:
    geometry = LatticeGeometry(
        D=int(data["D"]), R=int(data["R"]), sites=Region.from_json(data["lattice"])
    )
    model = data.get("model", "xxz")
    if model == "xxz":
        return xxz_spec(
            geometry,
            lam=float(data.get("lambda", 0.0)),
            seed=int(data.get("seed", 0)),
            J12=data.get("J12", 0.0),
            J3=data.get("J3", 0.0),
            R=geometry.R,
        )
    q = int(data["q"])
    onsite = {tuple(z): _matrix_from_json(h) for z, h in data["onsite"]}
    interactions = {}
    for x, support, m in data["interactions"]:
        x = tuple(x)
        interactions[x] = InteractionTerm(x, Region.from_json(support), _matrix_from_json(m))
    return make_spec(geometry, q, onsite, interactions, model="custom")


def spec_dumps(spec: HamiltonianSpec) -> str:
    return json.dumps(spec_to_json(spec), sort_keys=True)
