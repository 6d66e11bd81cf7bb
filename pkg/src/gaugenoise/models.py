"""Lattice gauge theory models on a periodic matter-link chain.

Two theories are provided on the same layout, a ring of L matter sites with
one link between each neighboring pair (tensor factors ordered site 1,
link (1,2), site 2, ..., site L, link (L,1)):

* U(1) quantum link model with spin-1/2 links,
      H0 = sum_j [ J (sm_j splus_{j,j+1} sm_{j+1} + h.c.) + (mu/2) sz_j ],
  Gauss-law generators G_j = (-1)^j (sz_{j-1,j} + sz_{j,j+1} + (sz_j + 1)/2)
  with target sector g_j = 0 everywhere.

* Z2 gauge theory with hard-core (or truncated-boson) matter,
      H0 = J sum_j (adag_j tz_{j,j+1} a_{j+1} + h.c.) - h sum_j tx_{j,j+1},
  generators G_j = (-1)^{n_j} tx_{j-1,j} tx_{j,j+1}, target g_j = +1, and
  simplified local pseudogenerators W_j = tx_{j-1,j} tx_{j,j+1} + 2 g_j^tar n_j
  whose g_j^tar eigenspace coincides with that of G_j.

Z2 links are stored in the electric-field (tau^x) eigenbasis, so tau^x is
diagonal and tau^z flips the field. Every generator is then diagonal in the
computational product basis, which the sector bookkeeping below relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .operators import (
    CapacityError,
    MAX_HILBERT_DIM,
    PAULI_X,
    PAULI_Z,
    commutator_norm,
    kron_all,
    require_hermitian,
)

SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
S_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
S_Z = PAULI_Z / 2.0

# Z2 link operators in the electric-field eigenbasis
TAU_X = PAULI_Z.copy()
TAU_Z = PAULI_X.copy()

COMMUTATOR_TOL = 1e-10
ENUMERATION_LIMIT = 10_000_000


class SectorConstraintError(ValueError):
    """No state with the requested occupations exists in the target sector."""


class UnsupportedObservableError(ValueError):
    """Observable is not defined for this model."""


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic matter-link ring. Factor order: site 1, link (1,2), site 2, ..."""

    sites: int
    matter_dim: int = 2
    link_dim: int = 2

    def __post_init__(self):
        if self.sites < 2 or self.sites % 2 != 0:
            raise ValueError(f"need an even number of sites >= 2, got {self.sites}")
        if self.matter_dim < 2 or self.link_dim < 2:
            raise ValueError("local dimensions must be at least 2")

    @property
    def n_factors(self) -> int:
        return 2 * self.sites

    @property
    def local_dims(self) -> list[int]:
        return [self.matter_dim, self.link_dim] * self.sites

    @property
    def dim(self) -> int:
        return (self.matter_dim * self.link_dim) ** self.sites

    def site_factor(self, j: int) -> int:
        """Tensor-factor index of matter site j (1-based, periodic)."""
        return 2 * ((j - 1) % self.sites)

    def link_factor(self, j: int) -> int:
        """Tensor-factor index of link (j, j+1) (1-based, periodic)."""
        return 2 * ((j - 1) % self.sites) + 1


@dataclass(frozen=True)
class ProtectionSpec:
    """Linear protection term V sum_j c_j O_j with exact rational weights c_j."""

    strength: float
    sequence: tuple[Fraction, ...]
    generator_kind: str = "full"  # "full" uses G_j, "pseudo" uses W_j

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError(f"protection strength must be >= 0, got {self.strength}")
        if self.generator_kind not in ("full", "pseudo"):
            raise ValueError(f"unknown generator kind {self.generator_kind!r}")
        for c in self.sequence:
            if not isinstance(c, (Fraction, int)):
                raise ValueError(
                    "protection sequences must be exact rationals "
                    f"(Fraction or int), got {type(c).__name__}"
                )
        object.__setattr__(
            self, "sequence", tuple(Fraction(c) for c in self.sequence)
        )


@dataclass
class ModelSystem:
    """A concrete model: Hamiltonian, generators, target sector, protection."""

    kind: str
    lattice: LatticeSpec
    params: dict
    hamiltonian: np.ndarray
    generators: list[np.ndarray]
    target: list[int]
    pseudogenerators: list[np.ndarray] | None = None
    protection: ProtectionSpec | None = None
    protection_term: np.ndarray | None = field(default=None, repr=False)

    def system_hamiltonian(self) -> np.ndarray:
        """H0 plus the protection term, the generator of coherent dynamics."""
        if self.protection_term is None:
            return self.hamiltonian
        return self.hamiltonian + self.protection_term

    def protection_generators(self) -> list[np.ndarray]:
        if self.protection is not None and self.protection.generator_kind == "pseudo":
            if self.pseudogenerators is None:
                raise ValueError("model has no pseudogenerators")
            return self.pseudogenerators
        return self.generators


def _embed(lattice: LatticeSpec, placed: dict[int, np.ndarray]) -> np.ndarray:
    factors = [np.eye(d, dtype=complex) for d in lattice.local_dims]
    for pos, op in placed.items():
        factors[pos] = op
    return kron_all(factors, max_dim=max(lattice.dim, MAX_HILBERT_DIM))


def _check_capacity(lattice: LatticeSpec, max_dim: int) -> None:
    if lattice.dim > max_dim:
        raise CapacityError(
            f"lattice dimension {lattice.dim} exceeds maximum {max_dim}"
        )


def build_protection_term(ops: list[np.ndarray], spec: ProtectionSpec) -> np.ndarray:
    if len(spec.sequence) != len(ops):
        raise ValueError(
            f"sequence length {len(spec.sequence)} does not match {len(ops)} generators"
        )
    out = np.zeros_like(ops[0])
    for c, op in zip(spec.sequence, ops):
        out = out + (spec.strength * float(c)) * op
    return out


def build_u1_qlm(
    sites: int,
    coupling: float = 1.0,
    mass: float = 0.5,
    protection: ProtectionSpec | None = None,
    max_dim: int = MAX_HILBERT_DIM,
) -> ModelSystem:
    """U(1) quantum link model with spin-1/2 gauge links on a periodic chain."""
    lattice = LatticeSpec(sites=sites)
    _check_capacity(lattice, max_dim)
    dim = lattice.dim
    h0 = np.zeros((dim, dim), dtype=complex)
    for j in range(1, sites + 1):
        hop = _embed(
            lattice,
            {
                lattice.site_factor(j): SIGMA_MINUS,
                lattice.link_factor(j): S_PLUS,
                lattice.site_factor(j + 1): SIGMA_MINUS,
            },
        )
        h0 += coupling * (hop + hop.conj().T)
        h0 += (mass / 2.0) * _embed(lattice, {lattice.site_factor(j): PAULI_Z})
    generators = build_u1_generators(lattice)
    model = ModelSystem(
        kind="u1_qlm",
        lattice=lattice,
        params={"coupling": coupling, "mass": mass},
        hamiltonian=require_hermitian(h0, name="u1 hamiltonian"),
        generators=generators,
        target=[0] * sites,
        protection=protection,
    )
    if protection is not None:
        model.protection_term = build_protection_term(
            model.protection_generators(), protection
        )
    return model


def build_u1_generators(lattice: LatticeSpec) -> list[np.ndarray]:
    """Gauss-law generators G_j = (-1)^j (sz_{j-1,j} + sz_{j,j+1} + (sz_j+1)/2)."""
    charge = (PAULI_Z + np.eye(2)) / 2.0
    out = []
    for j in range(1, lattice.sites + 1):
        sign = -1.0 if j % 2 == 1 else 1.0
        g = sign * (
            _embed(lattice, {lattice.link_factor(j - 1): S_Z})
            + _embed(lattice, {lattice.link_factor(j): S_Z})
            + _embed(lattice, {lattice.site_factor(j): charge})
        )
        out.append(g)
    return out


def _z2_matter_ops(n_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Annihilator, number operator and (-1)^n parity for truncated bosons."""
    d = n_max + 1
    a = np.zeros((d, d), dtype=complex)
    for k in range(1, d):
        a[k - 1, k] = np.sqrt(k)
    number = np.diag(np.arange(d, dtype=float)).astype(complex)
    parity = np.diag((-1.0) ** np.arange(d)).astype(complex)
    return a, number, parity


def build_z2_lgt(
    sites: int,
    coupling: float = 1.0,
    field_h: float = 0.54,
    n_max: int = 1,
    protection: ProtectionSpec | None = None,
    max_dim: int = MAX_HILBERT_DIM,
) -> ModelSystem:
    """Z2 gauge theory with truncated-boson matter (hard core by default)."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    lattice = LatticeSpec(sites=sites, matter_dim=n_max + 1)
    _check_capacity(lattice, max_dim)
    a, _, _ = _z2_matter_ops(n_max)
    dim = lattice.dim
    h0 = np.zeros((dim, dim), dtype=complex)
    for j in range(1, sites + 1):
        hop = _embed(
            lattice,
            {
                lattice.site_factor(j): a.conj().T,
                lattice.link_factor(j): TAU_Z,
                lattice.site_factor(j + 1): a,
            },
        )
        h0 += coupling * (hop + hop.conj().T)
        h0 -= field_h * _embed(lattice, {lattice.link_factor(j): TAU_X})
    target = [1] * sites
    model = ModelSystem(
        kind="z2_lgt",
        lattice=lattice,
        params={"coupling": coupling, "field": field_h, "n_max": n_max},
        hamiltonian=require_hermitian(h0, name="z2 hamiltonian"),
        generators=build_z2_generators(lattice, n_max),
        target=target,
        pseudogenerators=build_z2_pseudogenerators(lattice, n_max, target),
        protection=protection,
    )
    if protection is not None:
        model.protection_term = build_protection_term(
            model.protection_generators(), protection
        )
    return model


def build_z2_generators(lattice: LatticeSpec, n_max: int = 1) -> list[np.ndarray]:
    """G_j = (-1)^{n_j} tx_{j-1,j} tx_{j,j+1}, diagonal with eigenvalues +-1."""
    _, _, parity = _z2_matter_ops(n_max)
    out = []
    for j in range(1, lattice.sites + 1):
        g = _embed(
            lattice,
            {
                lattice.site_factor(j): parity,
                lattice.link_factor(j - 1): TAU_X,
                lattice.link_factor(j): TAU_X,
            },
        )
        out.append(g)
    return out


def build_z2_pseudogenerators(
    lattice: LatticeSpec, n_max: int = 1, target: list[int] | None = None
) -> list[np.ndarray]:
    """Local pseudogenerators W_j = tx_{j-1,j} tx_{j,j+1} + 2 g_j^tar n_j.

    Within the target sector W_j and G_j share the g_j^tar eigenspace, but
    W_j needs only a two-body field product plus a one-body density term.
    """
    if target is None:
        target = [1] * lattice.sites
    _, number, _ = _z2_matter_ops(n_max)
    out = []
    for j in range(1, lattice.sites + 1):
        w = _embed(
            lattice,
            {
                lattice.link_factor(j - 1): TAU_X,
                lattice.link_factor(j): TAU_X,
            },
        ) + 2.0 * target[j - 1] * _embed(lattice, {lattice.site_factor(j): number})
        out.append(w)
    return out


def generator_site_values(model: ModelSystem, kind: str = "full") -> list[list[int]]:
    """Attainable eigenvalues of each protection generator, per site.

    For the U(1) model the sets are parity staggered: (-1)^j (s1 + s2 + n)
    reaches {-2,-1,0,1} on odd sites and {-1,0,1,2} on even sites. For Z2
    every site gives {-1, +1}; the quadratic local combination ("pseudo")
    reaches {-1, +1, +3} instead, sharing only the +1 target value.
    """
    if kind not in ("full", "pseudo"):
        raise ValueError(f"generator kind must be 'full' or 'pseudo', got {kind!r}")
    if model.kind == "u1_qlm":
        if kind == "pseudo":
            raise ValueError("the four-state-link model has no pseudogenerators")
        base = sorted({s1 + s2 + n for s1 in (-1, 1) for s2 in (-1, 1) for n in (0, 2)})
        base = [v // 2 for v in base]  # s in {-1/2,1/2}, n in {0,1} doubled above
        out = []
        for j in range(1, model.lattice.sites + 1):
            sign = -1 if j % 2 == 1 else 1
            out.append(sorted(sign * v for v in base))
        return out
    if model.kind == "z2_lgt":
        values = [-1, 1, 3] if kind == "pseudo" else [-1, 1]
        return [list(values) for _ in range(model.lattice.sites)]
    raise ValueError(f"unknown model kind {model.kind!r}")


@dataclass(frozen=True)
class ComplianceResult:
    compliant: bool
    witness: tuple[int, ...] | None
    tuples_checked: int


def check_sequence_compliance(
    sequence: tuple[Fraction, ...] | list[Fraction],
    site_values: list[list[int]],
    target: list[int],
    max_tuples: int = ENUMERATION_LIMIT,
) -> ComplianceResult:
    """Exhaustively test whether sum_j c_j (g_j - g_j^tar) = 0 forces g = target.

    All arithmetic is exact rational arithmetic; float sequences are rejected.
    Returns the first violating sector tuple (lexicographic order over the
    given per-site value sets) as a witness when the sequence is noncompliant.
    """
    if len(sequence) != len(site_values) or len(sequence) != len(target):
        raise ValueError("sequence, site value sets and target must have equal length")
    seq = []
    for c in sequence:
        if isinstance(c, float):
            raise ValueError("compliance checking needs exact rationals, not floats")
        seq.append(Fraction(c))
    total = 1
    for values in site_values:
        total *= len(values)
        if total > max_tuples:
            raise CapacityError(
                f"sector enumeration needs more than {max_tuples} tuples"
            )
    checked = 0
    tar = tuple(target)
    for g in product(*site_values):
        checked += 1
        if g == tar:
            continue
        acc = Fraction(0)
        for c, gj, tj in zip(seq, g, tar):
            acc += c * (Fraction(gj) - Fraction(tj))
        if acc == 0:
            return ComplianceResult(compliant=False, witness=g, tuples_checked=checked)
    return ComplianceResult(compliant=True, witness=None, tuples_checked=checked)


def sequence_preset(name: str, sites: int) -> tuple[Fraction, ...]:
    """Named protection-weight sequences; j runs 1..L."""
    if name == "paper-u1-compliant":
        if sites != 4:
            raise ValueError("the compliant U(1) sequence is defined for 4 sites")
        return (
            Fraction(-115, 122),
            Fraction(116, 122),
            Fraction(-118, 122),
            Fraction(122, 122),
        )
    if name == "staggered":
        return tuple(Fraction((-1) ** j) for j in range(1, sites + 1))
    if name == "paper-z2":
        return tuple(Fraction((-6) ** j + 5, 11) for j in range(1, sites + 1))
    raise ValueError(f"unknown sequence preset {name!r}")


def _basis_state(lattice: LatticeSpec, factor_indices: list[int]) -> np.ndarray:
    dims = lattice.local_dims
    idx = 0
    for d, i in zip(dims, factor_indices):
        idx = idx * d + i
    rho = np.zeros((lattice.dim, lattice.dim), dtype=complex)
    rho[idx, idx] = 1.0
    return rho


def initial_state(model: ModelSystem, name: str) -> np.ndarray:
    """Named product initial states as density matrices.

    u1_vacuum: all matter sites empty, electric field down on odd links and
    up on even links. u1_charge_proliferated: every site occupied, every
    field down. z2_cdw: occupations 1,0,1,0,... with the link fields solved
    from G_j = g_j^tar starting at link (L,1) = +1.
    """
    lattice = model.lattice
    if name == "u1_vacuum":
        if model.kind != "u1_qlm":
            raise UnsupportedObservableError(f"{name} needs the U(1) model")
        idx = []
        for j in range(1, lattice.sites + 1):
            idx.append(1)  # matter: sigma_z = -1
            idx.append(1 if j % 2 == 1 else 0)  # link: odd down, even up
        return _basis_state(lattice, idx)
    if name == "u1_charge_proliferated":
        if model.kind != "u1_qlm":
            raise UnsupportedObservableError(f"{name} needs the U(1) model")
        idx = []
        for j in range(1, lattice.sites + 1):
            idx.append(0)  # occupied: sigma_z = +1
            idx.append(1)  # field down
        return _basis_state(lattice, idx)
    if name == "z2_cdw":
        if model.kind != "z2_lgt":
            raise UnsupportedObservableError(f"{name} needs the Z2 model")
        occ = [1 if j % 2 == 1 else 0 for j in range(1, lattice.sites + 1)]
        parity = (-1) ** sum(occ)
        tar_prod = int(np.prod(model.target))
        if parity != tar_prod:
            raise SectorConstraintError(
                f"occupations {occ} have generator product {parity}, "
                f"target sector needs {tar_prod}; no such state exists"
            )
        tau = [0] * (lattice.sites + 1)  # tau[j] is the field on link (j, j+1)
        tau[lattice.sites] = 1
        tau[0] = tau[lattice.sites]
        for j in range(1, lattice.sites):
            tau[j] = model.target[j - 1] * ((-1) ** occ[j - 1]) * tau[j - 1]
        j = lattice.sites
        if model.target[j - 1] * ((-1) ** occ[j - 1]) * tau[j - 1] != tau[j]:
            raise SectorConstraintError("link constraint propagation is inconsistent")
        idx = []
        for j in range(1, lattice.sites + 1):
            idx.append(occ[j - 1])
            idx.append(0 if tau[j] == 1 else 1)  # tau^x eigenbasis: +1 is index 0
        return _basis_state(lattice, idx)
    raise ValueError(f"unknown initial state {name!r}")


def violation_operator(model: ModelSystem) -> np.ndarray:
    """Gauge-violation observable (1/L) sum_j (G_j - g_j^tar)^2, PSD."""
    lattice = model.lattice
    out = np.zeros((lattice.dim, lattice.dim), dtype=complex)
    eye = np.eye(lattice.dim, dtype=complex)
    for g, tar in zip(model.generators, model.target):
        d = g - tar * eye
        out += d @ d
    return out / lattice.sites


def condensate_operator(model: ModelSystem) -> np.ndarray:
    """Chiral condensate 1/2 + (1/2L) sum_j sz_j; defined for the U(1) model."""
    if model.kind != "u1_qlm":
        raise UnsupportedObservableError(
            f"condensate is not defined for model kind {model.kind!r}"
        )
    lattice = model.lattice
    out = 0.5 * np.eye(lattice.dim, dtype=complex)
    for j in range(1, lattice.sites + 1):
        out += _embed(lattice, {lattice.site_factor(j): PAULI_Z}) / (2.0 * lattice.sites)
    return out


def validate_model(model: ModelSystem, tol: float = COMMUTATOR_TOL) -> None:
    """Check the gauge structure: [H0, G_j] = 0 and a Hermitian protection term."""
    for j, g in enumerate(model.generators, start=1):
        c = commutator_norm(model.hamiltonian, g)
        if c > tol:
            raise ValueError(f"[H0, G_{j}] norm {c:.3e} exceeds {tol:.1e}")
    if model.protection_term is not None:
        require_hermitian(model.protection_term, name="protection term")
