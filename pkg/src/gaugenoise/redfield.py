"""Band-filtered Redfield generator and an independent Lindblad-form route.

The dissipative generator acts on the density matrix in the eigenbasis of
the full coherent Hamiltonian,

    d rho_ab / dt = -i omega_ab rho_ab + sum_cd R_abcd rho_cd,

with, per Hermitian coupling operator A (channel alpha, spectrum S_alpha),

    R_abcd = -(1/2) sum_alpha [
        delta_bd sum_n A_an A_nc S(omega_cn) - A_ac A_db S(omega_ca)
      + delta_ac sum_n A_dn A_nb S(omega_dn) - A_ac A_db S(omega_db) ].

Only quadruples inside the secular band |omega_ab - omega_cd| <= cutoff are
kept; the generator is stored as a sparse matrix over row-major-flattened
density matrices. Eigenvalues are gap-clustered before any spectrum
evaluation so that exact degeneracies split at machine precision do not get
sampled on the diverging flank of a 1/f^beta spectrum.

Bohr frequencies below the degeneracy floor (default 0.01, in units of the
hopping energy) are additionally sampled at zero frequency when rates are
evaluated. A golden-rule rate at a gap that small is meaningless here:
S(omega) ~ gamma/|omega|^beta makes the rate huge while the weak-coupling
condition rate << gap demands it be tiny, and such gaps are unresolvable
on the simulated timescales anyway. Sampling them as degenerate keeps
every evaluated rate inside the regime where the master equation is
defined; the validity report then measures the surviving channels. The
floor moves only the sampling point: band and bin structure, coherent
phases, and jump-operator supports all keep the raw frequencies, so the
two generator routes stay exactly equivalent in every mode.

`build_lindblad_dissipator` implements the same physics in completely
positive jump-operator form, with frequency-binned operators A(omega) and
rates S(omega). For an even spectrum and a bin-exact band filter the two
constructions agree identically, which the test suite exploits as a
cross-check; the code paths share nothing beyond the eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .models import ModelSystem
from .noise import CouplingSet, NoiseSpec
from .operators import CapacityError, HermitianEigensystem, hermitian_eig

DEFAULT_SECULAR_CUTOFF = 0.1
DEFAULT_MAX_ENTRIES = 20_000_000
DEGENERACY_FLOOR = 1e-2
DENSE_SUPEROP_MAX_DIM = 64
_SLAB_ENTRIES = 4_000_000

CONVENTION = (
    "eigenbasis density-matrix generator: d rho_ab/dt = -i omega_ab rho_ab "
    "+ sum_cd R_abcd rho_cd, secular band filter |omega_ab - omega_cd| <= "
    "cutoff, spectra evaluated at gap-clustered Bohr frequencies with gaps "
    "below the degeneracy floor sampled at zero frequency, rates in units "
    "of the hopping energy"
)


def cluster_values(values: np.ndarray, tol: float) -> np.ndarray:
    """Snap values whose sorted gaps are <= tol to their group mean.

    Groups are formed by chaining: consecutive sorted values closer than tol
    join one group, so a group can span more than tol in total. Intended for
    eigenvalues whose degeneracies split at machine precision while distinct
    levels sit many orders of magnitude apart.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return values.copy()
    order = np.argsort(values, kind="stable")
    vs = values[order]
    boundary = np.diff(vs) > tol
    group = np.concatenate(([0], np.cumsum(boundary)))
    sums = np.bincount(group, weights=vs)
    counts = np.bincount(group)
    means = sums / counts
    out = np.empty_like(values)
    out[order] = means[group]
    return out


def _window_pairs(sorted_values: np.ndarray, cutoff: float):
    """Index pairs (i, k) into a sorted array with |v_i - v_k| <= cutoff."""
    lo = np.searchsorted(sorted_values, sorted_values - cutoff, side="left")
    hi = np.searchsorted(sorted_values, sorted_values + cutoff, side="right")
    counts = hi - lo
    total = int(counts.sum())
    left = np.repeat(np.arange(sorted_values.size), counts)
    starts = np.repeat(lo, counts)
    offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    right = starts + offs
    return left, right, total


def _count_window(sorted_values: np.ndarray, cutoff: float) -> int:
    lo = np.searchsorted(sorted_values, sorted_values - cutoff, side="left")
    hi = np.searchsorted(sorted_values, sorted_values + cutoff, side="right")
    return int((hi - lo).sum())


@dataclass(frozen=True)
class ValidityReport:
    """Golden-rule rate scales against the level spacing they must respect."""

    max_escape_rate: float
    min_nonzero_gap: float
    secular_cutoff: float
    convention: str = CONVENTION

    @property
    def rate_to_gap_ratio(self) -> float:
        if self.min_nonzero_gap == 0.0:
            return float("inf") if self.max_escape_rate > 0 else 0.0
        return self.max_escape_rate / self.min_nonzero_gap

    def weak_coupling_ok(self, threshold: float = 0.1) -> bool:
        return self.rate_to_gap_ratio <= threshold


@dataclass
class RedfieldTensor:
    """Sparse band-filtered generator over row-major-flattened eigenbasis rho."""

    eigensystem: HermitianEigensystem
    energies: np.ndarray  # gap-clustered eigenvalues
    superoperator: sparse.csr_matrix
    secular_cutoff: float
    cluster_tol: float
    n_terms_collected: int
    validity: ValidityReport
    degeneracy_floor: float = DEGENERACY_FLOOR
    bohr_flat: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.bohr_flat is None:
            e = self.eigensystem.eigenvalues
            self.bohr_flat = (e[:, None] - e[None, :]).ravel()

    @property
    def dim(self) -> int:
        return self.eigensystem.dim

    @property
    def n_entries(self) -> int:
        return int(self.superoperator.nnz)

    def apply(self, rho_eig: np.ndarray, unitary: bool = True) -> np.ndarray:
        """Generator action on an eigenbasis density matrix."""
        flat = rho_eig.ravel()
        out = self.superoperator @ flat
        if unitary:
            out = out - 1j * self.bohr_flat * flat
        return out.reshape(self.dim, self.dim)

    def dissipate(self, rho_eig: np.ndarray) -> np.ndarray:
        """Dissipative part only, the common interface of both generator forms."""
        return self.apply(rho_eig, unitary=False)

    def dissipator_matrix(self) -> np.ndarray:
        """Dense copy of the dissipative part; small systems only."""
        if self.dim > DENSE_SUPEROP_MAX_DIM:
            raise CapacityError(
                f"dense superoperator needs dim <= {DENSE_SUPEROP_MAX_DIM}, "
                f"got {self.dim}"
            )
        return self.superoperator.toarray()


def _resolve_channels(couplings, noise):
    if isinstance(couplings, CouplingSet):
        ops = couplings.operators()
    else:
        ops = list(couplings)
    if isinstance(noise, NoiseSpec):
        specs = [noise] * len(ops)
    else:
        specs = list(noise)
    if len(specs) != len(ops):
        raise ValueError(
            f"{len(ops)} coupling operators but {len(specs)} noise spectra"
        )
    return ops, specs


def _system_hamiltonian(system) -> np.ndarray:
    if isinstance(system, ModelSystem):
        return system.system_hamiltonian()
    return np.asarray(system)


def resolve_cluster_tol(energies: np.ndarray, cluster_tol: float | None) -> float:
    if cluster_tol is not None:
        return cluster_tol
    scale = float(np.max(np.abs(energies))) if energies.size else 0.0
    return max(1e-9, 1e-12 * scale)


def floor_frequencies(omega: np.ndarray, floor: float) -> np.ndarray:
    """Copy of a Bohr-frequency array with sub-floor gaps snapped to zero."""
    if floor < 0:
        raise ValueError(f"degeneracy floor must be >= 0, got {floor}")
    out = np.array(omega, dtype=float, copy=True)
    if floor > 0:
        out[np.abs(out) < floor] = 0.0
    return out


def build_redfield_tensor(
    system,
    couplings,
    noise,
    secular_cutoff: float = DEFAULT_SECULAR_CUTOFF,
    cluster_tol: float | None = None,
    degeneracy_floor: float = DEGENERACY_FLOOR,
    max_entries: int = DEFAULT_MAX_ENTRIES,
) -> RedfieldTensor:
    """Assemble the band-filtered generator for a model or bare Hamiltonian.

    `system` is a ModelSystem (its coherent Hamiltonian including protection
    is used) or a Hermitian matrix. `couplings` is a CouplingSet or a list
    of Hermitian operators; `noise` is one NoiseSpec for all channels or a
    per-channel sequence. Rates are evaluated at Bohr frequencies with
    sub-floor gaps sampled at zero; pass degeneracy_floor=0.0 to evaluate
    the spectrum at every raw gap. Raises CapacityError when the band
    filter would admit more than max_entries tensor elements.
    """
    if secular_cutoff < 0:
        raise ValueError(f"secular cutoff must be >= 0, got {secular_cutoff}")
    h = _system_hamiltonian(system)
    ops, specs = _resolve_channels(couplings, noise)
    eig = hermitian_eig(h)
    dim = eig.dim
    tol = resolve_cluster_tol(eig.eigenvalues, cluster_tol)
    energies = cluster_values(eig.eigenvalues, tol)
    bohr = energies[:, None] - energies[None, :]
    sampled = floor_frequencies(bohr, degeneracy_floor)

    a_eig = [eig.to_eigenbasis(op) for op in ops]
    sw_cache: dict[NoiseSpec, np.ndarray] = {}
    for spec in specs:
        if spec not in sw_cache:
            sw_cache[spec] = spec.spectrum(sampled)

    # budget the three entry families before materializing anything
    eleft, eright, n_eigpairs = _window_pairs(energies, secular_cutoff)
    flat_freq = bohr.ravel()
    order = np.argsort(flat_freq, kind="stable")
    n_cross = _count_window(flat_freq[order], secular_cutoff)
    total = 2 * dim * n_eigpairs + n_cross
    if total > max_entries:
        raise CapacityError(
            f"band filter at cutoff {secular_cutoff:g} admits {total} tensor "
            f"entries, above the budget of {max_entries}; tighten the cutoff "
            "or raise max_entries"
        )

    m1 = np.zeros((dim, dim), dtype=complex)
    m2 = np.zeros((dim, dim), dtype=complex)
    for a, spec in zip(a_eig, specs):
        sw = sw_cache[spec]
        m1 += a @ (a * sw.T)  # m1[a,c] = sum_n A_an A_nc S(omega_cn)
        m2 += (a * sw) @ a  # m2[d,b] = sum_n A_dn A_nb S(omega_dn)

    arange = np.arange(dim, dtype=np.int32)
    eleft = eleft.astype(np.int32)
    eright = eright.astype(np.int32)
    # delta_bd family: R_(a b),(c b) -= m1[a,c]/2 for |e_a - e_c| <= cutoff
    rows1 = (eleft[:, None] * dim + arange[None, :]).ravel()
    cols1 = (eright[:, None] * dim + arange[None, :]).ravel()
    vals1 = np.repeat(-0.5 * m1[eleft, eright], dim)
    # delta_ac family: R_(a b),(a d) -= m2[d,b]/2 for |e_b - e_d| <= cutoff
    rows3 = (arange[:, None] * dim + eleft[None, :]).ravel()
    cols3 = (arange[:, None] * dim + eright[None, :]).ravel()
    vals3 = np.tile(-0.5 * m2[eright, eleft], dim)
    # sandwich family over coherence pairs |omega_ab - omega_cd| <= cutoff,
    # materialized in slabs of the sorted frequency axis to bound peak memory
    sorted_freq = flat_freq[order]
    order32 = order.astype(np.int32)
    lo = np.searchsorted(sorted_freq, sorted_freq - secular_cutoff, side="left")
    hi = np.searchsorted(sorted_freq, sorted_freq + secular_cutoff, side="right")
    counts = hi - lo
    slab_rows, slab_cols, slab_vals = [], [], []
    slab_budget = max(1, _SLAB_ENTRIES)
    start = 0
    n_positions = sorted_freq.size
    while start < n_positions:
        stop = start
        acc = 0
        while stop < n_positions and (acc == 0 or acc + counts[stop] <= slab_budget):
            acc += int(counts[stop])
            stop += 1
        cnt = counts[start:stop]
        kleft = np.repeat(np.arange(start, stop, dtype=np.int32), cnt)
        starts = np.repeat(lo[start:stop], cnt).astype(np.int64)
        offs = np.arange(acc, dtype=np.int64) - np.repeat(
            np.cumsum(cnt) - cnt, cnt
        )
        rowp = order32[kleft]
        colp = order32[(starts + offs).astype(np.int32)]
        ra, rb = rowp // dim, rowp % dim
        ca, cb = colp // dim, colp % dim
        vals2 = np.zeros(rowp.size, dtype=complex)
        for a, spec in zip(a_eig, specs):
            sw = sw_cache[spec]
            vals2 += a[ra, ca] * a[cb, rb] * (sw[ca, ra] + sw[cb, rb])
        vals2 *= 0.5
        slab_rows.append(rowp)
        slab_cols.append(colp)
        slab_vals.append(vals2)
        start = stop

    rows = np.concatenate([rows1, rows3, *slab_rows])
    cols = np.concatenate([cols1, cols3, *slab_cols])
    del slab_rows, slab_cols
    vals = np.concatenate([vals1, vals3, *slab_vals])
    del slab_vals
    coo = sparse.coo_matrix((vals, (rows, cols)), shape=(dim * dim, dim * dim))
    del rows, cols, vals
    csr = coo.tocsr()
    del coo
    csr.sum_duplicates()
    csr.eliminate_zeros()

    validity = _validity_report(a_eig, specs, sw_cache, sampled, secular_cutoff)
    return RedfieldTensor(
        eigensystem=eig,
        energies=energies,
        superoperator=csr,
        secular_cutoff=secular_cutoff,
        cluster_tol=tol,
        n_terms_collected=int(total),
        validity=validity,
        degeneracy_floor=degeneracy_floor,
    )


def min_sampled_gap(sampled: np.ndarray) -> float:
    """Smallest nonzero frequency the spectrum is actually evaluated at."""
    nz = np.abs(np.asarray(sampled, dtype=float).ravel())
    nz = nz[nz > 0]
    return float(nz.min()) if nz.size else 0.0


def _validity_report(a_eig, specs, sw_cache, sampled, secular_cutoff):
    dim = sampled.shape[0] if sampled.ndim == 2 else 0
    escape = np.zeros(dim)
    for a, spec in zip(a_eig, specs):
        sw = sw_cache[spec]
        gamma = (np.abs(a) ** 2) * sw.T  # gamma[m, n]: rate n -> m at S(omega_nm)
        escape += gamma.sum(axis=0) - np.diag(gamma)
    return ValidityReport(
        max_escape_rate=float(np.max(escape)) if dim else 0.0,
        min_nonzero_gap=min_sampled_gap(sampled),
        secular_cutoff=secular_cutoff,
    )


def golden_rule_rates(
    system,
    couplings,
    noise,
    cluster_tol: float | None = None,
    degeneracy_floor: float = DEGENERACY_FLOOR,
) -> np.ndarray:
    """Population transition-rate matrix gamma[m, n] for the jump n -> m."""
    h = _system_hamiltonian(system)
    ops, specs = _resolve_channels(couplings, noise)
    eig = hermitian_eig(h)
    tol = resolve_cluster_tol(eig.eigenvalues, cluster_tol)
    energies = cluster_values(eig.eigenvalues, tol)
    sampled = floor_frequencies(
        energies[:, None] - energies[None, :], degeneracy_floor
    )
    out = np.zeros((eig.dim, eig.dim))
    for op, spec in zip(ops, specs):
        a = eig.to_eigenbasis(op)
        sw = spec.spectrum(sampled)
        out += (np.abs(a) ** 2) * sw.T
    return out


@dataclass(frozen=True)
class _CompressedJump:
    """One scaled jump operator stored on its row/column support only."""

    rows: np.ndarray  # eigenbasis bra indices carrying nonzeros
    cols: np.ndarray  # eigenbasis ket indices carrying nonzeros
    block: np.ndarray  # dense (rows x cols) submatrix of sqrt(rate) * A(omega)


@dataclass
class LindbladDissipator:
    """Completely positive frequency-binned dissipator, jump-operator form.

    Jump operators per channel and Bohr frequency omega,
        A(omega) = sum_{(m,n): e_n - e_m = omega} |m><m| A |n><n|,
    acting with rate S(omega); frequencies are gap-clustered with the same
    tolerance as the band-filtered route so machine-precision splits share
    a bin. Built independently of that route; for an even spectrum the two
    agree exactly when the band filter is bin-exact.

    Jumps are stored as dense blocks on their support, so applying the
    dissipator costs O(dim * sum_k nnz_k) regardless of how uneven the bin
    sizes are. This is the only generator representation that stays
    tractable for a heavily degenerate spectrum, where the element-wise
    tensor would need one entry per coherence pair inside every bin.
    """

    eigensystem: HermitianEigensystem
    energies: np.ndarray
    bin_frequencies: np.ndarray
    channel_rates: list[np.ndarray]
    channel_ops: list[np.ndarray]  # eigenbasis couplings
    degeneracy_floor: float = DEGENERACY_FLOOR
    jumps: list[_CompressedJump] = field(repr=False, default_factory=list)
    anticommutator_half: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.eigensystem.dim

    @property
    def sampled_frequencies(self) -> np.ndarray:
        """Frequencies the bin rates were actually evaluated at."""
        return floor_frequencies(self.bin_frequencies, self.degeneracy_floor)

    def dissipate(self, rho_eig: np.ndarray) -> np.ndarray:
        """D[rho] = sum_k L_k rho L_k^dag - (1/2){K, rho} with K = sum L^dag L."""
        k = self.anticommutator_half
        out = -(k @ rho_eig + rho_eig @ k)
        for j in self.jumps:
            t = j.block @ rho_eig[j.cols, :]
            out[np.ix_(j.rows, j.rows)] += t[:, j.cols] @ j.block.conj().T
        return out

    def superoperator(self) -> np.ndarray:
        """Dense generator over row-major-flattened rho; small systems only."""
        dim = self.dim
        if dim > DENSE_SUPEROP_MAX_DIM:
            raise CapacityError(
                f"dense superoperator needs dim <= {DENSE_SUPEROP_MAX_DIM}, "
                f"got {dim}"
            )
        eye = np.eye(dim, dtype=complex)
        out = np.zeros((dim * dim, dim * dim), dtype=complex)
        for j in self.jumps:
            jump = np.zeros((dim, dim), dtype=complex)
            jump[np.ix_(j.rows, j.cols)] = j.block
            anti = jump.conj().T @ jump
            out += np.kron(jump, jump.conj())
            out -= 0.5 * (np.kron(anti, eye) + np.kron(eye, anti.T))
        return out


def build_lindblad_dissipator(
    system,
    couplings,
    noise,
    cluster_tol: float | None = None,
    degeneracy_floor: float = DEGENERACY_FLOOR,
) -> LindbladDissipator:
    """Frequency-binned jump-operator dissipator for the same inputs.

    Bin membership follows the raw gap-clustered frequencies, so the jump
    structure matches the band-filtered route at a bin-exact cutoff; the
    rate of each bin is evaluated at its floored frequency, which silences
    sub-floor channels in "zero" mode.
    """
    h = _system_hamiltonian(system)
    ops, specs = _resolve_channels(couplings, noise)
    eig = hermitian_eig(h)
    dim = eig.dim
    tol = resolve_cluster_tol(eig.eigenvalues, cluster_tol)
    energies = cluster_values(eig.eigenvalues, tol)
    raw = energies[None, :] - energies[:, None]  # [m, n] = e_n - e_m
    binned = cluster_values(raw.ravel(), tol)
    bins = np.unique(binned)
    binidx = np.searchsorted(bins, binned).reshape(dim, dim)
    sampled_bins = floor_frequencies(bins, degeneracy_floor)

    a_eig = [eig.to_eigenbasis(op) for op in ops]
    all_rates = [spec.spectrum(sampled_bins) for spec in specs]
    jumps: list[_CompressedJump] = []
    # K = sum_omega S L^dag L accumulated from the stored blocks, so the
    # anticommutator matches the jump set exactly even across merged bins
    k_half = np.zeros((dim, dim), dtype=complex)
    for a, rates in zip(a_eig, all_rates):
        flat_rows, flat_cols = np.nonzero(a)
        if flat_rows.size == 0:
            continue
        elem_bins = binidx[flat_rows, flat_cols]
        order = np.argsort(elem_bins, kind="stable")
        flat_rows, flat_cols, elem_bins = (
            flat_rows[order], flat_cols[order], elem_bins[order],
        )
        boundaries = np.nonzero(np.diff(elem_bins))[0] + 1
        for seg_r, seg_c in zip(
            np.split(flat_rows, boundaries), np.split(flat_cols, boundaries)
        ):
            rate = rates[binidx[seg_r[0], seg_c[0]]]
            if rate == 0.0:
                continue
            rows = np.unique(seg_r)
            cols = np.unique(seg_c)
            block = np.zeros((rows.size, cols.size), dtype=complex)
            block[
                np.searchsorted(rows, seg_r), np.searchsorted(cols, seg_c)
            ] = a[seg_r, seg_c]
            scaled = np.sqrt(rate) * block
            k_half[np.ix_(cols, cols)] += 0.5 * (scaled.conj().T @ scaled)
            jumps.append(_CompressedJump(rows=rows, cols=cols, block=scaled))
    return LindbladDissipator(
        eigensystem=eig,
        energies=energies,
        bin_frequencies=bins,
        channel_rates=all_rates,
        channel_ops=a_eig,
        degeneracy_floor=degeneracy_floor,
        jumps=jumps,
        anticommutator_half=k_half,
    )
