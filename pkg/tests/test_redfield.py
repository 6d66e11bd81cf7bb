"""Redfield assembly against an explicit quadruple-loop oracle and analytics."""

import numpy as np
import pytest

from gaugenoise.models import ProtectionSpec, build_u1_qlm, build_z2_lgt, sequence_preset
from gaugenoise.noise import NoiseSpec, build_couplings
from gaugenoise.operators import PAULI_X, PAULI_Z, CapacityError, hermitian_eig
from gaugenoise.redfield import (
    build_lindblad_dissipator,
    build_redfield_tensor,
    cluster_values,
    golden_rule_rates,
    min_sampled_gap,
    resolve_cluster_tol,
)

RNG = np.random.default_rng(20260822)


def dense_redfield_oracle(h, ops, spec, cutoff):
    """Direct enumeration of every tensor element from the defining formula."""
    eig = hermitian_eig(h)
    e = cluster_values(eig.eigenvalues, resolve_cluster_tol(eig.eigenvalues, None))
    d = e.size
    mats = [eig.to_eigenbasis(op) for op in ops]

    def s_at(w):
        return spec.spectrum(float(w))

    r = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            for c in range(d):
                for dd in range(d):
                    if abs((e[a] - e[b]) - (e[c] - e[dd])) > cutoff:
                        continue
                    val = 0.0
                    for m in mats:
                        t = 0.0
                        if b == dd:
                            t += sum(
                                m[a, n] * m[n, c] * s_at(e[c] - e[n]) for n in range(d)
                            )
                        t -= m[a, c] * m[dd, b] * s_at(e[c] - e[a])
                        if a == c:
                            t += sum(
                                m[dd, n] * m[n, b] * s_at(e[dd] - e[n]) for n in range(d)
                            )
                        t -= m[a, c] * m[dd, b] * s_at(e[dd] - e[b])
                        val += t
                    r[a * d + b, c * d + dd] += -0.5 * val
    return r


def random_density(dim, rng=RNG):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def test_two_level_analytic_elements():
    """Frozen closed-form tensor for sigma_x noise on a split two-level system."""
    omega0, gamma = 1.3, 0.7
    spec = NoiseSpec(strength=gamma, exponent=1.0)
    s0 = gamma / omega0
    h = 0.5 * omega0 * PAULI_Z
    tensor = build_redfield_tensor(h, [PAULI_X], spec, secular_cutoff=1e-9)
    r = tensor.superoperator.toarray()
    # eigenbasis index 0 is the lower level; flat index a*2+b
    assert r[0, 3] == pytest.approx(s0, rel=1e-12)  # (00)<-(11)
    assert r[3, 0] == pytest.approx(s0, rel=1e-12)
    assert r[0, 0] == pytest.approx(-s0, rel=1e-12)
    assert r[3, 3] == pytest.approx(-s0, rel=1e-12)
    assert r[1, 1] == pytest.approx(-s0, rel=1e-12)  # coherence decay
    assert r[2, 2] == pytest.approx(-s0, rel=1e-12)


def test_two_level_relaxes_to_maximally_mixed():
    """Even noise pumps both directions equally; populations -> 1/2 at rate 2S."""
    omega0, gamma = 1.0, 0.2
    spec = NoiseSpec(strength=gamma, exponent=1.0)
    tensor = build_redfield_tensor(0.5 * omega0 * PAULI_Z, [PAULI_X], spec)
    rho = np.diag([0.9, 0.1]).astype(complex)
    drho = tensor.dissipate(rho)
    # dp0/dt = -S(omega0) (p0 - p1); polarization decays at twice that rate
    s0 = gamma / omega0
    assert drho[0, 0].real == pytest.approx(-s0 * 0.8, rel=1e-12)
    assert drho[1, 1].real == pytest.approx(s0 * 0.8, rel=1e-12)


def test_matches_oracle_u1_filtered():
    model = build_u1_qlm(sites=2, mass=0.5)
    spec = NoiseSpec(strength=0.05, exponent=1.0)
    cs = build_couplings(model)
    tensor = build_redfield_tensor(model, cs, spec, secular_cutoff=0.17)
    oracle = dense_redfield_oracle(
        model.hamiltonian, cs.operators(), spec, cutoff=0.17
    )
    assert np.max(np.abs(tensor.superoperator.toarray() - oracle)) < 1e-12


def test_matches_oracle_u1_unfiltered():
    model = build_u1_qlm(sites=2, mass=0.5)
    spec = NoiseSpec(strength=0.05, exponent=0.7)
    ops = build_couplings(model).operators()[:2]
    tensor = build_redfield_tensor(model, ops, spec, secular_cutoff=1e9)
    oracle = dense_redfield_oracle(model.hamiltonian, ops, spec, cutoff=1e9)
    assert np.max(np.abs(tensor.superoperator.toarray() - oracle)) < 1e-12


def test_matches_oracle_z2():
    model = build_z2_lgt(sites=2, field_h=0.54)
    spec = NoiseSpec(strength=0.02, exponent=1.3)
    cs = build_couplings(model)
    tensor = build_redfield_tensor(model, cs, spec, secular_cutoff=0.23)
    oracle = dense_redfield_oracle(
        model.hamiltonian, cs.operators(), spec, cutoff=0.23
    )
    assert np.max(np.abs(tensor.superoperator.toarray() - oracle)) < 1e-12


def test_matches_oracle_with_protection_and_cutoff_spectrum():
    seq = sequence_preset("staggered", 2)
    prot = ProtectionSpec(strength=0.8, sequence=seq)
    model = build_u1_qlm(sites=2, protection=prot)
    spec = NoiseSpec(
        strength=0.05, exponent=1.0, zero_freq_mode="cutoff", floor_frequency=0.01
    )
    ops = build_couplings(model).operators()[:2]
    tensor = build_redfield_tensor(model, ops, spec, secular_cutoff=0.31)
    oracle = dense_redfield_oracle(
        model.system_hamiltonian(), ops, spec, cutoff=0.31
    )
    assert np.max(np.abs(tensor.superoperator.toarray() - oracle)) < 1e-12


def test_trace_preservation_structure():
    """Population rows of the generator sum to zero columnwise."""
    for model in (build_u1_qlm(sites=2), build_z2_lgt(sites=2)):
        spec = NoiseSpec(strength=0.1, exponent=1.0)
        tensor = build_redfield_tensor(
            model, build_couplings(model), spec, secular_cutoff=0.1
        )
        dim = tensor.dim
        pop = np.zeros(dim * dim)
        pop[np.arange(dim) * dim + np.arange(dim)] = 1.0
        resid = pop @ tensor.superoperator
        assert np.max(np.abs(resid)) < 1e-13


def test_hermiticity_symmetry():
    """R_abcd = conj(R_badc), so the flow preserves Hermiticity."""
    model = build_u1_qlm(sites=2)
    spec = NoiseSpec(strength=0.1, exponent=1.0)
    tensor = build_redfield_tensor(
        model, build_couplings(model), spec, secular_cutoff=0.1
    )
    d = tensor.dim
    r4 = tensor.superoperator.toarray().reshape(d, d, d, d)
    assert np.max(np.abs(r4 - r4.transpose(1, 0, 3, 2).conj())) < 1e-13


def test_population_rates_match_golden_rule():
    model = build_z2_lgt(sites=2)
    spec = NoiseSpec(strength=0.03, exponent=1.0)
    cs = build_couplings(model)
    tensor = build_redfield_tensor(model, cs, spec, secular_cutoff=0.1)
    gamma = golden_rule_rates(model, cs, spec)
    d = tensor.dim
    r = tensor.superoperator.toarray()
    for a in range(d):
        for b in range(d):
            if a == b:
                continue
            got = r[a * d + a, b * d + b].real
            assert got == pytest.approx(gamma[a, b], abs=1e-14)
            assert got >= -1e-15  # gain rates are nonnegative
    # diagonal balance: escape from a equals -R_(aa),(aa) for a zero-mode spectrum
    for a in range(d):
        escape = gamma[:, a].sum() - gamma[a, a]
        assert r[a * d + a, a * d + a].real == pytest.approx(-escape, rel=1e-12)


def test_band_filter_drops_far_pairs():
    model = build_u1_qlm(sites=2)
    spec = NoiseSpec(strength=0.1, exponent=1.0)
    cs = build_couplings(model)
    wide = build_redfield_tensor(model, cs, spec, secular_cutoff=1e9)
    narrow = build_redfield_tensor(model, cs, spec, secular_cutoff=0.05)
    assert narrow.n_entries < wide.n_entries
    e = narrow.energies
    w = (e[:, None] - e[None, :]).ravel()
    r = narrow.superoperator.toarray()
    mask = np.abs(w[:, None] - w[None, :]) > 0.05
    assert np.max(np.abs(r[mask])) == 0.0


def test_cluster_values_snaps_split_degeneracies():
    v = np.array([2.0, 1.0, 1.0 + 1e-13, -3.0])
    out = cluster_values(v, 1e-9)
    assert out[1] == out[2] == pytest.approx(1.0, abs=1e-12)
    assert out[0] == 2.0 and out[3] == -3.0
    assert cluster_values(np.array([]), 1e-9).size == 0
    # chaining: gaps below tol merge transitively
    chain = cluster_values(np.array([0.0, 0.9, 1.8]), 1.0)
    assert np.all(chain == chain[0])


def test_clustering_protects_spectrum_from_split_degeneracies():
    """A 1e-13 eigenvalue split must not sample the diverging spectrum flank."""
    h = np.diag([0.0, 1e-13, 1.0]).astype(complex)
    coup = np.zeros((3, 3), dtype=complex)
    coup[0, 1] = coup[1, 0] = 1.0
    coup[1, 2] = coup[2, 1] = 0.5
    spec = NoiseSpec(strength=1.0, exponent=1.9)
    tensor = build_redfield_tensor(h, [coup], spec, secular_cutoff=0.1)
    assert np.max(np.abs(tensor.superoperator.toarray())) < 10.0


def test_model_and_bare_hamiltonian_agree():
    model = build_u1_qlm(sites=2)
    spec = NoiseSpec(strength=0.1, exponent=1.0)
    cs = build_couplings(model)
    t1 = build_redfield_tensor(model, cs, spec)
    t2 = build_redfield_tensor(model.hamiltonian, cs.operators(), spec)
    assert np.max(np.abs((t1.superoperator - t2.superoperator).toarray())) == 0.0


def test_protection_enters_eigensystem():
    seq = sequence_preset("staggered", 2)
    model = build_u1_qlm(
        sites=2, protection=ProtectionSpec(strength=2.0, sequence=seq)
    )
    spec = NoiseSpec(strength=0.1, exponent=1.0)
    tensor = build_redfield_tensor(model, build_couplings(model), spec)
    direct = hermitian_eig(model.system_hamiltonian())
    assert np.allclose(tensor.eigensystem.eigenvalues, direct.eigenvalues)
    bare = hermitian_eig(model.hamiltonian)
    assert not np.allclose(tensor.eigensystem.eigenvalues, bare.eigenvalues)


def test_entry_budget_enforced():
    model = build_u1_qlm(sites=2)
    spec = NoiseSpec(strength=0.1, exponent=1.0)
    with pytest.raises(CapacityError, match="band filter"):
        build_redfield_tensor(
            model, build_couplings(model), spec, max_entries=100
        )


def test_channel_count_mismatch_rejected():
    model = build_u1_qlm(sites=2)
    spec = NoiseSpec(strength=0.1, exponent=1.0)
    with pytest.raises(ValueError, match="noise spectra"):
        build_redfield_tensor(
            model, build_couplings(model), [spec, spec], secular_cutoff=0.1
        )


def test_zero_strength_gives_empty_generator():
    model = build_u1_qlm(sites=2)
    spec = NoiseSpec(strength=0.0, exponent=1.0)
    tensor = build_redfield_tensor(model, build_couplings(model), spec)
    assert tensor.n_entries == 0
    rho = random_density(tensor.dim)
    drho = tensor.apply(rho)  # pure coherent part remains
    h_eig = np.diag(tensor.eigensystem.eigenvalues)
    expect = -1j * (h_eig @ rho - rho @ h_eig)
    assert np.max(np.abs(drho - expect)) < 1e-12


def test_validity_report_two_level():
    omega0, gamma = 1.3, 0.1
    spec = NoiseSpec(strength=gamma, exponent=1.0)
    tensor = build_redfield_tensor(0.5 * omega0 * PAULI_Z, [PAULI_X], spec)
    rep = tensor.validity
    assert rep.max_escape_rate == pytest.approx(gamma / omega0, rel=1e-12)
    assert rep.min_nonzero_gap == pytest.approx(omega0, rel=1e-12)
    assert rep.rate_to_gap_ratio == pytest.approx(gamma / omega0**2, rel=1e-12)
    assert rep.weak_coupling_ok()
    assert "band filter" in rep.convention


def test_golden_rule_rates_two_level():
    omega0, gamma = 2.0, 0.4
    spec = NoiseSpec(strength=gamma, exponent=1.0)
    rates = golden_rule_rates(0.5 * omega0 * PAULI_Z, [PAULI_X], spec)
    assert rates[0, 1] == pytest.approx(gamma / omega0, rel=1e-12)
    assert rates[1, 0] == pytest.approx(gamma / omega0, rel=1e-12)
    assert rates[0, 0] == 0.0 and rates[1, 1] == 0.0


def test_lindblad_matches_bin_exact_redfield():
    """Jump-operator and band-filtered routes agree at a bin-exact cutoff."""
    seq = sequence_preset("staggered", 2)
    model = build_u1_qlm(
        sites=2, protection=ProtectionSpec(strength=0.7, sequence=seq)
    )
    spec = NoiseSpec(strength=0.05, exponent=1.3)
    cs = build_couplings(model)
    tensor = build_redfield_tensor(model, cs, spec, secular_cutoff=1e-12)
    lind = build_lindblad_dissipator(model, cs, spec)
    diff = np.abs(tensor.superoperator.toarray() - lind.superoperator())
    assert np.max(diff) < 1e-8
    rho = random_density(tensor.dim)
    d1 = tensor.dissipate(rho)
    d2 = lind.dissipate(rho)
    assert np.max(np.abs(d1 - d2)) < 1e-10


def test_lindblad_matches_bin_exact_redfield_z2():
    model = build_z2_lgt(sites=2)
    spec = NoiseSpec(strength=0.08, exponent=1.0)
    cs = build_couplings(model)
    tensor = build_redfield_tensor(model, cs, spec, secular_cutoff=1e-12)
    lind = build_lindblad_dissipator(model, cs, spec)
    assert np.max(np.abs(tensor.superoperator.toarray() - lind.superoperator())) < 1e-8


def test_lindblad_dissipate_matches_dense_superoperator():
    model = build_u1_qlm(sites=2)
    spec = NoiseSpec(strength=0.05, exponent=1.0)
    lind = build_lindblad_dissipator(model, build_couplings(model), spec)
    rho = random_density(16)
    out1 = lind.dissipate(rho)
    out2 = (lind.superoperator() @ rho.ravel()).reshape(16, 16)
    assert np.max(np.abs(out1 - out2)) < 1e-12


def test_lindblad_preserves_trace_and_drains_pure_states():
    """D[rho] is traceless; a populated eigenlevel can only lose weight."""
    model = build_z2_lgt(sites=2)
    spec = NoiseSpec(strength=0.1, exponent=1.0)
    lind = build_lindblad_dissipator(model, build_couplings(model), spec)
    rho = random_density(16)
    out = lind.dissipate(rho)
    assert abs(np.trace(out)) < 1e-13
    pure = np.zeros((16, 16), dtype=complex)
    pure[3, 3] = 1.0
    d = lind.dissipate(pure)
    assert d[3, 3].real <= 1e-15
    assert abs(np.trace(d)) < 1e-13


def _split_pair_system():
    """Two levels 5e-3 apart, below the floor, plus one resolvable level."""
    h = np.diag([0.0, 5e-3, 1.0])
    a = np.zeros((3, 3))
    a[0, 1] = a[1, 0] = 1.0
    a[0, 2] = a[2, 0] = 0.5
    return h, a


def test_degeneracy_floor_silences_sub_resolution_gaps():
    h, a = _split_pair_system()
    spec = NoiseSpec(strength=0.1, exponent=1.0, zero_freq_mode="zero")
    lind = build_lindblad_dissipator(h, [a], spec)
    # only the resolvable +-1.0 transitions survive in zero mode
    assert len(lind.jumps) == 2
    assert min_sampled_gap(lind.sampled_frequencies) == pytest.approx(0.995)
    rates = golden_rule_rates(h, [a], spec)
    assert rates[1, 0] == 0.0
    assert rates[0, 2] == pytest.approx(0.1 * 0.25)
    # disabling the floor samples the raw 5e-3 gap, rate gamma / omega
    raw = build_lindblad_dissipator(h, [a], spec, degeneracy_floor=0.0)
    assert len(raw.jumps) == 4
    raw_rates = golden_rule_rates(h, [a], spec, degeneracy_floor=0.0)
    assert raw_rates[1, 0] == pytest.approx(0.1 / 5e-3)


def test_degeneracy_floor_keeps_routes_bin_exact_in_cutoff_mode():
    h, a = _split_pair_system()
    spec = NoiseSpec(strength=0.1, exponent=1.0, zero_freq_mode="cutoff")
    tensor = build_redfield_tensor(h, [a], spec, secular_cutoff=1e-12)
    lind = build_lindblad_dissipator(h, [a], spec)
    assert np.max(np.abs(tensor.dissipator_matrix() - lind.superoperator())) < 1e-12
    rho = random_density(3)
    out = lind.dissipate(rho)
    assert abs(np.trace(out)) < 1e-13


def test_degeneracy_floor_rejects_negative_values():
    h, a = _split_pair_system()
    spec = NoiseSpec(strength=0.1, exponent=1.0)
    with pytest.raises(ValueError, match="degeneracy floor"):
        build_lindblad_dissipator(h, [a], spec, degeneracy_floor=-1e-3)
    with pytest.raises(ValueError, match="degeneracy floor"):
        build_redfield_tensor(h, [a], spec, degeneracy_floor=-1e-3)


def test_dense_superoperator_capacity_guard():
    seq = sequence_preset("paper-z2", 4)
    model = build_z2_lgt(
        sites=4,
        protection=ProtectionSpec(strength=8.0, sequence=seq, generator_kind="pseudo"),
    )
    spec = NoiseSpec(strength=0.1, exponent=1.0)
    cs = build_couplings(model)
    lind = build_lindblad_dissipator(model, cs, spec)
    with pytest.raises(CapacityError, match="dim <= 64"):
        lind.superoperator()
    tensor = build_redfield_tensor(model, cs, spec, secular_cutoff=0.1)
    with pytest.raises(CapacityError, match="dim <= 64"):
        tensor.dissipator_matrix()
