"""Classical 1/f^beta noise spectra and system-bath coupling operators.

The bath enters through an even power-law spectral density
    S(omega) = gamma / |omega|^beta,          0 < beta < 2,
evaluated at the system Bohr frequencies. The omega -> 0 limit diverges for
beta > 0, so every spectrum carries an explicit zero-frequency policy:
"zero" drops the static component entirely (S(0) = 0), "cutoff" saturates
the power law below a floor frequency
(S = gamma / max(|omega|, omega_min)^beta).

Coupling sets pair each noise channel with a Hermitian system operator:
every matter site and every link gets an independent channel with the same
spectrum, which is how local charge and field noise enter the two lattice
models here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import TAU_Z, LatticeSpec, ModelSystem, _embed
from .operators import PAULI_X, require_hermitian

ZERO_FREQ_MODES = ("zero", "cutoff")
DEFAULT_FLOOR_FREQUENCY = 0.01


@dataclass(frozen=True)
class NoiseSpec:
    """Power-law spectrum S(omega) = gamma / |omega|^beta with a zero policy."""

    strength: float
    exponent: float
    zero_freq_mode: str = "zero"
    floor_frequency: float = DEFAULT_FLOOR_FREQUENCY

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError(f"noise strength must be >= 0, got {self.strength}")
        if not 0 < self.exponent < 2:
            raise ValueError(
                f"spectral exponent must lie in (0, 2), got {self.exponent}"
            )
        if self.zero_freq_mode not in ZERO_FREQ_MODES:
            raise ValueError(
                f"zero_freq_mode must be one of {ZERO_FREQ_MODES}, "
                f"got {self.zero_freq_mode!r}"
            )
        if self.zero_freq_mode == "cutoff" and self.floor_frequency <= 0:
            raise ValueError(
                f"floor frequency must be > 0, got {self.floor_frequency}"
            )

    def spectrum(self, omega: np.ndarray | float) -> np.ndarray | float:
        """Evaluate S on scalars or arrays of Bohr frequencies.

        The spectrum is even by construction. In "zero" mode exact zeros map
        to S = 0; callers are expected to have clustered near-degenerate
        frequencies to exact zeros beforehand.
        """
        w = np.abs(np.asarray(omega, dtype=float))
        scalar = w.ndim == 0
        w = np.atleast_1d(w)
        out = np.zeros_like(w)
        if self.zero_freq_mode == "cutoff":
            out = self.strength / np.maximum(w, self.floor_frequency) ** self.exponent
        else:
            nz = w > 0.0
            out[nz] = self.strength / w[nz] ** self.exponent
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class CouplingChannel:
    """One independent bath channel: a label and a Hermitian coupling operator."""

    label: str
    operator: np.ndarray

    def __post_init__(self):
        require_hermitian(self.operator, name=f"coupling {self.label!r}")


@dataclass(frozen=True)
class CouplingSet:
    channels: tuple[CouplingChannel, ...]

    def __len__(self) -> int:
        return len(self.channels)

    def operators(self) -> list[np.ndarray]:
        return [c.operator for c in self.channels]

    def labels(self) -> list[str]:
        return [c.label for c in self.channels]


def _site_link_channels(
    lattice: LatticeSpec, site_op: np.ndarray, link_op: np.ndarray
) -> CouplingSet:
    channels = []
    for j in range(1, lattice.sites + 1):
        channels.append(
            CouplingChannel(
                label=f"site_{j}",
                operator=_embed(lattice, {lattice.site_factor(j): site_op}),
            )
        )
        channels.append(
            CouplingChannel(
                label=f"link_{j}",
                operator=_embed(lattice, {lattice.link_factor(j): link_op}),
            )
        )
    return CouplingSet(channels=tuple(channels))


def build_couplings(model: ModelSystem) -> CouplingSet:
    """Local noise channels for a model: one per matter site, one per link.

    U(1): transverse matter noise sigma_x_j and link spin noise s_x. Z2:
    hard-core charge noise a + adag (sigma_x in the occupation basis) and
    electric-field-flipping link noise tau_z. Each operator breaks the
    gauge constraints, so these channels drive sector leakage.
    """
    if model.kind == "u1_qlm":
        return _site_link_channels(model.lattice, PAULI_X, PAULI_X / 2.0)
    if model.kind == "z2_lgt":
        n_max = int(model.params["n_max"])
        d = n_max + 1
        a = np.zeros((d, d), dtype=complex)
        for k in range(1, d):
            a[k - 1, k] = np.sqrt(k)
        return _site_link_channels(model.lattice, a + a.conj().T, TAU_Z)
    raise ValueError(f"unknown model kind {model.kind!r}")
