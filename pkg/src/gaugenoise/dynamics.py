"""Trajectory integration for the dissipative and ideal dynamics.

All integration happens in the eigenbasis of the coherent Hamiltonian, where
the unitary term is diagonal: rho'_ab contains -i omega_ab rho_ab plus the
dissipator. The adaptive path additionally removes the free phases through
the substitution sigma_ab(t) = exp(i omega_ab t) rho_ab(t), which leaves a
slowly varying right-hand side: every retained dissipator element couples
frequencies within the secular band, so sigma evolves on dissipative and
band-width timescales only, and the step size is set by physics rather than
by the fastest Bohr frequency.

Observables passed to evolve_redfield must already be expressed in the
generator's eigenbasis (use eigenbasis_observables); the initial state is
given in the computational product basis and transformed internally.
evolve_unitary diagonalizes its own Hamiltonian and therefore accepts
everything in the computational basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853
from scipy.linalg import expm

from .operators import hermitian_eig

TRACE_WARN = 1e-6
TRACE_ABORT = 1e-4
VIOLATION_FLOOR = -1e-10
DENSE_EXPM_MAX_DIM = 64

INTEGRATOR_METHODS = ("adaptive", "expm")


class IntegrationError(RuntimeError):
    """Adaptive stepper failed (step-size underflow or similar)."""


class TraceDriftError(RuntimeError):
    """Trace left the abort corridor; the run is not trustworthy."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator selection: adaptive embedded Runge-Kutta or dense exponential.

    The dense-exponential method propagates with expm of the full generator
    per sample interval and is restricted to dim <= 64.
    """

    method: str = "adaptive"
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = np.inf

    def __post_init__(self):
        if self.method not in INTEGRATOR_METHODS:
            raise ValueError(
                f"method must be one of {INTEGRATOR_METHODS}, got {self.method!r}"
            )
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")

    def halved(self) -> "IntegratorConfig":
        """Same settings at half the tolerances, for convergence checks."""
        return IntegratorConfig(
            method=self.method,
            rtol=self.rtol / 2.0,
            atol=self.atol / 2.0,
            max_step=self.max_step,
        )


@dataclass
class Trajectory:
    """Sampled run: gauge violation, optional condensate, and health series."""

    times: np.ndarray
    violation: np.ndarray
    condensate: np.ndarray | None
    trace_error: np.ndarray
    min_eigenvalue: np.ndarray | None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size == 0 or t[0] != 0.0:
            raise ValueError("trajectories start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        v = np.asarray(self.violation, dtype=float)
        if np.min(v) < VIOLATION_FLOOR:
            raise ValueError(
                f"violation dipped to {np.min(v):.3e}, below {VIOLATION_FLOOR:g}; "
                "the observable is positive semidefinite"
            )

    def series(self, name: str) -> np.ndarray:
        if name == "violation":
            return self.violation
        if name == "condensate":
            if self.condensate is None:
                raise ValueError("trajectory has no condensate series")
            return self.condensate
        raise ValueError(f"unknown observable {name!r}")


def default_time_grid(
    t_final: float, t_min: float = 1e-2, per_decade: int = 200
) -> np.ndarray:
    """t = 0 plus per_decade log-spaced samples per decade up to t_final."""
    if t_final <= t_min:
        raise ValueError(f"t_final must exceed {t_min}")
    n = max(2, int(np.ceil(np.log10(t_final / t_min) * per_decade)))
    grid = np.geomspace(t_min, t_final, n)
    grid[-1] = t_final
    return np.concatenate(([0.0], grid))


def eigenbasis_observables(generator, observables: dict) -> dict:
    """Transform computational-basis observables into the generator eigenbasis."""
    eig = generator.eigensystem
    return {name: eig.to_eigenbasis(op) for name, op in observables.items()}


def _validate_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("need a 1d grid with at least two samples")
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("time grid must start at 0 and increase strictly")
    return t


def _validate_rho0(rho0: np.ndarray, dim: int) -> np.ndarray:
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ValueError(f"initial state must be {dim} x {dim}")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-10:
        raise ValueError("initial state must be Hermitian")
    if abs(np.trace(rho0).real - 1.0) > 1e-10:
        raise ValueError("initial state must have unit trace")
    evals = np.linalg.eigvalsh(rho0)
    if evals.min() < -1e-10:
        raise ValueError("initial state must be positive semidefinite")
    return rho0


class _SampleRecorder:
    """Shared per-sample bookkeeping: symmetrize, check health, measure."""

    def __init__(self, observables: dict, n_samples: int, track_positivity: bool):
        self.obs = {
            name: np.ascontiguousarray(op.T) for name, op in observables.items()
        }
        self.series = {name: np.empty(n_samples) for name in observables}
        self.trace_error = np.empty(n_samples)
        self.herm_correction = np.empty(n_samples)
        self.min_eig = np.empty(n_samples) if track_positivity else None

    def record(self, k: int, t: float, rho: np.ndarray) -> None:
        herm = 0.5 * np.linalg.norm(rho - rho.conj().T)
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        err = abs(tr - 1.0)
        if err > TRACE_ABORT:
            raise TraceDriftError(
                f"|Tr rho - 1| = {err:.3e} at t = {t:.6g}, beyond the abort "
                f"threshold {TRACE_ABORT:g}; tighten tolerances or shorten the run"
            )
        self.herm_correction[k] = herm
        self.trace_error[k] = err
        for name, obs_t in self.obs.items():
            self.series[name][k] = np.sum(rho * obs_t).real
        if self.min_eig is not None:
            self.min_eig[k] = np.linalg.eigvalsh(rho).min()


def _package(recorder, times, metadata) -> Trajectory:
    metadata = dict(metadata)
    metadata["max_hermiticity_correction"] = float(
        np.max(recorder.herm_correction)
    )
    metadata["hermiticity_correction"] = recorder.herm_correction.tolist()
    return Trajectory(
        times=times,
        violation=recorder.series["violation"],
        condensate=recorder.series.get("condensate"),
        trace_error=recorder.trace_error,
        min_eigenvalue=recorder.min_eig,
        metadata=metadata,
    )


def evolve_redfield(
    rho0: np.ndarray,
    generator,
    times,
    observables: dict,
    config: IntegratorConfig | None = None,
    track_positivity: bool = False,
) -> Trajectory:
    """Integrate the dissipative master equation and sample observables.

    `generator` is a RedfieldTensor or LindbladDissipator; it supplies the
    eigensystem and the dissipative action. `observables` maps series names
    (which must include "violation") to eigenbasis matrices. `rho0` is given
    in the computational basis.
    """
    if config is None:
        config = IntegratorConfig()
    if "violation" not in observables:
        raise ValueError('observables must include "violation"')
    times = _validate_times(times)
    eig = generator.eigensystem
    dim = eig.dim
    rho0 = _validate_rho0(rho0, dim)
    rho0_eig = eig.to_eigenbasis(rho0)
    e = eig.eigenvalues
    wflat = (e[:, None] - e[None, :]).ravel()

    recorder = _SampleRecorder(observables, times.size, track_positivity)
    recorder.record(0, 0.0, rho0_eig.copy())

    meta = {
        "method": config.method,
        "rtol": config.rtol,
        "atol": config.atol,
        "max_step": None if np.isinf(config.max_step) else config.max_step,
        "dim": dim,
    }
    if config.method == "expm":
        _propagate_expm(generator, rho0_eig, times, wflat, recorder)
        meta["n_steps"] = times.size - 1
        meta["n_rhs"] = 0
    else:
        n_steps, n_rhs = _propagate_adaptive(
            generator, rho0_eig, times, wflat, recorder, config
        )
        meta["n_steps"] = n_steps
        meta["n_rhs"] = n_rhs
    return _package(recorder, times, meta)


def _propagate_adaptive(generator, rho0_eig, times, wflat, recorder, config):
    dim = rho0_eig.shape[0]
    phase_rate = -1j * wflat
    n_rhs = 0

    def rhs(t, y):
        nonlocal n_rhs
        n_rhs += 1
        ph = np.exp(phase_rate * t)
        rho = (ph * y).reshape(dim, dim)
        out = generator.dissipate(rho)
        return np.conj(ph) * out.ravel()

    solver = DOP853(
        rhs,
        0.0,
        rho0_eig.ravel(),
        t_bound=times[-1],
        rtol=config.rtol,
        atol=config.atol,
        max_step=config.max_step,
    )
    idx = 1
    n_steps = 0
    while idx < times.size:
        if solver.status != "running":
            raise IntegrationError(
                f"integrator stopped at t = {solver.t:.6g} before the grid end"
            )
        msg = solver.step()
        n_steps += 1
        if solver.status == "failed":
            raise IntegrationError(
                f"adaptive step failed at t = {solver.t:.6g}: {msg}"
            )
        interp = None
        while idx < times.size and times[idx] <= solver.t:
            if interp is None:
                interp = solver.dense_output()
            ts = times[idx]
            y = interp(ts)
            rho = (np.exp(phase_rate * ts) * y).reshape(dim, dim)
            recorder.record(idx, ts, rho)
            idx += 1
    return n_steps, n_rhs


def _propagate_expm(generator, rho0_eig, times, wflat, recorder):
    dim = rho0_eig.shape[0]
    if dim > DENSE_EXPM_MAX_DIM:
        raise ValueError(
            f"dense-exponential integration needs dim <= {DENSE_EXPM_MAX_DIM}, "
            f"got {dim}"
        )
    if hasattr(generator, "dissipator_matrix"):
        diss = generator.dissipator_matrix()
    else:
        diss = generator.superoperator()
    gen = diss + np.diag(-1j * wflat)
    y = rho0_eig.ravel().copy()
    for k in range(1, times.size):
        y = expm(gen * (times[k] - times[k - 1])) @ y
        recorder.record(k, times[k], y.reshape(dim, dim).copy())


def evolve_unitary(
    rho0: np.ndarray,
    hamiltonian: np.ndarray,
    times,
    observables: dict,
    track_positivity: bool = False,
) -> Trajectory:
    """Ideal reference dynamics rho(t) = e^{-iHt} rho0 e^{iHt}, sampled exactly.

    Everything is given in the computational basis; the Hamiltonian is
    diagonalized here. Purity and trace are preserved to rounding.
    """
    if "violation" not in observables:
        raise ValueError('observables must include "violation"')
    times = _validate_times(times)
    eig = hermitian_eig(np.asarray(hamiltonian, dtype=complex))
    dim = eig.dim
    rho0 = _validate_rho0(rho0, dim)
    rho0_eig = eig.to_eigenbasis(rho0)
    obs_eig = {name: eig.to_eigenbasis(op) for name, op in observables.items()}
    e = eig.eigenvalues
    bohr = e[:, None] - e[None, :]

    purity0 = np.sum(np.abs(rho0_eig) ** 2).real
    recorder = _SampleRecorder(obs_eig, times.size, track_positivity)
    for k, t in enumerate(times):
        rho = rho0_eig * np.exp(-1j * bohr * t)
        purity = np.sum(np.abs(rho) ** 2).real
        if abs(purity - purity0) > 1e-10:
            raise IntegrationError(
                f"purity drifted by {abs(purity - purity0):.3e} at t = {t:.6g}"
            )
        recorder.record(k, t, rho)
    meta = {"method": "unitary", "dim": dim, "n_steps": 0, "n_rhs": 0}
    return _package(recorder, times, meta)


def deviation_from_ideal(
    noisy: Trajectory, ideal: Trajectory, observable: str
) -> np.ndarray:
    """|O_noisy(t) - O_ideal(t)| on a shared time grid."""
    if noisy.times.size != ideal.times.size or np.any(
        noisy.times != ideal.times
    ):
        raise ValueError("trajectories are sampled on different time grids")
    return np.abs(noisy.series(observable) - ideal.series(observable))
