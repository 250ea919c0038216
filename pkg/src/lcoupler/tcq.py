"""Electrode-level model of the tunable coupler qubits.

Each coupler qubit is two capacitively shunted electrodes (top/bottom) joined
by an internal coupling J.  Only the symmetric eigenmode is used as the
computational level; its coupling to the resonator bus is proportional to the
difference of the two electrode amplitudes in the eigenvector, so a perfectly
symmetric setting is dark (zero effective coupling) and detuning the
electrodes against each other dials the coupling smoothly.

Pulse schedules elsewhere in the package are expressed directly in coupling
amplitude; this module converts between that amplitude and an electrode
setting that realises it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from lcoupler.config import LQubitConfig


@dataclass(frozen=True)
class TcqSetting:
    """Electrode frequencies and couplings for one coupler qubit."""

    top_frequency_hz: float
    bottom_frequency_hz: float
    internal_coupling_hz: float
    bare_coupling_hz: float

    @property
    def asymmetry_hz(self) -> float:
        return self.top_frequency_hz - self.bottom_frequency_hz


@dataclass(frozen=True)
class TcqModes:
    """Eigenmodes of one electrode pair."""

    symmetric_frequency_hz: float
    antisymmetric_frequency_hz: float
    effective_coupling_hz: float


def diagonalize_tcq(setting: TcqSetting) -> TcqModes:
    """Eigenfrequencies of the electrode pair and the bus coupling of the
    symmetric mode.

    The internal 2x2 Hamiltonian is [[f_top, -J], [-J, f_bot]], which places
    the symmetric combination below the antisymmetric one for J > 0.
    """
    j = setting.internal_coupling_hz
    if j <= 0:
        raise ValueError("internal coupling must be positive")
    mean = 0.5 * (setting.top_frequency_hz + setting.bottom_frequency_hz)
    delta = 0.5 * setting.asymmetry_hz
    r = math.hypot(delta, j)
    # lower branch eigenvector, unnormalised: (J, delta + r)
    vt, vb = j, delta + r
    norm = math.hypot(vt, vb)
    g_eff = setting.bare_coupling_hz * (vt - vb) / norm
    return TcqModes(
        symmetric_frequency_hz=mean - r,
        antisymmetric_frequency_hz=mean + r,
        effective_coupling_hz=g_eff,
    )


def idle_setting(qubit: LQubitConfig, bare_coupling_hz: float = 30e6) -> TcqSetting:
    """Symmetric (dark) setting whose computational mode sits at the idle
    frequency."""
    j = qubit.internal_coupling_hz
    f_mean = qubit.idle_frequency_hz + j
    return TcqSetting(
        top_frequency_hz=f_mean,
        bottom_frequency_hz=f_mean,
        internal_coupling_hz=j,
        bare_coupling_hz=bare_coupling_hz,
    )


def coupling_to_setting(
    target_detuning_hz: float,
    target_coupling_hz: float,
    base: TcqSetting,
) -> TcqSetting:
    """Electrode setting realising a coupling at a given mode frequency.

    The symmetric-mode frequency is held at ``base`` symmetric frequency plus
    ``target_detuning_hz`` while the electrode asymmetry is root-found to hit
    ``target_coupling_hz``.  The achievable range is open:
    |target| < bare coupling.
    """
    g_bare = base.bare_coupling_hz
    j = base.internal_coupling_hz
    if abs(target_coupling_hz) >= g_bare:
        raise ValueError(
            f"target coupling {target_coupling_hz:.4g} Hz outside the achievable "
            f"range (|g| < {g_bare:.4g} Hz)"
        )
    f_sym = diagonalize_tcq(base).symmetric_frequency_hz + target_detuning_hz

    def setting_at(delta: float) -> TcqSetting:
        r = math.hypot(delta, j)
        mean = f_sym + r  # keeps the symmetric branch pinned at f_sym
        return TcqSetting(mean + delta, mean - delta, j, g_bare)

    def residual(delta: float) -> float:
        return diagonalize_tcq(setting_at(delta)).effective_coupling_hz - target_coupling_hz

    if target_coupling_hz == 0.0:
        return setting_at(0.0)

    # effective coupling decreases monotonically with asymmetry; expand the
    # bracket until it straddles the target
    half_width = j
    for _ in range(60):
        if residual(-half_width) > 0 > residual(half_width):
            break
        half_width *= 2.0
    else:  # pragma: no cover - bounded by the range check above
        raise ValueError("failed to bracket the requested coupling")
    delta = brentq(residual, -half_width, half_width, xtol=1e-6, rtol=1e-14)
    return setting_at(delta)
