import numpy as np
import pytest

from lcoupler.config import default_config
from lcoupler.tcq import TcqSetting, coupling_to_setting, diagonalize_tcq, idle_setting


def eig_oracle(setting):
    """Independent route: diagonalise the 2x2 with numpy and read off the
    symmetric-branch amplitudes."""
    h = np.array(
        [
            [setting.top_frequency_hz, -setting.internal_coupling_hz],
            [-setting.internal_coupling_hz, setting.bottom_frequency_hz],
        ]
    )
    vals, vecs = np.linalg.eigh(h)
    v = vecs[:, 0]
    if v[0] + v[1] < 0:  # fix overall sign so the vector is 'mostly positive'
        v = -v
    g = setting.bare_coupling_hz * (v[0] - v[1])
    return vals[0], vals[1], g


def test_symmetric_setting_is_dark():
    s = TcqSetting(5.083e9, 5.083e9, 150e6, 30e6)
    modes = diagonalize_tcq(s)
    assert modes.effective_coupling_hz == pytest.approx(0.0, abs=1e-6)
    # split at degeneracy is twice the internal coupling
    assert modes.antisymmetric_frequency_hz - modes.symmetric_frequency_hz == pytest.approx(
        2 * 150e6
    )
    assert modes.symmetric_frequency_hz == pytest.approx(5.083e9 - 150e6)


@pytest.mark.parametrize("delta", [5e6, 30e6, 150e6, 400e6])
def test_matches_numpy_diagonalisation(delta):
    s = TcqSetting(5.0e9 + delta, 5.0e9, 150e6, 30e6)
    modes = diagonalize_tcq(s)
    f_sym, f_anti, g = eig_oracle(s)
    assert modes.symmetric_frequency_hz == pytest.approx(f_sym, rel=1e-12)
    assert modes.antisymmetric_frequency_hz == pytest.approx(f_anti, rel=1e-12)
    assert modes.effective_coupling_hz == pytest.approx(g, rel=1e-9)


@pytest.mark.parametrize("delta", [1e6, 20e6, 80e6])
def test_effective_coupling_is_odd_in_asymmetry(delta):
    up = diagonalize_tcq(TcqSetting(5e9 + delta, 5e9, 150e6, 30e6))
    down = diagonalize_tcq(TcqSetting(5e9, 5e9 + delta, 150e6, 30e6))
    assert up.effective_coupling_hz == pytest.approx(-down.effective_coupling_hz, rel=1e-9)
    assert up.effective_coupling_hz != 0.0


@pytest.mark.parametrize(
    "detuning,coupling",
    [(0.0, 3.5e6), (0.0, -3.5e6), (-52e6, 3.5e6), (25e6, 1e6), (0.0, 0.0)],
)
def test_coupling_to_setting_roundtrip(detuning, coupling):
    base = idle_setting(default_config().l_qubits[0])
    target_sym = diagonalize_tcq(base).symmetric_frequency_hz + detuning
    out = coupling_to_setting(detuning, coupling, base)
    modes = diagonalize_tcq(out)
    assert modes.symmetric_frequency_hz == pytest.approx(target_sym, rel=1e-9)
    assert modes.effective_coupling_hz == pytest.approx(coupling, rel=1e-6, abs=1e-3)


def test_unachievable_coupling_raises():
    base = idle_setting(default_config().l_qubits[0])
    with pytest.raises(ValueError, match="achievable"):
        coupling_to_setting(0.0, 2 * base.bare_coupling_hz, base)


def test_idle_setting_places_computational_mode_at_idle():
    q = default_config().l_qubits[0]
    modes = diagonalize_tcq(idle_setting(q))
    assert modes.symmetric_frequency_hz == pytest.approx(q.idle_frequency_hz)
    assert modes.effective_coupling_hz == pytest.approx(0.0, abs=1e-9)
