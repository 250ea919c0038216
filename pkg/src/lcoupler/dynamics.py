"""Time-dependent Lindblad dynamics on the truncated excitation basis.

Chain layout: site 0 is the L1 end of the waveguide, the last site is the L2
end, and the sites between hold the retained CPW modes in ascending index
order.  Energies are tracked as frequencies (Hz) in the frame rotating at the
target mode; the integrator multiplies by 2*pi.  The standing-wave parity of
the modes shows up as alternating coupling signs at the L2 end:
sign(mode m) = (-1)**(m - m_target), with the L1 end all positive.  That
convention lives in mode_sign() below and nowhere else.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .basis import BasisLabel, DensityOperator, basis_index, build_basis
from .channels import QuantumChannel, superop_to_choi, vec
from .config import DeviceConfig
from .pulses import PulseSchedule, build_transfer_schedule

_HERMITICITY_SAMPLES = 10


def mode_sign(mode_index: int, target_mode_index: int, end: str) -> float:
    """Coupling sign of a given waveguide end to mode m.

    Opposite ends of a resonator see alternating mode parities; the target
    mode couples with + at both ends.
    """
    if end == "L1":
        return 1.0
    return float((-1) ** ((mode_index - target_mode_index) % 2))


def _lowering_operator(basis: list[BasisLabel], site: int) -> np.ndarray:
    index = basis_index(basis)
    d = len(basis)
    a = np.zeros((d, d), dtype=complex)
    for j, label in enumerate(basis):
        n = label.occupations[site]
        if n == 0:
            continue
        lowered = list(label.occupations)
        lowered[site] = n - 1
        i = index[tuple(lowered)]
        a[i, j] = math.sqrt(n)
    return a


def _number_operator(basis: list[BasisLabel], site: int) -> np.ndarray:
    return np.diag([float(label.occupations[site]) for label in basis]).astype(complex)


def _exchange_operator(
    basis: list[BasisLabel], qubit_site: int, mode_sites: list[int], signs: list[float]
) -> np.ndarray:
    """sum_m s_m (sigma+_q a_m + h.c.), unit coupling."""
    index = basis_index(basis)
    d = len(basis)
    op = np.zeros((d, d), dtype=complex)
    for j, label in enumerate(basis):
        occ = label.occupations
        if occ[qubit_site] != 0:
            continue
        for m_site, s in zip(mode_sites, signs):
            n = occ[m_site]
            if n == 0:
                continue
            raised = list(occ)
            raised[qubit_site] = 1
            raised[m_site] = n - 1
            i = index[tuple(raised)]
            op[i, j] += s * math.sqrt(n)
    return op + op.conj().T


@dataclass
class HamiltonianModel:
    """H(t)/h on the chain basis, split into static and driven parts.

    matrix_at returns Hz; the equation of motion applies the 2*pi.  The _e
    operators belong to the schedule's g_e/det_e columns (the L1 end of the
    chain), the _r operators to g_r/det_r (the L2 end); emitter_site and
    receiver_site resolve the schedule's role labels to chain sites.
    """

    basis: list[BasisLabel]
    static_hz: np.ndarray
    coupling_e: np.ndarray
    coupling_r: np.ndarray
    number_e: np.ndarray
    number_r: np.ndarray
    schedule: PulseSchedule
    emitter_site: int
    receiver_site: int

    @property
    def dim(self) -> int:
        return len(self.basis)

    def controls_at(self, t_s: float | np.ndarray) -> tuple:
        s = self.schedule
        return (
            np.interp(t_s, s.times_s, s.g_e_hz),
            np.interp(t_s, s.times_s, s.g_r_hz),
            np.interp(t_s, s.times_s, s.det_e_hz),
            np.interp(t_s, s.times_s, s.det_r_hz),
        )

    def matrix_at(self, t_s: float) -> np.ndarray:
        g_e, g_r, det_e, det_r = self.controls_at(t_s)
        return (
            self.static_hz
            + g_e * self.coupling_e
            + g_r * self.coupling_r
            + det_e * self.number_e
            + det_r * self.number_r
        )


def build_hamiltonian(
    cfg: DeviceConfig, schedule: PulseSchedule, truncation: int = 1
) -> HamiltonianModel:
    """Assemble the chain Hamiltonian for a schedule.

    Schedule columns are positional: the g_e/det_e pair always drives the L1
    end of the chain and g_r/det_r the L2 end.  The schedule's
    emitter/receiver labels say which qubit currently plays which role (a
    reversed schedule carries exchanged columns and swapped labels) and are
    used for state placement and population reporting.
    """
    modes = cfg.cpw.modes_retained
    basis = build_basis(truncation, modes)
    indices = cfg.mode_indices()
    target_pos = cfg.target_mode_offset()
    target_freq = cfg.cpw.mode_frequencies_hz[target_pos]

    d = len(basis)
    static = np.zeros((d, d), dtype=complex)
    mode_sites = list(range(1, modes + 1))
    for pos, site in enumerate(mode_sites):
        delta = cfg.cpw.mode_frequencies_hz[pos] - target_freq
        static += delta * _number_operator(basis, site)

    l1_site, l2_site = 0, len(basis[0].occupations) - 1
    names = {cfg.l_qubits[0].name: l1_site, cfg.l_qubits[1].name: l2_site}
    try:
        e_site = names[schedule.emitter]
        r_site = names[schedule.receiver]
    except KeyError as exc:
        raise ValueError(f"schedule names unknown qubit {exc}") from exc
    if e_site == r_site:
        raise ValueError("schedule emitter and receiver are the same qubit")

    def exchange(site: int) -> np.ndarray:
        end = "L1" if site == l1_site else "L2"
        signs = [mode_sign(m, cfg.cpw.target_mode_index, end) for m in indices]
        return _exchange_operator(basis, site, mode_sites, signs)

    model = HamiltonianModel(
        basis=basis,
        static_hz=static,
        coupling_e=exchange(l1_site),
        coupling_r=exchange(l2_site),
        number_e=_number_operator(basis, l1_site),
        number_r=_number_operator(basis, l2_site),
        schedule=schedule,
        emitter_site=e_site,
        receiver_site=r_site,
    )

    rng = np.random.default_rng(0)
    for t in rng.uniform(0.0, max(schedule.duration_s, 1e-12), _HERMITICITY_SAMPLES):
        h = model.matrix_at(t)
        if not np.allclose(h, h.conj().T, atol=1e-9):
            raise ValueError("Hamiltonian is not hermitian at a sampled time")
    return model


@dataclass
class CollapseSet:
    """Lindblad operators with rates folded in (units 1/sqrt(s))."""

    operators: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def lossless(cls) -> "CollapseSet":
        return cls([])

    @classmethod
    def from_config(cls, cfg: DeviceConfig, basis: list[BasisLabel]) -> "CollapseSet":
        """Amplitude damping on every site plus pure qubit dephasing.

        1/T_phi = 1/T2 - 1/(2 T1), clamped at zero if T2 exceeds the 2*T1
        limit.  Mode T1 values follow the retained-window ordering.
        """
        n_sites = len(basis[0].occupations)
        modes = n_sites - 2
        ops: list[np.ndarray] = []

        qubit_sites = {0: cfg.l_qubits[0], n_sites - 1: cfg.l_qubits[1]}
        for site, qubit in qubit_sites.items():
            ops.append(math.sqrt(1.0 / qubit.t1_s) * _lowering_operator(basis, site))
            gamma_phi = 1.0 / qubit.t2_s - 0.5 / qubit.t1_s
            if gamma_phi < 0.0:
                warnings.warn(
                    f"{qubit.name}: T2 exceeds 2*T1, clamping pure dephasing to zero",
                    stacklevel=2,
                )
                gamma_phi = 0.0
            if gamma_phi > 0.0:
                ops.append(math.sqrt(2.0 * gamma_phi) * _number_operator(basis, site))

        for pos in range(modes):
            t1 = cfg.cpw.mode_t1_s[pos]
            ops.append(math.sqrt(1.0 / t1) * _lowering_operator(basis, pos + 1))
        return cls(ops)

    def dissipator_pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(l, l.conj().T @ l) for l in self.operators]


def _integrate_matrix(
    model: HamiltonianModel,
    collapse: CollapseSet,
    m0: np.ndarray,
    tol: float,
) -> np.ndarray:
    """Propagate matrices under the (linear) Lindblad generator.

    m0 may be a single d x d matrix or a stack (..., d, d); stacked inputs
    share one adaptive solve, which channel extraction leans on.
    """
    m0 = np.asarray(m0, dtype=complex)
    duration = model.schedule.duration_s
    if duration <= 0.0:
        return m0.copy()
    shape = m0.shape
    pairs = collapse.dissipator_pairs()
    two_pi = 2.0 * math.pi

    def rhs(t, y):
        rho = y.reshape(shape)
        h = model.matrix_at(t)
        out = -1j * two_pi * (h @ rho - rho @ h)
        for l, ldl in pairs:
            out += l @ rho @ l.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
        return out.reshape(-1)

    sol = solve_ivp(
        rhs,
        (0.0, duration),
        m0.reshape(-1),
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-3,
        max_step=duration / 64.0,
        dense_output=False,
    )
    if not sol.success:
        raise RuntimeError(f"integrator failed: {sol.message}")
    return sol.y[:, -1].reshape(shape)


def _integrate_state(model: HamiltonianModel, psi0: np.ndarray, tol: float) -> np.ndarray:
    """Schrodinger fast path for pure lossless evolution."""
    duration = model.schedule.duration_s
    if duration <= 0.0:
        return np.array(psi0, dtype=complex)
    two_pi = 2.0 * math.pi

    def rhs(t, y):
        return -1j * two_pi * (model.matrix_at(t) @ y)

    sol = solve_ivp(
        rhs,
        (0.0, duration),
        np.asarray(psi0, dtype=complex),
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-3,
        max_step=duration / 64.0,
    )
    if not sol.success:
        raise RuntimeError(f"integrator failed: {sol.message}")
    return sol.y[:, -1]


def evolve(
    model: HamiltonianModel,
    collapse: CollapseSet | None,
    rho0: DensityOperator,
    tol: float = 1e-9,
) -> DensityOperator:
    """Integrate the master equation over the model's schedule."""
    if list(rho0.basis) != list(model.basis):
        raise ValueError("state basis does not match the Hamiltonian basis")
    rho0.validate()
    collapse = collapse or CollapseSet.lossless()
    final = _integrate_matrix(model, collapse, rho0.matrix, tol)
    out = DensityOperator(final, model.basis)
    out.validate(trace_tol=1e-9, eig_floor=-1e-8)
    return out


@dataclass
class TransferResult:
    """End-of-schedule populations of a transfer simulation.

    pop_emitter / pop_receiver are the probabilities that the respective
    qubit is excited; pop_other is the probability that only modes hold the
    excitation.  Under loss the remainder sits in the joint ground state.
    """

    pop_emitter: float
    pop_receiver: float
    pop_other: float
    final_state: DensityOperator
    method: str
    g_hz: float
    sweep_duration_s: float
    total_duration_s: float
    lossy: bool
    saturated: bool = False

    def as_row(self) -> dict:
        return {
            "g_hz": self.g_hz,
            "T_s": self.sweep_duration_s,
            "pop_emitter": self.pop_emitter,
            "pop_receiver": self.pop_receiver,
            "pop_other": self.pop_other,
            "saturated": int(self.saturated),
        }


def _populations(rho: DensityOperator, emitter_site: int, receiver_site: int) -> tuple:
    probs = np.real(np.diag(rho.matrix))
    pop_e = pop_r = pop_other = 0.0
    for p, label in zip(probs, rho.basis):
        occ = label.occupations
        if occ[emitter_site] > 0:
            pop_e += p
        if occ[receiver_site] > 0:
            pop_r += p
        if occ[emitter_site] == 0 and occ[receiver_site] == 0 and label.mode_total > 0:
            pop_other += p
    return float(pop_e), float(pop_r), float(pop_other)


def simulate_transfer(
    cfg: DeviceConfig,
    schedule: PulseSchedule | None = None,
    lossy: bool = True,
    truncation: int = 1,
    tol: float = 1e-9,
) -> TransferResult:
    """Run one transfer with the emitter excited and everything else ground.

    Lossless runs use the pure-state fast path; the density route gives the
    same populations and is exercised when collapse operators are present.
    """
    if schedule is None:
        schedule = build_transfer_schedule(cfg)
    model = build_hamiltonian(cfg, schedule, truncation)
    idx = basis_index(model.basis)
    occ0 = [0] * len(model.basis[0].occupations)
    occ0[model.emitter_site] = 1
    start = idx[tuple(occ0)]

    if lossy:
        collapse = CollapseSet.from_config(cfg, model.basis)
        rho0 = DensityOperator.single_excitation(model.emitter_site, model.basis)
        final = evolve(model, collapse, rho0, tol)
    else:
        psi0 = np.zeros(model.dim, dtype=complex)
        psi0[start] = 1.0
        psi = _integrate_state(model, psi0, tol)
        final = DensityOperator.from_pure(psi, model.basis)

    pop_e, pop_r, pop_other = _populations(final, model.emitter_site, model.receiver_site)
    return TransferResult(
        pop_emitter=pop_e,
        pop_receiver=pop_r,
        pop_other=pop_other,
        final_state=final,
        method=schedule.method,
        g_hz=schedule.g_hz,
        sweep_duration_s=schedule.sweep_duration_s,
        total_duration_s=schedule.duration_s,
        lossy=lossy,
        saturated=schedule.saturated(cfg.transfer.coupling_cap_hz),
    )


@dataclass
class SweepResult:
    method: str
    g_values_hz: list[float]
    t_values_s: list[float]
    results: list[list[TransferResult | None]]
    errors: list[list[str | None]]

    def receiver_population_grid(self) -> np.ndarray:
        grid = np.full((len(self.g_values_hz), len(self.t_values_s)), np.nan)
        for i, row in enumerate(self.results):
            for j, r in enumerate(row):
                if r is not None:
                    grid[i, j] = r.pop_receiver
        return grid

    def saturated_grid(self) -> np.ndarray:
        grid = np.zeros((len(self.g_values_hz), len(self.t_values_s)), dtype=bool)
        for i, row in enumerate(self.results):
            for j, r in enumerate(row):
                if r is not None:
                    grid[i, j] = r.saturated
        return grid

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["g_hz", "T_s", "pop_emitter", "pop_receiver", "pop_other", "saturated"]
            )
            for i, g in enumerate(self.g_values_hz):
                for j, t in enumerate(self.t_values_s):
                    r = self.results[i][j]
                    if r is None:
                        writer.writerow([f"{g:.9e}", f"{t:.9e}", "", "", "", ""])
                        continue
                    writer.writerow(
                        [
                            f"{g:.9e}",
                            f"{t:.9e}",
                            f"{r.pop_emitter:.9e}",
                            f"{r.pop_receiver:.9e}",
                            f"{r.pop_other:.9e}",
                            int(r.saturated),
                        ]
                    )


def sweep_transfer(
    cfg: DeviceConfig,
    method,
    g_grid_hz,
    t_grid_s,
    lossy: bool = False,
    truncation: int = 1,
    tol: float = 1e-9,
) -> SweepResult:
    """Transfer populations over a (g, T) grid.

    Ramp durations stay at the configured value while the sweep time varies.
    Cells whose corrected coupling exceeds the configured cap are still
    simulated but flagged saturated.  Per-cell failures are recorded, not
    raised.
    """
    if len(g_grid_hz) == 0 or len(t_grid_s) == 0:
        raise ValueError("sweep grids must be nonempty")
    ramp_total = cfg.transfer.total_duration_s - cfg.transfer.satd_duration_s
    results: list[list[TransferResult | None]] = []
    errors: list[list[str | None]] = []
    for g in g_grid_hz:
        row: list[TransferResult | None] = []
        err_row: list[str | None] = []
        for t in t_grid_s:
            try:
                schedule = build_transfer_schedule(
                    cfg,
                    method=method,
                    g_hz=float(g),
                    sweep_duration_s=float(t),
                    total_duration_s=float(t) + ramp_total,
                )
                row.append(simulate_transfer(cfg, schedule, lossy, truncation, tol))
                err_row.append(None)
            except Exception as exc:  # per-cell errors must not kill the grid
                row.append(None)
                err_row.append(str(exc))
        results.append(row)
        errors.append(err_row)
    method_name = getattr(method, "value", str(method))
    return SweepResult(
        method=method_name,
        g_values_hz=[float(g) for g in g_grid_hz],
        t_values_s=[float(t) for t in t_grid_s],
        results=results,
        errors=errors,
    )


# -- channel extraction ------------------------------------------------------

_SUBSYSTEMS = ("pair", "l1", "l2", "path")


def _comp_occupations(bits: tuple[int, ...], sites: tuple[int, ...], n_sites: int) -> tuple:
    occ = [0] * n_sites
    for b, s in zip(bits, sites):
        occ[s] = b
    return tuple(occ)


def extract_channel(
    cfg: DeviceConfig,
    schedule: PulseSchedule,
    subsystem: str = "pair",
    lossy: bool = True,
    tol: float = 1e-9,
    frame_correct: bool = True,
) -> QuantumChannel:
    """CPTP map of a schedule on the l-qubit computational space.

    A complete operator basis of the input space is evolved with modes in
    vacuum; modes are traced out at the end, so any population left in them
    lands on computational ground states.  The per-input probability of that
    escape is recorded in leakage_in.  With frame_correct the deterministic
    detuning phase (half the per-qubit ramp integral, symmetric ramps) is
    removed by a virtual Z on each qubit.

    subsystem: "pair" (both l-qubits in and out), "l1"/"l2" (one qubit, same
    in and out), or "path" (input on the schedule's emitter, output on the
    receiver).
    """
    sub = subsystem.lower()
    if sub not in _SUBSYSTEMS:
        raise ValueError(f"unknown subsystem {subsystem!r}, pick one of {_SUBSYSTEMS}")

    l1_name, l2_name = cfg.l_qubits[0].name, cfg.l_qubits[1].name
    if sub == "pair":
        in_names = out_names = (l1_name, l2_name)
    elif sub == "path":
        in_names, out_names = (schedule.emitter,), (schedule.receiver,)
    else:
        name = l1_name if sub == "l1" else l2_name
        in_names = out_names = (name,)

    truncation = 2 if len(in_names) == 2 else 1
    model = build_hamiltonian(cfg, schedule, truncation)
    collapse = CollapseSet.from_config(cfg, model.basis) if lossy else CollapseSet.lossless()
    basis = model.basis
    idx = basis_index(basis)
    n_sites = len(basis[0].occupations)

    site_of = {l1_name: 0, l2_name: n_sites - 1}
    in_sites = tuple(site_of[n] for n in in_names)
    out_sites = tuple(site_of[n] for n in out_names)
    k_in, k_out = len(in_sites), len(out_sites)
    d_in, d_out = 2**k_in, 2**k_out

    comp_in = [
        idx[_comp_occupations(tuple(int(b) for b in f"{i:0{k_in}b}"), in_sites, n_sites)]
        for i in range(d_in)
    ]
    # map each chain label to its output computational bits and the rest of
    # the occupation pattern; labels with equal rest patterns are traced
    rest_sites = [s for s in range(n_sites) if s not in out_sites]
    out_key = []
    for label in basis:
        occ = label.occupations
        bits = 0
        valid = True
        for s in out_sites:
            if occ[s] > 1:
                valid = False
                break
            bits = (bits << 1) | occ[s]
        out_key.append((bits if valid else -1, tuple(occ[s] for s in rest_sites)))
    excited_modes = np.array([1.0 if l.mode_total > 0 else 0.0 for l in basis])

    stack = np.zeros((d_in * d_in, len(basis), len(basis)), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            stack[i * d_in + j, comp_in[i], comp_in[j]] = 1.0
    finals = _integrate_matrix(model, collapse, stack, tol)

    superop = np.zeros((d_out * d_out, d_in * d_in), dtype=complex)
    leakage = np.zeros(d_in)
    for col in range(d_in * d_in):
        final = finals[col]
        reduced = np.zeros((d_out, d_out), dtype=complex)
        for a, (bits_a, rest_a) in enumerate(out_key):
            if bits_a < 0:
                continue
            for b, (bits_b, rest_b) in enumerate(out_key):
                if bits_b < 0 or rest_a != rest_b:
                    continue
                reduced[bits_a, bits_b] += final[a, b]
        superop[:, col] = vec(reduced)
        i, j = divmod(col, d_in)
        if i == j:
            leakage[i] = float(np.real(np.sum(excited_modes * np.diag(final))))

    if frame_correct:
        phi_e, phi_r = schedule.detuning_phase_rad()
        chi = 0.5 * (phi_e + phi_r)
        phases = np.array(
            [np.exp(1j * chi * bin(i).count("1")) for i in range(d_out)], dtype=complex
        )
        u = np.diag(phases)
        superop = np.kron(u, u.conj()) @ superop

    channel = QuantumChannel(superop, d_out, leakage_in=leakage, label=f"{sub}-channel")
    choi = superop_to_choi(superop)
    eigs = np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))
    if eigs[0] < -1e-8:
        raise ValueError(f"extracted channel is not CP; Choi spectrum {np.array2string(eigs)}")
    deficit = channel.trace_preservation_deficit()
    if deficit > 1e-8:
        raise ValueError(f"extracted channel is not TP, deficit {deficit:.3e}")
    return channel
