"""Randomized benchmarking of interconnect circuits at the density-matrix level.

Two protocols share one noisy circuit executor.  Network benchmarking bounces
a carrier qubit between the two l-qubits: each segment is a random
single-qubit Clifford on the carrier followed by a transfer, the whole
sequence is undone by a single inverting Clifford, and the decay of the
return probability with segment count gives the error per segment,
EPS = (1 - p) / 2.  Two-qubit RB draws uniform elements of the two-qubit
Clifford group on the data qubits, executes their compiled decompositions
(local gates plus transfers), and converts the fitted decay to an error per
gate, EPG = 3 (1 - p) / 4.  Interleaved mode inserts a fixed composite
between the random elements; its error follows from the ratio of the
interleaved and reference decays.

Noise is attached to operations, not to wall-clock time slices: transfers
execute as CPTP pair channels, pulses append depolarizing with a per-pulse
probability, CZs append two-qubit depolarizing, and bystanders optionally
decohere for the duration of the op.  Measured populations pass through a
per-qubit readout confusion matrix and multinomial shot sampling, and
sequences start from per-qubit thermal states, so state preparation and
measurement errors move only the amplitude and offset of the decay, never
the fitted p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce

import numpy as np
from scipy.optimize import curve_fit

from .channels import (
    QuantumChannel,
    amplitude_damping_channel,
    apply_to_qubits,
    dephasing_channel,
    depolarizing_channel,
    excitation_pump_channel,
    ideal_transfer_channel,
    ideal_transfer_unitary,
)
from .cliffords import (
    L_QUBIT_PAIR,
    QUBIT_ORDER,
    TWO_QUBIT_CLASS_SIZES,
    CliffordElement,
    GateKind,
    GateOp,
    data_block_unitary,
    embed_unitary,
    invert_sequence,
    single_qubit_cliffords,
    transfer_op,
    two_qubit_clifford,
    virtual_z,
)
from .config import DeviceConfig, load_config
from .rng import RngHandle

TRANSFER_DIRECTIONS = ("L1->L2", "L2->L1")

DEFAULT_NB_LENGTHS = (2, 4, 8, 16, 32, 64, 128)
DEFAULT_TQRB_LENGTHS = (1, 2, 4, 8, 16, 24, 32, 48)
DEFAULT_SEEDS_PER_LENGTH = 30
DEFAULT_SHOTS = 1000

CSV_HEADER = "length,seed,shots,survival,spectator_l1,spectator_l2"

TWO_QUBIT_GROUP_ORDER = sum(TWO_QUBIT_CLASS_SIZES)


def _ideal_half_channel(direction: str) -> QuantumChannel:
    """Lossless square-root transfer in the fixed (L1, L2) basis."""
    u = ideal_transfer_unitary(half=True)
    if direction == "L2->L1":
        swap = np.eye(4)[[0, 2, 1, 3]]
        u = swap @ u @ swap
    return QuantumChannel.from_unitary(u, label=f"half_transfer({direction})")


# ---------------------------------------------------------------------------
# state preparation and measurement


@dataclass(frozen=True)
class SpamModel:
    """Per-qubit readout confusion and thermal initialization."""

    readout_fidelity: dict[str, float]
    thermal_population: dict[str, float]

    def __post_init__(self) -> None:
        for name, f in self.readout_fidelity.items():
            if not 0.5 <= f <= 1.0:
                raise ValueError(f"readout fidelity for {name} out of range: {f}")
        for name, t in self.thermal_population.items():
            if not 0.0 <= t <= 0.5:
                raise ValueError(f"thermal population for {name} out of range: {t}")

    def confusion_matrix(self, qubit: str) -> np.ndarray:
        """Column-stochastic 2x2 map from true to reported outcome."""
        f = self.readout_fidelity.get(qubit, 1.0)
        return np.array([[f, 1.0 - f], [1.0 - f, f]])

    def initial_qubit_state(self, qubit: str) -> np.ndarray:
        t = self.thermal_population.get(qubit, 0.0)
        return np.diag([1.0 - t, t]).astype(complex)

    def with_readout_fidelity(self, fidelity: float) -> "SpamModel":
        """Copy with every qubit's readout fidelity replaced."""
        return SpamModel(
            {q: fidelity for q in self.readout_fidelity},
            dict(self.thermal_population),
        )

    @classmethod
    def ideal(cls, qubits: tuple[str, ...] = QUBIT_ORDER) -> "SpamModel":
        return cls({q: 1.0 for q in qubits}, {q: 0.0 for q in qubits})

    @classmethod
    def from_config(cls, cfg: DeviceConfig | None = None) -> "SpamModel":
        cfg = cfg if cfg is not None else load_config()
        qubits = [*cfg.l_qubits, *cfg.data_qubits]
        return cls(
            {q.name: q.readout_fidelity for q in qubits},
            {q.name: q.thermal_population for q in qubits},
        )


def spam_apply(
    distribution: np.ndarray,
    spam: SpamModel,
    qubits: tuple[str, ...],
    rng: RngHandle | np.random.Generator,
    shots: int,
) -> np.ndarray:
    """Empirical outcome distribution after confusion and shot sampling.

    The ideal distribution over computational outcomes (first qubit is the
    most significant bit) is mixed by the tensor product of per-qubit
    confusion matrices, then ``shots`` outcomes are drawn multinomially.
    Returns counts / shots.
    """
    dist = np.asarray(distribution, dtype=float)
    if dist.ndim != 1 or dist.size != 2 ** len(qubits):
        raise ValueError("distribution size does not match the qubit list")
    if shots <= 0:
        raise ValueError("shots must be positive")
    dist = np.clip(dist, 0.0, None)
    total = dist.sum()
    if not math.isclose(total, 1.0, abs_tol=1e-6):
        raise ValueError(f"distribution is not normalized: sum {total}")
    confusion = reduce(np.kron, [spam.confusion_matrix(q) for q in qubits])
    noisy = confusion @ (dist / total)
    noisy = np.clip(noisy, 0.0, None)
    noisy /= noisy.sum()
    gen = rng.generator() if isinstance(rng, RngHandle) else rng
    counts = gen.multinomial(shots, noisy)
    return counts / shots


# ---------------------------------------------------------------------------
# noise model


@dataclass
class NoiseModel:
    """Circuit-level noise attached to each kind of operation.

    transfer_channels maps a direction string to the CPTP map applied to the
    (L1, L2) pair in place of the ideal transfer unitary.  sq_depolarizing
    and cz_depolarizing are depolarizing probabilities added after each
    physical pulse / CZ.  With idle_decoherence set, qubits not addressed by
    an op relax and dephase for its duration.  transfer_is_swap tells the
    network-benchmarking runner whether the carrier changes sides; identity
    channels with the flag cleared give the population-return control
    experiment.
    """

    transfer_channels: dict[str, QuantumChannel]
    half_transfer_channels: dict[str, QuantumChannel] = field(default_factory=dict)
    sq_depolarizing: dict[str, float] = field(default_factory=dict)
    cz_depolarizing: dict[frozenset, float] = field(default_factory=dict)
    idle_decoherence: bool = False
    qubit_t1_s: dict[str, float] = field(default_factory=dict)
    qubit_tphi_s: dict[str, float] = field(default_factory=dict)
    transfer_is_swap: bool = True
    transfer_duration_s: float = 206e-9

    def validate(self) -> "NoiseModel":
        for table in (self.transfer_channels, self.half_transfer_channels):
            for direction, channel in table.items():
                if direction not in TRANSFER_DIRECTIONS:
                    raise ValueError(f"unknown transfer direction {direction!r}")
                if channel.dim != 4:
                    raise ValueError("transfer channels act on the l-qubit pair")
                channel.validate()
        for label, probs in (
            ("sq_depolarizing", self.sq_depolarizing),
            ("cz_depolarizing", self.cz_depolarizing),
        ):
            for key, p in probs.items():
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"{label}[{key}] out of range: {p}")
        return self

    @classmethod
    def ideal(cls) -> "NoiseModel":
        """Lossless swaps, no gate noise, no decoherence."""
        swap = ideal_transfer_channel()
        return cls(
            transfer_channels={d: swap for d in TRANSFER_DIRECTIONS},
            half_transfer_channels={
                d: _ideal_half_channel(d) for d in TRANSFER_DIRECTIONS
            },
        )

    @classmethod
    def static_transfers(cls) -> "NoiseModel":
        """Transfers replaced by the identity and the carrier kept in place.

        Network benchmarking under this model reproduces the moving-carrier
        survival exactly, which pins the bookkeeping of the swap variant.
        """
        ident = QuantumChannel.identity(4)
        return cls(
            transfer_channels={d: ident for d in TRANSFER_DIRECTIONS},
            transfer_is_swap=False,
        )

    @classmethod
    def with_transfer_depolarizing(cls, infidelity: float) -> "NoiseModel":
        """Ideal swap followed by depolarizing on the received qubit.

        A single-qubit depolarizing with probability lam has average
        infidelity lam / 2, so the channel is built with lam = 2 * infidelity
        and network benchmarking should report EPS equal to ``infidelity``.
        """
        if not 0.0 <= infidelity < 0.5:
            raise ValueError("transfer infidelity must lie in [0, 0.5)")
        lam = 2.0 * infidelity
        swap = ideal_transfer_channel()
        one = depolarizing_channel(lam)
        ident = QuantumChannel.identity(2)
        channels = {}
        for direction in TRANSFER_DIRECTIONS:
            receiver = direction.split("->")[1]
            pair = ident.tensor(one) if receiver == "L2" else one.tensor(ident)
            channels[direction] = pair.compose(swap)
        return cls(transfer_channels=channels)

    @classmethod
    def with_transfer_leakage(cls, leak_prob: float) -> "NoiseModel":
        """Ideal swap followed by an excitation pump on the emitting side.

        After the swap the emitter slot holds whatever the receiver held
        before, so pumping it injects a spurious excitation into the idle
        qubit while leaving the moved carrier state untouched.  The spectator
        ground population then decays as (1 - leak_prob)^n.
        """
        if not 0.0 <= leak_prob < 1.0:
            raise ValueError("leak probability must lie in [0, 1)")
        swap = ideal_transfer_channel()
        pump = excitation_pump_channel(leak_prob)
        ident = QuantumChannel.identity(2)
        channels = {}
        for direction in TRANSFER_DIRECTIONS:
            emitter = direction.split("->")[0]
            pair = pump.tensor(ident) if emitter == "L1" else ident.tensor(pump)
            channels[direction] = pair.compose(swap)
        return cls(transfer_channels=channels)

    @classmethod
    def from_config(
        cls,
        cfg: DeviceConfig | None = None,
        transfer_channels: dict[str, QuantumChannel] | None = None,
        half_transfer_channels: dict[str, QuantumChannel] | None = None,
        include_half: bool = False,
    ) -> "NoiseModel":
        """Full device noise: extracted transfer channels, per-pulse
        depolarizing from the calibrated Clifford errors, CZ depolarizing
        from the calibrated gate errors, and idle decoherence.

        Building the transfer channels integrates the pulse-level model for
        both directions, which takes a while; pass precomputed channels to
        skip it.  Calibrated single-qubit Clifford errors count one physical
        pulse per Clifford on average, so the per-pulse depolarizing
        probability is 2 * error (average infidelity of depolarizing is
        lam / 2).
        """
        from .dynamics import extract_channel
        from .pulses import build_transfer_schedule, reverse_schedule

        cfg = cfg if cfg is not None else load_config()
        if transfer_channels is None:
            forward = build_transfer_schedule(cfg)
            transfer_channels = {
                "L1->L2": extract_channel(cfg, forward, "pair", lossy=True),
                "L2->L1": extract_channel(cfg, reverse_schedule(forward), "pair", lossy=True),
            }
        if half_transfer_channels is None and include_half:
            half = build_transfer_schedule(cfg, method="sqrt_satd")
            half_transfer_channels = {
                "L1->L2": extract_channel(cfg, half, "pair", lossy=True),
                "L2->L1": extract_channel(cfg, reverse_schedule(half), "pair", lossy=True),
            }
        qubits = [*cfg.l_qubits, *cfg.data_qubits]
        tphi = {}
        for q in qubits:
            # 1/T2 = 1/(2 T1) + 1/Tphi
            rate = 1.0 / q.t2_s - 0.5 / q.t1_s
            tphi[q.name] = 1.0 / rate if rate > 0 else math.inf
        return cls(
            transfer_channels=transfer_channels,
            half_transfer_channels=half_transfer_channels or {},
            sq_depolarizing={q.name: 2.0 * q.sq_clifford_error for q in qubits},
            cz_depolarizing={
                frozenset(g.pair): g.error_per_gate * 4.0 / 3.0 for g in cfg.cz_gates
            },
            idle_decoherence=True,
            qubit_t1_s={q.name: q.t1_s for q in qubits},
            qubit_tphi_s=tphi,
            transfer_duration_s=cfg.transfer.total_duration_s,
        )


# ---------------------------------------------------------------------------
# noisy circuit execution


@lru_cache(maxsize=None)
def _depol_channel(lam: float, n_qubits: int) -> QuantumChannel:
    return depolarizing_channel(lam, n_qubits)


@lru_cache(maxsize=None)
def _idle_channel(t1_s: float, tphi_s: float, duration_s: float) -> QuantumChannel:
    ch = amplitude_damping_channel(1.0 - math.exp(-duration_s / t1_s))
    if math.isfinite(tphi_s):
        # coherences shrink by (1 - 2p) = exp(-duration / Tphi)
        p = 0.5 * (1.0 - math.exp(-duration_s / tphi_s))
        ch = dephasing_channel(p).compose(ch)
    return ch


_EMBED_CACHE: dict = {}


def _embedded_op_unitary(op: GateOp, order: tuple[str, ...]) -> np.ndarray:
    from .cliffords import op_matrix

    angle = op.params.get("angle_rad")
    key = (order, op.kind, op.targets, op.params.get("axis"), angle)
    cached = _EMBED_CACHE.get(key)
    if cached is None:
        positions = tuple(order.index(q) for q in op.targets)
        cached = embed_unitary(op_matrix(op), positions, len(order))
        _EMBED_CACHE[key] = cached
    return cached


class _CircuitRunner:
    """Executes gate ops on a density matrix under a NoiseModel."""

    def __init__(self, noise: NoiseModel, qubit_order: tuple[str, ...]):
        self.noise = noise
        self.order = tuple(qubit_order)
        self.n = len(self.order)
        self.pos = {q: i for i, q in enumerate(self.order)}

    def initial_state(self, spam: SpamModel) -> np.ndarray:
        return reduce(np.kron, [spam.initial_qubit_state(q) for q in self.order])

    def _channel(self, rho: np.ndarray, channel: QuantumChannel, qubits) -> np.ndarray:
        positions = tuple(self.pos[q] for q in qubits)
        return apply_to_qubits(channel, rho, positions, self.n)

    def _idle(self, rho: np.ndarray, targets: tuple[str, ...], duration_s: float) -> np.ndarray:
        if not self.noise.idle_decoherence or duration_s <= 0:
            return rho
        for q in self.order:
            if q in targets:
                continue
            t1 = self.noise.qubit_t1_s.get(q)
            if t1 is None:
                continue
            tphi = self.noise.qubit_tphi_s.get(q, math.inf)
            rho = self._channel(rho, _idle_channel(t1, tphi, duration_s), (q,))
        return rho

    def run_op(self, rho: np.ndarray, op: GateOp) -> np.ndarray:
        if op.kind is GateKind.TRANSFER:
            direction = op.params["direction"]
            half = bool(op.params.get("half"))
            table = (
                self.noise.half_transfer_channels
                if half
                else self.noise.transfer_channels
            )
            channel = table.get(direction)
            if channel is None:
                kind = "half-transfer" if half else "transfer"
                raise KeyError(f"noise model has no {kind} channel for {direction}")
            rho = self._channel(rho, channel, op.targets)
        else:
            u = _embedded_op_unitary(op, self.order)
            rho = u @ rho @ u.conj().T
            if op.kind is GateKind.SQ_ROT:
                lam = self.noise.sq_depolarizing.get(op.targets[0], 0.0)
                if lam > 0.0:
                    rho = self._channel(rho, _depol_channel(lam, 1), op.targets)
            elif op.kind is GateKind.CZ:
                lam = self.noise.cz_depolarizing.get(frozenset(op.targets), 0.0)
                if lam > 0.0:
                    rho = self._channel(rho, _depol_channel(lam, 2), op.targets)
        return self._idle(rho, op.targets, op.duration_s)

    def run_ops(self, rho: np.ndarray, ops) -> np.ndarray:
        for op in ops:
            rho = self.run_op(rho, op)
        return rho

    def run_clifford_1q(self, rho: np.ndarray, elem: CliffordElement, qubit: str) -> np.ndarray:
        """Apply a single-qubit Clifford as one unitary plus lumped noise.

        Depolarizing commutes with the twirl, so one application with the
        compounded probability equals per-pulse application.
        """
        u = embed_unitary(elem.unitary, (self.pos[qubit],), self.n)
        rho = u @ rho @ u.conj().T
        pulses = sum(1 for g in elem.decomposition if g.kind is GateKind.SQ_ROT)
        lam = self.noise.sq_depolarizing.get(qubit, 0.0)
        if lam > 0.0 and pulses:
            combined = 1.0 - (1.0 - lam) ** pulses
            rho = self._channel(rho, _depol_channel(combined, 1), (qubit,))
        duration = sum(g.duration_s for g in elem.decomposition)
        return self._idle(rho, (qubit,), duration)


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class RbRecord:
    length: int
    seed: int
    shots: int
    survival: float
    spectator_l1: float
    spectator_l2: float


@dataclass
class RbDataset:
    """Per-sequence benchmarking results.

    survival is the protocol's return probability (carrier read 0 for
    network benchmarking, both data qubits read 0 for two-qubit RB);
    spectator_l1 / spectator_l2 are the l-qubit ground-state populations of
    the same shots.
    """

    protocol: str
    records: list[RbRecord]

    def lengths(self) -> list[int]:
        return sorted({r.length for r in self.records})

    def series(self, channel: str = "survival"):
        """(lengths, mean, sem) arrays for one recorded channel."""
        if channel not in ("survival", "spectator_l1", "spectator_l2"):
            raise ValueError(f"unknown channel {channel!r}")
        lengths = self.lengths()
        means = np.empty(len(lengths))
        sems = np.empty(len(lengths))
        for i, n in enumerate(lengths):
            vals = np.array(
                [getattr(r, channel) for r in self.records if r.length == n]
            )
            means[i] = vals.mean()
            sems[i] = vals.std(ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
        return np.array(lengths), means, sems

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for r in self.records:
            lines.append(
                f"{r.length},{r.seed},{r.shots},{r.survival:.9f},"
                f"{r.spectator_l1:.9f},{r.spectator_l2:.9f}"
            )
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# network benchmarking


def _nb_single(
    noise: NoiseModel,
    spam: SpamModel,
    elements,
    length: int,
    seed: int,
    shots: int,
    gen: np.random.Generator,
) -> RbRecord:
    order = L_QUBIT_PAIR
    runner = _CircuitRunner(noise, order)
    rho = runner.initial_state(spam)
    carrier = "L1"
    sequence = []
    for _ in range(length):
        elem = elements[int(gen.integers(len(elements)))]
        sequence.append(elem)
        rho = runner.run_clifford_1q(rho, elem, carrier)
        receiver = "L2" if carrier == "L1" else "L1"
        rho = runner.run_op(
            rho, transfer_op(f"{carrier}->{receiver}", noise.transfer_duration_s)
        )
        # dark passage flips the sign of the moved amplitude; cancel it on
        # the receiving register as the compiled circuits do
        rho = runner.run_op(rho, virtual_z(receiver, math.pi))
        if noise.transfer_is_swap:
            carrier = receiver
    rho = runner.run_clifford_1q(rho, invert_sequence(sequence), carrier)
    measured = spam_apply(np.real(np.diag(rho)), spam, order, gen, shots)
    # order (L1, L2): L1 is the most significant bit
    p_l1_ground = measured[0] + measured[1]
    p_l2_ground = measured[0] + measured[2]
    survival = p_l1_ground if carrier == "L1" else p_l2_ground
    return RbRecord(length, seed, shots, survival, p_l1_ground, p_l2_ground)


def run_network_benchmarking(
    noise: NoiseModel,
    spam: SpamModel | None = None,
    lengths: tuple[int, ...] = DEFAULT_NB_LENGTHS,
    seeds_per_length: int = DEFAULT_SEEDS_PER_LENGTH,
    shots: int = DEFAULT_SHOTS,
    rng: RngHandle | None = None,
) -> RbDataset:
    """Carrier-bouncing benchmarking of the transfer link.

    Sequence lengths must be even so the carrier ends where it started and
    a single local Clifford can invert the composite.  Each (length, seed)
    pair draws from its own named random stream, so the dataset is
    reproducible record by record regardless of execution order.
    """
    noise.validate()
    spam = spam if spam is not None else SpamModel.ideal(L_QUBIT_PAIR)
    rng = rng if rng is not None else RngHandle(seed=0)
    for n in lengths:
        if n < 2 or n % 2:
            raise ValueError(f"sequence lengths must be even and >= 2, got {n}")
    elements = single_qubit_cliffords()
    records = []
    for n in lengths:
        for seed in range(seeds_per_length):
            gen = rng.stream("nb", n, seed).generator()
            records.append(_nb_single(noise, spam, elements, n, seed, shots, gen))
    return RbDataset("NB", records)


# ---------------------------------------------------------------------------
# two-qubit randomized benchmarking


def _tqrb_single(
    noise: NoiseModel,
    spam: SpamModel,
    length: int,
    seed: int,
    shots: int,
    gen: np.random.Generator,
    interleave: CliffordElement | None,
    cfg: DeviceConfig,
) -> RbRecord:
    runner = _CircuitRunner(noise, QUBIT_ORDER)
    rho = runner.initial_state(spam)
    sequence = []
    for _ in range(length):
        elem = two_qubit_clifford(int(gen.integers(TWO_QUBIT_GROUP_ORDER)), cfg)
        sequence.append(elem)
        rho = runner.run_ops(rho, elem.decomposition)
        if interleave is not None:
            sequence.append(interleave)
            rho = runner.run_ops(rho, interleave.decomposition)
    inverse = invert_sequence(sequence, cfg)
    rho = runner.run_ops(rho, inverse.decomposition)
    measured = spam_apply(np.real(np.diag(rho)), spam, QUBIT_ORDER, gen, shots)
    outcomes = np.arange(16)
    # order (D1, L1, L2, D2): D1 is bit 3, D2 bit 0
    survival = measured[(outcomes & 0b1000 == 0) & (outcomes & 0b0001 == 0)].sum()
    p_l1_ground = measured[outcomes & 0b0100 == 0].sum()
    p_l2_ground = measured[outcomes & 0b0010 == 0].sum()
    return RbRecord(length, seed, shots, survival, p_l1_ground, p_l2_ground)


def run_two_qubit_rb(
    noise: NoiseModel,
    spam: SpamModel | None = None,
    lengths: tuple[int, ...] = DEFAULT_TQRB_LENGTHS,
    seeds_per_length: int = DEFAULT_SEEDS_PER_LENGTH,
    shots: int = DEFAULT_SHOTS,
    rng: RngHandle | None = None,
    interleave: tuple[GateOp, ...] | None = None,
    cfg: DeviceConfig | None = None,
) -> RbDataset:
    """Clifford-group RB on the data qubits through compiled circuits.

    Every element executes op by op: dressing pulses, local CZs, transfers.
    With ``interleave`` the given composite (e.g. a compiled remote CNOT)
    runs after each random element; it must act as a two-qubit Clifford on
    the data block, which data_block_unitary enforces, and the fitted decay
    is meant to be divided by a reference run.
    """
    noise.validate()
    cfg = cfg if cfg is not None else load_config()
    spam = spam if spam is not None else SpamModel.ideal(QUBIT_ORDER)
    rng = rng if rng is not None else RngHandle(seed=0)
    for n in lengths:
        if n < 1:
            raise ValueError(f"sequence lengths must be >= 1, got {n}")
    inter_elem = None
    if interleave is not None:
        ops = tuple(interleave)
        inter_elem = CliffordElement(
            index=-1,
            unitary=data_block_unitary(ops),
            decomposition=ops,
            cnot_count=0,
        )
    protocol = "INTERLEAVED" if inter_elem is not None else "TQRB"
    records = []
    for n in lengths:
        for seed in range(seeds_per_length):
            gen = rng.stream("tqrb", protocol, n, seed).generator()
            records.append(
                _tqrb_single(noise, spam, n, seed, shots, gen, inter_elem, cfg)
            )
    return RbDataset(protocol, records)


# ---------------------------------------------------------------------------
# decay fitting


class FitError(RuntimeError):
    """The decay fit did not converge."""


@dataclass(frozen=True)
class DecayFitResult:
    """Parameters of survival = amplitude * decay**n + offset."""

    amplitude: float
    decay: float
    offset: float
    amplitude_err: float
    decay_err: float
    offset_err: float
    rate: float
    rate_convention: str
    residual_rms: float
    channel: str
    protocol: str


def _decay_model(n, a, p, b):
    return a * np.power(p, n) + b


def _rate_convention(protocol: str, channel: str) -> tuple[str, float]:
    if channel != "survival":
        return "leak per segment = 1 - p", 1.0
    if protocol == "NB":
        return "EPS = (1 - p) / 2", 0.5
    if protocol in ("TQRB", "INTERLEAVED"):
        return "EPG = 3 (1 - p) / 4", 0.75
    raise ValueError(f"unknown protocol {protocol!r}")


def fit_exponential(data: RbDataset, channel: str = "survival") -> DecayFitResult:
    """Weighted least-squares fit of A p^n + B to one recorded channel.

    Per-length standard errors weight the residuals.  Constant data (every
    mean identical, e.g. a noiseless run) short-circuits to p = 1 with zero
    rate, since the model is degenerate there.
    """
    lengths, means, sems = data.series(channel)
    if len(lengths) < 3:
        raise ValueError("need at least three distinct sequence lengths to fit")
    convention, factor = _rate_convention(data.protocol, channel)
    if np.ptp(means) < 1e-12:
        return DecayFitResult(
            amplitude=0.0,
            decay=1.0,
            offset=float(means[0]),
            amplitude_err=0.0,
            decay_err=0.0,
            offset_err=0.0,
            rate=0.0,
            rate_convention=convention,
            residual_rms=0.0,
            channel=channel,
            protocol=data.protocol,
        )
    positive = sems[sems > 0]
    floor = positive.min() if positive.size else 1.0
    sigma = np.where(sems > 0, sems, floor)
    offset0 = float(np.clip(means[-1], 0.0, 1.0))
    amp0 = float(np.clip(means[0] - offset0, 0.05, 1.5))
    mid = len(lengths) // 2
    frac = np.clip((means[mid] - offset0) / amp0, 1e-3, 0.999)
    p0 = float(np.clip(frac ** (1.0 / lengths[mid]), 0.2, 0.9999))
    try:
        params, cov = curve_fit(
            _decay_model,
            lengths,
            means,
            p0=[amp0, p0, offset0],
            sigma=sigma,
            absolute_sigma=True,
            bounds=([0.0, 0.0, 0.0], [1.5, 1.0, 1.0]),
            maxfev=20000,
        )
    except RuntimeError as exc:
        raise FitError(f"decay fit failed on channel {channel!r}: {exc}") from exc
    errs = np.sqrt(np.abs(np.diag(cov)))
    a, p, b = (float(v) for v in params)
    residual = float(np.sqrt(np.mean((_decay_model(lengths, a, p, b) - means) ** 2)))
    return DecayFitResult(
        amplitude=a,
        decay=p,
        offset=b,
        amplitude_err=float(errs[0]),
        decay_err=float(errs[1]),
        offset_err=float(errs[2]),
        rate=factor * (1.0 - p),
        rate_convention=convention,
        residual_rms=residual,
        channel=channel,
        protocol=data.protocol,
    )


def fit_leakage(data: RbDataset, channel: str = "spectator_l2") -> DecayFitResult:
    """Fit the spectator ground population; rate is the leak per segment."""
    return fit_exponential(data, channel=channel)


def eps_from_decay(fit: DecayFitResult, reference: DecayFitResult | None = None) -> float:
    """Error rate implied by a fitted decay.

    NB: EPS = (1 - p) / 2.  TQRB: EPG = 3 (1 - p) / 4.  INTERLEAVED needs the
    reference fit and uses the decay ratio, EPG = 3 (1 - p_int / p_ref) / 4.
    """
    if fit.protocol == "NB":
        return 0.5 * (1.0 - fit.decay)
    if fit.protocol == "TQRB":
        return 0.75 * (1.0 - fit.decay)
    if fit.protocol == "INTERLEAVED":
        if reference is None:
            raise ValueError("interleaved estimates need the reference fit")
        return 0.75 * (1.0 - fit.decay / reference.decay)
    raise ValueError(f"unknown protocol {fit.protocol!r}")
