"""State machines for the two three-pass QKD protocols, plus a Monte-Carlo harness.

One round exchanges three qubits over a bidirectional channel:

1. Alice prepares a random bit in a random basis (Z or X) and sends it.
2. Bob measures in a random basis and re-prepares his result as the return
   qubit.
3. Alice measures the return qubit in her preparation basis.  Across many
   rounds the outcome orthogonal to her prepared state appears with
   probability 1/4 on a noiseless channel; a deviation beyond a tolerance
   aborts (:func:`sb1_check`).
4. Bob sends a second qubit carrying the same bit value in the other basis.
5. Alice measures it in the other basis if step 3 returned her own state,
   else in the same basis.

Protocol 1 sifts on Bob's announced basis index J; Protocol 2 sifts on the
announced two-element partition M ({|0>,|+>} vs {|1>,|->}), which keeps every
round at the price of an inherent 1/16 error rate on a noiseless channel.

The channel model is an independent basis-preserving bit flip with
probability ``e`` per transmission, the simplest operational model with a
symmetric QBER in both bases.  The intercept-resend eavesdropper measures
every transit qubit in a uniformly random basis and forwards her outcome.

Monte-Carlo rounds are independent.  :func:`run_simulation` partitions
rounds over ``workers`` deterministic child RNG streams (spawned from the
seed), so reports are bit-for-bit reproducible for a fixed (seed, workers)
pair.  :func:`run_round` is the scalar reference path; the bulk simulator
uses a vectorized kernel with its own (equally deterministic) stream layout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .qmath import validate_qber


class Basis(enum.IntEnum):
    """The two mutually unbiased bases; J = 0 for Z, J = 1 for X."""

    Z = 0
    X = 1

    @property
    def j(self) -> int:
        return int(self)

    @property
    def other(self) -> "Basis":
        return Basis(1 - int(self))


class PureState(enum.IntEnum):
    """The four signal states, indexed as 2*basis + bit."""

    ZERO = 0   # |0> = |+z>
    ONE = 1    # |1> = |-z>
    PLUS = 2   # |+> = |+x>
    MINUS = 3  # |-> = |-x>

    @property
    def basis(self) -> Basis:
        return Basis(int(self) >> 1)

    @property
    def bit(self) -> int:
        return int(self) & 1

    @property
    def orthogonal(self) -> "PureState":
        return PureState(int(self) ^ 1)

    @property
    def m_value(self) -> int:
        """Partition label: 0 for {|0>, |+>}, 1 for {|1>, |->}."""
        return int(self) & 1

    def __str__(self) -> str:
        return ("|0>", "|1>", "|+>", "|->")[int(self)]


class Eavesdropper(enum.Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept-resend"


class ProtocolId(enum.Enum):
    P1 = "p1"
    P2 = "p2"


# Tolerance on |orthogonal fraction - 1/4| in the step-3 abort test; equals
# the basis-announced tolerable error limit of the return-pass key rate.
DEFAULT_SB1_TOLERANCE = 0.0617


def prepare(bit: int, basis: Basis) -> PureState:
    """Encode a classical bit in the given basis."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    return PureState(2 * int(basis) + bit)


def measure(state: PureState, basis: Basis, rng: np.random.Generator) -> PureState:
    """Projective measurement; cross-basis outcomes are uniform."""
    if state.basis == basis:
        return state
    return PureState(2 * int(basis) + int(rng.integers(0, 2)))


def channel_transmit(state: PureState, e: float, rng: np.random.Generator) -> PureState:
    """Bit-flip channel: with probability ``e`` the orthogonal state emerges."""
    validate_qber(e)
    if rng.random() < e:
        return state.orthogonal
    return state


def _eve_forward(state: PureState, rng: np.random.Generator) -> PureState:
    basis = Basis(int(rng.integers(0, 2)))
    return measure(state, basis, rng)


@dataclass(frozen=True)
class SimulationConfig:
    protocol: ProtocolId
    n_rounds: int
    channel_qber: float = 0.0
    eve: Eavesdropper = Eavesdropper.NONE
    rng_seed: int = 0
    sb1_tolerance: float = DEFAULT_SB1_TOLERANCE

    def __post_init__(self) -> None:
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        validate_qber(self.channel_qber)


@dataclass(frozen=True)
class RoundRecord:
    """Transcript of one protocol round at a single sequence position."""

    alice_bit: int
    alice_basis: Basis
    bob_basis: Basis
    bob_result: PureState        # Bob's measurement of the outbound qubit
    sb1_result: PureState        # Alice's measurement of the return qubit
    sb2_basis: Basis             # basis Alice used on the second return qubit
    sb2_result: PureState
    bob_j: int                   # announced basis index (protocol 1)
    m_value: int                 # announced partition label (protocol 2)

    @property
    def alice_state(self) -> PureState:
        return prepare(self.alice_bit, self.alice_basis)

    @property
    def alice_j(self) -> int:
        return self.alice_basis.j


def run_round(config: SimulationConfig, rng: np.random.Generator) -> RoundRecord:
    """Execute one round: three noisy transmissions plus both announcements."""
    e, eve = config.channel_qber, config.eve is Eavesdropper.INTERCEPT_RESEND

    def transit(state: PureState) -> PureState:
        state = channel_transmit(state, e, rng)
        if eve:
            state = _eve_forward(state, rng)
        return state

    alice_bit = int(rng.integers(0, 2))
    alice_basis = Basis(int(rng.integers(0, 2)))
    bob_basis = Basis(int(rng.integers(0, 2)))
    s_a = prepare(alice_bit, alice_basis)

    bob_result = measure(transit(s_a), bob_basis, rng)
    # Return pass: Bob re-prepares his result, Alice measures in her basis.
    sb1_result = measure(transit(bob_result), alice_basis, rng)
    # Second return qubit: same bit value, other basis.
    s_b2 = prepare(bob_result.bit, bob_basis.other)
    sb2_basis = alice_basis.other if sb1_result == s_a else alice_basis
    sb2_result = measure(transit(s_b2), sb2_basis, rng)

    return RoundRecord(
        alice_bit=alice_bit,
        alice_basis=alice_basis,
        bob_basis=bob_basis,
        bob_result=bob_result,
        sb1_result=sb1_result,
        sb2_basis=sb2_basis,
        sb2_result=sb2_result,
        bob_j=bob_basis.j,
        m_value=bob_result.m_value,
    )


def sift_p1(record: RoundRecord) -> Optional[tuple[int, PureState]]:
    """Protocol 1 sifting: (key_bit, determined state) or None to discard.

    Conclusive without the J announcement when the return-pass result is
    orthogonal to Alice's state; conclusive with matching J values when it
    equals her state and the second result carries the same bit in the other
    basis.  Every other pattern is discarded.
    """
    s_a = record.alice_state
    r1, r2 = record.sb1_result, record.sb2_result
    if r1 == s_a.orthogonal:
        # r2 was measured in Alice's own basis.
        bit = record.alice_bit if r2 == s_a else 1 - record.alice_bit
        determined = prepare(bit, record.alice_basis.other)
        return determined.bit, determined
    if r1 == s_a:
        same_bit_other_basis = prepare(record.alice_bit, record.alice_basis.other)
        if r2 == same_bit_other_basis and record.bob_j == record.alice_j:
            return s_a.bit, s_a
    return None


def sift_p2(record: RoundRecord, m: Optional[int] = None) -> Optional[tuple[int, PureState]]:
    """Protocol 2 sifting on the announced partition label ``m``.

    ``m`` defaults to the label announced in the record.  When m differs
    from Alice's bit the determination is immediate; otherwise one of three
    measurement patterns determines the result and the rest are discarded.
    """
    if m is None:
        m = record.m_value
    if m not in (0, 1):
        raise ValueError(f"m must be 0 or 1, got {m}")
    a, basis = record.alice_bit, record.alice_basis
    s_a = record.alice_state
    r1, r2 = record.sb1_result, record.sb2_result
    if m != a:
        determined = prepare(m, basis.other)
        return determined.bit, determined
    if r1 == s_a and r2 == prepare(1 - a, basis.other):
        determined = prepare(a, basis.other)
    elif r1 == s_a.orthogonal and r2 == s_a:
        determined = prepare(a, basis.other)
    elif r1 == s_a and r2 == prepare(a, basis.other):
        determined = s_a
    else:
        return None
    return determined.bit, determined


def sb1_orthogonal_fraction(records: list[RoundRecord]) -> float:
    if not records:
        raise ValueError("need at least one record")
    n_orth = sum(1 for r in records if r.sb1_result == r.alice_state.orthogonal)
    return n_orth / len(records)


def sb1_check(records: list[RoundRecord], tolerance: float = DEFAULT_SB1_TOLERANCE) -> bool:
    """Step-3 abort test: |orthogonal fraction - 1/4| <= tolerance."""
    return abs(sb1_orthogonal_fraction(records) - 0.25) <= tolerance


def _table1_branches() -> list[tuple[PureState, PureState, PureState, PureState, Fraction]]:
    """The 28 noiseless branches: (alice state, bob result, first and second
    measurement results, probability).  Row order follows the published
    encoding/decoding table.
    """
    rows = []
    for s_a in (PureState.ZERO, PureState.ONE, PureState.PLUS, PureState.MINUS):
        a, basis = s_a.bit, s_a.basis
        ob = basis.other
        # Bob measured in Alice's basis: certain echo, second qubit certain.
        rows.append((s_a, s_a, s_a, prepare(a, ob), Fraction(1, 8)))
        for y_bit in (0, 1):
            y = prepare(y_bit, ob)
            # Alice's return measurement echoes her own state (prob 1/2),
            # then the second measurement in the other basis is uniform.
            rows.append((s_a, y, s_a, prepare(0, ob), Fraction(1, 64)))
            rows.append((s_a, y, s_a, prepare(1, ob), Fraction(1, 64)))
            # Or it lands on the orthogonal state; the second qubit is then
            # measured in Alice's own basis and echoes Bob's bit exactly.
            rows.append((s_a, y, s_a.orthogonal, prepare(y_bit, basis), Fraction(1, 32)))
    return rows


TABLE1_BRANCHES = _table1_branches()

_BRANCH_INDEX = {
    (int(s), int(y), int(r1), int(r2)): i
    for i, (s, y, r1, r2, _) in enumerate(TABLE1_BRANCHES)
}


def branch_key(s_a: PureState, y: PureState, r1: PureState, r2: PureState) -> Optional[int]:
    """Index of a (state, result, result, result) tuple in the noiseless
    branch table, or None if the combination only occurs under noise."""
    return _BRANCH_INDEX.get((int(s_a), int(y), int(r1), int(r2)))


@dataclass(frozen=True)
class SimulationReport:
    protocol: ProtocolId
    n_rounds: int
    channel_qber: float
    eve: Eavesdropper
    rng_seed: int
    workers: int
    sb1_tolerance: float
    sift_fraction: float
    sifted_qber: float
    sb1_orthogonal_fraction: float
    sb1_check_passed: bool
    branch_counts: tuple[int, ...]   # 28 noiseless branches, table order
    other_count: int = 0
    sifted_count: int = 0
    error_count: int = 0

    def __post_init__(self) -> None:
        if len(self.branch_counts) != len(TABLE1_BRANCHES):
            raise ValueError("branch_counts must cover all table branches")
        if sum(self.branch_counts) + self.other_count != self.n_rounds:
            raise ValueError("branch counts must sum to n_rounds")

    def to_text(self) -> str:
        lines = [
            f"protocol:                {self.protocol.value}",
            f"rounds:                  {self.n_rounds}",
            f"channel qber:            {self.channel_qber:.6g}",
            f"eavesdropper:            {self.eve.value}",
            f"seed/workers:            {self.rng_seed}/{self.workers}",
            f"sift fraction:           {self.sift_fraction:.6g}",
            f"sifted qber:             {self.sifted_qber:.6g}",
            f"sb1 orthogonal fraction: {self.sb1_orthogonal_fraction:.6g}",
            f"sb1 check (tol {self.sb1_tolerance:.6g}): "
            + ("pass" if self.sb1_check_passed else "FAIL"),
            f"off-table rounds:        {self.other_count}",
        ]
        return "\n".join(lines)


def _measure_bits(state_basis: np.ndarray, state_bits: np.ndarray,
                  meas_basis: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    rand = rng.integers(0, 2, state_bits.shape[0], dtype=np.int8)
    return np.where(state_basis == meas_basis, state_bits, rand).astype(np.int8)


def _transmit_vec(basis: np.ndarray, bits: np.ndarray, e: float, eve: bool,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    flips = rng.random(bits.shape[0]) < e
    bits = (bits ^ flips.astype(np.int8)).astype(np.int8)
    if eve:
        eve_basis = rng.integers(0, 2, bits.shape[0], dtype=np.int8)
        bits = _measure_bits(basis, bits, eve_basis, rng)
        basis = eve_basis
    return basis, bits


def _simulate_chunk(config: SimulationConfig, n: int,
                    rng: np.random.Generator) -> dict[str, np.ndarray | int]:
    e = config.channel_qber
    eve = config.eve is Eavesdropper.INTERCEPT_RESEND
    bits_a = rng.integers(0, 2, n, dtype=np.int8)
    basis_a = rng.integers(0, 2, n, dtype=np.int8)
    basis_b = rng.integers(0, 2, n, dtype=np.int8)

    t_basis, t_bits = _transmit_vec(basis_a, bits_a, e, eve, rng)
    y = _measure_bits(t_basis, t_bits, basis_b, rng)

    t_basis, t_bits = _transmit_vec(basis_b, y, e, eve, rng)
    r1 = _measure_bits(t_basis, t_bits, basis_a, rng)

    sb2_basis = (1 - basis_b).astype(np.int8)
    t_basis, t_bits = _transmit_vec(sb2_basis, y, e, eve, rng)
    r1_same = r1 == bits_a
    mb = np.where(r1_same, 1 - basis_a, basis_a).astype(np.int8)
    r2 = _measure_bits(t_basis, t_bits, mb, rng)

    # Sifting masks; determined state encoded as 2*basis + bit.
    basis_match = basis_a == basis_b
    if config.protocol is ProtocolId.P1:
        case_a = ~r1_same  # conclusive without the basis announcement
        det_a_state = 2 * (1 - basis_a) + r2
        case_b = r1_same & (r2 == bits_a) & basis_match
        kept = case_a | case_b
        det_state = np.where(case_a, det_a_state, 2 * basis_a + bits_a).astype(np.int8)
    else:
        m = y
        imm = m != bits_a
        det_imm = 2 * (1 - basis_a) + m
        p_other = r1_same & (r2 != bits_a)   # r2 in other basis, flipped bit
        p_echo = (~r1_same) & (r2 == bits_a)  # r2 echoed Alice's state
        p_same = r1_same & (r2 == bits_a)
        det_state = np.where(
            imm, det_imm,
            np.where(p_same, 2 * basis_a + bits_a, 2 * (1 - basis_a) + bits_a),
        ).astype(np.int8)
        kept = imm | p_other | p_echo | p_same
    y_state = 2 * basis_b + y
    errors = kept & (det_state != y_state)

    r1_state = 2 * basis_a + r1
    r2_state = 2 * mb + r2
    s_state = 2 * basis_a + bits_a
    code = ((s_state.astype(np.int32) * 4 + y_state) * 4 + r1_state) * 4 + r2_state
    code_counts = np.bincount(code, minlength=256)

    return {
        "n": n,
        "orth": int(np.count_nonzero(~r1_same)),
        "kept": int(np.count_nonzero(kept)),
        "errors": int(np.count_nonzero(errors)),
        "code_counts": code_counts,
    }


def _worker_sizes(n_rounds: int, workers: int) -> list[int]:
    base, extra = divmod(n_rounds, workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]


def run_simulation(config: SimulationConfig, workers: int = 1) -> SimulationReport:
    """Run ``config.n_rounds`` rounds and aggregate sift/QBER statistics.

    Rounds are partitioned across ``workers`` independent RNG streams spawned
    deterministically from the seed; the aggregate is order-independent, so
    the report depends only on (config, workers).
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    children = np.random.SeedSequence(config.rng_seed).spawn(workers)
    code_counts = np.zeros(256, dtype=np.int64)
    orth = kept = errors = 0
    for size, child in zip(_worker_sizes(config.n_rounds, workers), children):
        if size == 0:
            continue
        part = _simulate_chunk(config, size, np.random.default_rng(child))
        orth += part["orth"]
        kept += part["kept"]
        errors += part["errors"]
        code_counts += part["code_counts"]

    branch_counts = []
    for s, y, r1, r2, _ in TABLE1_BRANCHES:
        code = ((int(s) * 4 + int(y)) * 4 + int(r1)) * 4 + int(r2)
        branch_counts.append(int(code_counts[code]))
    other = config.n_rounds - sum(branch_counts)

    orth_fraction = orth / config.n_rounds
    return SimulationReport(
        protocol=config.protocol,
        n_rounds=config.n_rounds,
        channel_qber=config.channel_qber,
        eve=config.eve,
        rng_seed=config.rng_seed,
        workers=workers,
        sb1_tolerance=config.sb1_tolerance,
        sift_fraction=kept / config.n_rounds,
        sifted_qber=errors / kept if kept else 0.0,
        sb1_orthogonal_fraction=orth_fraction,
        sb1_check_passed=abs(orth_fraction - 0.25) <= config.sb1_tolerance,
        branch_counts=tuple(branch_counts),
        other_count=other,
        sifted_count=kept,
        error_count=errors,
    )
