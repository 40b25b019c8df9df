"""Direct fidelity estimation for the MBQC fidelity and the state fidelity.

Both protocols draw stabilizers, measure each one once on a fresh copy of the
noisy state and average the +-1 outcomes. Single shots are simulated exactly:
the outcome is +1 with probability ``(1 + tr(rho g)) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DENSE_CAP, ValidationError, check_cap
from .pauli import PauliWord
from .resource import ResourceState
from .sampler import RngStream, SampleBatch, sample_many, uniform_group_samples, uniforms
from .sim import DensityState, pauli_expectation

# purposes of the Philox streams derived from one run seed
PURPOSE_MBQC_WORDS = 0
PURPOSE_MBQC_SHOTS = 1
PURPOSE_STATE_WORDS = 2
PURPOSE_STATE_SHOTS = 3

TARGETS = ("mbqc_fidelity", "state_fidelity")


def sample_count(epsilon: float, delta: float) -> int:
    """Hoeffding budget for +-1 outcomes: ``ceil(2 / eps**2 * ln(2 / delta))``."""
    if not 0 < epsilon <= 1:
        raise ValidationError(f"epsilon must lie in (0, 1], got {epsilon}")
    if not 0 < delta < 1:
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    return math.ceil(2.0 / epsilon**2 * math.log(2.0 / delta))


class PauliMeasurer:
    """Single-shot Pauli measurements on a fixed density matrix, caching ``tr(rho g)``."""

    def __init__(self, rho: DensityState, cap: int = DENSE_CAP):
        check_cap("dense Pauli measurement", rho.n, cap)
        self.rho = rho
        self._means: dict[PauliWord, float] = {}

    def mean(self, g: PauliWord) -> float:
        if g.n != self.rho.n:
            raise ValidationError(f"word has {g.n} qubits, state has {self.rho.n}")
        if not g.is_hermitian:
            raise ValidationError(f"{g} is not Hermitian")
        cached = self._means.get(g)
        if cached is None:
            val = pauli_expectation(self.rho.matrix, g)
            if abs(val.imag) > 1e-9 or abs(val.real) > 1 + 1e-9:
                raise ValidationError(f"tr(rho {g}) = {val} is not a valid Pauli mean")
            cached = self._means[g] = min(1.0, max(-1.0, float(val.real)))
        return cached

    def shot(self, g: PauliWord, u: float) -> int:
        """Outcome for a uniform variate ``u`` in [0, 1)."""
        return 1 if u < (1 + self.mean(g)) / 2 else -1


def measure_stabilizer(rho: DensityState, g: PauliWord, rng: RngStream,
                       measurer: Optional[PauliMeasurer] = None) -> int:
    """One projective measurement of ``g`` on ``rho``; returns +1 or -1."""
    measurer = measurer or PauliMeasurer(rho)
    u = (rng.bits(53)) * 2.0**-53
    return measurer.shot(g, u)


@dataclass(frozen=True)
class LedgerEntry:
    word: str
    count: int
    mean: float


@dataclass
class EstimationReport:
    target: str
    estimate_raw: float
    epsilon: float
    delta: float
    samples_used: int
    seed: int
    ledger: list[LedgerEntry] = field(default_factory=list)

    @property
    def estimate(self) -> float:
        return min(1.0, max(0.0, self.estimate_raw))

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "estimate": self.estimate,
            "estimate_raw": self.estimate_raw,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "samples_used": self.samples_used,
            "seed": self.seed,
            "ledger": [{"word": e.word, "count": e.count, "mean": e.mean} for e in self.ledger],
        }


def _run_shots(batch: SampleBatch, measurer: PauliMeasurer, us: np.ndarray):
    """Outcomes for every word in the batch plus the per-word ledger."""
    keys = np.stack([batch.x.astype(np.uint64), batch.z.astype(np.uint64),
                     batch.sign.astype(np.int64).astype(np.uint64)], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    n = batch.n
    words = [PauliWord(n, int(x), int(z), 0 if int(s) == 1 else 2) for x, z, s in uniq.tolist()]
    p_plus = np.array([1.0 if w.is_identity() else (1 + measurer.mean(w)) / 2 for w in words])
    outcomes = np.where(us < p_plus[inv], 1, -1)
    # identity draws are recorded as +1 without a measurement
    outcomes[np.array([words[k].is_identity() for k in range(len(words))])[inv]] = 1
    counts = np.bincount(inv, minlength=len(words))
    sums = np.bincount(inv, weights=outcomes, minlength=len(words))
    ledger = [LedgerEntry(str(w), int(c), float(s / c)) for w, c, s in zip(words, counts, sums)]
    ledger.sort(key=lambda e: (-e.count, e.word))
    return outcomes, ledger


def estimate_mbqc_fidelity(state: ResourceState, rho: DensityState, epsilon: float, delta: float,
                           seed: int, cap: int = DENSE_CAP, measurer: Optional[PauliMeasurer] = None) -> EstimationReport:
    """Average MBQC fidelity from ``sample_count`` stabilizers drawn with their Omega weights."""
    if rho.n != state.n:
        raise ValidationError("density matrix and resource state sizes differ")
    m = sample_count(epsilon, delta)
    measurer = measurer or PauliMeasurer(rho, cap)
    batch = sample_many(state, m, seed, purpose=PURPOSE_MBQC_WORDS)
    outcomes, ledger = _run_shots(batch, measurer, uniforms(seed, m, PURPOSE_MBQC_SHOTS))
    return EstimationReport("mbqc_fidelity", float(outcomes.mean()), epsilon, delta, m, seed, ledger)


def estimate_state_fidelity(state: ResourceState, rho: DensityState, epsilon: float, delta: float,
                            seed: int, cap: int = DENSE_CAP, measurer: Optional[PauliMeasurer] = None) -> EstimationReport:
    """State fidelity from uniformly drawn group elements."""
    if rho.n != state.n:
        raise ValidationError("density matrix and resource state sizes differ")
    m = sample_count(epsilon, delta)
    measurer = measurer or PauliMeasurer(rho, cap)
    batch = uniform_group_samples(state.group, m, seed, purpose=PURPOSE_STATE_WORDS)
    outcomes, ledger = _run_shots(batch, measurer, uniforms(seed, m, PURPOSE_STATE_SHOTS))
    return EstimationReport("state_fidelity", float(outcomes.mean()), epsilon, delta, m, seed, ledger)


@dataclass(frozen=True)
class BoundsVerdict:
    lower_slack: float  # (1 - F_mbqc) - nu (1 - F_s)
    upper_slack: float  # (1 - F_s) - (1 - F_mbqc)
    tol: float

    @property
    def lower_holds(self) -> bool:
        return self.lower_slack >= -self.tol

    @property
    def upper_holds(self) -> bool:
        return self.upper_slack >= -self.tol

    @property
    def holds(self) -> bool:
        return self.lower_holds and self.upper_holds

    @property
    def lower_saturated(self) -> bool:
        return abs(self.lower_slack) <= self.tol

    @property
    def upper_saturated(self) -> bool:
        return abs(self.upper_slack) <= self.tol

    def to_dict(self) -> dict:
        return {"holds": self.holds, "lower_slack": self.lower_slack, "upper_slack": self.upper_slack,
                "lower_saturated": self.lower_saturated, "upper_saturated": self.upper_saturated}


def check_bounds(f_s: float, f_mbqc: float, nu: float, tol: float = 1e-9) -> BoundsVerdict:
    """Check ``nu (1 - F_s) <= 1 - F_mbqc <= 1 - F_s``."""
    return BoundsVerdict((1 - f_mbqc) - nu * (1 - f_s), (1 - f_s) - (1 - f_mbqc), tol)
