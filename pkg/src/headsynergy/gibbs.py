"""Exact Gibbs distribution over coalitions and free-energy audits.

P*(C) = exp(-beta E(C)) / Z over all 2^|universe| subsets, and the collective
free energy F(P) = E_P[E] - (1/beta) H(P) with H in natural-log units, so
that F(P*) = -(1/beta) ln Z holds exactly.  Energies enter as dimensionless
reals; beta absorbs the unit choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .entropy import Coalition, EnergyTable, coalition
from .errors import GuardError, InputError
from .shapley import ScoreTable
from .trace_store import HeadId

GIBBS_MAX_UNIVERSE = 20


def _mask_members(universe: Coalition, mask: int) -> Coalition:
    return tuple(universe[i] for i in range(len(universe)) if mask >> i & 1)


def _energy_vector(energies: EnergyTable) -> np.ndarray:
    n = len(energies.universe)
    e = np.empty(1 << n, dtype=float)
    for mask in range(1 << n):
        e[mask] = energies.energies[_mask_members(energies.universe, mask)]
    if not np.isfinite(e).all():
        raise InputError("non-finite energy in table")
    return e


@dataclass
class GibbsModel:
    beta: float
    universe: Coalition
    energies: np.ndarray  # bitmask-indexed, length 2^|universe|
    log_partition: float  # ln Z
    probs: np.ndarray  # bitmask-indexed

    def probability(self, members: Iterable[HeadId]) -> float:
        c = coalition(members)
        mask = 0
        index = {h: i for i, h in enumerate(self.universe)}
        for h in c:
            if h not in index:
                raise InputError(f"{h} outside the universe")
            mask |= 1 << index[h]
        return float(self.probs[mask])

    def items(self) -> list[tuple[Coalition, float]]:
        return [
            (_mask_members(self.universe, m), float(self.probs[m]))
            for m in range(len(self.probs))
        ]

    @property
    def free_energy(self) -> float:
        return -self.log_partition / self.beta


def gibbs_distribution(energies: EnergyTable, beta: float) -> GibbsModel:
    """Exact Gibbs distribution over the full power set of the universe."""
    if not 0.0 < beta < np.inf:
        raise InputError(f"beta must be positive and finite, got {beta}")
    n = len(energies.universe)
    if n > GIBBS_MAX_UNIVERSE:
        raise GuardError(f"exact enumeration limited to {GIBBS_MAX_UNIVERSE} heads")
    if not energies.is_full_order:
        raise InputError("gibbs_distribution requires a full-order energy table")

    e = _energy_vector(energies)
    shift = e.min()  # stabilize exponentials
    w = np.exp(-beta * (e - shift))
    z_shifted = w.sum()
    return GibbsModel(
        beta=beta,
        universe=energies.universe,
        energies=e,
        log_partition=float(np.log(z_shifted) - beta * shift),
        probs=w / z_shifted,
    )


def collective_free_energy(
    p: np.ndarray | Mapping[Coalition, float],
    energies: EnergyTable,
    beta: float,
) -> float:
    """F(P) = E_P[E] - (1/beta) H(P), H in nats."""
    if beta <= 0:
        raise InputError("beta must be positive")
    e = _energy_vector(energies)
    if isinstance(p, Mapping):
        n = len(energies.universe)
        index = {h: i for i, h in enumerate(energies.universe)}
        vec = np.zeros(1 << n, dtype=float)
        for c, prob in p.items():
            mask = 0
            for h in coalition(c):
                if h not in index:
                    raise InputError(f"support member {h} outside the universe")
                mask |= 1 << index[h]
            vec[mask] += prob
        p = vec
    else:
        p = np.asarray(p, dtype=float)
        if p.shape != e.shape:
            raise InputError(f"distribution length {p.shape} != {e.shape}")
    if (p < -1e-12).any():
        raise InputError("negative probability")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InputError(f"probabilities sum to {p.sum()}, not 1")
    pos = p > 0
    entropy_nats = float(-(p[pos] * np.log(p[pos])).sum())
    return float((p * e).sum() - entropy_nats / beta)


@dataclass
class OptimalityAudit:
    beta: float
    trials: int
    violations: int
    min_gap: float
    gibbs_free_energy: float


def gibbs_optimality_audit(
    model: GibbsModel, trials: int, seed: int, tol: float = 1e-9
) -> OptimalityAudit:
    """Probe F(P) >= F(P*) over random perturbed distributions.

    Perturbations are Dirichlet(1) draws over the power set, mixed with P*
    at a random weight so some probes land arbitrarily close to the optimum.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    e = model.energies
    beta = model.beta
    f_star = model.free_energy

    def free_energy_of(p: np.ndarray) -> float:
        pos = p > 0
        return float((p * e).sum() + (p[pos] * np.log(p[pos])).sum() / beta)

    min_gap = np.inf
    violations = 0
    for _ in range(trials):
        raw = rng.gamma(1.0, size=e.shape)
        p = raw / raw.sum()
        lam = rng.uniform()
        p = lam * p + (1.0 - lam) * model.probs
        gap = free_energy_of(p) - f_star
        min_gap = min(min_gap, gap)
        if gap < -tol:
            violations += 1
    return OptimalityAudit(
        beta=beta,
        trials=trials,
        violations=violations,
        min_gap=float(min_gap),
        gibbs_free_energy=f_star,
    )


@dataclass
class PruningDeltaAudit:
    beta: float
    pruned: Coalition
    free_energy_before: float
    free_energy_after: float
    delta_f: float
    eta_abs_sum: float
    ratio: float | None  # delta_f / eta_abs_sum, None when the sum is 0


def restrict_energy_table(energies: EnergyTable, pruned: Iterable[HeadId]) -> EnergyTable:
    """Keep only coalitions disjoint from the pruned set."""
    gone = set(coalition(pruned))
    kept = tuple(h for h in energies.universe if h not in gone)
    if not kept:
        raise InputError("cannot prune the entire universe")
    sub = {
        c: v for c, v in energies.energies.items() if not gone.intersection(c)
    }
    return EnergyTable(
        universe=kept,
        max_order=min(energies.max_order, len(kept)),
        energies=sub,
        sample_count=energies.sample_count,
        dropped_constant_note=energies.dropped_constant_note,
    )


def pruning_delta_audit(
    energies_before: EnergyTable,
    pruned: Iterable[HeadId],
    eta: ScoreTable,
    beta: float,
) -> PruningDeltaAudit:
    """Report the collective free-energy change caused by removing heads.

    Pruned heads are modeled as fixed at a constant baseline: every coalition
    keeps its slot in the 2^n lattice but contributes the energy of its
    unpruned part, so Z' = 2^k * Z_restricted and
    F' = F_restricted - k ln2 / beta.  A null head (zero marginal energy
    everywhere) then costs exactly nothing.  The bound relating the change to
    sum |eta_i| carries an unspecified constant, so only the raw quantities
    and their ratio are reported; no inequality is asserted.
    """
    gone = coalition(pruned)
    for h in gone:
        if h not in energies_before.universe:
            raise InputError(f"pruned head {h} outside the universe")
    f_before = gibbs_distribution(energies_before, beta).free_energy
    if gone:
        f_restricted = gibbs_distribution(
            restrict_energy_table(energies_before, gone), beta
        ).free_energy
        f_after = f_restricted - len(gone) * np.log(2.0) / beta
    else:
        f_after = f_before
    delta = f_after - f_before
    abs_sum = sum(abs(eta.scores[h]) for h in gone)
    return PruningDeltaAudit(
        beta=beta,
        pruned=gone,
        free_energy_before=f_before,
        free_energy_after=f_after,
        delta_f=delta,
        eta_abs_sum=abs_sum,
        ratio=(delta / abs_sum) if abs_sum > 0 else None,
    )
