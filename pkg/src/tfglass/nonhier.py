"""Non-hierarchical models: subset weights, chains, max-min pressure, greedy chain.

Here the Gaussian energy attaches an independent layer to every nonempty
subset J of the n spin blocks, with weight a_J.  A chain of nested subsets
hierarchizes the model: the chain step k absorbs the weight of every subset
that fits inside A_k but not inside A_{k-1}, so the weights of a full chain
always repartition the total.  The classical pressure is the minimum over
full chains of the induced hierarchical pressure; with a transversal field
the limit becomes a max over terminal sets D of a min over chains ending at
D, plus the paramagnetic share of the blocks outside D.

A single chain suffices: greedily absorbing the superset with the largest
marginal slope produces a chain whose hull dominates every other chain's
hull pointwise, hence minimizes the pressure at every temperature.

Subsets are bitmasks over blocks 0..n-1 (bit k = block k+1 of the 1-based
file format).  Exhaustive enumeration is gated at n <= 10.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .classical import classical_pressure
from .errors import CapacityError, ValidationError
from .model import ConcaveHull, DistributionSpec, FieldSpec, ProfileKind, hull_from_points, paramagnetic_pressure
from .quantum import qgrem_pressure

ENUM_MAX_BLOCKS = 10

_SUM_TOL = 1e-12


def mask_of(indices) -> int:
    """Bitmask of 1-based block indices."""
    mask = 0
    for i in indices:
        mask |= 1 << (int(i) - 1)
    return mask


def indices_of(mask: int) -> tuple[int, ...]:
    """1-based block indices of a bitmask, ascending."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class NonHierModel:
    """Block lengths plus a weight for every nonempty subset of blocks."""

    n: int
    block_lengths: tuple[float, ...]
    weights: Mapping[int, float]  # bitmask -> a_J, nonzero entries only

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("need at least one block")
        if len(self.block_lengths) != self.n:
            raise ValidationError("block_lengths must have one entry per block")
        if any(l <= 0 for l in self.block_lengths):
            raise ValidationError("block lengths must be positive")
        if abs(sum(self.block_lengths) - 1.0) > _SUM_TOL:
            raise ValidationError("block lengths must sum to 1")
        full = (1 << self.n) - 1
        clean = {}
        for mask, a in dict(self.weights).items():
            if not 0 < mask <= full:
                raise ValidationError(f"subset mask {mask} outside 1..{full}")
            if a < 0:
                raise ValidationError("subset weights must be >= 0")
            if a > 0:
                clean[int(mask)] = float(a)
        if abs(sum(clean.values()) - 1.0) > _SUM_TOL:
            raise ValidationError("subset weights must sum to 1")
        object.__setattr__(self, "weights", clean)

    @classmethod
    def from_subsets(cls, block_lengths, subset_weights) -> "NonHierModel":
        """Build from {(1-based index tuple): weight}."""
        n = len(tuple(block_lengths))
        weights = {mask_of(idx): w for idx, w in subset_weights.items()}
        return cls(n, tuple(float(l) for l in block_lengths), weights)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "NonHierModel":
        """Parse the file format {"n": ..., "L": [...], "weights": {"1,3": ...}}.

        Subset keys are sorted comma-joined 1-based block indices.
        """
        try:
            n = int(doc["n"])
            lengths = tuple(float(l) for l in doc["L"])
            raw = doc["weights"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad non-hierarchical model document: {exc}") from exc
        weights = {}
        for key, val in raw.items():
            try:
                idx = [int(tok) for tok in str(key).split(",")]
            except ValueError as exc:
                raise ValidationError(f"bad subset key {key!r}") from exc
            if idx != sorted(set(idx)) or any(i < 1 or i > n for i in idx):
                raise ValidationError(f"subset key {key!r} must be sorted distinct indices in 1..{n}")
            weights[mask_of(idx)] = float(val)
        return cls(n, lengths, weights)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def subset_length(self, mask: int) -> float:
        return float(sum(l for k, l in enumerate(self.block_lengths) if mask >> k & 1))

    def cumulative_weights(self) -> np.ndarray:
        """atilde[S] = sum of a_I over I subset of S, for every mask S."""
        size = 1 << self.n
        acc = np.zeros(size)
        for mask, a in self.weights.items():
            acc[mask] = a
        # subset-sum (zeta) transform over the n bit dimensions
        for k in range(self.n):
            bit = 1 << k
            for mask in range(size):
                if mask & bit:
                    acc[mask] += acc[mask ^ bit]
        return acc


@dataclass(frozen=True)
class Chain:
    """Nested subsets with unit cardinality steps, as bitmasks A_1 .. A_m.

    The implicit A_0 is empty; an empty tuple is the chain ending at the
    empty set.
    """

    sets: tuple[int, ...]

    def __post_init__(self):
        prev = 0
        for i, mask in enumerate(self.sets, start=1):
            if prev & ~mask:
                raise ValidationError("chain sets must be nested")
            if bin(mask).count("1") != i:
                raise ValidationError("chain cardinality must grow by one per step")
            prev = mask
        object.__setattr__(self, "sets", tuple(int(m) for m in self.sets))

    @classmethod
    def from_order(cls, order) -> "Chain":
        """Chain adding the given 1-based block indices one at a time."""
        masks, acc = [], 0
        for i in order:
            acc |= 1 << (int(i) - 1)
            masks.append(acc)
        return cls(tuple(masks))

    @property
    def terminal(self) -> int:
        return self.sets[-1] if self.sets else 0

    @property
    def order(self) -> tuple[int, ...]:
        """Block indices in the order the chain adds them."""
        out, prev = [], 0
        for mask in self.sets:
            out.extend(indices_of(mask & ~prev))
            prev = mask
        return tuple(out)


@dataclass(frozen=True)
class ReducedGrem:
    """Hierarchical weights and endpoints induced on a chain.

    weights[k] collects a_D over subsets D inside A_{k+1} but not inside A_k;
    endpoints[k] is the covered block length.  For chains ending at the full
    block set this is an ordinary (normalized) step profile; chains ending
    early leave the remaining weight and length out.
    """

    weights: tuple[float, ...]
    endpoints: tuple[float, ...]

    def spec(self) -> DistributionSpec:
        """Step profile of a full chain (endpoint 1); invalid for partial chains."""
        values = tuple(np.cumsum(self.weights))
        normalized = abs(values[-1] - 1.0) <= _SUM_TOL
        return DistributionSpec(ProfileKind.STEP, tuple(zip(self.endpoints, values)), normalized)

    def hull(self) -> ConcaveHull:
        """Concave envelope over [0, covered length]; works for partial chains."""
        values = np.cumsum(self.weights)
        return hull_from_points(tuple(zip(self.endpoints, values)))


def chain_grem(model: NonHierModel, chain: Chain) -> ReducedGrem:
    """Hierarchical model a chain induces: absorbed weights and endpoints.

    For a full chain the absorbed weights partition the total exactly (every
    nonempty subset is counted at the first chain set containing it).
    """
    if chain.terminal & ~model.full_mask:
        raise ValidationError("chain references blocks outside the model")
    if not chain.sets:
        return ReducedGrem((), ())
    weights, endpoints = [], []
    prev = 0
    for mask in chain.sets:
        a_k = 0.0
        for sub, a in model.weights.items():
            if sub & ~mask == 0 and sub & ~prev != 0:
                a_k += a
        weights.append(a_k)
        endpoints.append(model.subset_length(mask))
        prev = mask
    return ReducedGrem(tuple(weights), tuple(endpoints))


def _full_chains(model: NonHierModel):
    for perm in itertools.permutations(range(1, model.n + 1)):
        yield Chain.from_order(perm)


def _check_enumerable(model: NonHierModel):
    if model.n > ENUM_MAX_BLOCKS:
        raise CapacityError(
            f"exhaustive enumeration gated at n <= {ENUM_MAX_BLOCKS} "
            f"(got n = {model.n}); use greedy_chain for larger models"
        )


def classical_nonhier_pressure(model: NonHierModel, beta: float) -> tuple[float, Chain]:
    """Minimum over all full chains of the induced hierarchical pressure."""
    _check_enumerable(model)
    best_val, best_chain = None, None
    for chain in _full_chains(model):
        val = classical_pressure(chain_grem(model, chain).hull(), beta)
        if best_val is None or val < best_val:
            best_val, best_chain = val, chain
    return best_val, best_chain


def greedy_chain(model: NonHierModel) -> Chain:
    """Chain built by repeatedly absorbing the superset of maximal marginal slope.

    Starting from the empty set, each round picks the strict superset S of the
    current set C maximizing the incremental slope
    (weight inside S - weight inside C) / (length of S - length of C);
    slope ties prefer the larger set, then the lexicographically smallest
    index tuple.  The support sets are then completed to unit steps by adding
    the new blocks of each round in ascending order.

    Maximizing the marginal slope (rather than the total mean slope of the
    union) is what makes the induced envelope pass through every round's
    support point with decreasing slopes, hence dominate every other chain's
    envelope pointwise: a total-slope rule can absorb supersets that add
    length but no weight and lose both dominance and pressure minimality.
    """
    atilde = model.cumulative_weights()
    lengths = np.array([model.subset_length(m) for m in range(1 << model.n)])
    current = 0
    rounds = []
    while current != model.full_mask:
        rest = model.full_mask & ~current
        best = None
        # strict supersets of current: union with every nonempty subset of the rest
        sub = rest
        while sub:
            cand = current | sub
            slope = (atilde[cand] - atilde[current]) / (lengths[cand] - lengths[current])
            key = (slope, bin(cand).count("1"), tuple(-i for i in indices_of(cand)))
            if best is None or key > best[0]:
                best = (key, cand)
            sub = (sub - 1) & rest
        current = best[1]
        rounds.append(current)
    order = []
    prev = 0
    for mask in rounds:
        order.extend(indices_of(mask & ~prev))
        prev = mask
    return Chain.from_order(order)


def quantum_nonhier_pressure(
    model: NonHierModel, beta: float, field: FieldSpec
) -> tuple[float, int]:
    """Max over terminal sets D of the min over chains ending at D.

    Each candidate value is the reduced hierarchical pressure on the blocks of
    D plus the paramagnetic pressure carried by the remaining block lengths.
    Returns the value and the maximizing D as a bitmask (smallest mask on
    ties).
    """
    _check_enumerable(model)
    p = paramagnetic_pressure(field, beta)
    best_val, best_mask = None, 0
    for d_mask in range(1 << model.n):
        rest_len = 1.0 - model.subset_length(d_mask)
        if d_mask == 0:
            val = p
        else:
            members = indices_of(d_mask)
            inner = None
            for perm in itertools.permutations(members):
                chain = Chain.from_order(perm)
                red = classical_pressure(chain_grem(model, chain).hull(), beta)
                if inner is None or red < inner:
                    inner = red
            val = inner + rest_len * p
        if best_val is None or val > best_val:
            best_val, best_mask = val, d_mask
    return best_val, best_mask


def greedy_quantum_pressure(model: NonHierModel, beta: float, field: FieldSpec):
    """Quantum pressure of the hierarchical model the greedy chain induces."""
    hull = chain_grem(model, greedy_chain(model)).hull()
    return qgrem_pressure(hull, beta, field)
