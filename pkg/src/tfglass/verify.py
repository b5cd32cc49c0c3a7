"""Finite-size ground truth: sampled disorder, exact and stochastic pressures.

One disorder realization fixes 2^N energies built from the hierarchical
Gaussian cascade (level k contributes sqrt(N a_k) times a standard Gaussian
indexed by the length-ceil(x_k N) spin prefix) and N field weights.  The
Hamiltonian on the configuration space is diagonal in the energies with
-b_j connecting configurations that differ by one spin flip.

Two evaluation paths coexist.  The exact path diagonalizes densely and is
gated at N <= 14.  The stochastic path estimates Tr exp(-beta H) with
Rademacher probes and a Chebyshev expansion of the exponential on the
Gershgorin interval, reporting a probe-variance error bar plus the polynomial
truncation error; it only needs matrix-vector products and is gated at
N <= 20.  Convergence and concentration drivers pick the path by dimension.

Replicas use seeds derived from (seed, replica index), so aggregates are
reproducible regardless of scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.special import ive

from .errors import CapacityError, ValidationError
from .model import (
    ConcaveHull,
    DistributionSpec,
    FieldSpec,
    ProfileKind,
    concave_hull,
    ln_2cosh,
    sample_weights,
)
from .nonhier import NonHierModel, indices_of, quantum_nonhier_pressure
from .quantum import qgrem_pressure

EXACT_MAX_N = 14
STOCH_MAX_N = 20


@dataclass(frozen=True)
class FiniteInstance:
    """One disorder realization on N spins: 2^N energies plus field weights."""

    N: int
    potential: np.ndarray
    field_weights: np.ndarray
    seed: object


def _block_boundaries(xs, N):
    """ceil(x_k * N) per breakpoint, with float fuzz absorbed."""
    bounds = [math.ceil(x * N - 1e-9) for x in xs]
    prev = 0
    for x, b in zip(xs, bounds):
        if b <= prev:
            raise ValidationError(
                f"block ending at x={x} is empty at N={N}; increase N"
            )
        prev = b
    return bounds


def _hierarchical_potential(spec: DistributionSpec, N: int, rng) -> np.ndarray:
    if spec.kind is ProfileKind.PIECEWISE_LINEAR:
        points = [(k / N, spec.value_at(k / N)) for k in range(1, N + 1)]
    else:
        points = list(spec.points)
    bounds = _block_boundaries([x for x, _ in points], N)
    values = [v for _, v in points]
    jumps = np.diff([0.0] + values)
    U = np.zeros(1 << N)
    for n_k, a_k in zip(bounds, jumps):
        if a_k <= 0.0:
            continue
        g = rng.standard_normal(1 << n_k)
        U += math.sqrt(N * a_k) * np.repeat(g, 1 << (N - n_k))
    return U


def _nonhier_potential(model: NonHierModel, N: int, rng) -> np.ndarray:
    cum = np.cumsum(model.block_lengths)
    bounds = _block_boundaries(cum, N)
    widths = np.diff([0] + bounds)
    U = np.zeros(1 << N)
    conf = np.arange(1 << N, dtype=np.int64)
    for mask in sorted(model.weights):
        a_j = model.weights[mask]
        idx = np.zeros(1 << N, dtype=np.int64)
        total_width = 0
        for k in indices_of(mask):
            w_k = int(widths[k - 1])
            block_bits = (conf >> (N - bounds[k - 1])) & ((1 << w_k) - 1)
            idx = (idx << w_k) | block_bits
            total_width += w_k
        g = rng.standard_normal(1 << total_width)
        U += math.sqrt(N * a_j) * g[idx]
    return U


def sample_instance(spec, field: FieldSpec, N: int, seed) -> FiniteInstance:
    """Draw one disorder realization; bit-identical replay for a fixed seed.

    Piecewise-linear profiles are sampled through their step representation at
    resolution N.  Raises when the block rounding ceil(x_k N) leaves a block
    without spins.
    """
    if N < 1:
        raise ValidationError("N must be >= 1")
    if N > STOCH_MAX_N:
        raise CapacityError(f"sampling gated at N <= {STOCH_MAX_N}")
    rng = np.random.default_rng(seed)
    if isinstance(spec, NonHierModel):
        U = _nonhier_potential(spec, N, rng)
    elif isinstance(spec, DistributionSpec):
        U = _hierarchical_potential(spec, N, rng)
    else:
        raise ValidationError(f"unsupported spec type {type(spec).__name__}")
    b = sample_weights(field, N, rng)
    return FiniteInstance(N, U, np.asarray(b, dtype=float), seed)


def dense_hamiltonian(inst: FiniteInstance) -> np.ndarray:
    """Full 2^N x 2^N matrix: energies on the diagonal, -b_j on single flips."""
    dim = 1 << inst.N
    H = np.zeros((dim, dim))
    idx = np.arange(dim)
    H[idx, idx] = inst.potential
    for j in range(inst.N):
        flip = idx ^ (1 << (inst.N - 1 - j))
        H[idx, flip] = -inst.field_weights[j]
    return H


def sparse_hamiltonian(inst: FiniteInstance) -> scipy.sparse.csr_matrix:
    dim = 1 << inst.N
    idx = np.arange(dim)
    rows = [idx]
    cols = [idx]
    data = [inst.potential]
    for j in range(inst.N):
        rows.append(idx)
        cols.append(idx ^ (1 << (inst.N - 1 - j)))
        data.append(np.full(dim, -inst.field_weights[j]))
    return scipy.sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    )


def _check_exact(inst: FiniteInstance):
    if inst.N > EXACT_MAX_N:
        raise CapacityError(
            f"dense diagonalization gated at N <= {EXACT_MAX_N}; "
            "use stochastic_pressure"
        )


def exact_spectrum(inst: FiniteInstance) -> np.ndarray:
    _check_exact(inst)
    return scipy.linalg.eigvalsh(dense_hamiltonian(inst), overwrite_a=True, check_finite=False)


def _pressure_from_eigs(eigs: np.ndarray, beta: float, N: int) -> float:
    lo = float(eigs.min())
    return (-beta * lo + math.log(np.exp(-beta * (eigs - lo)).sum())) / N


def exact_pressure(inst: FiniteInstance, beta: float) -> float:
    """(1/N) ln Tr exp(-beta H) from the full spectrum, log-sum-exp anchored
    at the minimal eigenvalue."""
    return _pressure_from_eigs(exact_spectrum(inst), beta, inst.N)


def diagonal_pressure(inst: FiniteInstance, beta: float) -> float:
    """Field-free lower bound: (1/N) ln sum_sigma exp(-beta U(sigma))."""
    U = inst.potential
    lo = float(U.min())
    return (-beta * lo + math.log(np.exp(-beta * (U - lo)).sum())) / inst.N


def field_only_pressure(inst: FiniteInstance, beta: float) -> float:
    """Gibbs lower bound from the pure-field trial state.

    The product state of the field-only Hamiltonian has a uniform diagonal in
    the configuration basis, so the variational principle gives exactly

        Phi_N >= (1/N) [ sum_j ln 2 cosh(beta b_j) - beta * mean_sigma U(sigma) ].

    The potential average is the finite-size cross term; it vanishes as
    N -> infinity but cannot be dropped at finite N (a constant shift of U
    shifts Phi_N by exactly that amount).
    """
    cross = beta * float(inst.potential.mean())
    return (float(np.sum(ln_2cosh(beta * inst.field_weights))) - cross) / inst.N


@dataclass(frozen=True)
class StochasticPressure:
    value: float
    error: float
    converged: bool
    probes: int
    degree: int


def _chebyshev_degree(a: float) -> int:
    """Terms needed for exp on [-1, 1] scaled by a: Bessel tail below 1e-18."""
    k_max = int(a + 40.0 * math.sqrt(a + 1.0) + 60)
    ks = np.arange(k_max + 1)
    tail = ive(ks, a)
    keep = np.nonzero(tail > 1e-18)[0]
    return int(keep[-1]) + 5 if keep.size else 8


def _stochastic_traces(inst, betas, probes, seed, poly_degree=None):
    """Hutchinson estimates of Tr exp(-beta (H - lo)) for several betas.

    Shares one Chebyshev recurrence across betas (the scaled matrix does not
    depend on beta, only the coefficients do).  Returns per-beta
    (trace_mean, trace_stderr, sup_err, lo) with the anchor lo = Gershgorin
    lower bound, plus the polynomial degree used.
    """
    if probes < 1:
        raise ValidationError("need at least one probe")
    if poly_degree is not None and poly_degree < 1:
        raise ValidationError("polynomial degree must be >= 1")
    if inst.N > STOCH_MAX_N:
        raise CapacityError(f"stochastic path gated at N <= {STOCH_MAX_N}")
    dim = 1 << inst.N
    b_abs = float(np.abs(inst.field_weights).sum())
    lo = float(inst.potential.min()) - b_abs
    hi = float(inst.potential.max()) + b_abs
    if hi - lo < 1e-12:
        # Zero-width spectrum: H = lo * identity, trace is exact.
        return [(float(dim), 0.0, 0.0, lo) for _ in betas], 0
    half = 0.5 * (hi - lo)
    center = 0.5 * (hi + lo)

    Hs = sparse_hamiltonian(inst)
    Hs.setdiag((inst.potential - center))
    Hs = Hs.multiply(1.0 / half).tocsr()

    a_vals = [beta * half for beta in betas]
    degree = poly_degree if poly_degree is not None else _chebyshev_degree(max(a_vals))
    ks = np.arange(degree + 1)
    coeffs = []
    sup_errs = []
    x_grid = np.cos(np.linspace(0.0, math.pi, 2049))
    for a in a_vals:
        c = np.where(ks == 0, 1.0, 2.0) * ((-1.0) ** ks) * ive(ks, a)
        approx = np.polynomial.chebyshev.chebval(x_grid, c)
        sup_errs.append(float(np.max(np.abs(approx - np.exp(-a * (x_grid + 1.0))))))
        coeffs.append(c)

    rng = np.random.default_rng(seed)
    chunk = max(1, min(probes, (1 << 24) // dim))
    quads = [[] for _ in betas]
    done = 0
    while done < probes:
        p = min(chunk, probes - done)
        Z = rng.integers(0, 2, size=(dim, p)).astype(float) * 2.0 - 1.0
        t_prev = Z
        t_cur = Hs @ Z
        accs = [c[0] * t_prev + c[1] * t_cur for c in coeffs]
        for k in range(2, degree + 1):
            t_nxt = 2.0 * (Hs @ t_cur) - t_prev
            for acc, c in zip(accs, coeffs):
                if abs(c[k]) > 0.0:
                    acc += c[k] * t_nxt
            t_prev, t_cur = t_cur, t_nxt
        for q, acc in zip(quads, accs):
            q.append(np.einsum("ij,ij->j", Z, acc))
        done += p

    out = []
    for q, sup_err in zip(quads, sup_errs):
        samples = np.concatenate(q)
        mean = float(samples.mean())
        stderr = float(samples.std(ddof=1) / math.sqrt(len(samples))) if len(samples) > 1 else math.inf
        out.append((mean, stderr, sup_err, lo))
    return out, degree


def stochastic_pressure(
    inst: FiniteInstance,
    beta: float,
    probes: int,
    poly_degree: int | None = None,
    *,
    seed=0,
    tol: float | None = None,
) -> StochasticPressure:
    """Trace-estimated pressure with an error bar.

    The error combines the probe-variance standard error with the polynomial
    truncation bound (sup error times dimension, relative to the estimated
    trace).  When ``tol`` is given and the budget cannot reach it, the result
    is flagged (converged=False) instead of silently degraded.
    """
    results, degree = _stochastic_traces(inst, [beta], probes, seed, poly_degree)
    mean, stderr, sup_err, lo = results[0]
    dim = 1 << inst.N
    if mean <= 0.0:
        return StochasticPressure(math.nan, math.inf, False, probes, degree)
    value = (-beta * lo + math.log(mean)) / inst.N
    error = (stderr / mean + dim * sup_err / mean) / inst.N
    converged = tol is None or error <= tol
    return StochasticPressure(value, error, converged, probes, degree)


def _exp_diag(inst: FiniteInstance, beta: float, anchor: float | None = None):
    """Diagonal of exp(-beta (H - anchor)) via a full eigendecomposition."""
    _check_exact(inst)
    w, V = scipy.linalg.eigh(dense_hamiltonian(inst), overwrite_a=True, check_finite=False)
    if anchor is None:
        anchor = float(w.min())
    return (V * V) @ np.exp(-beta * (w - anchor)), anchor


def sign_invariance_check(inst: FiniteInstance, beta: float, patterns: int = 1, seed=0) -> float:
    """Max relative change of diag exp(-beta H) under random sign flips of b_j.

    The diagonal depends on the field weights only through their absolute
    values, so the return value is floating-point noise (contract: <= 1e-8).
    """
    base, anchor = _exp_diag(inst, beta)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(patterns):
        signs = rng.integers(0, 2, inst.N) * 2.0 - 1.0
        flipped = replace(inst, field_weights=inst.field_weights * signs)
        diag, _ = _exp_diag(flipped, beta, anchor=anchor)
        worst = max(worst, float(np.max(np.abs(diag - base) / base)))
    return worst


def _phi_one(spec, field, N, beta, seed, frozen_weights, method, probes):
    inst = sample_instance(spec, field, N, seed)
    if frozen_weights is not None:
        inst = replace(inst, field_weights=frozen_weights)
    use_exact = method == "exact" or (method == "auto" and N <= 10)
    if use_exact:
        return exact_pressure(inst, beta)
    return stochastic_pressure(inst, beta, probes, seed=seed).value


def _map_replicas(fn, n, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, range(n)))
    return [fn(r) for r in range(n)]


@dataclass(frozen=True)
class ConcentrationReport:
    N: int
    beta: float
    replicas: int
    mean: float
    std: float
    t_values: tuple[float, ...]
    thresholds: tuple[float, ...]
    fractions: tuple[float, ...]
    bounds: tuple[float, ...]
    slacks: tuple[float, ...]
    passed_per_t: tuple[bool, ...]

    @property
    def passed(self) -> bool:
        return all(self.passed_per_t)


def concentration_check(
    spec,
    field: FieldSpec,
    N: int,
    beta: float,
    replicas: int,
    seed,
    *,
    method: str = "auto",
    probes: int = 128,
    workers: int | None = None,
    t_values=(1.0, 2.0, 3.0),
) -> ConcentrationReport:
    """Empirical tail test of the Gaussian concentration bound 2 exp(-t^2/4).

    The field weights are sampled once and held fixed across replicas (the
    concentration statement conditions on the field); only the Gaussian
    potential is resampled.  Each exceedance fraction must stay below its
    bound plus three binomial standard deviations.
    """
    if replicas < 200:
        raise ValidationError("concentration check needs at least 200 replicas")
    rng_field = np.random.default_rng([_seed_int(seed), 0])
    frozen = np.asarray(sample_weights(field, N, rng_field), dtype=float)

    def one(r):
        return _phi_one(spec, field, N, beta, [_seed_int(seed), r + 1], frozen, method, probes)

    phis = np.array(_map_replicas(one, replicas, workers))
    mean = float(phis.mean())
    devs = np.abs(phis - mean)
    thresholds, fractions, bounds, slacks, passed = [], [], [], [], []
    for t in t_values:
        thr = t * beta / math.sqrt(N)
        # 1e-12 floor: a deterministic pressure (beta = 0) must not register
        # exceedances through ulp noise of the mean
        frac = float(np.mean(devs > thr + 1e-12))
        bound = 2.0 * math.exp(-t * t / 4.0)
        slack = 3.0 * math.sqrt(bound * (1.0 - bound) / replicas) if bound < 1.0 else 0.0
        thresholds.append(thr)
        fractions.append(frac)
        bounds.append(bound)
        slacks.append(slack)
        passed.append(frac <= bound + slack)
    return ConcentrationReport(
        N, beta, replicas, mean, float(phis.std(ddof=1)),
        tuple(float(t) for t in t_values), tuple(thresholds), tuple(fractions),
        tuple(bounds), tuple(slacks), tuple(passed),
    )


def _seed_int(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    raise ValidationError("seed must be an integer")


def limiting_pressure(spec, field: FieldSpec, beta: float) -> float:
    """Limit value predicted by the closed formulas for the given model."""
    if isinstance(spec, NonHierModel):
        return quantum_nonhier_pressure(spec, beta, field)[0]
    if isinstance(spec, DistributionSpec):
        return qgrem_pressure(concave_hull(spec), beta, field).value
    if isinstance(spec, ConcaveHull):
        return qgrem_pressure(spec, beta, field).value
    raise ValidationError(f"unsupported spec type {type(spec).__name__}")


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    mean: float
    std: float
    limit: float
    gap: float


@dataclass(frozen=True)
class ConvergenceStudy:
    beta: float
    limit: float
    rows: tuple[ConvergenceRow, ...]
    replica_phis: tuple[tuple[float, ...], ...]  # aligned with rows


def convergence_study(
    spec,
    field: FieldSpec,
    beta: float,
    Ns,
    replicas: int,
    seed,
    *,
    freeze_field: bool = False,
    method: str = "auto",
    probes: int = 128,
    workers: int | None = None,
) -> ConvergenceStudy:
    """Sampled finite-size pressures against the limiting formula, per N.

    By default both the potential and the field weights are resampled per
    replica; ``freeze_field`` holds the weights fixed (per N) instead.  No
    assertions here: the table reports means, spreads and gaps.
    """
    limit = limiting_pressure(spec, field, beta)
    rows, phis_all = [], []
    for N in Ns:
        frozen = None
        if freeze_field:
            frozen = np.asarray(
                sample_weights(field, N, np.random.default_rng([_seed_int(seed), N, 0])), dtype=float
            )

        def one(r, N=N, frozen=frozen):
            return _phi_one(spec, field, N, beta, [_seed_int(seed), N, r + 1], frozen, method, probes)

        phis = np.array(_map_replicas(one, replicas, workers))
        mean = float(phis.mean())
        rows.append(ConvergenceRow(N, mean, float(phis.std(ddof=1)), limit, abs(mean - limit)))
        phis_all.append(tuple(float(p) for p in phis))
    return ConvergenceStudy(beta, limit, tuple(rows), tuple(phis_all))
