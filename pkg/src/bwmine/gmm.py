"""Gaussian mixture engine: EM fitting, BIC selection, posterior queries.

Four covariance structures are supported:

* ``spherical`` -- one scalar variance per component
* ``tied``      -- one full matrix pooled across components
* ``diagonal``  -- one variance per component and dimension
* ``full``      -- one full matrix per component

Composition data lives on a simplex (rank-deficient by one), so every
M-step adds a small floor to covariance diagonals; without it EM
diverges on full matrices. Fitting is deterministic given the seed:
means initialize from K distinct data rows drawn without replacement,
weights start uniform, covariances start at the data covariance shaped
per structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .composition import CompositionVector
from .errors import (
    DegenerateComponent,
    DimensionMismatch,
    TooFewPoints,
    ValidationError,
)

SPHERICAL = "spherical"
TIED = "tied"
DIAGONAL = "diagonal"
FULL = "full"
STRUCTURES = (SPHERICAL, TIED, DIAGONAL, FULL)   # fixed tie-break order

DEFAULT_REG_FLOOR = 1e-6
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 200
DEFAULT_K_RANGE = tuple(range(5, 16))
_EPS_WEIGHT = 1e-8
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class GmmModel:
    structure: str
    weights: np.ndarray          # (K,)
    means: np.ndarray            # (K, N)
    covariances: np.ndarray      # shape depends on structure
    basis: tuple[str, ...] = ()
    race: str = ""
    scope: str = ""
    train_log_likelihood: float = float("nan")
    bic_score: float = float("nan")
    ll_trace: tuple[float, ...] = ()

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def n_dims(self) -> int:
        return self.means.shape[1]

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValidationError(f"unknown covariance structure {self.structure!r}")
        K, N = self.means.shape
        if self.weights.shape != (K,):
            raise ValidationError("weights shape mismatch")
        expected = {SPHERICAL: (K,), DIAGONAL: (K, N), FULL: (K, N, N), TIED: (N, N)}
        if self.covariances.shape != expected[self.structure]:
            raise ValidationError(
                f"covariance shape {self.covariances.shape} invalid for {self.structure}")
        if abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise ValidationError(f"weights sum to {self.weights.sum()}")
        if self.basis and len(self.basis) != N:
            raise ValidationError("basis length does not match dimensionality")


def _check_data(data: np.ndarray, model: GmmModel) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != model.n_dims:
        raise DimensionMismatch(
            f"data shape {data.shape} does not match model dimension {model.n_dims}")
    return data


def _log_densities(data: np.ndarray, means: np.ndarray, covs: np.ndarray,
                   structure: str) -> np.ndarray:
    """(M, K) matrix of log N(x_i; mu_k, sigma_k)."""
    M, N = data.shape
    K = means.shape[0]
    out = np.empty((M, K))
    if structure == SPHERICAL:
        for k in range(K):
            var = covs[k]
            sq = np.sum((data - means[k]) ** 2, axis=1)
            out[:, k] = -0.5 * (N * (_LOG_2PI + np.log(var)) + sq / var)
    elif structure == DIAGONAL:
        for k in range(K):
            var = covs[k]
            sq = np.sum((data - means[k]) ** 2 / var, axis=1)
            out[:, k] = -0.5 * (N * _LOG_2PI + np.sum(np.log(var)) + sq)
    elif structure == TIED:
        chol = np.linalg.cholesky(covs)
        half_logdet = float(np.sum(np.log(np.diag(chol))))
        for k in range(K):
            sol = np.linalg.solve(chol, (data - means[k]).T)
            out[:, k] = -0.5 * (N * _LOG_2PI + np.sum(sol ** 2, axis=0)) - half_logdet
    else:  # FULL
        for k in range(K):
            chol = np.linalg.cholesky(covs[k])
            half_logdet = float(np.sum(np.log(np.diag(chol))))
            sol = np.linalg.solve(chol, (data - means[k]).T)
            out[:, k] = -0.5 * (N * _LOG_2PI + np.sum(sol ** 2, axis=0)) - half_logdet
    return out


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - amax), axis=axis))
    return out + np.squeeze(amax, axis=axis)


def _weighted_log_densities(data: np.ndarray, model: GmmModel) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logw = np.log(model.weights)
    return _log_densities(data, model.means, model.covariances, model.structure) + logw


def log_likelihood(data: np.ndarray, model: GmmModel) -> float:
    """Sum over points of log sum_k w_k N(x; mu_k, sigma_k), via log-sum-exp."""
    data = _check_data(data, model)
    return float(np.sum(_logsumexp(_weighted_log_densities(data, model), axis=1)))


def e_step(data: np.ndarray, model: GmmModel) -> np.ndarray:
    """Responsibility matrix: row i holds P(C=k | x_i), summing to 1."""
    data = _check_data(data, model)
    weighted = _weighted_log_densities(data, model)
    norm = _logsumexp(weighted, axis=1)
    return np.exp(weighted - norm[:, None])


def m_step(data: np.ndarray, resp: np.ndarray, structure: str,
           reg_floor: float = DEFAULT_REG_FLOOR) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Weighted-MLE parameter update; returns (weights, means, covariances).

    Raises DegenerateComponent when a component's responsibility mass is
    (numerically) zero.
    """
    data = np.asarray(data, dtype=float)
    resp = np.asarray(resp, dtype=float)
    M, N = data.shape
    K = resp.shape[1]
    nk = resp.sum(axis=0)
    if np.any(nk < _EPS_WEIGHT):
        dead = int(np.flatnonzero(nk < _EPS_WEIGHT)[0])
        raise DegenerateComponent(f"component {dead} has responsibility mass {nk[dead]}")
    weights = nk / M
    means = (resp.T @ data) / nk[:, None]

    if structure == SPHERICAL:
        covs = np.empty(K)
        for k in range(K):
            sq = np.sum((data - means[k]) ** 2, axis=1)
            covs[k] = float(resp[:, k] @ sq) / (nk[k] * N) + reg_floor
    elif structure == DIAGONAL:
        covs = np.empty((K, N))
        for k in range(K):
            diff2 = (data - means[k]) ** 2
            covs[k] = (resp[:, k] @ diff2) / nk[k] + reg_floor
    elif structure == FULL:
        covs = np.empty((K, N, N))
        for k in range(K):
            diff = data - means[k]
            scatter = (diff.T * resp[:, k]) @ diff / nk[k]
            covs[k] = _symmetrize(scatter) + reg_floor * np.eye(N)
    else:  # TIED: responsibility-weighted scatter pooled over components
        pooled = np.zeros((N, N))
        for k in range(K):
            diff = data - means[k]
            pooled += (diff.T * resp[:, k]) @ diff
        covs = _symmetrize(pooled / M) + reg_floor * np.eye(N)
    return weights, means, covs


def _symmetrize(mat: np.ndarray) -> np.ndarray:
    return (mat + mat.T) / 2.0


def _init_covariances(data: np.ndarray, K: int, structure: str,
                      reg_floor: float) -> np.ndarray:
    N = data.shape[1]
    centered = data - data.mean(axis=0)
    cov = _symmetrize((centered.T @ centered) / data.shape[0])
    if structure == SPHERICAL:
        return np.full(K, float(np.mean(np.diag(cov))) + reg_floor)
    if structure == DIAGONAL:
        return np.tile(np.diag(cov) + reg_floor, (K, 1))
    if structure == FULL:
        return np.tile(cov + reg_floor * np.eye(N), (K, 1, 1))
    return cov + reg_floor * np.eye(N)


def fit(data: np.ndarray, K: int, structure: str, seed: int = 0,
        max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL,
        reg_floor: float = DEFAULT_REG_FLOOR, basis: tuple[str, ...] = (),
        race: str = "", scope: str = "") -> GmmModel:
    """EM until the log-likelihood change drops below tol.

    A component that loses all responsibility mass is reseeded once at
    the lowest-density point; a second collapse of the same component
    raises DegenerateComponent. The fitted model carries the full
    per-iteration log-likelihood trace.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise DimensionMismatch(f"expected 2-D data, got shape {data.shape}")
    M, N = data.shape
    if structure not in STRUCTURES:
        raise ValidationError(f"unknown covariance structure {structure!r}")
    if M < K:
        raise TooFewPoints(f"{M} points cannot support {K} components")

    rng = np.random.default_rng(seed)
    idx = rng.choice(M, size=K, replace=False)
    weights = np.full(K, 1.0 / K)
    means = data[idx].copy()
    covs = _init_covariances(data, K, structure, reg_floor)

    trace: list[float] = []
    reseeded = np.zeros(K, dtype=int)
    ll_prev = -np.inf
    converged = False
    for _ in range(max_iter):
        logdens = _log_densities(data, means, covs, structure)
        with np.errstate(divide="ignore"):
            weighted = logdens + np.log(weights)
        norm = _logsumexp(weighted, axis=1)
        ll = float(norm.sum())
        trace.append(ll)
        if abs(ll - ll_prev) < tol:
            converged = True
            break
        ll_prev = ll
        resp = np.exp(weighted - norm[:, None])
        nk = resp.sum(axis=0)
        for k in np.flatnonzero(nk < _EPS_WEIGHT):
            if reseeded[k]:
                raise DegenerateComponent(f"component {int(k)} collapsed twice")
            reseeded[k] = 1
            lowest = int(np.argmin(norm))
            resp[lowest, :] = 0.0
            resp[lowest, k] = 1.0
            ll_prev = -np.inf           # parameters jump; restart convergence test
        weights, means, covs = m_step(data, resp, structure, reg_floor)

    model = GmmModel(structure=structure, weights=weights, means=means,
                     covariances=covs, basis=basis, race=race, scope=scope)
    final_ll = trace[-1] if converged else log_likelihood(data, model)
    if not converged:
        trace.append(final_ll)
    model = replace(model, train_log_likelihood=final_ll,
                    bic_score=bic_from(final_ll, K, N, structure, M),
                    ll_trace=tuple(trace))
    return model


def free_parameters(K: int, N: int, structure: str) -> int:
    """Count of free parameters: (K-1) weights, K*N means, plus covariance
    terms (K spherical, N(N+1)/2 tied, K*N diagonal, K*N(N+1)/2 full)."""
    base = (K - 1) + K * N
    if structure == SPHERICAL:
        return base + K
    if structure == DIAGONAL:
        return base + K * N
    if structure == TIED:
        return base + N * (N + 1) // 2
    if structure == FULL:
        return base + K * N * (N + 1) // 2
    raise ValidationError(f"unknown covariance structure {structure!r}")


def bic_from(log_lik: float, K: int, N: int, structure: str, M: int) -> float:
    return -2.0 * log_lik + free_parameters(K, N, structure) * math.log(M)


def bic(model: GmmModel, M: int) -> float:
    """Bayesian information criterion of a fitted model on M points."""
    return bic_from(model.train_log_likelihood, model.n_components,
                    model.n_dims, model.structure, M)


def select_model(data: np.ndarray, k_range: Iterable[int] = DEFAULT_K_RANGE,
                 structures: Sequence[str] = STRUCTURES,
                 seeds: Sequence[int] = (0,), **fit_kwargs) -> GmmModel:
    """Fit every (K, structure, seed) combination and keep the lowest BIC.

    The grid is walked in a fixed order (K ascending, then spherical,
    tied, diagonal, full, then the seed list) and ties keep the earliest
    candidate, so the choice does not depend on argument order.
    """
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ValidationError("empty K range")
    unknown = [s for s in structures if s not in STRUCTURES]
    if unknown:
        raise ValidationError(f"unknown covariance structures: {unknown}")
    ordered = [s for s in STRUCTURES if s in structures]
    best: GmmModel | None = None
    for k in ks:
        for structure in ordered:
            for seed in seeds:
                model = fit(data, k, structure, seed=seed, **fit_kwargs)
                if best is None or model.bic_score < best.bic_score:
                    best = model
    assert best is not None
    return best


def posterior(model: GmmModel, u: CompositionVector | np.ndarray) -> tuple[np.ndarray, int]:
    """Component posterior P(C | U=u) and its argmax label."""
    if isinstance(u, CompositionVector):
        if model.basis and u.basis != model.basis:
            raise DimensionMismatch("composition basis does not match the model")
        row = u.as_array()
    else:
        row = np.asarray(u, dtype=float)
    if row.shape != (model.n_dims,):
        raise DimensionMismatch(
            f"vector shape {row.shape} does not match model dimension {model.n_dims}")
    probs = e_step(row[None, :], model)[0]
    return probs, int(np.argmax(probs))


# ---------------------------------------------------------------------------
# model file format
# ---------------------------------------------------------------------------

def _pack_cov(model: GmmModel, k: int) -> list[float]:
    c = model.covariances
    if model.structure == SPHERICAL:
        return [float(c[k])]
    if model.structure == DIAGONAL:
        return [float(v) for v in c[k]]
    mat = c if model.structure == TIED else c[k]
    N = model.n_dims
    return [float(mat[i][j]) for i in range(N) for j in range(i + 1)]


def _unpack_cov(values: list[float], structure: str, K: int, N: int) -> np.ndarray:
    if structure == SPHERICAL:
        return np.asarray([v[0] for v in values])
    if structure == DIAGONAL:
        return np.asarray(values)
    mats = []
    for packed in values:
        mat = np.zeros((N, N))
        it = iter(packed)
        for i in range(N):
            for j in range(i + 1):
                mat[i, j] = mat[j, i] = next(it)
        mats.append(mat)
    if structure == FULL:
        return np.asarray(mats)
    for m in mats[1:]:
        if not np.array_equal(m, mats[0]):
            raise ValidationError("tied model stores differing covariance matrices")
    return mats[0]


def model_to_text(model: GmmModel) -> str:
    """Versioned text serialization; byte-stable and exactly invertible."""
    K, N = model.n_components, model.n_dims
    lines = [f"GMM;v1;{model.race};{model.scope};{model.structure};{K};{N}",
             ";".join(model.basis)]
    for k in range(K):
        fields = [repr(float(model.weights[k]))]
        fields += [repr(float(v)) for v in model.means[k]]
        fields += [repr(v) for v in _pack_cov(model, k)]
        lines.append(";".join(fields))
    lines.append(f"{model.train_log_likelihood!r};{model.bic_score!r}")
    return "\n".join(lines) + "\n"


def _cov_field_count(structure: str, N: int) -> int:
    if structure == SPHERICAL:
        return 1
    if structure == DIAGONAL:
        return N
    return N * (N + 1) // 2


def model_from_text(text: str) -> GmmModel:
    lines = [ln for ln in text.split("\n") if not ln.startswith("#")]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ValidationError("empty model file")
    header = lines[0].split(";")
    if len(header) != 7 or header[0] != "GMM" or header[1] != "v1":
        raise ValidationError("not a v1 GMM model file")
    _, _, race, scope, structure, k_str, n_str = header
    K, N = int(k_str), int(n_str)
    if structure not in STRUCTURES:
        raise ValidationError(f"unknown covariance structure {structure!r}")
    basis = tuple(t for t in lines[1].split(";") if t)
    if len(lines) != 3 + K:
        raise ValidationError(f"expected {3 + K} lines, found {len(lines)}")
    weights, means, covs = [], [], []
    n_cov = _cov_field_count(structure, N)
    for ln in lines[2:2 + K]:
        parts = ln.split(";")
        if len(parts) != 1 + N + n_cov:
            raise ValidationError(f"component line has {len(parts)} fields")
        vals = [float(p) for p in parts]
        weights.append(vals[0])
        means.append(vals[1:1 + N])
        covs.append(vals[1 + N:])
    ll_str, bic_str = lines[2 + K].split(";")
    return GmmModel(
        structure=structure,
        weights=np.asarray(weights),
        means=np.asarray(means),
        covariances=_unpack_cov(covs, structure, K, N),
        basis=basis,
        race=race,
        scope=scope,
        train_log_likelihood=float(ll_str),
        bic_score=float(bic_str),
    )


def save_model(model: GmmModel, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(model_to_text(model), encoding="utf-8")


def load_model(path: str | Path) -> GmmModel:
    return model_from_text(Path(path).read_text(encoding="utf-8"))
