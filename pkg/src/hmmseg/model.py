"""Hidden Markov model specification, validation, stationary analysis, sampling.

States are indexed 0..K-1 and time points 0..n-1 throughout the package.
A model consists of a K x K transition matrix, a length-K initial
distribution and an emission model.  Three emission families are supported:

* :class:`CategoricalEmission` - a probability table over a named symbol
  alphabet (rows sum to one, generative),
* :class:`GaussianEmission` - one normal distribution per state,
* :class:`TableEmission` - a nonnegative density table over named atoms.
  The values are densities with respect to an unspecified reference
  measure, so they need not sum to one and may exceed one.  This family
  is non-generative; it exists because several worked counterexamples are
  phrased directly in terms of density values.

All types are frozen dataclasses holding read-only arrays; every function
here is pure, so instances can be shared freely across threads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "CategoricalEmission",
    "GaussianEmission",
    "TableEmission",
    "EmissionModel",
    "ModelSpec",
    "ValidationReport",
    "validate",
    "stationary_distribution",
    "reverse_chain",
    "sample",
    "load_model",
    "save_model",
    "model_to_dict",
    "model_from_dict",
    "model_hash",
    "read_observations",
    "write_observations",
]

STOCHASTIC_TOL = 1e-12
STATIONARY_RESIDUAL_TOL = 1e-12


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _set(obj, name, value) -> None:
    # frozen dataclasses forbid plain assignment in __post_init__
    object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class CategoricalEmission:
    """Finite-alphabet emission distributions, one row per state.

    Parameters
    ----------
    probs : array_like, shape (K, A)
        ``probs[s, a]`` is the probability that state ``s`` emits symbol
        ``a``.  Rows must sum to one.
    alphabet : sequence of str
        Symbol names, one per column.
    """

    probs: np.ndarray
    alphabet: tuple[str, ...]

    def __post_init__(self):
        _set(self, "probs", _readonly(np.atleast_2d(self.probs)))
        _set(self, "alphabet", tuple(str(a) for a in self.alphabet))
        if self.probs.shape[1] != len(self.alphabet):
            raise ValueError("probs columns must match alphabet size")

    @property
    def kind(self) -> str:
        return "categorical"

    @property
    def num_states(self) -> int:
        return self.probs.shape[0]

    @property
    def generative(self) -> bool:
        return True

    def encode(self, obs) -> np.ndarray:
        return _encode_symbols(obs, self.alphabet)

    def decode_symbols(self, indices) -> list[str]:
        return [self.alphabet[int(i)] for i in np.asarray(indices)]

    def log_density_matrix(self, obs) -> np.ndarray:
        """Return the (n, K) matrix of log emission probabilities."""
        idx = self.encode(obs)
        with np.errstate(divide="ignore"):
            return np.log(self.probs[:, idx].T)

    def sample(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        cum = np.cumsum(self.probs, axis=1)[np.asarray(states, dtype=int)]
        u = rng.random(len(states))
        idx = (cum < u[:, None]).sum(axis=1)
        return np.minimum(idx, self.probs.shape[1] - 1)

    def problems(self) -> list[str]:
        out = []
        if np.any(self.probs < 0):
            out.append("emission probabilities must be nonnegative")
        bad = np.nonzero(np.abs(self.probs.sum(axis=1) - 1.0) > STOCHASTIC_TOL)[0]
        out.extend(f"emission row {s} not stochastic" for s in bad)
        return out

    def to_payload(self) -> dict:
        return {
            "kind": "categorical",
            "alphabet": list(self.alphabet),
            "probs": self.probs.tolist(),
        }


@dataclass(frozen=True)
class GaussianEmission:
    """One univariate normal emission distribution per state."""

    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        _set(self, "means", _readonly(np.atleast_1d(self.means)))
        _set(self, "variances", _readonly(np.atleast_1d(self.variances)))
        if self.means.shape != self.variances.shape:
            raise ValueError("means and variances must have equal length")

    @property
    def kind(self) -> str:
        return "gaussian"

    @property
    def num_states(self) -> int:
        return len(self.means)

    @property
    def generative(self) -> bool:
        return True

    def encode(self, obs) -> np.ndarray:
        return np.asarray(obs, dtype=float)

    def log_density_matrix(self, obs) -> np.ndarray:
        x = np.asarray(obs, dtype=float)[:, None]
        var = self.variances[None, :]
        return -0.5 * (x - self.means[None, :]) ** 2 / var - 0.5 * np.log(2.0 * np.pi * var)

    def sample(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        states = np.asarray(states, dtype=int)
        return rng.normal(self.means[states], np.sqrt(self.variances[states]))

    def problems(self) -> list[str]:
        out = []
        if np.any(self.variances <= 0):
            out.append("variance must be positive")
        if not np.all(np.isfinite(self.means)):
            out.append("means must be finite")
        return out

    def to_payload(self) -> dict:
        return {
            "kind": "gaussian",
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }


@dataclass(frozen=True)
class TableEmission:
    """Unnormalized density values over a named atom alphabet.

    Entries are densities with respect to an arbitrary reference measure:
    they must be nonnegative but rows need not sum to one and individual
    values may exceed one.  Posterior quantities depend only on these
    values, never on the reference measure itself.  No sampler exists.
    """

    densities: np.ndarray
    alphabet: tuple[str, ...]

    def __post_init__(self):
        _set(self, "densities", _readonly(np.atleast_2d(self.densities)))
        _set(self, "alphabet", tuple(str(a) for a in self.alphabet))
        if self.densities.shape[1] != len(self.alphabet):
            raise ValueError("densities columns must match alphabet size")

    @property
    def kind(self) -> str:
        return "abstract"

    @property
    def num_states(self) -> int:
        return self.densities.shape[0]

    @property
    def generative(self) -> bool:
        return False

    def encode(self, obs) -> np.ndarray:
        return _encode_symbols(obs, self.alphabet)

    def decode_symbols(self, indices) -> list[str]:
        return [self.alphabet[int(i)] for i in np.asarray(indices)]

    def log_density_matrix(self, obs) -> np.ndarray:
        idx = self.encode(obs)
        with np.errstate(divide="ignore"):
            return np.log(self.densities[:, idx].T)

    def sample(self, states, rng):
        raise ValueError("non-generative emission model")

    def problems(self) -> list[str]:
        if np.any(self.densities < 0):
            return ["density values must be nonnegative"]
        return []

    def to_payload(self) -> dict:
        return {
            "kind": "abstract",
            "alphabet": list(self.alphabet),
            "densities": self.densities.tolist(),
        }


EmissionModel = Union[CategoricalEmission, GaussianEmission, TableEmission]


def _encode_symbols(obs, alphabet: tuple[str, ...]) -> np.ndarray:
    arr = np.asarray(obs)
    if arr.dtype.kind in "iu":
        idx = arr.astype(np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= len(alphabet)):
            raise ValueError("symbol index out of range")
        return idx
    lookup = {name: i for i, name in enumerate(alphabet)}
    try:
        return np.array([lookup[str(a)] for a in arr], dtype=np.int64)
    except KeyError as err:
        raise ValueError(f"unknown symbol {err.args[0]!r}") from None


@dataclass(frozen=True)
class ModelSpec:
    """Complete HMM definition: transition matrix, initial law, emissions."""

    transition: np.ndarray
    initial: np.ndarray
    emission: EmissionModel

    def __post_init__(self):
        _set(self, "transition", _readonly(np.atleast_2d(self.transition)))
        _set(self, "initial", _readonly(np.atleast_1d(self.initial)))

    @property
    def num_states(self) -> int:
        return len(self.initial)


@dataclass(frozen=True)
class ValidationReport:
    problems: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.problems


def validate(spec: ModelSpec) -> ValidationReport:
    """Check every model invariant and report all violations.

    The report is empty exactly when the model is valid.  Nothing is
    raised; downstream operations assume a valid model.
    """
    out: list[str] = []
    P, pi = spec.transition, spec.initial
    k = len(pi)
    if k < 2:
        out.append("at least 2 states required")
    if P.shape != (k, k):
        out.append(f"transition must be {k}x{k}, got {P.shape}")
    else:
        if np.any(P < 0):
            out.append("transition probabilities must be nonnegative")
        bad = np.nonzero(np.abs(P.sum(axis=1) - 1.0) > STOCHASTIC_TOL)[0]
        out.extend(f"row {i} not stochastic" for i in bad)
    if np.any(pi < 0):
        out.append("initial probabilities must be nonnegative")
    if abs(pi.sum() - 1.0) > STOCHASTIC_TOL:
        out.append("initial distribution does not sum to 1")
    if spec.emission.num_states != k:
        out.append("emission model state count differs from transition matrix")
    out.extend(spec.emission.problems())
    return ValidationReport(tuple(out))


def _is_irreducible(P: np.ndarray) -> bool:
    """Strong connectivity of the positive-entry digraph, by double BFS."""
    adj = P > 0

    def reaches_all(mat) -> bool:
        seen = np.zeros(mat.shape[0], dtype=bool)
        seen[0] = True
        frontier = [0]
        while frontier:
            nxt = np.nonzero(mat[frontier].any(axis=0) & ~seen)[0]
            seen[nxt] = True
            frontier = list(nxt)
        return bool(seen.all())

    return reaches_all(adj) and reaches_all(adj.T)


def stationary_distribution(spec: ModelSpec) -> np.ndarray:
    """Solve pi' P = pi' for an irreducible chain.

    Solved as a dense linear system with one row replaced by the
    normalization constraint; a power iteration serves as fallback when
    the direct solve is not accurate enough.  The returned vector
    satisfies ``max|pi' P - pi'| <= 1e-12``.
    """
    P = spec.transition
    k = P.shape[0]
    if not _is_irreducible(P):
        raise ValueError("chain not irreducible")
    A = P.T - np.eye(k)
    A[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        pi = np.full(k, np.nan)
    if not np.all(np.isfinite(pi)) or np.any(pi < -1e-9):
        pi = np.full(k, 1.0 / k)
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()
    residual = np.max(np.abs(pi @ P - pi))
    for _ in range(10_000):
        if residual <= STATIONARY_RESIDUAL_TOL:
            return pi
        pi = pi @ P
        pi /= pi.sum()
        residual = np.max(np.abs(pi @ P - pi))
    raise ValueError("chain not irreducible")


def reverse_chain(spec: ModelSpec) -> np.ndarray:
    """Transition matrix of the time-reversed stationary chain.

    ``q[s, s'] = P[s', s] * pi[s'] / pi[s]`` where ``pi`` is the
    stationary distribution.  Reversing twice recovers the original
    matrix.
    """
    try:
        pi = stationary_distribution(spec)
    except ValueError:
        raise ValueError("reducible or degenerate chain") from None
    if np.any(pi <= 0):
        raise ValueError("reducible or degenerate chain")
    return (spec.transition.T * pi[None, :]) / pi[:, None]


def sample(
    spec: ModelSpec, n: int, seed: Union[int, np.random.Generator]
) -> tuple[np.ndarray, np.ndarray]:
    """Draw a hidden path and matching observations of length ``n``.

    Returns ``(states, observations)``; observations are symbol indices
    for categorical emissions and floats for Gaussian ones.  The draw is
    a pure function of ``seed``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not spec.emission.generative:
        raise ValueError("non-generative emission model")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    k = spec.num_states
    cum_init = np.cumsum(spec.initial)
    cum_trans = np.cumsum(spec.transition, axis=1)
    u = rng.random(n)
    states = np.empty(n, dtype=np.int64)
    states[0] = min(np.searchsorted(cum_init, u[0], side="right"), k - 1)
    for t in range(1, n):
        states[t] = min(np.searchsorted(cum_trans[states[t - 1]], u[t], side="right"), k - 1)
    obs = spec.emission.sample(states, rng)
    return states, obs


# ---------------------------------------------------------------------------
# model files
#
# A model file is a JSON document with the fields
#   states      : integer K
#   transition  : K x K nested list, row-major
#   initial     : length-K list
#   emission    : {"kind": "categorical", "alphabet": [...], "probs": [[...]]}
#                 {"kind": "gaussian", "means": [...], "variances": [...]}
#                 {"kind": "abstract", "alphabet": [...], "densities": [[...]]}
# Floats are serialized with repr semantics, so load(store(m)) == m exactly.
# ---------------------------------------------------------------------------


def model_to_dict(spec: ModelSpec) -> dict:
    return {
        "states": spec.num_states,
        "transition": spec.transition.tolist(),
        "initial": spec.initial.tolist(),
        "emission": spec.emission.to_payload(),
    }


def model_from_dict(data: dict) -> ModelSpec:
    em = data["emission"]
    kind = em.get("kind")
    if kind == "categorical":
        emission: EmissionModel = CategoricalEmission(em["probs"], tuple(em["alphabet"]))
    elif kind == "gaussian":
        emission = GaussianEmission(em["means"], em["variances"])
    elif kind == "abstract":
        emission = TableEmission(em["densities"], tuple(em["alphabet"]))
    else:
        raise ValueError(f"unknown emission kind {kind!r}")
    spec = ModelSpec(data["transition"], data["initial"], emission)
    if spec.num_states != int(data["states"]):
        raise ValueError("states field disagrees with matrix dimensions")
    return spec


def save_model(spec: ModelSpec, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(spec), indent=2) + "\n")


def load_model(path) -> ModelSpec:
    return model_from_dict(json.loads(Path(path).read_text()))


def model_hash(spec: ModelSpec) -> str:
    """Stable sha256 fingerprint of the model, used in report headers."""
    canonical = json.dumps(model_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# observation files: one observation per line, either a symbol name or a
# decimal real depending on the emission family.
# ---------------------------------------------------------------------------


def write_observations(path, obs, spec: ModelSpec) -> None:
    if isinstance(spec.emission, GaussianEmission):
        lines = [repr(float(x)) for x in np.asarray(obs, dtype=float)]
    else:
        arr = np.asarray(obs)
        if arr.dtype.kind in "iu":
            lines = spec.emission.decode_symbols(arr)
        else:
            lines = [str(a) for a in arr]
    Path(path).write_text("\n".join(lines) + "\n")


def read_observations(path, spec: ModelSpec) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if isinstance(spec.emission, GaussianEmission):
        return np.array([float(ln) for ln in lines])
    return spec.emission.encode(lines)
