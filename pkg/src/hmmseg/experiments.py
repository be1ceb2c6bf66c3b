"""Reference models, deterministic reproducers, and simulation harnesses.

Contents:

* a four-state model whose Viterbi path passes a state with vanishing
  classification probability (``counterexample_small_prob``),
* a three-state model in which revealing a true hidden state makes the
  adjusted alignment less accurate on average (``q_table`` and
  ``unsuccessful_peeping_report``),
* a six-state protein secondary-structure model with a 20-symbol amino
  acid alphabet (``run_protein_experiment``),
* a two-state Gaussian chain studied through seeded replicate batches
  (``run_gaussian_experiment``).

Every harness records model hash, seed, and configuration in the header
of its CSV outputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .inference import (
    accuracy,
    classification_probabilities,
    forward_backward,
    logsumexp,
    pmap,
    path_log_posterior,
    viterbi,
)
from .model import (
    CategoricalEmission,
    GaussianEmission,
    ModelSpec,
    TableEmission,
    model_hash,
    sample,
)
from .refine import (
    Metrics,
    RefinementConfig,
    bunch_refine,
    iterative_refine,
)

__all__ = [
    "small_probability_model",
    "peeping_model",
    "protein_model",
    "protein_emission_adjustment",
    "gaussian_chain_model",
    "SmallProbReport",
    "counterexample_small_prob",
    "PeepingConfig",
    "QTable",
    "q_table",
    "pin_probability",
    "pin_probability_limit",
    "PeepingReport",
    "unsuccessful_peeping_report",
    "run_protein_experiment",
    "run_gaussian_experiment",
    "GaussianStudy",
    "ReplicateOutcome",
    "PROTEIN_INADMISSIBLE_BUNCH",
    "write_table",
    "read_table",
]


# ---------------------------------------------------------------------------
# reference models
# ---------------------------------------------------------------------------


def small_probability_model() -> ModelSpec:
    """Four-state chain with forbidden transitions and three atoms x, y, z.

    State 1 never emits x, the other states never emit y, and z is
    emitted by every state (which restores the cluster condition for the
    stopping-time machinery).  Observing many x's followed by one y
    forces every admissible path through state 1 exactly once while the
    probability of the Viterbi state before the switch decays
    geometrically.
    """
    transition = [
        [1 / 2, 1 / 2, 0, 0],
        [1 / 4, 1 / 4, 1 / 4, 1 / 4],
        [0, 1 / 3, 1 / 3, 1 / 3],
        [0, 1 / 3, 1 / 3, 1 / 3],
    ]
    densities = [
        [1.0, 0.0, 1.0],
        [0.0, 1.0, 1.0],
        [1.0, 0.0, 1.0],
        [1.0, 0.0, 1.0],
    ]
    return ModelSpec(
        transition,
        [0.25, 0.25, 0.25, 0.25],
        TableEmission(densities, ("x", "y", "z")),
    )


def peeping_model(epsilon: float, bump: float) -> ModelSpec:
    """Three-state chain used for the unsuccessful-peeping construction.

    ``epsilon`` controls how rarely states 0 and 1 swap; ``bump`` is the
    extra density state 1 puts on atom y.  The initial distribution is
    the stationary one.  Atom values are densities (state 1 emits y with
    density ``1 + bump``), so a table emission model is used.
    """
    u = 2.0 * (1.0 - epsilon) / 3.0
    v = 2.0 * epsilon / 3.0
    transition = [[u, v, 1 / 3], [v, u, 1 / 3], [1 / 2, 0.0, 1 / 2]]
    initial = [
        0.6 * (1 + 2 * epsilon) / (1 + 4 * epsilon),
        1.2 * epsilon / (1 + 4 * epsilon),
        0.4,
    ]
    densities = [
        [1.0, 1.0, 1.0, 1.0],
        [0.0, 1.0 + bump, 1.0, 1.0],
        [0.0, 1.0, 1.0, 0.0],
    ]
    return ModelSpec(transition, initial, TableEmission(densities, ("x", "y", "z", "a")))


PROTEIN_TRANSITION = np.array(
    [
        [0.8360, 0.0034, 0.1606, 0.0000, 0.0000, 0.0000],
        [0.0022, 0.8282, 0.1668, 0.0028, 0.0000, 0.0000],
        [0.0175, 0.0763, 0.8607, 0.0455, 0.0000, 0.0000],
        [0.0000, 0.0000, 0.0000, 0.7500, 0.2271, 0.0229],
        [0.0000, 0.0000, 0.0000, 0.0000, 0.8450, 0.1550],
        [0.0000, 0.0018, 0.2481, 0.0000, 0.0000, 0.7501],
    ]
)

PROTEIN_INITIAL = np.array([0.0016, 0.0041, 0.9929, 0.0014, 0.0, 0.0])

AMINO_ACIDS = tuple("ACDEFGHIKLMNPQRSTVWY")

# published per-state emission columns, rounded to four decimals
PROTEIN_EMISSION_BY_SYMBOL = np.array(
    [
        [0.1059, 0.0636, 0.0643, 0.1036, 0.1230, 0.1230],
        [0.0107, 0.0171, 0.0135, 0.0081, 0.0111, 0.0128],
        [0.0538, 0.0319, 0.0775, 0.0634, 0.0415, 0.0345],
        [0.0973, 0.0477, 0.0620, 0.1120, 0.0852, 0.0848],
        [0.0436, 0.0576, 0.0330, 0.0371, 0.0386, 0.0399],
        [0.0303, 0.0484, 0.1133, 0.0447, 0.0321, 0.0229],
        [0.0203, 0.0227, 0.0259, 0.0188, 0.0197, 0.0221],
        [0.0564, 0.1010, 0.0372, 0.0577, 0.0694, 0.0593],
        [0.0672, 0.0443, 0.0574, 0.0540, 0.0671, 0.0810],
        [0.1227, 0.1068, 0.0674, 0.0994, 0.1279, 0.1477],
        [0.0240, 0.0219, 0.0181, 0.0214, 0.0293, 0.0304],
        [0.0299, 0.0252, 0.0561, 0.0259, 0.0338, 0.0336],
        [0.0333, 0.0208, 0.0757, 0.0472, 0.0067, 0.0031],
        [0.0443, 0.0270, 0.0330, 0.0469, 0.0497, 0.0472],
        [0.0594, 0.0464, 0.0470, 0.0522, 0.0677, 0.0697],
        [0.0496, 0.0496, 0.0744, 0.0485, 0.0422, 0.0491],
        [0.0395, 0.0641, 0.0572, 0.0465, 0.0412, 0.0375],
        [0.0591, 0.1386, 0.0473, 0.0685, 0.0677, 0.0545],
        [0.0168, 0.0170, 0.0111, 0.0135, 0.0130, 0.0124],
        [0.0359, 0.0483, 0.0286, 0.0306, 0.0331, 0.0345],
    ]
)


def protein_emission_adjustment() -> float:
    """Largest per-entry change made when renormalizing the emission table."""
    cols = PROTEIN_EMISSION_BY_SYMBOL
    sums = cols.sum(axis=0)
    return float(np.max(np.abs(cols / sums - cols)))


def protein_model() -> ModelSpec:
    """Six-state secondary-structure model over a 20-symbol alphabet.

    The published emission table is rounded to four decimals, so each
    state's distribution is renormalized to sum exactly to one; columns
    off by more than 1e-3 are rejected as a transcription error.
    """
    cols = PROTEIN_EMISSION_BY_SYMBOL
    sums = cols.sum(axis=0)
    if np.any(np.abs(sums - 1.0) > 1e-3):
        raise ValueError("emission table column does not sum to 1 within 1e-3")
    probs = (cols / sums).T
    return ModelSpec(
        PROTEIN_TRANSITION,
        PROTEIN_INITIAL,
        CategoricalEmission(probs, AMINO_ACIDS),
    )


def gaussian_chain_model(stay: float = 0.9, shift: float = 0.5) -> ModelSpec:
    """Symmetric two-state chain with N(0,1) and N(shift,1) emissions."""
    transition = [[stay, 1 - stay], [1 - stay, stay]]
    return ModelSpec(transition, [0.5, 0.5], GaussianEmission([0.0, shift], [1.0, 1.0]))


# ---------------------------------------------------------------------------
# vanishing classification probability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmallProbReport:
    m: int
    observations: np.ndarray
    viterbi_path: np.ndarray
    smoothing_at_switch: float      # posterior of the Viterbi state at time m-1
    closed_form: float              # 1 / (1 + (4/3)^m)


def counterexample_small_prob(m: int) -> SmallProbReport:
    """Decode m copies of atom x followed by one y in the four-state model.

    The Viterbi path stays in state 0 for the first m steps and then
    switches to state 1, yet the posterior probability of state 0 just
    before the switch is ``1/(1 + (4/3)^m)``, which vanishes with m.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    spec = small_probability_model()
    obs = spec.emission.encode(["x"] * m + ["y"])
    path = viterbi(spec, obs)
    tables = forward_backward(spec, obs)
    smoothing_at_switch = float(tables.smoothing[m - 1, path[m - 1]])
    closed = float(np.exp(-np.logaddexp(0.0, m * np.log(4.0 / 3.0))))
    return SmallProbReport(m, obs, path, smoothing_at_switch, closed)


# ---------------------------------------------------------------------------
# unsuccessful peeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeepingConfig:
    """Observation length and model parameters for the peeping study.

    The observations are x y z ... z a x of length ``m + 2``.  The bump
    must satisfy ``(1 + bump) * epsilon < 1 - epsilon`` so that the
    unrestricted Viterbi path stays in state 0 throughout.
    """

    m: int
    epsilon: float
    bump: float

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("m must be >= 3")
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 1/2)")
        if self.bump <= 0:
            raise ValueError("bump must be positive")
        if (1.0 + self.bump) * self.epsilon >= 1.0 - self.epsilon:
            raise ValueError("(1 + bump) * epsilon must be < 1 - epsilon")

    @property
    def n(self) -> int:
        return self.m + 2

    def observations(self, spec: ModelSpec) -> np.ndarray:
        return spec.emission.encode(["x", "y"] + ["z"] * (self.m - 2) + ["a", "x"])


@dataclass(frozen=True)
class QTable:
    """Smoothing probabilities conditional on the revealed state.

    ``q[t, i]`` is the probability of state i at time t given the
    observations and given state 1 at time n-2.  Rows sum to one; the
    rows at times 0, n-2 and n-1 are forced one-hots.
    """

    config: PeepingConfig
    q: np.ndarray

    @property
    def interior_sums(self) -> tuple[float, float]:
        """Summed probability of states 0 and 1 over times 1..m-1."""
        inner = self.q[1 : self.config.m]
        return float(inner[:, 0].sum()), float(inner[:, 1].sum())


def _log_alpha_sweep(config: PeepingConfig, log_P: np.ndarray) -> np.ndarray:
    """Forward scores for (1-based) times 2..m, computed in log space.

    Time t of the construction corresponds to row t of the returned
    array (row indices 0, 1 unused).  Only the first two observations
    x, y contribute emission terms; the z stretch has unit densities.
    """
    cfg = config
    u = 2.0 * (1.0 - cfg.epsilon) / 3.0
    v = 2.0 * cfg.epsilon / 3.0
    spec_pi = peeping_model(cfg.epsilon, cfg.bump).initial
    la = np.full((cfg.m + 1, 3), -np.inf)
    la[2] = np.log([spec_pi[0] * u, spec_pi[0] * v * (1.0 + cfg.bump), spec_pi[0] / 3.0])
    for t in range(3, cfg.m + 1):
        la[t] = logsumexp(la[t - 1][:, None] + log_P, axis=0)
    return la


def q_table(config: PeepingConfig) -> QTable:
    """Conditional smoothing table via the dedicated two-sided recursions.

    Forward scores run from the left end, restricted backward scores
    from the pinned time, both in log space; their product normalized
    per time point gives the conditional smoothing row.  This is an
    independent implementation of the pinned forward-backward recursion
    and is cross-checked against it in the test suite.
    """
    cfg = config
    spec = peeping_model(cfg.epsilon, cfg.bump)
    with np.errstate(divide="ignore"):
        log_P = np.log(spec.transition)
    u = 2.0 * (1.0 - cfg.epsilon) / 3.0
    v = 2.0 * cfg.epsilon / 3.0
    la = _log_alpha_sweep(cfg, log_P)
    # restricted backward scores: lg[t, i] = log p(z stretch, state 1 at n-2 | state i at t)
    lg = np.full((cfg.m + 1, 3), -np.inf)
    with np.errstate(divide="ignore"):
        lg[cfg.m] = np.log([v, u, 0.0])
    for t in range(cfg.m - 1, 1, -1):
        lg[t] = logsumexp(log_P + lg[t + 1][None, :], axis=1)
    n = cfg.n
    q = np.zeros((n, 3))
    q[0, 0] = 1.0
    q[n - 2, 1] = 1.0
    q[n - 1, 0] = 1.0
    for t in range(2, cfg.m + 1):
        score = la[t] + lg[t]
        q[t - 1] = np.exp(score - logsumexp(score))
    return QTable(cfg, q)


def pin_probability(config: PeepingConfig) -> float:
    """P(state 1 at time n-2 | observations), without conditioning."""
    cfg = config
    spec = peeping_model(cfg.epsilon, cfg.bump)
    with np.errstate(divide="ignore"):
        log_P = np.log(spec.transition)
        log_f_a = np.log([1.0, 1.0, 0.0])
    u = 2.0 * (1.0 - cfg.epsilon) / 3.0
    v = 2.0 * cfg.epsilon / 3.0
    la = _log_alpha_sweep(cfg, log_P)
    la_pin = logsumexp(la[cfg.m][:, None] + log_P, axis=0) + log_f_a
    num = la_pin[1] + np.log(v)
    den = np.logaddexp(la_pin[0] + np.log(u), num)
    return float(np.exp(num - den))


def pin_probability_limit(epsilon: float) -> float:
    """Long-sequence limit of :func:`pin_probability`; free of the bump."""
    u = 2.0 * (1.0 - epsilon) / 3.0
    v = 2.0 * epsilon / 3.0
    pi1 = 0.6 * (1 + 2 * epsilon) / (1 + 4 * epsilon)
    pi2 = 1.2 * epsilon / (1 + 4 * epsilon)
    pi3 = 0.4
    num = (pi1 * v + pi2 * u) * v
    return num / ((pi1 * u + pi2 * v + pi3 / 2.0) * u + num)


@dataclass(frozen=True)
class PeepingReport:
    """Both sides of the harm criterion plus the structural checks."""

    config: PeepingConfig
    lhs: float                       # conditional time spent in state 0 (interior)
    rhs: float                       # 1 + conditional time spent in state 1 (interior)
    peeping_harmful: bool            # lhs > rhs: revealing the state hurts on average
    viterbi_constant: bool           # unrestricted path stays in state 0
    restricted_shape: bool           # pinned path is 0, 1, ..., 1, 0
    pin_prob: float
    pin_prob_limit: float
    accuracy_unrestricted: float
    accuracy_after_peeping: float
    accuracy_gap: float              # unrestricted minus peeped, direct computation
    accuracy_gap_via_sums: float     # pin_prob * (lhs - rhs)


def unsuccessful_peeping_report(config: PeepingConfig) -> PeepingReport:
    """Quantify the effect of revealing the state at time n-2.

    The accuracy difference in favour of the unrestricted alignment is
    computed twice: once through the conditional-probability sums of the
    dedicated recursion, once directly from pinned forward-backward
    passes.  Both must agree.
    """
    cfg = config
    spec = peeping_model(cfg.epsilon, cfg.bump)
    obs = cfg.observations(spec)
    n = cfg.n
    qt = q_table(cfg)
    s0, s1 = qt.interior_sums
    lhs, rhs = s0, 1.0 + s1

    v = viterbi(spec, obs)
    viterbi_constant = bool(np.all(v == 0))
    restricted = viterbi(spec, obs, pins=[(n - 2, 1)])
    expected = np.ones(n, dtype=np.int64)
    expected[0] = expected[-1] = 0
    restricted_shape = bool(np.array_equal(restricted, expected))

    uncond = forward_backward(spec, obs)
    p1 = float(uncond.smoothing[n - 2, 1])
    p0 = float(uncond.smoothing[n - 2, 0])
    acc_unrestricted = accuracy(uncond, v)
    cond0 = forward_backward(spec, obs, pins=[(n - 2, 0)])
    cond1 = forward_backward(spec, obs, pins=[(n - 2, 1)])
    acc_peeped = p0 * accuracy(cond0, v) + p1 * accuracy(cond1, restricted)
    gap = acc_unrestricted - acc_peeped

    return PeepingReport(
        config=cfg,
        lhs=lhs,
        rhs=rhs,
        peeping_harmful=lhs > rhs,
        viterbi_constant=viterbi_constant,
        restricted_shape=restricted_shape,
        pin_prob=pin_probability(cfg),
        pin_prob_limit=pin_probability_limit(cfg.epsilon),
        accuracy_unrestricted=acc_unrestricted,
        accuracy_after_peeping=acc_peeped,
        accuracy_gap=gap,
        accuracy_gap_via_sums=pin_probability(cfg) * (lhs - rhs),
    )


# ---------------------------------------------------------------------------
# CSV plumbing
# ---------------------------------------------------------------------------


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_table(path, fieldnames: Sequence[str], rows: Sequence[dict], metadata: dict) -> None:
    """Write rows as CSV with a '#'-prefixed metadata header block."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for key, value in metadata.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_cell(row.get(k)) for k in fieldnames})


def read_table(path) -> tuple[dict, list[dict]]:
    """Parse a CSV written by :func:`write_table`; values stay strings."""
    metadata: dict[str, str] = {}
    lines = Path(path).read_text().splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            metadata[key] = value
            body_start = i + 1
        else:
            break
    rows = list(csv.DictReader(lines[body_start:]))
    return metadata, rows


# ---------------------------------------------------------------------------
# protein case study
# ---------------------------------------------------------------------------

# Bunch adjustment with posterior-mode replacements can pin states whose
# joint posterior is zero.  This seed/count pair, found by scanning seeds,
# reproduces such an inadmissible outcome and anchors the regression test.
PROTEIN_INADMISSIBLE_BUNCH = {"seed": 0, "count": 21}

DEFAULT_PROTEIN_SCHEDULE = (
    0, 1, 2, 3, 4, 5, 10, 15, 20, 25, 30, 35, 37, 40, 50, 60, 70, 77, 78, 100, 140,
)

METRIC_FIELDS = (
    "m",
    "errors",
    "expected_errors",
    "rho_min_cond",
    "rho_min_uncond",
    "log_posterior",
)


def _metrics_row(m: int, metrics: Metrics) -> dict:
    return {
        "m": m,
        "errors": metrics.errors,
        "expected_errors": metrics.expected_errors,
        "rho_min_cond": metrics.rho_min_cond,
        "rho_min_uncond": metrics.rho_min_uncond,
        "log_posterior": metrics.log_posterior,
    }


def run_protein_experiment(
    seed: int,
    schedule: Union[Sequence[int], float, None] = None,
    modes: Sequence[str] = ("pmap", "peep"),
    n: int = 1000,
    out_dir=None,
) -> dict:
    """Sample one sequence from the protein model and adjust its alignment.

    ``schedule`` is either a list of replacement/iteration counts (rows
    of the output tables) or a single threshold; by default the count
    schedule above is used.  Returns a dict with one table per
    (algorithm, mode) pair plus the sampled truth, and optionally writes
    the tables as CSV files into ``out_dir``.
    """
    spec = protein_model()
    truth, obs = sample(spec, n, seed)
    tables: dict[str, list[dict]] = {}
    threshold: Optional[float] = None
    if schedule is None:
        counts: Optional[tuple[int, ...]] = DEFAULT_PROTEIN_SCHEDULE
    elif isinstance(schedule, (list, tuple)):
        counts = tuple(int(m) for m in schedule)
    else:
        counts = None
        threshold = float(schedule)

    for mode in modes:
        if counts is not None:
            counts_capped = tuple(m for m in counts if m <= n)
            max_m = max(counts_capped)
            config = RefinementConfig(
                delta=0.1,
                max_iterations=max(max_m, 1),
                mode=mode,
                true_path=truth,
                stop_at_threshold=False,
            )
            _, trace = iterative_refine(spec, obs, config)
            by_m = {rec.iteration: rec for rec in trace.records}
            tables[f"iterative_{mode}"] = [
                _metrics_row(m, by_m[m].metrics) for m in counts_capped if m in by_m
            ]
            bunch_rows = []
            for m in counts_capped:
                result = bunch_refine(
                    spec, obs, count=m, mode=mode, true_path=truth
                )
                bunch_rows.append(_metrics_row(m, result.metrics))
            tables[f"bunch_{mode}"] = bunch_rows
        else:
            config = RefinementConfig(
                delta=threshold,
                max_iterations=n,
                mode=mode,
                true_path=truth,
            )
            _, trace = iterative_refine(spec, obs, config)
            tables[f"iterative_{mode}"] = [
                _metrics_row(rec.iteration, rec.metrics) for rec in trace.records
            ]
            result = bunch_refine(spec, obs, delta=threshold, mode=mode, true_path=truth)
            tables[f"bunch_{mode}"] = [_metrics_row(len(result.pins), result.metrics)]

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        metadata = {
            "model_hash": model_hash(spec),
            "seed": seed,
            "config": f"n={n} schedule={schedule if schedule is not None else counts}",
            "emission_renormalization_max_adjustment": repr(protein_emission_adjustment()),
        }
        for name, rows in tables.items():
            write_table(out_dir / f"protein_{name}.csv", METRIC_FIELDS, rows, metadata)
    tables["truth"] = truth
    tables["observations"] = obs
    return tables


# ---------------------------------------------------------------------------
# Gaussian replicate study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplicateOutcome:
    replicate: int
    algorithm: str               # "bunch" or "iterative"
    mode: str                    # "pmap" or "peep"
    delta: float
    adjustments: int             # pinned time points / iterations run
    errors: int
    expected_errors: Optional[float]
    rho_min_uncond: Optional[float]
    rho_min_cond: Optional[float]
    log_posterior: float
    stopped_by_threshold: Optional[bool]
    admissible: bool


@dataclass(frozen=True)
class GaussianStudy:
    seed: int
    replicates: int
    n: int
    deltas: tuple[float, ...]
    outcomes: tuple[ReplicateOutcome, ...]
    baseline: tuple[dict, ...]
    summary: tuple[dict, ...]
    traces: Optional[dict]       # (delta, mode) -> list of RefinementTrace


SUMMARY_FIELDS = (
    "delta",
    "algorithm",
    "mode",
    "mean_adjustments",
    "sd_adjustments",
    "mean_errors",
    "sd_errors",
    "mean_expected_errors",
    "sd_expected_errors",
    "mean_rho_min_uncond",
    "mean_rho_min_cond",
    "mean_log_posterior",
    "sd_log_posterior",
    "inadmissible_runs",
)

BASELINE_FIELDS = (
    "alignment",
    "mean_errors",
    "mean_expected_errors",
    "mean_rho_min",
    "mean_log_posterior",
)


def _mean_sd(values) -> tuple[Optional[float], Optional[float]]:
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    arr = np.asarray(vals, dtype=float)
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return float(arr.mean()), sd


def run_gaussian_experiment(
    replicates: int,
    n: int,
    deltas: Sequence[float],
    seed: int,
    modes: Sequence[str] = ("pmap", "peep"),
    keep_traces: bool = False,
    out_dir=None,
) -> GaussianStudy:
    """Replicate study of threshold-based adjustment on the two-state model.

    For every replicate a fresh (truth, observations) pair is drawn from
    a child seed of ``seed``; bunch and iterative adjustment then run for
    every threshold and mode.  Aggregated means/standard deviations per
    (threshold, algorithm, mode) triple form the summary table.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    spec = gaussian_chain_model()
    child_seeds = np.random.SeedSequence(seed).spawn(replicates)
    deltas = tuple(float(d) for d in deltas)
    outcomes: list[ReplicateOutcome] = []
    baseline_acc: dict[str, list] = {
        "viterbi": [], "pmap": [],
    }
    traces: dict = {(d, mode): [] for d in deltas for mode in modes} if keep_traces else None

    for i, child in enumerate(child_seeds):
        rng = np.random.default_rng(child)
        truth, obs = sample(spec, n, rng)
        uncond = forward_backward(spec, obs)
        v = viterbi(spec, obs)
        g = pmap(spec, obs)
        rho_v = classification_probabilities(uncond, v)
        baseline_acc["viterbi"].append(
            (
                int(np.sum(v != truth)),
                float(n - rho_v.sum()),
                float(rho_v.min()),
                path_log_posterior(spec, obs, v),
            )
        )
        rho_g = classification_probabilities(uncond, g)
        baseline_acc["pmap"].append(
            (
                int(np.sum(g != truth)),
                float(n - rho_g.sum()),
                float(rho_g.min()),
                path_log_posterior(spec, obs, g),
            )
        )
        for delta in deltas:
            for mode in modes:
                result = bunch_refine(spec, obs, delta=delta, mode=mode, true_path=truth)
                outcomes.append(
                    ReplicateOutcome(
                        replicate=i,
                        algorithm="bunch",
                        mode=mode,
                        delta=delta,
                        adjustments=len(result.pins),
                        errors=result.metrics.errors,
                        expected_errors=result.metrics.expected_errors,
                        rho_min_uncond=result.metrics.rho_min_uncond,
                        rho_min_cond=result.metrics.rho_min_cond,
                        log_posterior=result.metrics.log_posterior,
                        stopped_by_threshold=None,
                        admissible=result.admissible,
                    )
                )
                config = RefinementConfig(
                    delta=delta,
                    max_iterations=n,
                    mode=mode,
                    true_path=truth,
                )
                _, trace = iterative_refine(spec, obs, config)
                final = trace.records[-1].metrics
                outcomes.append(
                    ReplicateOutcome(
                        replicate=i,
                        algorithm="iterative",
                        mode=mode,
                        delta=delta,
                        adjustments=trace.iterations,
                        errors=final.errors,
                        expected_errors=final.expected_errors,
                        rho_min_uncond=final.rho_min_uncond,
                        rho_min_cond=final.rho_min_cond,
                        log_posterior=final.log_posterior,
                        stopped_by_threshold=trace.stopped_by_threshold,
                        admissible=True,
                    )
                )
                if keep_traces:
                    traces[(delta, mode)].append(trace)

    summary = []
    for delta in deltas:
        for algorithm in ("bunch", "iterative"):
            for mode in modes:
                group = [
                    o
                    for o in outcomes
                    if o.delta == delta and o.algorithm == algorithm and o.mode == mode
                ]
                mean_adj, sd_adj = _mean_sd([o.adjustments for o in group])
                mean_err, sd_err = _mean_sd([o.errors for o in group])
                mean_ee, sd_ee = _mean_sd([o.expected_errors for o in group])
                mean_ru, _ = _mean_sd([o.rho_min_uncond for o in group])
                mean_rc, _ = _mean_sd([o.rho_min_cond for o in group])
                finite_lp = [
                    o.log_posterior for o in group if np.isfinite(o.log_posterior)
                ]
                mean_lp, sd_lp = _mean_sd(finite_lp)
                summary.append(
                    {
                        "delta": delta,
                        "algorithm": algorithm,
                        "mode": mode,
                        "mean_adjustments": mean_adj,
                        "sd_adjustments": sd_adj,
                        "mean_errors": mean_err,
                        "sd_errors": sd_err,
                        "mean_expected_errors": mean_ee,
                        "sd_expected_errors": sd_ee,
                        "mean_rho_min_uncond": mean_ru,
                        "mean_rho_min_cond": mean_rc,
                        "mean_log_posterior": mean_lp,
                        "sd_log_posterior": sd_lp,
                        "inadmissible_runs": sum(1 for o in group if not o.admissible),
                    }
                )

    baseline_rows = []
    for name, rows in baseline_acc.items():
        arr = np.asarray(rows, dtype=float)
        baseline_rows.append(
            {
                "alignment": name,
                "mean_errors": float(arr[:, 0].mean()),
                "mean_expected_errors": float(arr[:, 1].mean()),
                "mean_rho_min": float(arr[:, 2].mean()),
                "mean_log_posterior": float(arr[:, 3].mean()),
            }
        )

    study = GaussianStudy(
        seed=seed,
        replicates=replicates,
        n=n,
        deltas=deltas,
        outcomes=tuple(outcomes),
        baseline=tuple(baseline_rows),
        summary=tuple(summary),
        traces=traces,
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        metadata = {
            "model_hash": model_hash(spec),
            "seed": seed,
            "config": f"replicates={replicates} n={n} deltas={list(deltas)}",
        }
        write_table(out_dir / "gaussian_summary.csv", SUMMARY_FIELDS, summary, metadata)
        write_table(
            out_dir / "gaussian_baseline.csv", BASELINE_FIELDS, baseline_rows, metadata
        )
    return study
