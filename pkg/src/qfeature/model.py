"""Inner-product (UU-dagger) classifier with interleaved variational circuits.

A test row and a class centroid are both angle-encoded.  The circuit
``U(test) . PQC_A . U_dagger(centroid) . PQC_B`` is run from ``|0...0>`` and
the all-zero probability ``P`` gives the score ``sqrt(P)``; without the PQCs
this is exactly ``|<centroid|test>|``.  A row is assigned to the class whose
centroid scores highest, ties going to class 0.

Ablations:

* ``uu_only`` drops both PQCs and has no trainable parameters.
* ``variational_only`` runs ``U(test) . PQC_A`` and predicts class 1 when the
  probability of reading 0 on qubit 0 is below 0.5.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .circuit import (
    CX,
    RY,
    RZ,
    CircuitPlan,
    GateOp,
    apply_gate_density,
    apply_gate_state,
    circuit_unitary,
    prob_all_zero,
    run_circuit,
    run_circuit_density,
    state_to_density,
)
from .data import AngleScaler, DataError, FeatureMatrix
from .encoding import build_U, build_U_dagger, encoding_gates, qubits_for_features
from .metrics import confusion_and_metrics
from .noise import KrausChannel, apply_channel_qubit, apply_channel_stage
from .optimize import OptimizerConfig, minimize
from .seeding import derive_seed

FULL, UU_ONLY, VARIATIONAL_ONLY = "full", "uu_only", "variational_only"
MODES = (FULL, UU_ONLY, VARIATIONAL_ONLY)
STAGE, GATE = "stage", "gate"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    n_qubits: int = 3
    mode: str = FULL
    share_pqc_params: bool = False
    iteration_budget: int = 10
    seed: int = 0
    noise_placement: str = STAGE

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.iteration_budget < 1:
            raise ValueError("iteration_budget must be >= 1")
        if self.noise_placement not in (STAGE, GATE):
            raise ValueError("noise_placement must be 'stage' or 'gate'")
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")

    @property
    def n_params(self) -> int:
        per_pqc = 3 * self.n_qubits
        if self.mode == UU_ONLY:
            return 0
        if self.mode == VARIATIONAL_ONLY or self.share_pqc_params:
            return per_pqc
        return 2 * per_pqc


@dataclass
class TrainedModel:
    config: ModelConfig
    params: np.ndarray
    centroids: np.ndarray        # row c is the mean feature vector of class c
    scaler: AngleScaler
    trace: list[tuple[int, float, float]] = field(default_factory=list)
    evaluations: int = 0

    @property
    def centroid_angles(self) -> np.ndarray:
        return self.scaler.transform(self.centroids)


def build_pqc(params: Sequence[float], n_qubits: int) -> CircuitPlan:
    """RY layer, RZ layer, CX chain ``i -> i+1``, RY layer."""
    p = np.asarray(params, dtype=float).ravel()
    if p.size != 3 * n_qubits:
        raise ValueError(f"PQC on {n_qubits} qubits takes {3 * n_qubits} angles, got {p.size}")
    n = n_qubits
    ops = [GateOp(RY, i, float(p[i])) for i in range(n)]
    ops += [GateOp(RZ, i, float(p[n + i])) for i in range(n)]
    ops += [GateOp(CX, i + 1, controls=((i, True),)) for i in range(n - 1)]
    ops += [GateOp(RY, i, float(p[2 * n + i])) for i in range(n)]
    return CircuitPlan(n, tuple(ops), (("PQC", 0, len(ops)),))


def split_params(params, config: ModelConfig) -> tuple[np.ndarray | None, np.ndarray | None]:
    p = np.asarray(params, dtype=float).ravel()
    if p.size != config.n_params:
        raise ValueError(
            f"mode {config.mode!r} with share_pqc_params={config.share_pqc_params} "
            f"needs {config.n_params} parameters, got {p.size}"
        )
    if not np.all(np.isfinite(p)):
        raise ValueError("parameters must be finite")
    per = 3 * config.n_qubits
    if config.mode == UU_ONLY:
        return None, None
    if config.mode == VARIATIONAL_ONLY:
        return p, None
    if config.share_pqc_params:
        return p, p
    return p[:per], p[per:]


def assemble_circuit(test, centroid, params, config: ModelConfig) -> CircuitPlan:
    n = config.n_qubits
    pqc_a, pqc_b = split_params(params, config)
    parts = [("U", encoding_gates(test, n))]
    if config.mode == VARIATIONAL_ONLY:
        parts.append(("PQC-A", build_pqc(pqc_a, n).ops))
        return CircuitPlan.concat(n, parts)
    if len(np.ravel(test)) != len(np.ravel(centroid)):
        raise ValueError("test and centroid angle vectors differ in length")
    if config.mode == FULL:
        parts.append(("PQC-A", build_pqc(pqc_a, n).ops))
    parts.append(("U_dagger", build_U_dagger(centroid, n).ops))
    if config.mode == FULL:
        parts.append(("PQC-B", build_pqc(pqc_b, n).ops))
    return CircuitPlan.concat(n, parts)


def _effective(noise: KrausChannel | None) -> KrausChannel | None:
    # a zero-strength channel is the identity; route it through the pure path
    return None if noise is None or noise.strength == 0 else noise


def _noise_hook(channel: KrausChannel):
    return lambda rho, _label: apply_channel_stage(rho, channel)


def _gatewise_density(plan: CircuitPlan, rho: np.ndarray, channel: KrausChannel) -> np.ndarray:
    for op in plan.ops:
        rho = apply_gate_density(rho, op)
        for q in sorted(op.qubits()):
            rho = apply_channel_qubit(rho, channel, q)
    return rho


def _final_density(plan: CircuitPlan, channel: KrausChannel, placement: str) -> np.ndarray:
    rho0 = state_to_density(np.eye(1 << plan.n_qubits, dtype=complex)[0])
    if placement == GATE:
        return _gatewise_density(plan, rho0, channel)
    return run_circuit_density(plan, rho0, _noise_hook(channel))


def _qubit0_zero_prob(probs: np.ndarray) -> np.ndarray:
    return probs[..., 0::2].sum(axis=-1)


def score(test, centroid, params, config: ModelConfig, noise: KrausChannel | None = None) -> float:
    """Gate-by-gate reference score for one (test, centroid) pair.

    ``sqrt(P(0...0))`` for ``full``/``uu_only``; for ``variational_only`` the
    probability that qubit 0 reads 0 (``centroid`` is ignored).
    """
    plan = assemble_circuit(test, centroid, params, config)
    noise = _effective(noise)
    if noise is None:
        out = run_circuit(plan)
        if config.mode == VARIATIONAL_ONLY:
            return float(_qubit0_zero_prob(np.abs(out) ** 2))
        return float(np.sqrt(prob_all_zero(out)))
    rho = _final_density(plan, noise, config.noise_placement)
    diag = np.clip(np.real(np.diagonal(rho)), 0.0, 1.0)
    if config.mode == VARIATIONAL_ONLY:
        return float(_qubit0_zero_prob(diag))
    return float(np.sqrt(diag[0]))


class BatchScorer:
    """Scores many rows against both centroids for a fixed model layout.

    The encoded test states are prepared once; each parameter vector then
    costs one dense unitary per remaining stage.
    """

    def __init__(self, angles: np.ndarray, centroid_angles: np.ndarray, config: ModelConfig):
        self.config = config
        self.n = config.n_qubits
        self.angles = np.atleast_2d(np.asarray(angles, dtype=float))
        self.centroid_angles = np.asarray(centroid_angles, dtype=float)
        self.dim = 1 << self.n
        self.states = np.stack([run_circuit(build_U(a, self.n)) for a in self.angles])
        self.udag = [circuit_unitary(build_U_dagger(c, self.n)) for c in self.centroid_angles]

    def _stage_unitaries(self, params, centroid_index: int) -> list[np.ndarray]:
        pqc_a, pqc_b = split_params(params, self.config)
        mode = self.config.mode
        stages = []
        if mode in (FULL, VARIATIONAL_ONLY):
            stages.append(circuit_unitary(build_pqc(pqc_a, self.n)))
        if mode == VARIATIONAL_ONLY:
            return stages
        stages.append(self.udag[centroid_index])
        if mode == FULL:
            stages.append(circuit_unitary(build_pqc(pqc_b, self.n)))
        return stages

    def class_probabilities(self, params, noise: KrausChannel | None = None) -> np.ndarray:
        """Per-row readout probability: shape ``(rows, 2)`` for centroid modes,
        ``(rows,)`` (qubit-0 zero probability) for ``variational_only``."""
        if self.config.mode == VARIATIONAL_ONLY:
            return self._readout(params, 0, noise)
        return np.stack([self._readout(params, c, noise) for c in (0, 1)], axis=1)

    def _readout(self, params, c: int, noise) -> np.ndarray:
        noise = _effective(noise)
        stages = self._stage_unitaries(params, c)
        variational = self.config.mode == VARIATIONAL_ONLY
        if noise is None:
            m = np.eye(self.dim, dtype=complex)
            for u in stages:
                m = u @ m
            if variational:
                return _qubit0_zero_prob(np.abs(self.states @ m.T) ** 2)
            return np.minimum(np.abs(self.states @ m[0]) ** 2, 1.0)
        if self.config.noise_placement == GATE:
            diag = self._gatewise_diag(params, c, noise)
        else:
            rho = apply_channel_stage(state_to_density(self.states), noise)
            for u in stages:
                rho = u @ rho @ u.conj().T
                rho = apply_channel_stage(rho, noise)
            diag = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
        diag = np.clip(diag, 0.0, 1.0)
        return _qubit0_zero_prob(diag) if variational else diag[:, 0]

    def _gatewise_diag(self, params, c: int, noise) -> np.ndarray:
        rows = []
        for a in self.angles:
            plan = assemble_circuit(a, self.centroid_angles[c] if self.config.mode != VARIATIONAL_ONLY else a,
                                    params, self.config)
            rho = _final_density(plan, noise, GATE)
            rows.append(np.real(np.diagonal(rho)))
        return np.array(rows)

    def predict(self, params, noise: KrausChannel | None = None) -> np.ndarray:
        probs = self.class_probabilities(params, noise)
        if self.config.mode == VARIATIONAL_ONLY:
            return (probs < 0.5).astype(int)
        return (probs[:, 1] > probs[:, 0]).astype(int)


def _prepare(model: TrainedModel, x) -> BatchScorer:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.centroids.shape[1]:
        raise DataError(
            f"rows have {x.shape[1]} features but the model expects {model.centroids.shape[1]}"
        )
    return BatchScorer(model.scaler.transform(x), model.centroid_angles, model.config)


def predict(row, model: TrainedModel, noise: KrausChannel | None = None) -> int:
    """Class label for one post-PCA feature row."""
    row = np.asarray(row, dtype=float)
    if row.ndim != 1:
        raise ValueError("predict takes a single row; use predict_many for batches")
    return int(predict_many(row[None, :], model, noise)[0])


def predict_many(x, model: TrainedModel, noise: KrausChannel | None = None) -> np.ndarray:
    return _prepare(model, x).predict(model.params, noise)


def loss(params, scorer: BatchScorer, labels) -> float:
    """``1 - accuracy`` of the predictions under ``params``."""
    labels = np.asarray(labels).astype(int)
    if labels.size == 0:
        raise ValueError("cannot compute loss on an empty dataset")
    pred = scorer.predict(params)
    return 1.0 - float(np.mean(pred == labels))


def fit_centroids(fm: FeatureMatrix) -> np.ndarray:
    return np.stack([fm.x[fm.y == c].mean(axis=0) for c in (0, 1)])


def train(
    fm: FeatureMatrix,
    config: ModelConfig = ModelConfig(),
    optimizer: OptimizerConfig | None = None,
) -> TrainedModel:
    """Fit centroids and angle scaler, then optimise the PQC angles.

    Initial angles are drawn uniformly from ``[0, 2 pi)``.  The optimiser's
    iteration budget is ``config.iteration_budget``; the returned parameters
    are the best ever evaluated.
    """
    if set(np.unique(fm.y).tolist()) != {0, 1}:
        raise DataError("training data must contain both classes 0 and 1")
    if fm.x.shape[1] > (1 << config.n_qubits) - 1:
        raise DataError(
            f"{fm.x.shape[1]} features need {qubits_for_features(fm.x.shape[1])} qubits, "
            f"config has {config.n_qubits}"
        )
    centroids = fit_centroids(fm)
    scaler = AngleScaler(fm.x.min(axis=0), fm.x.max(axis=0))
    scorer = BatchScorer(scaler.transform(fm.x), scaler.transform(centroids), config)

    if config.mode == UU_ONLY:
        params = np.zeros(0)
        value = loss(params, scorer, fm.y)
        return TrainedModel(config, params, centroids, scaler, [(0, value, 1.0 - value)], 1)

    rng = np.random.default_rng(derive_seed(config.seed, "init"))
    x0 = rng.uniform(0.0, 2.0 * np.pi, size=config.n_params)
    opt = optimizer or OptimizerConfig()
    opt = OptimizerConfig(
        method=opt.method, rho_begin=opt.rho_begin, rho_end=opt.rho_end,
        max_evaluations=opt.max_evaluations, iteration_budget=config.iteration_budget,
        seed=config.seed, adaptive_radius=opt.adaptive_radius,
    )
    result = minimize(lambda p: loss(p, scorer, fm.y), x0, opt)
    trace = [(e.iteration, e.value, 1.0 - e.value) for e in result.trace]
    return TrainedModel(config, result.best_params, centroids, scaler, trace,
                        result.evaluations_used)


def evaluate(model: TrainedModel, fm: FeatureMatrix, noise: KrausChannel | None = None):
    pred = predict_many(fm.x, model, noise)
    return confusion_and_metrics(pred, fm.y)


def noise_sweep(
    model: TrainedModel,
    fm: FeatureMatrix,
    channels: Sequence[str],
    grid: Sequence[float],
    workers: int = 1,
) -> list[tuple[str, float, float]]:
    """Accuracy for every (channel, strength) pair.

    Strength 0 uses the noiseless pure-state path; any other strength uses the
    density-matrix path.  Rows come back ordered by channel then strength.
    """
    from .noise import build_channel

    scorer = _prepare(model, fm.x)

    def run(key):
        kind, p = key
        noise = build_channel(kind, p)
        acc = float(np.mean(scorer.predict(model.params, noise) == fm.y))
        return kind, float(p), acc

    keys = [(kind, float(p)) for kind in channels for p in grid]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(keys, pool.map(run, keys)))
        return [results[k] for k in keys]
    return [run(k) for k in keys]


def holdout_split(fm: FeatureMatrix, test_fraction: float, seed: int):
    """Stratified split into (train, test) feature matrices."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx = []
    for c in (0, 1):
        idx = np.flatnonzero(fm.y == c)
        k = int(round(test_fraction * len(idx)))
        test_idx.append(rng.choice(idx, size=k, replace=False))
    mask = np.zeros(fm.n_rows, dtype=bool)
    mask[np.concatenate(test_idx)] = True
    part = lambda m: FeatureMatrix(fm.x[m], fm.y[m], list(fm.names), dict(fm.notes))
    return part(~mask), part(mask)


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": asdict(model.config),
        "params": [float(v) for v in model.params],
        "centroids": [[float(v) for v in row] for row in model.centroids],
        "scaler": {
            "mins": [float(v) for v in model.scaler.mins],
            "maxs": [float(v) for v in model.scaler.maxs],
        },
        "trace": [[int(i), float(lo), float(acc)] for i, lo, acc in model.trace],
        "evaluations": int(model.evaluations),
    }


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version {doc.get('schema_version')!r}")
    config = ModelConfig(**doc["config"])
    params = np.array(doc["params"], dtype=float)
    split_params(params, config)
    return TrainedModel(
        config,
        params,
        np.array(doc["centroids"], dtype=float),
        AngleScaler(np.array(doc["scaler"]["mins"], dtype=float),
                    np.array(doc["scaler"]["maxs"], dtype=float)),
        [(int(i), float(lo), float(acc)) for i, lo, acc in doc["trace"]],
        int(doc.get("evaluations", 0)),
    )


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text()))
