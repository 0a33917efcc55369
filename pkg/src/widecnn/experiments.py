"""Experiment runners, configuration files, and CSV reporting.

Configs are JSON documents with a documented, closed key set (unknown
keys are rejected). Every run is deterministic given (config, seed). CSV
reports are RFC-4180, carry a ``# schema=<tag>`` line above the header
row, and can be appended to without rewriting the header.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .activations import Activation, ReLU, Sigmoid, Softplus
from .analysis import BoundReport, RankReport, estimate_rank, gradient_bounds
from .architectures import desk_sweep_network, single_conv_network
from .constructions import ConstructionParams
from .data import load_idx, synthesize_dataset
from .errors import ConfigError
from .layout import conv1d_layout
from .network import (
    Conv,
    Dataset,
    FullyConnected,
    NetworkSpec,
    Output,
    Params,
    forward,
)
from .training import AdamConfig, LearningRateSchedule, TrainConfig, train_adam

# ---------------------------------------------------------------------------
# CSV reporting


def write_csv(path, columns, rows, schema_tag: str) -> None:
    """Write a schema-tagged RFC-4180 file: a ``# schema=`` line, the
    header row, then the data rows."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={schema_tag}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def append_csv(path, columns, rows, schema_tag: str) -> None:
    """Append rows, creating the tagged header if the file is new; refuses
    to append under a mismatching schema or header."""
    path = Path(path)
    if not path.exists():
        write_csv(path, columns, rows, schema_tag)
        return
    tag, existing_columns, _ = read_csv(path)
    if tag != schema_tag or tuple(existing_columns) != tuple(columns):
        raise ConfigError(
            f"{path}: existing schema {tag!r}/{existing_columns} does not "
            f"match {schema_tag!r}/{list(columns)}"
        )
    with open(path, "a", newline="") as fh:
        csv.writer(fh).writerows(rows)


def read_csv(path):
    """Return (schema_tag, columns, rows) from a schema-tagged CSV file."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        tag = first.removeprefix("# schema=") if first.startswith("# schema=") else None
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [row for row in reader]
    return tag, columns, rows


# ---------------------------------------------------------------------------
# Configuration files

_DATASET_KEYS_SYNTH = {"source", "n", "d", "m", "seed", "perturb_sigma"}
_DATASET_KEYS_IDX = {"source", "images", "labels"}
_TOP_KEYS = {
    "experiment",
    "dataset",
    "network",
    "seeds",
    "n_subset",
    "epochs",
    "learning_rate",
    "adam",
    "batch_size",
    "filter_counts",
    "wide_layer",
    "case",
    "trials",
    "activation",
    "out",
}

EXPERIMENT_KINDS = (
    "rank-genericity",
    "table2-sweep",
    "construct-independent",
    "construct-zeroloss",
    "grad-bounds",
    "train",
)


@dataclass(frozen=True)
class DatasetConfig:
    source: str = "synthetic"
    n: int = 64
    d: int = 16
    m: int = 2
    seed: int = 0
    perturb_sigma: float = 0.0
    images: str | None = None
    labels: str | None = None

    def load(self) -> Dataset:
        if self.source == "idx":
            return load_idx(self.images, self.labels)
        return synthesize_dataset(self.n, self.d, self.m, self.seed,
                                  self.perturb_sigma)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment file; every field has a defensible desk-scale
    default so flags alone are enough for the common runs."""

    experiment: str | None = None
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    network: str | None = None
    seeds: tuple[int, ...] = tuple(range(100))
    n_subset: int = 256
    epochs: int = 3000
    schedule: LearningRateSchedule = field(default_factory=LearningRateSchedule)
    adam: AdamConfig = field(default_factory=AdamConfig)
    batch_size: int | None = None
    filter_counts: tuple[int, ...] = (2, 4, 8, 16)
    wide_layer: int = 1
    case: int = 1
    trials: int = 200
    activation: str = "sigmoid"
    out: str | None = None

    def train_config(self, seed: int = 0) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            schedule=self.schedule,
            adam=self.adam,
            batch_size=self.batch_size,
            seed=seed,
        )


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("experiment config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    if "experiment" in doc:
        if doc["experiment"] not in EXPERIMENT_KINDS:
            raise ConfigError(
                f"unknown experiment {doc['experiment']!r}; expected one of "
                f"{EXPERIMENT_KINDS}"
            )
        kwargs["experiment"] = doc["experiment"]
    if "dataset" in doc:
        ds = doc["dataset"]
        if not isinstance(ds, dict) or "source" not in ds:
            raise ConfigError("dataset must be an object with a 'source' key")
        allowed = _DATASET_KEYS_IDX if ds["source"] == "idx" else _DATASET_KEYS_SYNTH
        if ds["source"] not in ("idx", "synthetic"):
            raise ConfigError(f"unknown dataset source {ds['source']!r}")
        extra = set(ds) - allowed
        if extra:
            raise ConfigError(f"unknown dataset keys: {sorted(extra)}")
        kwargs["dataset"] = DatasetConfig(**ds)
    if "seeds" in doc:
        kwargs["seeds"] = tuple(int(s) for s in doc["seeds"])
    if "learning_rate" in doc:
        lr = doc["learning_rate"]
        extra = set(lr) - {"initial", "decay", "interval"}
        if extra:
            raise ConfigError(f"unknown learning_rate keys: {sorted(extra)}")
        kwargs["schedule"] = LearningRateSchedule(**lr)
    if "adam" in doc:
        extra = set(doc["adam"]) - {"beta1", "beta2", "eps"}
        if extra:
            raise ConfigError(f"unknown adam keys: {sorted(extra)}")
        kwargs["adam"] = AdamConfig(**doc["adam"])
    if "filter_counts" in doc:
        kwargs["filter_counts"] = tuple(int(t) for t in doc["filter_counts"])
    for key in ("network", "n_subset", "epochs", "batch_size", "wide_layer",
                "case", "trials", "activation", "out"):
        if key in doc:
            kwargs[key] = doc[key]
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def named_activation(name: str) -> Activation:
    if name == "sigmoid":
        return Sigmoid()
    if name == "relu":
        return ReLU()
    if name.startswith("softplus"):
        alpha = 10.0
        if "(" in name:
            alpha = float(name[name.index("(") + 1 : name.rindex(")")])
        return Softplus(alpha)
    raise ConfigError(f"unknown activation name {name!r}")


# ---------------------------------------------------------------------------
# Rank genericity under random parameters

RANK_GENERICITY_COLUMNS = (
    "seed",
    "rows",
    "cols",
    "estimated_rank",
    "sigma_min",
    "sigma_max",
    "threshold",
    "full_row_rank",
)


@dataclass(frozen=True)
class RankGenericityResult:
    reports: tuple[RankReport, ...]
    seeds: tuple[int, ...]
    fraction_full: float

    def csv_rows(self):
        rows = []
        for seed, rep in zip(self.seeds, self.reports):
            rows.append(
                [
                    str(seed),
                    *rep.csv_row()[:6],
                    str(rep.estimated_rank == rep.rows),
                ]
            )
        return rows


def rank_genericity_network(cfg: ExperimentConfig) -> tuple[NetworkSpec, int]:
    """Network used for the genericity experiment: the configured netspec,
    or a single conv layer just wide enough that n_1 >= N."""
    if cfg.network is not None:
        from .netspec_io import load_netspec

        return load_netspec(cfg.network), cfg.wide_layer
    d, n = cfg.dataset.d, cfg.dataset.n
    kernel = min(9, d)
    windows = d - kernel + 1
    filters = -(-2 * n // windows)  # width 2N leaves slack above the bound
    spec = single_conv_network(d, kernel, filters,
                               activation=named_activation(cfg.activation))
    return spec, 1


def run_rank_genericity(cfg: ExperimentConfig) -> RankGenericityResult:
    """Estimate rank(F_k) under Gaussian parameters for each seed.

    With analytic activations and n_k >= N the full-rank fraction should
    be 1.0; for ReLU the fraction is reported without any claim.
    """
    spec, k = rank_genericity_network(cfg)
    dataset = cfg.dataset.load()
    reports = []
    for seed in cfg.seeds:
        rng = np.random.default_rng(seed)
        params = Params.gaussian(spec, rng, up_to=k)
        trace = forward(spec, params, dataset.X, up_to=k)
        reports.append(estimate_rank(trace.F[k]))
    hits = sum(rep.estimated_rank == dataset.sample_count for rep in reports)
    result = RankGenericityResult(
        tuple(reports), tuple(cfg.seeds), hits / len(cfg.seeds)
    )
    if cfg.out:
        write_csv(cfg.out, RANK_GENERICITY_COLUMNS, result.csv_rows(),
                  "rank-genericity.v1")
    return result


# ---------------------------------------------------------------------------
# Desk-scale filter sweep

TABLE2_COLUMNS = (
    "T_1",
    "size(F_1)",
    "rank(F_1)",
    "sigma_min(F_1)",
    "size(F_3)",
    "rank(F_3)",
    "sigma_min(F_3)",
    "loss",
    "train_error",
    "test_error",
)


@dataclass(frozen=True)
class Table2Row:
    """One sweep entry; column order mirrors the reference table:
    first-layer filter count, then size/rank/smallest singular value of
    the first and third feature matrices, final loss, and error counts."""

    t1: int
    f1_size: tuple[int, int]
    f1_rank: int
    f1_sigma_min: float
    f3_size: tuple[int, int]
    f3_rank: int
    f3_sigma_min: float
    loss: float
    train_error: int
    test_error: int

    def csv_row(self) -> list[str]:
        return [
            str(self.t1),
            f"{self.f1_size[0]}x{self.f1_size[1]}",
            str(self.f1_rank),
            repr(self.f1_sigma_min),
            f"{self.f3_size[0]}x{self.f3_size[1]}",
            str(self.f3_rank),
            repr(self.f3_sigma_min),
            repr(self.loss),
            str(self.train_error),
            str(self.test_error),
        ]


@dataclass(frozen=True)
class SweepRun:
    row: Table2Row
    init_f1_rank: int
    loss_curve: tuple[float, ...]


@dataclass(frozen=True)
class SweepResult:
    runs: tuple[SweepRun, ...]

    @property
    def rows(self) -> list[Table2Row]:
        return [run.row for run in self.runs]


def table2_desk_config(
    n_subset: int = 256,
    filter_counts: tuple[int, ...] = (2, 4, 8, 16),
    epochs: int = 3000,
    seed: int = 0,
    out: str | None = None,
    images: str | None = None,
    labels: str | None = None,
) -> ExperimentConfig:
    """Desk-scale sweep defaults: 64-wide inputs with 10 balanced classes
    (or the given IDX files), a 9-tap first conv layer so the widest
    filter count clears n_1 >= n_subset, and the standard step-decay Adam
    recipe."""
    if images is not None and labels is not None:
        dataset = DatasetConfig(source="idx", images=images, labels=labels)
    else:
        dataset = DatasetConfig(source="synthetic", n=2 * n_subset, d=64, m=10,
                                seed=seed)
    return ExperimentConfig(
        experiment="table2-sweep",
        dataset=dataset,
        seeds=(seed,),
        n_subset=n_subset,
        epochs=epochs,
        batch_size=64,
        filter_counts=filter_counts,
        out=out,
    )


def sweep_datasets(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    """Train and held-out datasets of ``n_subset`` samples each."""
    if cfg.dataset.source == "idx":
        full = cfg.dataset.load()
    else:
        full = replace(cfg.dataset, n=2 * cfg.n_subset).load()
    n = cfg.n_subset
    if full.sample_count < 2 * n:
        raise ConfigError(
            f"n_subset={n} needs {2 * n} samples (train + held-out); the "
            f"dataset has {full.sample_count}"
        )
    train = Dataset(full.X[:n], full.Y[:n], full.labels[:n], full.Z)
    test = Dataset(full.X[n : 2 * n], full.Y[n : 2 * n], full.labels[n : 2 * n],
                   full.Z)
    return train, test


def run_table2_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Train the sweep architecture for each first-layer filter count and
    report feature-matrix ranks, final loss, and error counts."""
    train_set, test_set = sweep_datasets(cfg)
    m = train_set.class_count
    seed = cfg.seeds[0] if cfg.seeds else 0
    runs = []
    for t1 in cfg.filter_counts:
        spec = desk_sweep_network(train_set.input_width, t1, m)
        rng = np.random.default_rng(seed)
        params0 = Params.fan_in_gaussian(spec, rng)
        init_rank = estimate_rank(
            forward(spec, params0, train_set.X, up_to=1).F[1]
        ).estimated_rank
        train_cfg = replace(cfg.train_config(seed), stop_at_zero_errors=True)
        result = train_adam(spec, params0, train_set, train_cfg,
                            test_dataset=test_set)
        trace = forward(spec, result.params, train_set.X)
        rep1 = estimate_rank(trace.F[1])
        rep3 = estimate_rank(trace.F[3])
        row = Table2Row(
            t1=t1,
            f1_size=(trace.F[1].shape[0], trace.F[1].shape[1]),
            f1_rank=rep1.estimated_rank,
            f1_sigma_min=rep1.sigma_min,
            f3_size=(trace.F[3].shape[0], trace.F[3].shape[1]),
            f3_rank=rep3.estimated_rank,
            f3_sigma_min=rep3.sigma_min,
            loss=result.loss_curve[-1],
            train_error=result.train_error_count,
            test_error=result.test_error_count,
        )
        runs.append(SweepRun(row, init_rank, result.loss_curve))
    result = SweepResult(tuple(runs))
    if cfg.out:
        write_csv(cfg.out, TABLE2_COLUMNS, [r.csv_row() for r in result.rows],
                  "table2.v1")
    return result


# ---------------------------------------------------------------------------
# Gradient sandwich evaluation on random architectures


def random_landscape_case(
    rng: np.random.Generator,
    n_samples: int | None = None,
    residual_floor: float = 0.0,
):
    """Random architecture/data/parameters meeting the wide-pyramid
    assumptions: returns (spec, wide_layer, X, Y, params).

    The wide layer is 1 or 2, convolutional or dense, with width at least
    N; layers above it are dense with nonincreasing widths and sigmoid or
    softplus activations. Targets are Gaussian, guaranteeing (for
    ``residual_floor`` > 0) a residual of at least that norm.
    """
    N = int(n_samples if n_samples is not None else rng.integers(3, 7))
    d = int(rng.integers(4, 9))
    act = Sigmoid() if rng.integers(2) == 0 else Softplus(float(rng.integers(2, 9)))
    layers = []
    width = d
    k = int(rng.integers(1, 3))
    if k == 2:
        w1 = int(rng.integers(3, 7))
        layers.append(FullyConnected(w1, act))
        width = w1
    if rng.integers(2) == 0 and width >= 3:
        kernel = int(rng.integers(2, width))
        windows = width - kernel + 1
        filters = -(-N // windows) + int(rng.integers(1, 3))
        layers.append(Conv(conv1d_layout(width, kernel, 1), filters, act))
        width = windows * filters
    else:
        width = N + int(rng.integers(0, 4))
        layers.append(FullyConnected(width, act))
    m = int(rng.integers(1, 4))
    tail_depth = int(rng.integers(0, 3))
    tail = sorted(
        (int(rng.integers(m, max(m + 1, N + 4))) for _ in range(tail_depth)),
        reverse=True,
    )
    for w in tail:
        layers.append(FullyConnected(w, act))
    layers.append(Output(m))
    spec = NetworkSpec(d, tuple(layers))
    X = rng.standard_normal((N, d))
    Y = rng.standard_normal((N, m))
    params = Params.gaussian(spec, rng, weight_scale=0.7, bias_scale=0.3)
    if residual_floor > 0.0:
        out = forward(spec, params, X).output
        gap = float(np.linalg.norm(out - Y))
        if gap < residual_floor:
            Y = Y + (residual_floor / max(gap, 1e-9)) * (Y - out)
    return spec, k, X, Y, params


@dataclass(frozen=True)
class GradBoundsResult:
    reports: tuple[BoundReport, ...]
    violations: int


def run_grad_bounds(cfg: ExperimentConfig, rel_slack: float = 1e-8) -> GradBoundsResult:
    """Evaluate the gradient sandwich on ``trials`` random configurations
    and count violations beyond the relative slack."""
    rng = np.random.default_rng(cfg.seeds[0] if cfg.seeds else 0)
    reports = []
    violations = 0
    for _ in range(cfg.trials):
        spec, k, X, Y, params = random_landscape_case(rng)
        trace = forward(spec, params, X)
        report = gradient_bounds(spec, params, trace, Y, k)
        reports.append(report)
        slack = rel_slack * max(1.0, report.upper)
        if not (report.lower - slack <= report.grad_norm <= report.upper + slack):
            violations += 1
    result = GradBoundsResult(tuple(reports), violations)
    if cfg.out:
        write_csv(
            cfg.out,
            ("trial", "lower", "upper", "grad_norm", "residual", "factors"),
            [[str(i), *rep.csv_row()] for i, rep in enumerate(reports)],
            "grad-bounds.v1",
        )
    return result


# ---------------------------------------------------------------------------
# Zero-loss demonstration instances


def zero_loss_demo_case(case: int, seed: int = 0, N: int = 8, m: int = 2):
    """A (spec, dataset, wide_layer) triple exercising one of the three
    construction regimes: wide layer immediately before the output (1),
    one dense layer between (2), or two or more (3, uses the recursive
    class-collapse construction)."""
    d = 10
    act = Sigmoid()
    wide = FullyConnected(max(N, m) + 4, act)
    if case == 1:
        layers = (wide, Output(m))
        k = 1
    elif case == 2:
        layers = (wide, FullyConnected(max(m + 2, 6), act), Output(m))
        k = 1
    elif case == 3:
        layers = (
            FullyConnected(6, act),
            FullyConnected(N + 4, act),
            FullyConnected(6, act),
            FullyConnected(4, act),
            Output(m),
        )
        k = 2
    else:
        raise ConfigError(f"case must be 1, 2, or 3; got {case}")
    dataset = synthesize_dataset(N, d, m, seed=seed)
    spec = NetworkSpec(d, layers)
    return spec, dataset, k


def independence_demo(
    n_samples: int, activation: Activation, seed: int
) -> tuple[NetworkSpec, np.ndarray, ConstructionParams]:
    """A single wide conv layer instance for the independence construction."""
    d = max(6, n_samples // 4)
    kernel = min(4, d)
    windows = d - kernel + 1
    filters = -(-n_samples // windows) + 1
    spec = single_conv_network(d, kernel, filters, activation=activation)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_samples, d))
    return spec, X, ConstructionParams(seed=seed)
