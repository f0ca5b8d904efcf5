"""Stroke error rate and the synthetic benchmark harness.

SER = (substitutions + deletions + insertions) / reference length, computed
from a minimal Levenshtein alignment with unit costs.  Aggregate SER pools
the error counts over the whole test set (the WER convention) rather than
averaging per-sequence ratios; report headers say so.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Hashable, Sequence

from .core import (
    DeviationConfig,
    StrokeSequence,
    StrokeVocabulary,
    TalaSpec,
    builtin_tala,
    can_host_tihai,
    default_vocabulary,
    generate_sequence,
)
from .lattice import LatticeGenConfig, generate_lattice, viterbi_acoustic
from .model import train_model
from .rescorer import RescoreConfig, rescore

BASELINE_LABEL = "baseline"
DEFAULT_LAMBDA_SWEEP = ("fixed:0", "fixed:0.25", "fixed:0.5", "fixed:0.75", "fixed:1", "adaptive")


@dataclass(frozen=True)
class EditStats:
    """Levenshtein alignment error counts against a reference of length n_ref."""

    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    n_ref: int = 0

    @property
    def total_errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def ser(self) -> float:
        if self.n_ref == 0:
            raise ValueError("SER undefined for an empty reference")
        return self.total_errors / self.n_ref

    def __add__(self, other: "EditStats") -> "EditStats":
        return EditStats(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.n_ref + other.n_ref,
        )


def ser(ref: Sequence[Hashable] | StrokeSequence, hyp: Sequence[Hashable] | StrokeSequence) -> EditStats:
    """Minimal-edit S/D/I decomposition of hyp against ref.

    When several moves achieve the optimal cost the backtrace prefers
    substitution, then insertion, then deletion; only the total enters SER,
    so any optimal decomposition would give the same rate.
    """
    r = _items(ref)
    h = _items(hyp)
    if not r:
        raise ValueError("reference sequence must be non-empty")
    rows = len(r) + 1
    cols = len(h) + 1
    dist = [[0] * cols for _ in range(rows)]
    for i in range(1, rows):
        dist[i][0] = i
    for j in range(1, cols):
        dist[0][j] = j
    for i in range(1, rows):
        ri = r[i - 1]
        row = dist[i]
        prev = dist[i - 1]
        for j in range(1, cols):
            sub = prev[j - 1] + (ri != h[j - 1])
            ins = row[j - 1] + 1
            dele = prev[j] + 1
            row[j] = min(sub, ins, dele)
    s = d = ins_n = 0
    i, j = len(r), len(h)
    while i > 0 or j > 0:
        cur = dist[i][j]
        if i > 0 and j > 0 and cur == dist[i - 1][j - 1] + (r[i - 1] != h[j - 1]):
            s += r[i - 1] != h[j - 1]
            i -= 1
            j -= 1
        elif j > 0 and cur == dist[i][j - 1] + 1:
            ins_n += 1
            j -= 1
        else:
            d += 1
            i -= 1
    return EditStats(substitutions=s, deletions=d, insertions=ins_n, n_ref=len(r))


def _items(seq: Sequence[Hashable] | StrokeSequence) -> tuple:
    if isinstance(seq, StrokeSequence):
        return seq.strokes
    return tuple(seq)


@dataclass(frozen=True, kw_only=True)
class BenchmarkSuiteConfig:
    """Everything a benchmark run needs, rooted in one seed.

    Per-sequence randomness is split deterministically from ``seed`` by
    stream and index, so reruns are byte-identical.  Talas that cannot host
    their default tihai run with ``p_tihai`` forced to zero.
    """

    talas: tuple[str, ...] = ("tintal", "jhaptal", "rupak", "ektal")
    train_per_tala: int = 24
    test_per_tala: int = 13
    cycles: int = 3
    deviation: DeviationConfig = field(default_factory=lambda: DeviationConfig(p_tihai=0.4, p_sub=0.03))
    branching: int = 3
    noise_sigma: float = 0.95
    margin: float = 1.0
    p_del: float = 0.0
    p_ins: float = 0.0
    n: int = 3
    laplace_k: float = 1.0
    w_tau: int = 16
    eps_dir: float = 1.0
    rescore: RescoreConfig = field(default_factory=RescoreConfig)
    lambda_modes: tuple[str, ...] = DEFAULT_LAMBDA_SWEEP
    seed: int = 2024
    train_fraction: float = 1.0

    def __post_init__(self) -> None:
        if not self.talas:
            raise ValueError("suite needs at least one tala")
        if self.train_per_tala < 1 or self.test_per_tala < 1:
            raise ValueError("need at least one training and one test sequence per tala")
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError("train_fraction must lie in (0, 1]")


def standard_suite(seed: int = 2024) -> BenchmarkSuiteConfig:
    """The tuned default suite: baseline SER in the 20-40% band."""
    return BenchmarkSuiteConfig(seed=seed)


@dataclass(frozen=True)
class BenchRow:
    label: str
    pooled: EditStats
    per_sequence: tuple[EditStats, ...]

    @property
    def ser(self) -> float:
        return self.pooled.ser


@dataclass(frozen=True)
class BenchmarkReport:
    """Baseline plus one row per rescoring configuration."""

    suite_seed: int
    train_strokes: int
    rows: tuple[BenchRow, ...]

    @property
    def baseline(self) -> BenchRow:
        return self.rows[0]

    def row(self, label: str) -> BenchRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def improvement_abs(self, label: str) -> float:
        return self.baseline.ser - self.row(label).ser

    def improvement_rel(self, label: str) -> float:
        base = self.baseline.ser
        if base == 0:
            return 0.0
        return (base - self.row(label).ser) / base

    def to_tsv(self) -> str:
        lines = ["config\tser\timprovement_abs\timprovement_rel"]
        for r in self.rows:
            if r.label == BASELINE_LABEL:
                lines.append(f"{r.label}\t{r.ser:.6f}\t0.000000\t0.000000")
            else:
                lines.append(
                    f"{r.label}\t{r.ser:.6f}\t{self.improvement_abs(r.label):.6f}"
                    f"\t{self.improvement_rel(r.label):.6f}"
                )
        return "".join(f"{l}\n" for l in lines)

    def to_table(self) -> str:
        header = (
            f"# seed={self.suite_seed} train_strokes={self.train_strokes} "
            "aggregate=pooled S+D+I over pooled N"
        )
        width = max(len(r.label) for r in self.rows)
        lines = [header, f"{'config':<{width}}  {'SER%':>7}  {'abs':>7}  {'rel%':>7}"]
        for r in self.rows:
            if r.label == BASELINE_LABEL:
                lines.append(f"{r.label:<{width}}  {100 * r.ser:7.2f}  {'-':>7}  {'-':>7}")
            else:
                lines.append(
                    f"{r.label:<{width}}  {100 * r.ser:7.2f}  "
                    f"{100 * self.improvement_abs(r.label):7.2f}  "
                    f"{100 * self.improvement_rel(r.label):7.2f}"
                )
        return "".join(f"{l}\n" for l in lines)


# Deterministic seed splitting: one root seed, disjoint streams per purpose.
_TRAIN_STREAM = 0
_TEST_STREAM = 1
_LATTICE_STREAM = 2
_MASK = (1 << 63) - 1


def split_seed(root: int, stream: int, index: int) -> int:
    return (root * 1_000_003 + stream * 7_919 + index * 104_729 + 12_345) & _MASK


def _suite_deviation(suite: BenchmarkSuiteConfig, tala: TalaSpec) -> DeviationConfig:
    dev = suite.deviation
    if dev.p_tihai > 0 and not can_host_tihai(tala, dev.tihai):
        return replace(dev, p_tihai=0.0)
    return dev


def build_training_corpus(
    suite: BenchmarkSuiteConfig,
    vocab: StrokeVocabulary | None = None,
) -> list[StrokeSequence]:
    """The suite's training split; ``train_fraction`` subsets per tala."""
    vocab = vocab or default_vocabulary()
    count = max(1, round(suite.train_per_tala * suite.train_fraction))
    corpus: list[StrokeSequence] = []
    for t_idx, name in enumerate(suite.talas):
        tala = builtin_tala(name, vocab)
        dev = _suite_deviation(suite, tala)
        for i in range(count):
            seed = split_seed(suite.seed, _TRAIN_STREAM, t_idx * 10_000 + i)
            corpus.append(generate_sequence(tala, suite.cycles, dev, seed, vocab))
    return corpus


def run_benchmark(suite: BenchmarkSuiteConfig) -> BenchmarkReport:
    """Generate data, train, decode baseline and all sweep configs, pool SER."""
    vocab = default_vocabulary()
    corpus = build_training_corpus(suite, vocab)
    model = train_model(
        corpus,
        vocab,
        n=suite.n,
        laplace_k=suite.laplace_k,
        w_tau=suite.w_tau,
        eps_dir=suite.eps_dir,
    )

    labels = [BASELINE_LABEL] + [_sweep_label(m) for m in suite.lambda_modes]
    per_seq: dict[str, list[EditStats]] = {label: [] for label in labels}

    for t_idx, name in enumerate(suite.talas):
        tala = builtin_tala(name, vocab)
        dev = _suite_deviation(suite, tala)
        for i in range(suite.test_per_tala):
            idx = t_idx * 10_000 + i
            truth = generate_sequence(
                tala, suite.cycles, dev, split_seed(suite.seed, _TEST_STREAM, idx), vocab
            )
            lat_cfg = LatticeGenConfig(
                rng_seed=split_seed(suite.seed, _LATTICE_STREAM, idx),
                branching=suite.branching,
                noise_sigma=suite.noise_sigma,
                margin=suite.margin,
                p_del=suite.p_del,
                p_ins=suite.p_ins,
            )
            lat = generate_lattice(truth, lat_cfg, vocab)
            per_seq[BASELINE_LABEL].append(ser(truth, viterbi_acoustic(lat)))
            for mode in suite.lambda_modes:
                cfg = replace(suite.rescore, lambda_mode=mode)
                hyp, _, _ = rescore(lat, model, cfg)
                per_seq[_sweep_label(mode)].append(ser(truth, hyp))

    rows = []
    for label in labels:
        stats = per_seq[label]
        pooled = sum(stats, EditStats())
        rows.append(BenchRow(label=label, pooled=pooled, per_sequence=tuple(stats)))
    train_strokes = sum(len(s) for s in corpus)
    return BenchmarkReport(suite_seed=suite.seed, train_strokes=train_strokes, rows=tuple(rows))


def _sweep_label(mode: str) -> str:
    if mode == "adaptive":
        return "adaptive"
    value = mode[len("fixed:"):] if mode.startswith("fixed:") else mode
    return f"lambda={value}"


def run_data_efficiency(
    suite: BenchmarkSuiteConfig,
    fractions: Sequence[tuple[str, float]] = (("small", 1 / 3), ("medium", 2 / 3), ("large", 1.0)),
) -> list[tuple[str, BenchmarkReport]]:
    """Benchmark at growing training-corpus fractions (stroke-count subsets)."""
    out = []
    for name, frac in fractions:
        sub = replace(suite, train_fraction=frac)
        out.append((name, run_benchmark(sub)))
    return out
