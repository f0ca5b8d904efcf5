"""The trained rhythm model: static prior tables plus dynamic initialization.

Persists to a versioned line-oriented text file that round-trips exactly:

    tiprior v1
    n 3
    laplace_k 1.0
    w_tau 16
    eps_dir 1.0
    vocab Dha Dhin Na Tin Ta
    tala jhaptal 0.38...
    tala tintal 0.61...
    count <tala> <ctx...> <next> <count>
    taucount <tala> <window...> <count>
    alpha <prev> <next> <value>

``alpha`` lines carry only entries that differ from their defaults (``eps_dir``
on playable rows, 1 on the sentinel row).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import SENTINEL_ID, StrokeSequence, StrokeVocabulary
from .dynamic_model import DirichletState, init_alpha
from .errors import ModelFormatError
from .static_prior import (
    NGramPrior,
    TalaIndependentPrior,
    TalaPosteriorTable,
    train_prior,
    train_tala_table,
)

FORMAT_HEADER = "tiprior v1"


@dataclass(eq=False)
class RhythmModel:
    """Immutable bundle of trained tables; share freely across threads."""

    vocab: StrokeVocabulary
    prior: NGramPrior
    tala_table: TalaPosteriorTable
    alpha0: np.ndarray
    eps_dir: float
    _static_cache: dict[int, TalaIndependentPrior] = field(default_factory=dict, repr=False)

    def static_prior(self, w_tau: int | None = None) -> TalaIndependentPrior:
        """The memoizing next-stroke prior, shared per effective window."""
        eff = min(w_tau, self.tala_table.w_tau) if w_tau is not None else self.tala_table.w_tau
        cached = self._static_cache.get(eff)
        if cached is None:
            cached = TalaIndependentPrior(self.prior, self.tala_table, w_tau=eff)
            self._static_cache[eff] = cached
        return cached

    def initial_dirichlet(self, rho: float) -> DirichletState:
        return DirichletState(alpha=self.alpha0.copy(), rho=rho)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RhythmModel):
            return NotImplemented
        return (
            self.vocab == other.vocab
            and self.prior == other.prior
            and self.tala_table == other.tala_table
            and np.array_equal(self.alpha0, other.alpha0)
            and self.eps_dir == other.eps_dir
        )


def train_model(
    corpus: Sequence[StrokeSequence],
    vocab: StrokeVocabulary,
    n: int = 3,
    laplace_k: float = 1.0,
    w_tau: int = 16,
    eps_dir: float = 1.0,
) -> RhythmModel:
    """Train all tables from a tala-labeled corpus."""
    if not corpus:
        raise ValueError("empty training corpus")
    prior = train_prior(corpus, vocab, n=n, laplace_k=laplace_k)
    table = train_tala_table(corpus, w_tau=w_tau, laplace_k=laplace_k)
    alpha0 = init_alpha(corpus, vocab, eps_dir=eps_dir)
    return RhythmModel(vocab=vocab, prior=prior, tala_table=table, alpha0=alpha0, eps_dir=eps_dir)


def dumps_model(model: RhythmModel) -> str:
    vocab = model.vocab
    lines = [
        FORMAT_HEADER,
        f"n {model.prior.n}",
        f"laplace_k {model.prior.laplace_k!r}",
        f"w_tau {model.tala_table.w_tau}",
        f"eps_dir {model.eps_dir!r}",
        "vocab " + " ".join(vocab.playable_symbols),
    ]
    for tala in model.tala_table.talas:
        lines.append(f"tala {tala} {model.tala_table.priors[tala]!r}")
    for tala in sorted(model.prior.counts):
        table = model.prior.counts[tala]
        for ctx in sorted(table):
            for nxt in sorted(table[ctx]):
                ctx_syms = " ".join(vocab.symbol_of(c) for c in ctx)
                parts = ["count", tala]
                if ctx_syms:
                    parts.append(ctx_syms)
                parts += [vocab.symbol_of(nxt), str(table[ctx][nxt])]
                lines.append(" ".join(parts))
    for tala in sorted(model.tala_table.counts):
        windows = model.tala_table.counts[tala]
        for window in sorted(windows):
            win_syms = " ".join(vocab.symbol_of(c) for c in window)
            lines.append(f"taucount {tala} {win_syms} {windows[window]}")
    defaults = np.full_like(model.alpha0, model.eps_dir)
    defaults[SENTINEL_ID, :] = 1.0
    rows, cols = np.nonzero(model.alpha0 != defaults)
    for r, c in zip(rows.tolist(), cols.tolist()):
        lines.append(
            f"alpha {vocab.symbol_of(r)} {vocab.symbol_of(c + 1)} {float(model.alpha0[r, c])!r}"
        )
    return "".join(f"{l}\n" for l in lines)


def save_model(model: RhythmModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path: str | Path) -> RhythmModel:
    return loads_model(Path(path).read_text(encoding="utf-8"))


def loads_model(text: str) -> RhythmModel:
    lines = [l.strip() for l in text.splitlines() if l.strip() and not l.startswith("#")]
    if not lines or lines[0] != FORMAT_HEADER:
        raise ModelFormatError(f"expected header {FORMAT_HEADER!r}")
    header: dict[str, str] = {}
    vocab: StrokeVocabulary | None = None
    priors: dict[str, float] = {}
    ngram_counts: dict[str, dict[tuple[int, ...], dict[int, int]]] = {}
    tau_counts: dict[str, dict[tuple[int, ...], int]] = {}
    alpha_entries: list[tuple[str, str, float]] = []
    for line in lines[1:]:
        parts = line.split()
        kind = parts[0]
        if kind in ("n", "laplace_k", "w_tau", "eps_dir"):
            header[kind] = parts[1]
        elif kind == "vocab":
            vocab = StrokeVocabulary.of(parts[1:])
        elif kind == "tala":
            priors[parts[1]] = float(parts[2])
        elif kind == "count":
            if vocab is None:
                raise ModelFormatError("count line before vocab line")
            tala = parts[1]
            *ctx_syms, nxt_sym, count = parts[2:]
            ctx = tuple(vocab.id_of(s) for s in ctx_syms)
            slot = ngram_counts.setdefault(tala, {}).setdefault(ctx, {})
            slot[vocab.id_of(nxt_sym)] = int(count)
        elif kind == "taucount":
            if vocab is None:
                raise ModelFormatError("taucount line before vocab line")
            tala = parts[1]
            *win_syms, count = parts[2:]
            window = tuple(vocab.id_of(s) for s in win_syms)
            tau_counts.setdefault(tala, {})[window] = int(count)
        elif kind == "alpha":
            alpha_entries.append((parts[1], parts[2], float(parts[3])))
        else:
            raise ModelFormatError(f"unknown directive: {kind!r}")
    missing = {"n", "laplace_k", "w_tau", "eps_dir"} - set(header)
    if missing:
        raise ModelFormatError(f"missing header fields: {sorted(missing)}")
    if vocab is None:
        raise ModelFormatError("missing vocab line")
    if not priors:
        raise ModelFormatError("no tala lines")
    n = int(header["n"])
    laplace_k = float(header["laplace_k"])
    w_tau = int(header["w_tau"])
    eps_dir = float(header["eps_dir"])
    for tala in priors:
        ngram_counts.setdefault(tala, {})
        tau_counts.setdefault(tala, {})
    prior = NGramPrior(n, laplace_k, vocab.num_playable, ngram_counts)
    table = TalaPosteriorTable(w_tau, laplace_k, tau_counts, priors)
    alpha0 = np.full((vocab.num_symbols, vocab.num_playable), eps_dir, dtype=float)
    alpha0[SENTINEL_ID, :] = 1.0
    for prev_sym, next_sym, value in alpha_entries:
        alpha0[vocab.id_of(prev_sym), vocab.id_of(next_sym) - 1] = value
    return RhythmModel(vocab=vocab, prior=prior, tala_table=table, alpha0=alpha0, eps_dir=eps_dir)
