"""Per-tala n-gram stroke priors and the tala-independent marginalized prior.

The static prior is a mixture: an online posterior over the latent tala,
estimated from a recent-history window, weights per-tala Laplace-smoothed
n-gram distributions over the next stroke.  Trained tables are immutable and
may be shared across threads; the memo caches below are pure memoization.
"""

from __future__ import annotations

from typing import Iterable, Protocol, Sequence

import numpy as np

from .core import SENTINEL_ID, StrokeSequence, StrokeVocabulary
from .errors import VocabularyError


class NextStrokePrior(Protocol):
    """Anything that yields a next-stroke distribution given the history.

    The returned array has one strictly positive entry per playable stroke
    (index ``stroke_id - 1``) and sums to 1.  This is the seam where a learned
    sequence model could replace the count-based prior.
    """

    def prob(self, history: Sequence[int]) -> np.ndarray: ...


class NGramPrior:
    """Per-tala order-n stroke model with Laplace smoothing.

    Contexts have length exactly ``n - 1``; positions near the sequence start
    are padded with the start sentinel.
    """

    def __init__(
        self,
        n: int,
        laplace_k: float,
        num_playable: int,
        counts: dict[str, dict[tuple[int, ...], dict[int, int]]],
    ) -> None:
        if n < 1:
            raise ValueError("n-gram order must be >= 1")
        if laplace_k <= 0:
            raise ValueError("laplace_k must be positive")
        self.n = n
        self.laplace_k = laplace_k
        self.num_playable = num_playable
        self.counts = counts
        self._dist_cache: dict[tuple[str, tuple[int, ...]], np.ndarray] = {}

    @property
    def talas(self) -> tuple[str, ...]:
        return tuple(sorted(self.counts))

    def context_of(self, history: Sequence[int]) -> tuple[int, ...]:
        """The last ``n - 1`` strokes, sentinel-padded on the left."""
        need = self.n - 1
        ctx = tuple(history[-need:]) if need else ()
        if len(ctx) < need:
            ctx = (SENTINEL_ID,) * (need - len(ctx)) + ctx
        return ctx

    def distribution(self, tala: str, context: tuple[int, ...]) -> np.ndarray:
        """Smoothed conditional over playable strokes; cached per context.

        Callers must treat the returned array as read-only.
        """
        key = (tala, context)
        cached = self._dist_cache.get(key)
        if cached is not None:
            return cached
        k = self.laplace_k
        probs = np.full(self.num_playable, k, dtype=float)
        table = self.counts.get(tala)
        if table is None:
            raise ValueError(f"tala {tala!r} not in trained prior")
        for nxt, c in table.get(context, {}).items():
            probs[nxt - 1] += c
        probs /= probs.sum()
        self._dist_cache[key] = probs
        return probs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NGramPrior):
            return NotImplemented
        return (
            self.n == other.n
            and self.laplace_k == other.laplace_k
            and self.num_playable == other.num_playable
            and self.counts == other.counts
        )


def train_prior(
    corpus: Iterable[StrokeSequence],
    vocab: StrokeVocabulary,
    n: int,
    laplace_k: float = 1.0,
) -> NGramPrior:
    """Count n-grams per tala over a labeled corpus."""
    counts: dict[str, dict[tuple[int, ...], dict[int, int]]] = {}
    empty = True
    for seq in corpus:
        empty = False
        if not seq.tala_label:
            raise ValueError("training sequences must carry a tala label")
        table = counts.setdefault(seq.tala_label, {})
        padded = (SENTINEL_ID,) * (n - 1) + seq.strokes
        for i, nxt in enumerate(seq.strokes):
            ctx = padded[i : i + n - 1]
            slot = table.setdefault(ctx, {})
            slot[nxt] = slot.get(nxt, 0) + 1
    if empty:
        raise ValueError("empty training corpus")
    return NGramPrior(n, laplace_k, vocab.num_playable, counts)


class TalaPosteriorTable:
    """Window counts and tala priors backing the online tala posterior.

    ``counts[tala][u]`` is the number of occurrences of the stroke window
    ``u`` (length 1..w_tau) in training sequences labeled ``tala``; ``priors``
    holds P(tala) proportional to each tala's stroke share of the corpus.
    """

    def __init__(
        self,
        w_tau: int,
        laplace_k: float,
        counts: dict[str, dict[tuple[int, ...], int]],
        priors: dict[str, float],
    ) -> None:
        if w_tau < 1:
            raise ValueError("w_tau must be >= 1")
        if laplace_k <= 0:
            raise ValueError("laplace_k must be positive")
        if not priors:
            raise ValueError("empty tala set")
        if set(counts) - set(priors):
            raise ValueError("counts reference talas missing from priors")
        self.w_tau = w_tau
        self.laplace_k = laplace_k
        self.counts = counts
        self.priors = priors
        self.talas: tuple[str, ...] = tuple(sorted(priors))
        self._prior_vec = np.array([priors[t] for t in self.talas])
        self._post_cache: dict[tuple[int, ...], np.ndarray] = {}

    def posterior(self, u: Sequence[int]) -> np.ndarray:
        """P(tala | u) over ``self.talas``; reduces to the prior for unseen u.

        Callers must treat the returned array as read-only.
        """
        if len(u) > self.w_tau:
            raise ValueError(f"history window longer than w_tau={self.w_tau}")
        key = tuple(u)
        cached = self._post_cache.get(key)
        if cached is not None:
            return cached
        if not key:
            # No evidence yet: Bayes' rule collapses to the prior.
            post = self._prior_vec / self._prior_vec.sum()
        else:
            weights = np.array(
                [
                    (self.counts.get(t, {}).get(key, 0) + self.laplace_k) * self.priors[t]
                    for t in self.talas
                ]
            )
            post = weights / weights.sum()
        self._post_cache[key] = post
        return post

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TalaPosteriorTable):
            return NotImplemented
        return (
            self.w_tau == other.w_tau
            and self.laplace_k == other.laplace_k
            and self.counts == other.counts
            and self.priors == other.priors
        )


def train_tala_table(
    corpus: Iterable[StrokeSequence],
    w_tau: int = 16,
    laplace_k: float = 1.0,
) -> TalaPosteriorTable:
    """Count every stroke window of length 1..w_tau per tala."""
    counts: dict[str, dict[tuple[int, ...], int]] = {}
    stroke_totals: dict[str, int] = {}
    for seq in corpus:
        if not seq.tala_label:
            raise ValueError("training sequences must carry a tala label")
        table = counts.setdefault(seq.tala_label, {})
        stroke_totals[seq.tala_label] = stroke_totals.get(seq.tala_label, 0) + len(seq)
        s = seq.strokes
        for length in range(1, min(w_tau, len(s)) + 1):
            for i in range(len(s) - length + 1):
                key = s[i : i + length]
                table[key] = table.get(key, 0) + 1
    if not stroke_totals:
        raise ValueError("empty training corpus")
    total = sum(stroke_totals.values())
    priors = {t: c / total for t, c in stroke_totals.items()}
    return TalaPosteriorTable(w_tau, laplace_k, counts, priors)


def tala_posterior(table: TalaPosteriorTable, u: Sequence[int]) -> np.ndarray:
    """P(tala | u) ordered like ``table.talas``."""
    return table.posterior(u)


def ti_prior(
    prior: NGramPrior,
    table: TalaPosteriorTable,
    history: Sequence[int],
) -> np.ndarray:
    """Tala-independent next-stroke distribution for a playable-stroke history.

    Marginalizes the per-tala n-gram over the online tala posterior computed
    from the most recent ``w_tau`` strokes.
    """
    if set(prior.talas) != set(table.talas):
        raise ValueError("prior and posterior table trained on different tala sets")
    for sid in history:
        if not 1 <= sid <= prior.num_playable:
            raise VocabularyError(f"history stroke id {sid} outside the prior's vocabulary")
    u = tuple(history[-table.w_tau :]) if table.w_tau else ()
    post = table.posterior(u)
    ctx = prior.context_of(history)
    mix = np.zeros(prior.num_playable)
    for weight, tala in zip(post, table.talas):
        mix += weight * prior.distribution(tala, ctx)
    return mix


class TalaIndependentPrior:
    """Memoizing :class:`NextStrokePrior` over (prior, posterior table).

    ``w_tau`` may narrow (never widen) the table's trained window.  The memo
    key is the shortest history suffix the distribution depends on, so repeats
    across sequences and beam branches are served from cache.
    """

    def __init__(self, prior: NGramPrior, table: TalaPosteriorTable, w_tau: int | None = None):
        if set(prior.talas) != set(table.talas):
            raise ValueError("prior and posterior table trained on different tala sets")
        self.prior = prior
        self.table = table
        self.w_tau = min(w_tau, table.w_tau) if w_tau is not None else table.w_tau
        self._cache: dict[tuple[int, ...], np.ndarray] = {}
        self._suffix = max(self.w_tau, prior.n - 1)

    def prob(self, history: Sequence[int]) -> np.ndarray:
        key = tuple(history[-self._suffix :]) if self._suffix else ()
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        u = key[-self.w_tau :] if self.w_tau else ()
        post = self.table.posterior(u)
        ctx = self.prior.context_of(key)
        mix = np.zeros(self.prior.num_playable)
        for weight, tala in zip(post, self.table.talas):
            mix += weight * self.prior.distribution(tala, ctx)
        self._cache[key] = mix
        return mix
