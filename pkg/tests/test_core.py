from __future__ import annotations

import pytest

from talarescore.core import (
    SENTINEL,
    SENTINEL_ID,
    DeviationConfig,
    StrokeSequence,
    StrokeVocabulary,
    TalaSpec,
    TihaiSpec,
    builtin_tala,
    builtin_talas,
    can_host_tihai,
    default_tihai,
    generate_sequence,
    load_sequences,
    load_tala_specs,
    load_vocabulary,
    save_sequences,
    save_tala_specs,
    save_vocabulary,
)
from talarescore.errors import VocabularyError

TINTAL_THEKA = (
    "Dha Dhin Dhin Dha Dha Dhin Dhin Dha Na Tin Tin Na Dha Tin Tin Na"
).split()


def test_vocabulary_ids_dense_with_sentinel_at_zero(vocab):
    assert vocab.symbols[SENTINEL_ID] == SENTINEL
    assert list(vocab.playable_ids) == list(range(1, vocab.num_playable + 1))
    for sid in vocab.playable_ids:
        assert vocab.id_of(vocab.symbol_of(sid)) == sid
    assert not vocab.is_playable(SENTINEL_ID)


def test_vocabulary_rejects_duplicates_and_bad_names():
    with pytest.raises(VocabularyError):
        StrokeVocabulary.of(["Dha", "Dha"])
    with pytest.raises(VocabularyError):
        StrokeVocabulary.of(["Dha", ""])
    with pytest.raises(VocabularyError):
        StrokeVocabulary.of(["Dha", "bad name"])
    with pytest.raises(VocabularyError):
        StrokeVocabulary.of([])


def test_stroke_sequence_rejects_sentinel_and_empty():
    with pytest.raises(ValueError):
        StrokeSequence(())
    with pytest.raises(ValueError):
        StrokeSequence((SENTINEL_ID, 1))


def test_builtin_tintal_matches_canonical_theka(vocab, tintal):
    assert tintal.matras == 16
    assert list(tintal.theka.to_symbols(vocab)) == TINTAL_THEKA


def test_builtin_talas_have_consistent_specs(vocab):
    talas = builtin_talas(vocab)
    names = [t.name for t in talas]
    assert "tintal" in names
    assert len(set(t.matras for t in talas)) >= 4
    for t in talas:
        assert len(t.theka) == t.matras


def test_tala_spec_validation(vocab, tintal):
    with pytest.raises(ValueError):
        TalaSpec("bad", 3, (1,), tintal.theka)
    with pytest.raises(ValueError):
        TalaSpec("bad", 16, (5, 5), tintal.theka)
    with pytest.raises(ValueError):
        TalaSpec("bad", 16, (0, 4), tintal.theka)


def test_default_tihai_matches_appendix_layout(vocab, tintal):
    tihai = default_tihai(tintal, vocab)
    assert tihai.phrase.to_symbols(vocab) == ("Dha", "Tin", "Tin", "Na")
    assert tihai.connector.to_symbols(vocab) == ("Na", "Na")
    assert tihai.repetitions == 3
    assert tihai.total_span == 16  # 4 + 2 + 4 + 2 + 4
    assert tihai.in_cycle_span == 12


def test_zero_deviation_is_pure_theka_repetition(vocab, tintal):
    for seed in (0, 1, 12345):
        seq = generate_sequence(tintal, 2, None, seed, vocab)
        assert seq.strokes == tintal.theka.strokes * 2
        assert seq.tala_label == "tintal"


def test_generation_length_law_and_determinism(vocab):
    dev = DeviationConfig(p_tihai=0.5, p_sub=0.2)
    for tala in builtin_talas(vocab):
        use = dev if can_host_tihai(tala) else DeviationConfig(p_sub=0.2)
        for cycles in (1, 2, 4):
            a = generate_sequence(tala, cycles, use, 42, vocab)
            b = generate_sequence(tala, cycles, use, 42, vocab)
            assert a == b
            assert len(a) == cycles * tala.matras


def test_forced_tihai_on_cycle_three_matches_worked_example(vocab, tintal):
    dev = DeviationConfig(tihai_cycles=(3,))
    seq = generate_sequence(tintal, 3, dev, 0, vocab)
    assert len(seq) == 48
    symbols = seq.to_symbols(vocab)
    # Cycles 1-2 plus the first vibhag of cycle 3 keep the theka.
    assert list(symbols[:32]) == TINTAL_THEKA * 2
    assert list(symbols[32:36]) == ["Dha", "Dhin", "Dhin", "Dha"]
    # Beats 37-48: phrase, connector, phrase, connector.
    expected_tail = (
        "Dha Tin Tin Na Na Na Dha Tin Tin Na Na Na"
    ).split()
    assert list(symbols[36:]) == expected_tail


def test_singleton_substitution_table_replaces_every_stroke(vocab, tintal):
    table = {
        "Dha": (("Ta", 1.0),),
        "Dhin": (("Ta", 1.0),),
        "Na": (("Ta", 1.0),),
        "Tin": (("Ta", 1.0),),
    }
    dev = DeviationConfig(p_sub=1.0, substitutions=table)
    seq = generate_sequence(tintal, 1, dev, 3, vocab)
    assert set(seq.to_symbols(vocab)) == {"Ta"}


def test_tihai_rejected_when_cycle_too_short(vocab):
    dadra = builtin_tala("dadra", vocab)
    assert not can_host_tihai(dadra)
    with pytest.raises(ValueError, match="at least"):
        generate_sequence(dadra, 2, DeviationConfig(p_tihai=1.0), 0, vocab)


def test_tihai_span_invariant():
    phrase = StrokeSequence((1, 2, 3, 4))
    conn = StrokeSequence((3, 3))
    tihai = TihaiSpec(phrase=phrase, connector=conn)
    assert tihai.total_span == 3 * 4 + 2 * 2
    assert len(tihai.expansion()) == tihai.in_cycle_span


def test_sequence_file_round_trip(tmp_path, vocab, tintal, jhaptal):
    seqs = [
        generate_sequence(tintal, 2, None, 1, vocab),
        generate_sequence(jhaptal, 1, None, 2, vocab),
        StrokeSequence((1, 2, 3)),  # unlabeled
    ]
    path = tmp_path / "seqs.txt"
    save_sequences(seqs, path, vocab)
    loaded = load_sequences(path, vocab)
    assert loaded == seqs
    # byte-stable rewrite
    save_sequences(loaded, tmp_path / "again.txt", vocab)
    assert (tmp_path / "again.txt").read_bytes() == path.read_bytes()


def test_vocabulary_file_round_trip(tmp_path, vocab):
    path = tmp_path / "vocab.txt"
    save_vocabulary(vocab, path)
    assert load_vocabulary(path) == vocab


def test_tala_file_round_trip(tmp_path, vocab):
    talas = builtin_talas(vocab)
    path = tmp_path / "talas.txt"
    save_tala_specs(talas, path, vocab)
    assert load_tala_specs(path, vocab) == talas


def test_unknown_symbol_in_sequence_file(tmp_path, vocab):
    path = tmp_path / "bad.txt"
    path.write_text("Dha Zzz\n", encoding="utf-8")
    with pytest.raises(VocabularyError, match="Zzz"):
        load_sequences(path, vocab)
