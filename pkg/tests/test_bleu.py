import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amr2text.bleu import corpus_bleu, read_sentences


def toks(s):
    return s.split()


def test_identical_corpus_scores_100():
    hyps = [toks("the cat sat on the mat ."), toks("a genius .")]
    assert corpus_bleu(hyps, [list(h) for h in hyps]) == pytest.approx(100.0)


def test_disjoint_corpus_scores_0():
    assert corpus_bleu([toks("x y z")], [toks("a b c")]) == 0.0


def test_missing_trigram_scores_0():
    # clipped counts: p1 = 2/3, p2 = 1/2, p3 = 0 -> geometric mean collapses
    assert corpus_bleu([toks("the the cat")], [toks("the cat sat")]) == 0.0


def test_hand_computed_example():
    # hyp "the cat sat on the mat ." vs ref "the cat sat on a mat ."
    # clipped matches 6,4,2,1 over totals 7,6,5,4; equal lengths so BP = 1;
    # 100 * (6/7 * 4/6 * 2/5 * 1/4)^(1/4) = 48.8923 to four decimals
    score = corpus_bleu([toks("the cat sat on the mat .")], [toks("the cat sat on a mat .")])
    assert score == pytest.approx(48.8923, abs=5e-5)


def test_pair_reordering_invariance():
    hyps = [toks("a b c d"), toks("e f g h"), toks("a a a a")]
    refs = [toks("a b c x"), toks("e f y h"), toks("a a b b")]
    base = corpus_bleu(hyps, refs)
    rotated = corpus_bleu(hyps[1:] + hyps[:1], refs[1:] + refs[:1])
    assert base == pytest.approx(rotated)


def test_brevity_penalty_monotone():
    ref = toks("a b c d e f")
    scores = [corpus_bleu([ref[:k]], [ref]) for k in (6, 5, 4)]
    assert scores[0] == pytest.approx(100.0)
    assert scores[0] > scores[1] > scores[2]


def test_longer_hypothesis_has_no_brevity_penalty():
    # all n-grams still match; only the totals grow
    score = corpus_bleu([toks("a b c d e a b c d e")], [toks("a b c d e")])
    assert 0 < score < 100.0


def test_errors():
    with pytest.raises(ValueError):
        corpus_bleu([toks("a")], [])
    with pytest.raises(ValueError):
        corpus_bleu([], [])


def test_empty_hypothesis_scores_0():
    assert corpus_bleu([[]], [toks("a b")]) == 0.0


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.lists(st.sampled_from("abcde"), min_size=1, max_size=8),
            st.lists(st.sampled_from("abcde"), min_size=1, max_size=8),
        ),
        min_size=1,
        max_size=5,
    )
)
def test_score_bounded(pairs):
    hyps = [h for h, _ in pairs]
    refs = [r for _, r in pairs]
    score = corpus_bleu(hyps, refs)
    assert 0.0 <= score <= 100.0


def test_read_sentences(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("The cat .\nA Genius .\n", encoding="utf-8")
    assert read_sentences(p) == [["the", "cat", "."], ["a", "genius", "."]]
