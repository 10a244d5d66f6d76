import numpy as np
import pytest

from amr2text import autodiff as ad
from amr2text.embeddings import (
    SPECIALS,
    CharEncoder,
    InputProjector,
    Vocab,
    embedding_table,
    load_pretrained,
)


def test_vocab_build_min_count():
    v1 = Vocab.build([["a", "b", "a"]], min_count=1)
    assert v1.tokens == SPECIALS + ["a", "b"]
    v2 = Vocab.build([["a", "b", "a"]], min_count=2)
    assert v2.tokens == SPECIALS + ["a"]
    assert v2.id("b") == v2.unk_id


def test_vocab_build_deterministic_order():
    streams = [["z", "m", "z", "m", "k"]]
    a = Vocab.build(streams)
    b = Vocab.build(streams)
    assert a.tokens == b.tokens
    # frequency first, ties lexicographic
    assert a.tokens[len(SPECIALS) :] == ["m", "z", "k"]


def test_vocab_rejects_empty():
    with pytest.raises(ValueError):
        Vocab.build([[]])


def test_vocab_save_load_roundtrip(tmp_path):
    v = Vocab.build([["cat", "sat", "cat"]])
    path = tmp_path / "vocab.txt"
    v.save(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines == ["cat", "sat"]  # line number = id after specials
    assert Vocab.load(path).tokens == v.tokens


def test_load_pretrained_rows(tmp_path):
    v = Vocab.build([["cat", "dog"]])
    path = tmp_path / "vec.txt"
    path.write_text("cat 1.0 2.0 3.0\nbird 9.0 9.0 9.0\n", encoding="utf-8")
    table = load_pretrained(path, v, dim=3, seed=7)
    np.testing.assert_allclose(table.data[v.id("cat")], [1.0, 2.0, 3.0])
    assert table.frozen
    # absent word is seeded-uniform and reproducible
    again = load_pretrained(path, v, dim=3, seed=7)
    np.testing.assert_array_equal(table.data[v.id("dog")], again.data[v.id("dog")])
    assert (np.abs(table.data[v.id("dog")]) <= 0.05).all()


def test_load_pretrained_dim_error(tmp_path):
    v = Vocab.build([["cat"]])
    path = tmp_path / "vec.txt"
    path.write_text("cat 1.0 2.0\n", encoding="utf-8")
    with pytest.raises(ValueError, match="expected 3"):
        load_pretrained(path, v, dim=3)


def test_char_encoder_dim_and_determinism():
    rng = np.random.default_rng(0)
    enc = CharEncoder("abcdefghijklmnopqrstuvwxyz", dim=100, rng=rng)
    out = enc.encode("describe")
    assert out.shape == (1, 100)
    np.testing.assert_array_equal(out.data, enc.encode("describe").data)


def test_char_encoder_truncates_to_twenty():
    rng = np.random.default_rng(1)
    enc = CharEncoder("abcdefghijklmnopqrstuvwxyz", dim=16, rng=rng)
    long_token = "abcdefghijklmnopqrstuvwxy"  # 25 chars
    np.testing.assert_array_equal(enc.encode(long_token).data, enc.encode(long_token[:20]).data)


def test_char_encoder_unknown_chars():
    rng = np.random.default_rng(2)
    enc = CharEncoder("ab", dim=8, rng=rng)
    assert np.isfinite(enc.encode("zzz").data).all()
    with pytest.raises(ValueError):
        enc.encode("")


def test_input_projector_identity_and_bias():
    rng = np.random.default_rng(3)
    proj = InputProjector(4, 0, 4, rng, use_char=False)
    proj.proj.W.data = np.eye(4)
    proj.proj.b.data = np.zeros((1, 4))
    e = ad.constant([[1.0, -2.0, 0.5, 3.0]])
    np.testing.assert_allclose(proj(e).data, e.data)
    proj.proj.b.data = np.full((1, 4), 0.25)
    np.testing.assert_allclose(proj(ad.constant(np.zeros((1, 4)))).data, np.full((1, 4), 0.25))


def test_input_projector_linear_in_embedding():
    rng = np.random.default_rng(4)
    proj = InputProjector(5, 3, 6, rng, use_char=True)
    hc = ad.constant(rng.normal(size=(1, 3)))
    e1 = rng.normal(size=(1, 5))
    e2 = rng.normal(size=(1, 5))
    out1 = proj(ad.constant(e1), hc).data
    out2 = proj(ad.constant(e2), hc).data
    both = proj(ad.constant(e1 + e2), hc).data
    base = proj(ad.constant(np.zeros((1, 5))), hc).data
    np.testing.assert_allclose(both, out1 + out2 - base, atol=1e-12)


def test_input_projector_char_width():
    rng = np.random.default_rng(5)
    proj = InputProjector(300, 100, 300, rng, use_char=True)
    assert proj.proj.W.shape == (400, 300)
    with pytest.raises(ValueError):
        proj(ad.constant(np.zeros((1, 300))))


def test_embedding_table_shape_and_range():
    rng = np.random.default_rng(6)
    t = embedding_table(10, 4, rng, name="t")
    assert t.shape == (10, 4)
    assert not t.frozen
    assert (np.abs(t.data) <= 0.05).all()
