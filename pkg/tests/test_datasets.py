import numpy as np
import pytest

from ablearn.datasets import (
    Dataset,
    parse_abstention_sidecar,
    parse_svmlight,
    render_abstention_sidecar,
    render_svmlight,
    split_by_source,
    subset,
    synth_text_like,
)
from ablearn.errors import InputError, ParseError
from ablearn.map_models import LabeledObservations, fit_map, predict_label_dist


def test_parse_basic_line():
    ds = parse_svmlight("2 3:0.5 7:1.2\n")
    assert ds.labels == (2,)
    assert ds.examples[0].features == ((3, 0.5), (7, 1.2))
    assert ds.dimension == 8


def test_signed_convention():
    ds = parse_svmlight("-1 1:1.0\n+1 2:1.0\n")
    assert ds.labels == (1, 2)
    assert ds.manifest["convention"] == "signed"


def test_zero_one_convention():
    ds = parse_svmlight("0 1:1.0\n1 2:1.0\n0 3:2.5\n")
    assert ds.labels == (1, 2, 1)
    assert ds.manifest["convention"] == "zero-one"


def test_one_two_convention_and_bare_ones():
    assert parse_svmlight("1 1:1.0\n2 2:1.0\n").labels == (1, 2)
    # a file of bare 1s must reparse to itself after render
    assert parse_svmlight("1 3:0.5 7:1.2\n").labels == (1,)
    assert parse_svmlight("2 1:4.0\n").labels == (2,)


def test_mixed_conventions_fail_at_first_bad_line():
    with pytest.raises(ParseError) as e:
        parse_svmlight("-1 1:1.0\n0 2:1.0\n")
    assert e.value.line == 2
    with pytest.raises(ParseError) as e:
        parse_svmlight("1 1:1.0\n2 2:1.0\n0 3:1.0\n")
    assert e.value.line == 3
    with pytest.raises(ParseError) as e:
        parse_svmlight("-1 1:1.0\n1 2:1.0\n2 3:1.0\n")
    assert e.value.line == 3


def test_non_increasing_index():
    with pytest.raises(ParseError) as e:
        parse_svmlight("1 5:0.5 3:0.2\n")
    assert e.value.line == 1
    assert "non-increasing" in str(e.value)
    with pytest.raises(ParseError):
        parse_svmlight("1 3:0.5 3:0.2\n")


def test_malformed_tokens():
    for bad in ("1 a:b\n", "1 3\n", "1 3:\n", "x 3:1.0\n", "1 -2:1.0\n", "1 3:nan\n", "7 1:1.0\n"):
        with pytest.raises(ParseError) as e:
            parse_svmlight(bad)
        assert e.value.line == 1
    with pytest.raises(ParseError):
        parse_svmlight("")
    with pytest.raises(ParseError):
        parse_svmlight("\n  \n")


def test_blank_lines_skipped_but_numbering_physical():
    ds = parse_svmlight("\n2 1:1.0\n\n1 2:2.0\n")
    assert ds.labels == (2, 1)
    with pytest.raises(ParseError) as e:
        parse_svmlight("\n2 1:1.0\n\n1 5:0.5 3:0.2\n")
    assert e.value.line == 4


def test_zero_valued_features_dropped():
    ds = parse_svmlight("1 2:0.0 5:1.0\n")
    assert ds.examples[0].features == ((5, 1.0),)
    # dimension still covers the seen index range
    assert ds.dimension == 6


def test_render_parse_roundtrip_exact():
    rng = np.random.default_rng(12)
    for trial in range(10):
        ds = synth_text_like(
            int(rng.integers(5, 40)),
            int(rng.integers(4, 25)),
            float(rng.uniform(0, 3)),
            int(rng.integers(0, 3)),
            seed=trial,
        )
        back = parse_svmlight(render_svmlight(ds))
        assert back.labels == ds.labels
        assert all(a.features == b.features for a, b in zip(ds.examples, back.examples))
    # non-integral float values round-trip through repr exactly
    ds2 = parse_svmlight("1 0:0.1 3:1e-17\n2 1:3.141592653589793\n")
    again = parse_svmlight(render_svmlight(ds2))
    assert all(a.features == b.features for a, b in zip(ds2.examples, again.examples))


def test_sidecar_roundtrip_and_validation():
    bits = (0, 1, 1, 0, 1)
    assert parse_abstention_sidecar(render_abstention_sidecar(bits), 5) == bits
    with pytest.raises(ParseError) as e:
        parse_abstention_sidecar("0\n2\n", 2)
    assert e.value.line == 2
    with pytest.raises(ParseError):
        parse_abstention_sidecar("0\n1\n", 3)


def test_dataset_validation():
    from ablearn.core import Example

    with pytest.raises(InputError):
        Dataset((Example(0, ((0, 1.0),)),), (1, 2), 1)
    with pytest.raises(InputError):
        Dataset((Example(1, ((0, 1.0),)),), (1,), 1)
    with pytest.raises(InputError):
        Dataset((Example(0, ((4, 1.0),)),), (1,), 2)
    with pytest.raises(InputError):
        Dataset((Example(0, ((0, 1.0),)),), (3,), 1)


def test_subset_reindexes():
    ds = synth_text_like(12, 8, 2.0, redundant_classes=1, seed=5)
    sub = subset(ds, [4, 0, 7])
    assert [e.id for e in sub.examples] == [0, 1, 2]
    assert sub.labels == (ds.labels[4], ds.labels[0], ds.labels[7])
    assert sub.examples[0].features == ds.examples[4].features
    assert sub.dimension == ds.dimension
    with pytest.raises(InputError):
        subset(ds, [0, 0])
    with pytest.raises(InputError):
        subset(ds, [99])


def test_split_by_source():
    ds = synth_text_like(60, 20, 2.0, redundant_classes=2, seed=1)
    target, redundant = split_by_source(ds)
    assert len(target) + len(redundant) == 60
    assert set(target.source_classes) == {0, 1}
    assert all(s >= 2 for s in redundant.source_classes)
    assert all(y == s + 1 for y, s in zip(target.labels, target.source_classes))


def test_synth_validation():
    with pytest.raises(InputError):
        synth_text_like(0, 10)
    with pytest.raises(InputError):
        synth_text_like(10, 1)
    with pytest.raises(InputError):
        synth_text_like(10, 5, separation=-1.0)
    with pytest.raises(InputError):
        synth_text_like(10, 5, redundant_classes=-1)


def test_synth_deterministic():
    a = synth_text_like(50, 20, 2.0, 1, seed=3)
    b = synth_text_like(50, 20, 2.0, 1, seed=3)
    assert a == b
    assert a != synth_text_like(50, 20, 2.0, 1, seed=4)


def test_synth_features_sparse_nonnegative():
    ds = synth_text_like(80, 30, 1.0, seed=9)
    for e in ds.examples:
        assert len(e.features) >= 1
        idxs = [i for i, _ in e.features]
        assert idxs == sorted(idxs)
        assert all(v > 0 for _, v in e.features)
        assert all(0 <= i < 30 for i in idxs)


def test_high_separation_is_linearly_learnable():
    # the generator's own fitness check: a plainly regularized fit on all
    # rows should classify the training data almost perfectly
    ds = synth_text_like(200, 30, separation=3.0, seed=7)
    pool = ds.to_pool()
    obs = LabeledObservations("label", tuple(enumerate(ds.labels)))
    m = fit_map(obs, pool, 1.0)
    hits = 0
    for i, y in enumerate(ds.labels):
        dist = predict_label_dist(m, pool[i])
        pred = 1 if dist[0] >= dist[1] else 2
        hits += pred == y
    assert hits / len(ds) >= 0.95
