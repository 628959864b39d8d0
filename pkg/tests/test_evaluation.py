import json
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfhebb.encoding import BinaryPattern, PatternSet, build_pattern_set, default_class_codes, fixed_ranges, to_binary_pattern
from mfhebb.errors import EmptyLog, EmptyManifest, EmptyPredictions, EmptyRows, InputError, WidthMismatch
from mfhebb.evaluation import (
    EvalRow,
    accuracy_report,
    bench_forward,
    dumps_fixed,
    epoch_error_curve,
    evaluate,
    format_bench,
    lms_error,
    nearest_label,
    signed_binary,
    signed_binary_error,
    split_dataset,
)
from mfhebb.hebbnet import EpochLog, TrainConfig, init_network, train
from mfhebb.reference import ERROR_ROWS
from mfhebb.synthetic import separable_corpus

import oracles

P = BinaryPattern.parse


def manifest(counts):
    return [(f"{lab}/{i}", lab) for lab, n in counts.items() for i in range(n)]


class TestSplit:
    def test_stratified_counts(self):
        train, test = split_dataset(manifest({"a": 100, "b": 50, "c": 3}), 0.66, seed=1)
        assert Counter(l for _, l in train) == {"a": 66, "b": 33, "c": 1}
        assert Counter(l for _, l in test) == {"a": 34, "b": 17, "c": 2}

    def test_disjoint_and_complete(self):
        items = manifest({"a": 37, "b": 11})
        train, test = split_dataset(items, 0.5, seed=3)
        assert sorted(train + test) == sorted(items)
        assert not set(train) & set(test)

    def test_deterministic(self):
        items = manifest({"a": 20, "b": 20})
        assert split_dataset(items, 0.66, 9) == split_dataset(items, 0.66, 9)
        assert split_dataset(items, 0.66, 9) != split_dataset(items, 0.66, 10)

    def test_floor_is_robust_to_rounding(self):
        train, _ = split_dataset(manifest({"a": 100}), 0.29, 0)
        assert len(train) == 29

    def test_objects_with_label(self):
        corpus = separable_corpus(40, 4)
        train, test = split_dataset(corpus, 0.5, 0)
        assert Counter(s.label for s in train) == {f"class{c}": 5 for c in range(4)}

    def test_errors(self):
        with pytest.raises(EmptyManifest):
            split_dataset([], 0.5)
        for bad in (0.0, 1.0, 1.5):
            with pytest.raises(InputError):
                split_dataset(manifest({"a": 3}), bad)

    @settings(max_examples=50, deadline=None)
    @given(st.dictionaries(st.sampled_from("abcde"), st.integers(1, 30), min_size=1),
           st.floats(0.05, 0.95), st.integers(0, 1000))
    def test_partition_property(self, counts, ratio, seed):
        items = manifest(counts)
        train, test = split_dataset(items, ratio, seed)
        assert sorted(train + test) == sorted(items)
        got = Counter(l for _, l in train)
        for lab, n in counts.items():
            assert got[lab] == math.floor(ratio * n + 1e-9)


class TestSignedError:
    @pytest.mark.parametrize("row", ERROR_ROWS[:5] + ERROR_ROWS[6:7], ids=["1", "2", "3", "4", "5", "7"])
    def test_reference_rows(self, row):
        err, text = signed_binary_error(P(row.desired), P(row.actual))
        assert text == row.printed
        assert err == int(row.desired, 2) - int(row.actual, 2)

    def test_inconsistent_rows_follow_subtraction(self):
        # 81 - 116 and 85 - 69, worked by hand
        assert signed_binary_error(P("1010001"), P("1110100")) == (-35, "-100011")
        assert signed_binary_error(P("1010101"), P("1000101")) == (16, "10000")

    def test_signed_binary(self):
        assert [signed_binary(n) for n in (0, 1, -1, 5, -32)] == ["0", "1", "-1", "101", "-100000"]

    def test_width_mismatch(self):
        with pytest.raises(WidthMismatch):
            signed_binary_error(P("101"), P("10"))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 16).flatmap(
        lambda w: st.tuples(st.just(w), st.integers(0, 2**w - 1), st.integers(0, 2**w - 1))))
    def test_antisymmetric(self, wab):
        w, a, b = wab
        pa, pb = to_binary_pattern(a, w), to_binary_pattern(b, w)
        e1, t1 = signed_binary_error(pa, pb)
        e2, t2 = signed_binary_error(pb, pa)
        assert e1 == -e2 == a - b
        assert int(t1, 2) == a - b
        assert (t1 == t2 == "0") or t1.lstrip("-") == t2.lstrip("-")


class TestLms:
    def test_value(self):
        rows = [EvalRow.build(P("0000"), P("0000"), P("1000")),
                EvalRow.build(P("0000"), P("1000"), P("0000"))]
        # errors +8 and -8 over width 4: each scaled error is 0.5
        assert lms_error(rows) == 0.5

    def test_zero(self):
        rows = [EvalRow.build(P("01"), P("11"), P("11"))]
        assert lms_error(rows) == 0.0

    def test_reference_rows(self):
        rows = [EvalRow.build(P(r.input), P(r.actual), P(r.desired)) for r in ERROR_ROWS]
        errs = [int(r.desired, 2) - int(r.actual, 2) for r in ERROR_ROWS]
        assert lms_error(rows) == pytest.approx(math.sqrt(sum((e / 128) ** 2 for e in errs) / 8))

    def test_empty(self):
        with pytest.raises(EmptyRows):
            lms_error([])


class TestAccuracy:
    def test_nearest_label(self):
        codes = {"a": P("0001"), "b": P("0010"), "c": P("0100")}
        assert nearest_label(P("0001"), codes) == "a"
        assert nearest_label(P("0110"), codes) == "b"  # tie between b and c: lower code wins
        assert nearest_label(P("1111"), codes) == "a"

    def test_nearest_label_matches_oracle(self):
        rng = np.random.default_rng(0)
        codes = default_class_codes([f"l{i}" for i in range(10)])
        for _ in range(200):
            p = to_binary_pattern(int(rng.integers(0, 256)))
            best = min(codes.items(), key=lambda kv: (oracles.hamming(p.bits, kv[1].bits), int(kv[1])))
            assert nearest_label(p, codes) == best[0]

    def test_report(self):
        rep = accuracy_report([("a", "a"), ("b", "a"), ("b", "b"), ("a", "a")])
        assert rep.overall == 75.0
        assert rep.per_class == {"a": pytest.approx(200 / 3), "b": 100.0}
        assert rep.counts == {"a": 3, "b": 1}

    def test_empty(self):
        with pytest.raises(EmptyPredictions):
            accuracy_report([])


class TestErrorCurve:
    def test_curve(self, tmp_path):
        log = EpochLog([1, 2, 3], [0.5, 0.25, 0.25])
        curve = epoch_error_curve(log)
        assert curve.first == 0.5 and curve.last == 0.25
        assert curve.non_increasing and not curve.constant
        assert curve.to_csv() == "epoch,error\n1,0.500000\n2,0.250000\n3,0.250000\n"

    def test_constant(self):
        curve = epoch_error_curve(EpochLog([1, 2], [0.0, 0.0]))
        assert curve.constant and "trivially" in curve.note

    def test_rising(self):
        assert epoch_error_curve(EpochLog([1, 2], [0.1, 0.2])).note == "error rises after epoch 1"

    def test_empty(self):
        with pytest.raises(EmptyLog):
            epoch_error_curve(EpochLog())


class TestReport:
    def test_dumps_fixed(self):
        text = dumps_fixed({"a": 1.0, "b": [1, 2.5e-7], "c": "x", "d": True, "e": {}})
        assert json.loads(text) == {"a": 1.0, "b": [1, 0.0], "c": "x", "d": True, "e": {}}
        assert "1.000000" in text and "0.000000" in text

    def test_dumps_rejects_nan(self):
        with pytest.raises(ValueError):
            dumps_fixed(float("nan"))

    def test_evaluate_synthetic(self):
        corpus = separable_corpus(200, 4, seed=1)
        train_s, test_s = split_dataset(corpus, 0.66, 1)
        codes = default_class_codes(s.label for s in corpus)
        ranges = fixed_ranges()
        net, log = train(init_network(32, 8), build_pattern_set(train_s, codes, ranges), TrainConfig())
        rep = evaluate(net, build_pattern_set(test_s, codes, ranges), codes, log)
        assert rep.accuracy_overall >= 95.0
        assert len(rep.rows) == len(test_s)
        assert rep.lms == lms_error(rep.rows)
        doc = json.loads(rep.to_json())
        assert set(doc) == {"rows", "lms", "accuracy_overall", "accuracy_per_class", "epoch_errors"}
        assert doc["epoch_errors"][0]["epoch"] == 1

    def test_evaluate_empty(self):
        with pytest.raises(EmptyRows):
            evaluate(init_network(2, 1), PatternSet([]), {"a": P("1")})


class TestBench:
    def test_rows(self):
        rows = bench_forward([(64, 8), (8, 8)], reps=10, calls=5)
        assert [r.n_inputs for r in rows] == [8, 64]
        assert rows[0].ratio is None and rows[1].ratio > 0
        assert all(r.median_seconds > 0 for r in rows)
        text = format_bench(rows)
        assert text.splitlines()[0].split() == ["n_inputs", "n_outputs", "median_us", "ratio"]
        assert len(text.splitlines()) == 3

    def test_reps_floor(self):
        with pytest.raises(InputError):
            bench_forward([(8, 8)], reps=5)
