import numpy as np
import pytest

from occupilot.errors import EmptyEvaluation, LengthMismatch
from occupilot.evalmetrics import ConfusionCounts, confusion, metrics, render_table


class TestConfusion:
    def test_perfect(self):
        c = confusion([1, 1, 0], [1, 1, 0])
        assert (c.tp, c.tn, c.fp, c.fn) == (2, 1, 0, 0)

    def test_hand_count(self):
        c = confusion([1, 0, 1, 0], [1, 1, 0, 0])
        assert (c.tp, c.fn, c.fp, c.tn) == (1, 1, 1, 1)

    def test_positive_class_swap(self):
        preds, labels = [1, 0, 1, 0, 1], [1, 1, 0, 0, 1]
        a = confusion(preds, labels, positive_class=1)
        b = confusion(preds, labels, positive_class=0)
        assert (a.tp, a.tn) == (b.tn, b.tp)
        assert (a.fp, a.fn) == (b.fn, b.fp)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion([1], [1, 0])

    def test_counts_partition_rows(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            preds = rng.integers(0, 2, n)
            labels = rng.integers(0, 2, n)
            assert confusion(preds, labels).total == n


class TestMetrics:
    # (precision, recall) -> F1 at 3 decimals, the published identities
    @pytest.mark.parametrize(
        "p,r,f1",
        [(0.887, 0.885, 0.886), (0.954, 0.950, 0.952), (0.903, 0.901, 0.902), (0.916, 0.918, 0.917)],
    )
    def test_f1_identity(self, p, r, f1):
        assert round(2 * p * r / (p + r), 3) == f1

    def test_uniform_counts(self):
        rep = metrics(ConfusionCounts(tp=1, tn=1, fp=1, fn=1))
        assert rep.accuracy == rep.precision == rep.recall == rep.f1 == 0.5

    def test_undefined_precision(self):
        rep = metrics(ConfusionCounts(tp=0, tn=3, fp=0, fn=2))
        assert rep.precision is None
        assert rep.f1 is None
        assert rep.recall == 0.0

    def test_undefined_recall(self):
        rep = metrics(ConfusionCounts(tp=0, tn=3, fp=2, fn=0))
        assert rep.recall is None
        assert rep.f1 is None

    def test_empty(self):
        with pytest.raises(EmptyEvaluation):
            metrics(ConfusionCounts(0, 0, 0, 0))

    def test_f1_is_harmonic_mean_random(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            tp, tn, fp, fn = (int(v) for v in rng.integers(0, 30, 4))
            if tp + tn + fp + fn == 0:
                continue
            rep = metrics(ConfusionCounts(tp, tn, fp, fn))
            if rep.f1 is None:
                continue
            p, r = rep.precision, rep.recall
            assert rep.f1 == pytest.approx(2 * p * r / (p + r), abs=1e-12)
            assert min(p, r) - 1e-12 <= rep.f1 <= max(p, r) + 1e-12

    def test_accuracy_relabel_invariant(self):
        rng = np.random.default_rng(2)
        preds = rng.integers(0, 2, 60)
        labels = rng.integers(0, 2, 60)
        a = metrics(confusion(preds, labels, positive_class=1)).accuracy
        b = metrics(confusion(preds, labels, positive_class=0)).accuracy
        assert a == pytest.approx(b)


class TestRenderTable:
    def test_shape_and_na(self):
        rep = metrics(ConfusionCounts(tp=0, tn=3, fp=0, fn=2))
        text = render_table([("SVM", "Room 1", rep)])
        lines = text.splitlines()
        assert lines[0].split()[:2] == ["Algorithm", "Location"]
        assert "n/a" in lines[1]
        assert "0.600" in lines[1]  # accuracy
