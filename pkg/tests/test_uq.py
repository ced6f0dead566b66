import math

import numpy as np
import pytest

from uqclf import mlp, uq
from uqclf.data import ClassVocabulary
from uqclf.mlp import MlpModel
from uqclf.uq import (
    EnsembleSet,
    PredictionRecord,
    emcd_predict,
    ensemble_predict,
    flag_certainty,
    mcd_predict,
    read_pass_dump,
    write_pass_dump,
)
from helpers import entropy_of, random_tiny_net, two_class_probs_for_normalized_entropy


def constant_output_model(probs, vocab):
    """Zero-weight net whose output biases are log(probs): emits probs exactly."""
    d, widths = 3, (2, 2)
    sizes = [d, *widths, vocab.count]
    W = tuple(np.zeros((a, b)) for a, b in zip(sizes, sizes[1:]))
    B = (np.zeros(2), np.zeros(2), np.log(np.asarray(probs)))
    return MlpModel(W, B, dropout_rate=0.0, vocab=vocab)


def record(mean_probs, true_label=0, sample_id="r"):
    p = np.asarray(mean_probs, dtype=np.float64)
    return PredictionRecord(
        sample_id=sample_id,
        mean_probs=p,
        entropy=mlp.predictive_entropy(p),
        predicted=int(np.argmax(p)),
        true_label=true_label,
    )


class TestMcd:
    def test_zero_dropout_collapses_to_deterministic_forward(self, vocab3):
        model = random_tiny_net(vocab3, dropout_rate=0.0)
        x = np.array([0.3, -1.2, 0.5, 2.0])
        det = mlp.forward(model, x)
        for T in (1, 3, 10):
            rec = mcd_predict(model, x, T=T, seed=0)
            assert np.array_equal(rec.mean_probs, det)
            assert rec.entropy == mlp.predictive_entropy(det)

    def test_single_pass_mean_is_that_pass(self, vocab3):
        model = random_tiny_net(vocab3, dropout_rate=0.4)
        x = np.ones(4)
        rec = mcd_predict(model, x, T=1, seed=5, keep_passes=True)
        assert rec.pass_probs.shape == (1, 3)
        assert np.array_equal(rec.mean_probs, rec.pass_probs.mean(axis=0))

    def test_mean_equals_average_of_dumped_passes(self, vocab3):
        model = random_tiny_net(vocab3, hidden=(8, 4), dropout_rate=0.3)
        x = np.array([1.0, -0.5, 0.25, 0.0])
        rec = mcd_predict(model, x, T=3, seed=8, keep_passes=True)
        assert rec.pass_probs.shape == (3, 3)
        assert np.array_equal(rec.mean_probs, rec.pass_probs.mean(axis=0))
        # Distinct masks actually produce distinct passes at this rate.
        assert any(
            not np.array_equal(rec.pass_probs[0], rec.pass_probs[t]) for t in (1, 2)
        )

    def test_same_seed_reproduces(self, vocab3):
        model = random_tiny_net(vocab3, dropout_rate=0.5)
        x = np.ones(4)
        a = mcd_predict(model, x, T=7, seed=12)
        b = mcd_predict(model, x, T=7, seed=12)
        assert np.array_equal(a.mean_probs, b.mean_probs)


class TestEnsemble:
    def test_single_member_equals_deterministic_forward(self, vocab3):
        model = random_tiny_net(vocab3, dropout_rate=0.2)
        x = np.zeros(4)
        rec = ensemble_predict(EnsembleSet((model,)), x)
        assert np.array_equal(rec.mean_probs, mlp.forward(model, x))

    def test_two_fixed_members_average_and_entropy(self, vocab2):
        m1 = constant_output_model([0.8, 0.2], vocab2)
        m2 = constant_output_model([0.6, 0.4], vocab2)
        rec = ensemble_predict(EnsembleSet((m1, m2)), np.zeros(3))
        assert rec.mean_probs == pytest.approx([0.7, 0.3], abs=1e-12)
        assert rec.entropy == pytest.approx(0.610864, abs=1e-6)

    def test_identical_members_add_no_spread(self, vocab2):
        m = constant_output_model([0.9, 0.1], vocab2)
        rec = ensemble_predict(EnsembleSet((m, m, m)), np.zeros(3))
        single = mlp.forward(m, np.zeros(3))
        assert np.allclose(rec.mean_probs, single, atol=1e-15)
        assert rec.entropy == pytest.approx(entropy_of(single), abs=1e-12)

    def test_mixed_architectures_rejected(self, vocab3):
        a = random_tiny_net(vocab3, hidden=(3, 2))
        b = random_tiny_net(vocab3, hidden=(4, 2))
        with pytest.raises(ValueError, match="architecture"):
            EnsembleSet((a, b))


class TestEmcd:
    def test_single_member_matches_mcd_bit_exactly(self, vocab3):
        model = random_tiny_net(vocab3, dropout_rate=0.4)
        x = np.array([0.1, 0.2, 0.3, 0.4])
        a = emcd_predict(EnsembleSet((model,)), x, T=6, seed=31, keep_passes=True)
        b = mcd_predict(model, x, T=6, seed=31, keep_passes=True)
        assert np.array_equal(a.mean_probs, b.mean_probs)
        assert a.entropy == b.entropy
        assert np.array_equal(a.pass_probs, b.pass_probs)

    def test_zero_dropout_matches_plain_ensemble_bit_exactly(self, vocab3):
        members = tuple(random_tiny_net(vocab3, dropout_rate=0.0, seed=s) for s in (1, 2, 3))
        ens = EnsembleSet(members)
        x = np.array([0.5, -0.5, 1.5, 0.0])
        a = emcd_predict(ens, x, T=9, seed=4)
        b = ensemble_predict(ens, x)
        assert np.array_equal(a.mean_probs, b.mean_probs)
        assert a.entropy == b.entropy

    def test_grouped_mean_recomputed_from_dumped_passes(self, vocab3):
        members = tuple(random_tiny_net(vocab3, dropout_rate=0.3, seed=s) for s in (5, 6))
        ens = EnsembleSet(members)
        x = np.array([1.0, 0.0, -1.0, 0.5])
        rec = emcd_predict(ens, x, T=2, seed=7, keep_passes=True)
        assert rec.pass_probs.shape == (4, 3)
        member_means = [rec.pass_probs[0:2].mean(axis=0), rec.pass_probs[2:4].mean(axis=0)]
        assert np.array_equal(rec.mean_probs, np.mean(np.stack(member_means), axis=0))


class TestFlagCertainty:
    def test_threshold_one_flags_everything_certain(self, vocab7):
        records = [
            record(np.full(7, 1.0 / 7.0)),
            record(np.eye(7)[2]),
            record([0.5, 0.2, 0.1, 0.1, 0.05, 0.03, 0.02]),
        ]
        assert all(certain for _, certain in flag_certainty(records, 1.0))

    def test_threshold_zero_only_one_hot(self):
        sharp = record([1.0, 0.0], sample_id="sharp")
        soft = record([0.999999, 0.000001], sample_id="soft")
        flags = flag_certainty([sharp, soft], 0.0)
        assert flags[0][1] is True
        assert flags[1][1] is False

    def test_boundary_is_inclusive(self):
        recs = [
            record(two_class_probs_for_normalized_entropy(t), sample_id=f"t{t}")
            for t in (0.2, 0.5, 0.8)
        ]
        # Threshold set to the middle record's own normalized entropy: the
        # exact-boundary case counts as certain.
        flags = [c for _, c in flag_certainty(recs, recs[1].normalized_entropy)]
        assert flags == [True, True, False]

    def test_monotone_in_threshold(self, vocab3):
        rng = np.random.default_rng(40)
        records = []
        for i in range(25):
            p = rng.dirichlet(np.ones(3))
            records.append(record(p, sample_id=f"s{i}"))
        previous = set()
        for threshold in np.linspace(0.0, 1.0, 21):
            certain = {r.sample_id for r, c in flag_certainty(records, threshold) if c}
            assert previous <= certain
            previous = certain


class TestRecordInvariants:
    def test_entropy_must_match_mean_probs(self):
        with pytest.raises(ValueError, match="entropy"):
            PredictionRecord("x", np.array([0.5, 0.5]), 0.1, 0, 0)

    def test_predicted_must_be_argmax(self):
        with pytest.raises(ValueError, match="argmax"):
            PredictionRecord("x", np.array([0.9, 0.1]), entropy_of([0.9, 0.1]), 1, 0)

    def test_argmax_tie_goes_to_lowest_index(self):
        r = record([0.5, 0.5])
        assert r.predicted == 0

    def test_jensen_entropy_of_mean_exceeds_mean_entropy(self, vocab3):
        model = random_tiny_net(vocab3, dropout_rate=0.4)
        rng = np.random.default_rng(41)
        for i in range(10):
            rec = mcd_predict(model, rng.normal(size=4), T=12, seed=i, keep_passes=True)
            mean_of_entropies = float(np.mean([entropy_of(p) for p in rec.pass_probs]))
            assert rec.entropy >= mean_of_entropies - 1e-12

    def test_normalized_entropy_clipped_to_unit(self, vocab7):
        r = record(np.full(7, 1.0 / 7.0))
        assert 0.0 <= r.normalized_entropy <= 1.0


class TestPassDump:
    def test_round_trip(self, tmp_path, vocab3):
        model = random_tiny_net(vocab3, dropout_rate=0.3)
        recs = [
            mcd_predict(
                model,
                np.array([0.1 * i, 1.0, -1.0, 0.0]),
                T=4,
                seed=i,
                sample_id=f"s{i}",
                true_label=i % 3,
                keep_passes=True,
            )
            for i in range(3)
        ]
        path = tmp_path / "passes.csv"
        write_pass_dump(recs, vocab3, path)
        header = path.read_text().split("\n")[0]
        assert header == "id,pass,class,prob"
        back = read_pass_dump(path)
        for rec in recs:
            assert np.allclose(back[rec.sample_id], rec.pass_probs, atol=1e-15)

    def test_record_without_passes_dumps_mean_as_single_pass(self, tmp_path, vocab2):
        rec = record([0.75, 0.25], sample_id="only")
        path = tmp_path / "p.csv"
        write_pass_dump([rec], ClassVocabulary(("a", "b")), path)
        back = read_pass_dump(path)
        assert back["only"].shape == (1, 2)
        assert np.allclose(back["only"][0], [0.75, 0.25])
