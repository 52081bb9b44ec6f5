import json
import logging
from unittest.mock import patch

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from spectnt.errors import ConfigError, SpecTNTError
from spectnt.synth import (
    CHORD_NAMES,
    DEFAULT_SPECS,
    SynthTaskSpec,
    build_dataset,
    chord_name,
    chord_template,
    class_to_hz,
    decode_chord,
    decode_melody,
    decode_tagging,
    gen_chord_clip,
    gen_melody_clip,
    gen_tagging_clip,
    generate,
    load_dataset,
    rotate_chord_clip,
    rotate_chord_label,
    split_dataset,
    write_dataset,
)
from spectnt.synth.tasks import melody_labels, tag_anchor, tag_pattern


class TestSpec:
    def test_defaults_are_valid(self):
        assert DEFAULT_SPECS["melody"].pitch_bins == 60
        assert DEFAULT_SPECS["tagging"].harmonic_tags == 5

    @pytest.mark.parametrize(
        "changes",
        [
            dict(task="dance"),
            dict(task="chord", classes=25, bins=12),
            dict(task="tagging", classes=10, bins=20),
            dict(task="melody", classes=61, bins=64),
            dict(sigma=-0.1),
            dict(val_size=0),
            dict(segment_frames=(5, 2)),
        ],
    )
    def test_invalid(self, changes):
        with pytest.raises(ConfigError):
            SynthTaskSpec(**changes)

    def test_dict_round_trip(self):
        spec = DEFAULT_SPECS["chord"].replace(seed=9)
        assert SynthTaskSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


class TestTagging:
    def test_anchor_bins_are_exclusive(self, tagging_spec):
        for tag in range(tagging_spec.classes):
            anchor = tag_anchor(tagging_spec, tag)
            owners = [t for t in range(tagging_spec.classes) if tag_pattern(tagging_spec, t)[:, anchor].any()]
            assert owners == [tag]

    def test_modulation_tag_period(self, tagging_spec):
        pattern = tag_pattern(tagging_spec, 3)
        anchor = tag_anchor(tagging_spec, 3)
        assert_array_equal(pattern[:, anchor], [1, 1, 0, 0, 1, 1, 0, 0])

    def test_noiseless_decode_is_exact(self, tagging_spec):
        spec = tagging_spec.replace(sigma=0.0)
        for seed in range(20):
            sample = gen_tagging_clip(spec, seed)
            assert_array_equal(decode_tagging(spec, sample.features), sample.labels)

    def test_explicit_tags(self, tagging_spec):
        sample = gen_tagging_clip(tagging_spec.replace(sigma=0.0), 0, tags=[0, 2])
        assert_array_equal(sample.labels, [1, 0, 1, 0])
        assert sample.features.shape == (8, 16, 1)
        assert sample.features.dtype == np.float32

    def test_noise_is_bounded(self, tagging_spec):
        sample = gen_tagging_clip(tagging_spec.replace(sigma=0.1), 1, tags=[])
        assert np.abs(sample.features).max() <= 0.1 + 1e-7


class TestMelody:
    def test_labels_round_to_nearest(self):
        assert_array_equal(melody_labels(np.array([0.0, 1.4, 1.5, 2.49])), [0, 1, 2, 2])

    def test_noiseless_decode_is_exact(self):
        spec = SynthTaskSpec("melody", classes=21, frames=6, bins=40, sigma=0.0)
        trajectory = np.array([0, 1, 5, 20, 20, 0], dtype=float)
        sample = gen_melody_clip(spec, 0, trajectory)
        assert_array_equal(sample.labels, [0, 1, 5, 20, 20, 0])
        assert_array_equal(decode_melody(spec, sample.features), sample.labels)

    def test_partials_fall_off(self):
        spec = SynthTaskSpec("melody", classes=21, frames=1, bins=40, sigma=0.0)
        row = gen_melody_clip(spec, 0, np.array([3.0])).features[0, :, 0]
        assert_allclose(row[[2, 14, 21]], [1.0, 0.5, 1 / 3], rtol=1e-6)

    def test_fractional_pitch_splits_energy(self):
        spec = SynthTaskSpec("melody", classes=21, frames=1, bins=40, sigma=0.0)
        row = gen_melody_clip(spec, 0, np.array([3.25])).features[0, :, 0]
        assert_allclose(row[[2, 3]], [0.75, 0.25], rtol=1e-6)

    def test_trajectory_shape_checked(self):
        with pytest.raises(ConfigError):
            gen_melody_clip(DEFAULT_SPECS["melody"], 0, np.zeros(3))

    def test_random_clip_keeps_trajectory(self):
        sample = generate(DEFAULT_SPECS["melody"], 4)
        assert sample.trajectory.shape == (64,)
        assert_array_equal(sample.labels, melody_labels(sample.trajectory))

    def test_class_to_hz(self):
        assert_allclose(class_to_hz(np.array([0, 34, 46])), [0.0, 440.0, 880.0])


class TestChord:
    def test_vocabulary(self):
        assert len(CHORD_NAMES) == 25
        assert chord_name(0) == "N"
        assert chord_name(1) == "C:maj"
        assert chord_name(22) == "A:min"

    def test_templates(self):
        assert_array_equal(np.flatnonzero(chord_template(1)), [0, 12, 16, 19])
        assert_array_equal(np.flatnonzero(chord_template(22)), [9, 12, 16, 21])
        with pytest.raises(ConfigError):
            chord_template(25)

    def test_noiseless_decode_is_exact(self, chord_spec):
        for seed in range(10):
            sample = gen_chord_clip(chord_spec, seed)
            assert_array_equal(decode_chord(sample.features), sample.labels)

    def test_explicit_segments(self, chord_spec):
        sample = gen_chord_clip(chord_spec, 0, segments=[(1, 4), (0, 4), (13, 10)])
        assert_array_equal(sample.labels, [1] * 4 + [0] * 4 + [13] * 4)
        with pytest.raises(ConfigError):
            gen_chord_clip(chord_spec, 0, segments=[(1, 4)])

    def test_rotation(self, chord_spec):
        assert rotate_chord_label(12, 1) == 1
        assert rotate_chord_label(24, 2) == 14
        assert rotate_chord_label(0, 5) == 0
        sample = gen_chord_clip(chord_spec, 2)
        rotated = rotate_chord_clip(sample, 5)
        assert_array_equal(decode_chord(rotated.features), rotated.labels)


class TestDatasets:
    def test_generation_is_seed_keyed(self, tagging_spec):
        a, b = generate(tagging_spec, 3), generate(tagging_spec, 3)
        assert_array_equal(a.features, b.features)
        assert not np.array_equal(a.features, generate(tagging_spec, 4).features)
        assert not np.array_equal(a.features, generate(tagging_spec.replace(seed=4), 3).features)

    def test_splits_are_disjoint_and_complete(self, tagging_spec):
        splits = split_dataset(tagging_spec)
        assert [len(splits[s]) for s in ("train", "val", "test")] == [8, 4, 4]
        assert sorted(sum(splits.values(), [])) == list(range(16))
        assert split_dataset(tagging_spec) == splits

    @pytest.mark.parametrize("task", ["tagging", "melody", "chord"])
    def test_default_train_split_covers_every_class(self, task):
        spec = DEFAULT_SPECS[task]
        train = [generate(spec, i).labels for i in split_dataset(spec)["train"]]
        if task == "tagging":
            counts = np.sum(train, axis=0)
        else:
            counts = np.bincount(np.concatenate(train), minlength=spec.classes)
        assert counts.shape == (spec.classes,)
        assert counts.min() >= 1

    def test_build_dataset_ids(self, chord_spec):
        data = build_dataset(chord_spec)
        assert [s.id for s in data["val"]] == split_dataset(chord_spec)["val"]

    def test_store_round_trip(self, tagging_dataset, tagging_spec):
        spec, data = load_dataset(tagging_dataset)
        assert spec == tagging_spec
        assert len(data["train"]) == 8
        for sample in data["test"]:
            fresh = generate(spec, sample.id)
            assert_array_equal(sample.features, fresh.features)
            assert_array_equal(sample.labels, fresh.labels)
            assert sample.labels.dtype == np.float32

    def test_melody_store_keeps_trajectory(self, tmp_path):
        spec = SynthTaskSpec("melody", classes=21, frames=6, bins=40, train_size=2, val_size=1, test_size=1)
        write_dataset(spec, tmp_path, workers=1)
        _, data = load_dataset(tmp_path)
        sample = data["train"][0]
        assert sample.labels.dtype == np.int64
        assert_array_equal(sample.labels, melody_labels(sample.trajectory))

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ConfigError):
            load_dataset(tmp_path)

    def test_failed_writes_are_reported(self, tmp_path, tagging_spec, caplog):
        with patch("spectnt.synth.store.write_tensor", side_effect=OSError("disk full")):
            with caplog.at_level(logging.WARNING, logger="spectnt.synth.store"):
                with pytest.raises(SpecTNTError, match="16 of 16"):
                    write_dataset(tagging_spec, tmp_path, workers=2)
        assert "sample write failed" in caplog.text
        assert not (tmp_path / "manifest.json").exists()
