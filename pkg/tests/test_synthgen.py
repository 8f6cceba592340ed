import math

import numpy as np
import pytest

from bwmine import attacktrack, logmodel, synthgen
from bwmine.composition import OWN
from bwmine.errors import ValidationError


def mixture(std=0.02):
    return synthgen.simplex_corners_mixture(3, 6, std)


class TestPlantedMixture:
    def test_means_on_simplex(self):
        mix = mixture()
        for m in mix.means:
            assert sum(m) == pytest.approx(1.0, abs=1e-12)
            assert all(v > 0 for v in m)

    def test_separation_at_least_5_sigma(self):
        mix = mixture()
        means = np.asarray(mix.means)
        for i in range(3):
            for j in range(i + 1, 3):
                assert np.linalg.norm(means[i] - means[j]) >= 5 * mix.stds[i]

    def test_bad_weights_rejected(self):
        with pytest.raises(ValidationError):
            synthgen.PlantedMixture((0.5, 0.6), ((1.0,), (1.0,)), (0.1, 0.1))

    def test_to_model_posterior_recovers_labels(self):
        mix = mixture()
        model = mix.to_model()
        rng = np.random.default_rng(0)
        data, labels = synthgen.gen_compositions(mix, 200, rng)
        from bwmine.gmm import posterior
        hits = sum(1 for x, l in zip(data, labels) if posterior(model, x)[1] == l)
        assert hits == 200


class TestGenCompositions:
    def test_zero_sigma_returns_means(self):
        mix = synthgen.PlantedMixture((0.5, 0.5),
                                      ((0.7, 0.2, 0.1), (0.1, 0.2, 0.7)),
                                      (0.0, 0.0))
        data, labels = synthgen.gen_compositions(mix, 50, np.random.default_rng(1))
        for x, l in zip(data, labels):
            assert x == pytest.approx(np.asarray(mix.means[l]), abs=1e-12)

    def test_degenerate_weights(self):
        mix = synthgen.PlantedMixture((1.0, 0.0), ((0.6, 0.4), (0.4, 0.6)), (0.01, 0.01))
        _, labels = synthgen.gen_compositions(mix, 100, np.random.default_rng(2))
        assert np.all(labels == 0)

    def test_simplex_output(self):
        data, _ = synthgen.gen_compositions(mixture(0.1), 500, np.random.default_rng(3))
        assert np.allclose(data.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(data >= 0)

    def test_label_frequencies_match_weights(self):
        mix = synthgen.PlantedMixture((0.2, 0.3, 0.5),
                                      tuple(mixture().means), (0.02, 0.02, 0.02))
        m = 5000
        _, labels = synthgen.gen_compositions(mix, m, np.random.default_rng(4))
        for k, w in enumerate(mix.weights):
            freq = np.mean(labels == k)
            bound = 3 * math.sqrt(w * (1 - w) / m)
            assert abs(freq - w) <= bound


class TestGenBattles:
    def cfg(self, **kw):
        base = dict(seed=11, races=("Protoss", "Protoss"), planted=mixture(),
                    scopes=("m",), battles_per_game=5)
        base.update(kw)
        return synthgen.SynthConfig(**base)

    def test_always_win_matrix(self):
        counter = tuple(tuple(1.0 for _ in range(3)) for _ in range(3))
        records, truths = synthgen.gen_battles(self.cfg(planted_counter=counter), 100)
        assert all(t.own_won for t in truths)
        own_rows = [r for r in records if r.own_pid == 0]
        assert all(r.winner == OWN for r in own_rows)

    def test_fair_coin_near_half(self):
        records, truths = synthgen.gen_battles(
            self.cfg(disparity_range=(1.0, 1.0)), 2000)
        rate = np.mean([t.own_won for t in truths])
        assert abs(rate - 0.5) <= 3 * math.sqrt(0.25 / 2000)

    def test_rps_win_rates_within_binomial_bounds(self):
        counter = synthgen.cyclic_counter_matrix(3, beat=0.9)
        _, truths = synthgen.gen_battles(self.cfg(planted_counter=counter), 1500)
        wins: dict[tuple[int, int], list[bool]] = {}
        for t in truths:
            wins.setdefault((t.own_label, t.enemy_label), []).append(t.own_won)
        for (c, ec), results in wins.items():
            if len(results) < 30:
                continue
            p = counter[c][ec]
            rate = np.mean(results)
            assert abs(rate - p) <= 3 * math.sqrt(p * (1 - p) / len(results)) + 1e-9

    def test_perspective_consistency(self):
        records, _ = synthgen.gen_battles(self.cfg(), 50)
        assert len(records) == 100
        for i in range(0, 100, 2):
            a, b = records[i], records[i + 1]
            assert a.own.u == b.enemy.u and a.enemy.u == b.own.u
            assert a.own_value == b.enemy_value
            assert (a.winner == OWN) == (b.winner != OWN)

    def test_determinism(self):
        r1, t1 = synthgen.gen_battles(self.cfg(), 40)
        r2, t2 = synthgen.gen_battles(self.cfg(), 40)
        assert r1 == r2 and t1 == t2


class TestGenGamelog:
    def test_zero_battles_no_deaths(self):
        cfg = synthgen.SynthConfig(seed=0, battles_per_game=0)
        log, truths, _ = synthgen.gen_gamelog(cfg, 0)
        assert truths == []
        assert not any(e.kind == logmodel.DESTRUCTION for e in log.events)
        assert attacktrack.run_tracker(log) == []

    def test_log_validates_and_roundtrips(self):
        cfg = synthgen.SynthConfig(seed=3, battles_per_game=3,
                                   attack_kinds=(attacktrack.GROUND, attacktrack.DROP))
        log, _, _ = synthgen.gen_gamelog(cfg, 0)
        log.validate()
        back = logmodel.assemble_game(
            logmodel.parse_rgd(logmodel.write_rgd(log)),
            logmodel.parse_rod(logmodel.write_rod(log)),
            logmodel.parse_rld(logmodel.write_rld(log)))
        assert back == log

    def test_scripted_battle_recovered_exactly(self):
        cfg = synthgen.SynthConfig(seed=9, battles_per_game=1)
        log, truths, _ = synthgen.gen_gamelog(cfg, 0)
        (attack,) = attacktrack.run_tracker(log)
        (truth,) = truths
        assert attack.start_frame == truth.start_frame
        assert attack.attack_type == truth.attack_type
        assert attack.attacker_pid == truth.attacker_pid
        for pid in (0, 1):
            assert attack.units_involved.get(pid, set()) == truth.units_of(pid)
            assert attack.units_lost.get(pid, set()) == truth.losses_of(pid)

    def test_two_skirmishes_two_minutes_apart_at_one_site(self):
        cfg = synthgen.SynthConfig(seed=5, battles_per_game=2, template="tworooms",
                                   battle_spacing=2880)
        log, truths, _ = synthgen.gen_gamelog(cfg, 0)
        attacks = attacktrack.run_tracker(log)
        assert len(attacks) == 2
        assert len(truths) == 2
        assert attacks[1].start_frame - attacks[0].start_frame >= 2800


class TestGenCorpus:
    def test_corpus_round_trip_and_truth(self, tmp_path):
        cfg = synthgen.SynthConfig(seed=2, games=2, battles_per_game=2)
        stems = synthgen.gen_corpus(cfg, tmp_path)
        assert len(stems) == 2
        assert (tmp_path / "tworooms.grid").exists()
        for stem in stems:
            log = logmodel.read_game(stem)
            assert len(log.players) == 2
            truth_file = stem.with_suffix(".truth")
            assert truth_file.exists()

    def test_byte_identical_regeneration(self, tmp_path):
        cfg = synthgen.SynthConfig(seed=7, games=2, battles_per_game=2,
                                   attack_kinds=(attacktrack.GROUND, attacktrack.AIR_RAID))
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        synthgen.gen_corpus(cfg, a_dir)
        synthgen.gen_corpus(cfg, b_dir)
        a_files = sorted(p.name for p in a_dir.iterdir())
        b_files = sorted(p.name for p in b_dir.iterdir())
        assert a_files == b_files
        for name in a_files:
            assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes()

    def test_different_seeds_differ(self, tmp_path):
        synthgen.gen_corpus(synthgen.SynthConfig(seed=1, games=1), tmp_path / "a")
        synthgen.gen_corpus(synthgen.SynthConfig(seed=2, games=1), tmp_path / "b")
        a = (tmp_path / "a" / "game0000.rgd").read_bytes()
        b = (tmp_path / "b" / "game0000.rgd").read_bytes()
        assert a != b


def test_templates_all_valid():
    for name in synthgen.TEMPLATE_NAMES:
        tpl = synthgen.map_template(name)
        rm = tpl.region_map
        assert sorted(rm.cdr_of) == sorted(rm.grid.walkable_tiles())
        assert rm.n_cdr >= rm.n_regions
