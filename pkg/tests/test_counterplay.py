import numpy as np
import pytest

from bwmine import counterplay as cp
from bwmine import gmm, synthgen
from bwmine.composition import ENEMY, OWN, BattleRecord, CompositionVector

BASIS = ("A", "B", "C")


def label_model(K=3, var=1e-4):
    """Spherical model over 3 dims whose argmax posterior is the nearest
    one-hot mean (components beyond K are simply absent)."""
    means = np.eye(3)[:K]
    return gmm.GmmModel(structure=gmm.SPHERICAL, weights=np.full(K, 1.0 / K),
                        means=means, covariances=np.full(K, var), basis=BASIS)


def comp_for(label):
    u = [0.0, 0.0, 0.0]
    u[label] = 1.0
    return CompositionVector("Protoss", BASIS, tuple(u), 5)


def battle(c, ec, winner, v_own=100.0, v_enemy=100.0, game="g0", frame=0, pid=0):
    return BattleRecord(game, frame, "m", comp_for(c), comp_for(ec),
                        v_own, v_enemy, winner, pid)


class TestCounterTable:
    def test_zero_battles_uniform(self):
        table = cp.learn_counter_table([], label_model(), label_model())
        assert np.all(table.raw == pytest.approx(1.0 / 3.0))
        assert np.all(table.normalized == pytest.approx(1.0 / 3.0))
        assert np.all(table.priors_own == pytest.approx(1.0 / 3.0))

    def test_ten_battle_hand_example(self):
        # 10 battles: own c0 beats enemy c1; 10 battles: own c1 loses to enemy c0.
        # Priors P(c0)=P(c1)=0.5; raw column 1 = (0.4375, 0.125, 0.125);
        # normalized column 1 = (7/11, 2/11, 2/11).
        battles = [battle(0, 1, OWN) for _ in range(10)]
        battles += [battle(1, 0, ENEMY) for _ in range(10)]
        model = label_model()
        table = cp.learn_counter_table(battles, model, model)
        assert table.raw[0, 1] == pytest.approx(0.4375, abs=1e-9)
        assert table.raw[1, 1] == pytest.approx(0.125, abs=1e-9)
        assert table.raw[2, 1] == pytest.approx(0.125, abs=1e-9)
        col = table.normalized[:, 1]
        assert col[0] == pytest.approx(7.0 / 11.0, abs=1e-9)
        assert col[1] == pytest.approx(2.0 / 11.0, abs=1e-9)
        assert col[2] == pytest.approx(2.0 / 11.0, abs=1e-9)
        assert table.normalized.sum(axis=0) == pytest.approx([1.0, 1.0, 1.0], abs=1e-9)

    def test_rock_paper_scissors_recovery(self):
        cfg = synthgen.SynthConfig(
            seed=5, races=("Protoss", "Protoss"),
            planted=synthgen.simplex_corners_mixture(3, 6, 0.02),
            planted_counter=synthgen.cyclic_counter_matrix(3, beat=0.9),
            scopes=("m",), battles_per_game=5)
        records, truths = synthgen.gen_battles(cfg, 600)
        own_rows = [r for r in records if r.own_pid == 0]
        mix_model = cfg.planted.to_model(basis=own_rows[0].own.basis, race="Protoss")
        table = cp.learn_counter_table(records, mix_model, mix_model)
        # column argmax must be the planted counter of that column's cluster
        hits = sum(1 for ec in range(3) if np.argmax(table.normalized[:, ec]) == (ec + 1) % 3)
        assert hits == 3

    def test_column_normalization(self):
        battles = [battle(0, 0, OWN), battle(1, 2, ENEMY), battle(2, 1, OWN)]
        model = label_model()
        table = cp.learn_counter_table(battles, model, model)
        assert table.normalized.sum(axis=0) == pytest.approx([1.0] * 3, abs=1e-9)
        assert np.all(table.raw > 0) and np.all(table.raw < 1)


class TestDynamics:
    def test_no_pairs_uniform(self):
        table = cp.learn_dynamics([], label_model(), 2880, 360)
        assert table.pair_count == 0
        assert np.all(table.matrix == pytest.approx(1.0 / 3.0))

    def test_single_pair_add_one(self):
        seq = [[(1000, comp_for(0)), (1000 + 2880, comp_for(2))]]
        table = cp.learn_dynamics(seq, label_model(), 2880, 360)
        assert table.pair_count == 1
        assert table.matrix[:, 2] == pytest.approx([0.5, 0.25, 0.25])
        assert table.matrix[:, 0] == pytest.approx([1 / 3, 1 / 3, 1 / 3])

    def test_pair_outside_tolerance_ignored(self):
        seq = [[(0, comp_for(0)), (2880 + 361, comp_for(2))]]
        table = cp.learn_dynamics(seq, label_model(), 2880, 360)
        assert table.pair_count == 0

    def test_static_sequences_have_dominant_diagonal(self):
        mix = synthgen.simplex_corners_mixture(3, 6, 0.02)
        rng = np.random.default_rng(17)
        seqs = synthgen.gen_label_sequences(mix, 40, 6, 0.0, 2880, rng)
        model = mix.to_model()
        table = cp.learn_dynamics(seqs, model, 2880, 360)
        for j in range(3):
            col = table.matrix[:, j]
            assert np.argmax(col) == j
            assert col[j] > max(v for i, v in enumerate(col) if i != j)

    def test_columns_sum_to_one(self):
        mix = synthgen.simplex_corners_mixture(3, 6, 0.05)
        rng = np.random.default_rng(3)
        seqs = synthgen.gen_label_sequences(mix, 10, 4, 0.5, 2880, rng)
        table = cp.learn_dynamics(seqs, mix.to_model(), 2880, 360)
        assert table.matrix.sum(axis=0) == pytest.approx([1.0] * 3, abs=1e-9)


class TestPredictors:
    def test_heuristic(self):
        assert cp.predict_heuristic(battle(0, 1, OWN, 300, 200)) == OWN
        assert cp.predict_heuristic(battle(0, 1, OWN, 200, 300)) == ENEMY
        assert cp.predict_heuristic(battle(0, 1, OWN, 250, 250)) == OWN   # tie rule

    def uniform_table(self, K=3):
        return cp.learn_counter_table([], label_model(K), label_model(K))

    def test_just_prob_uniform_table_ties_to_own(self):
        model = label_model()
        b = battle(0, 1, ENEMY, 100, 999)
        assert cp.predict_just_prob(b, self.uniform_table(), model, model) == OWN

    def test_just_prob_uses_hand_table(self):
        battles = [battle(0, 1, OWN) for _ in range(10)]
        battles += [battle(1, 0, ENEMY) for _ in range(10)]
        model = label_model()
        table = cp.learn_counter_table(battles, model, model)
        # own posterior on c0, enemy on c1: score_own = 7/11 > score_enemy = 1/3
        assert cp.predict_just_prob(battle(0, 1, OWN), table, model, model) == OWN
        # reversed perspective loses
        assert cp.predict_just_prob(battle(1, 0, OWN), table, model, model) == ENEMY

    def test_one_cluster_models_tie_to_own(self):
        model = label_model(K=1)
        table = cp.learn_counter_table([], model, model)
        assert table.normalized.shape == (1, 1)
        assert cp.predict_just_prob(battle(0, 0, ENEMY, 1, 999), table, model, model) == OWN

    def test_combined_reduces_to_heuristic_on_uniform_table(self):
        model = label_model()
        table = self.uniform_table()
        rng = np.random.default_rng(9)
        for _ in range(25):
            c, ec = rng.integers(0, 3, size=2)
            v1, v2 = rng.uniform(50, 500, size=2)
            b = battle(int(c), int(ec), OWN, float(v1), float(v2))
            assert cp.predict_combined(b, table, model, model) == cp.predict_heuristic(b)

    def test_combined_reduces_to_just_prob_on_equal_values(self):
        battles = [battle(0, 1, OWN) for _ in range(10)]
        battles += [battle(1, 0, ENEMY) for _ in range(10)]
        model = label_model()
        table = cp.learn_counter_table(battles, model, model)
        b = battle(0, 1, OWN, 250.0, 250.0)
        assert cp.predict_combined(b, table, model, model) == \
            cp.predict_just_prob(b, table, model, model)

    def test_composition_overturns_value(self):
        # normalized table with score_own = 0.4, score_enemy = 0.8 and a 1.2
        # value edge for own: 0.4 * 1.2 = 0.48 < 0.8 -> enemy wins the call
        norm = np.array([[0.2, 0.4], [0.8, 0.6]])
        table = cp.CounterTable(raw=norm, normalized=norm,
                                priors_own=np.array([0.5, 0.5]),
                                priors_enemy=np.array([0.5, 0.5]), battle_count=4)
        model = label_model(K=2)
        b = battle(0, 1, OWN, 120.0, 100.0, pid=0)
        assert cp.predict_heuristic(b) == OWN
        assert cp.predict_combined(b, table, model, model) == ENEMY


def synthetic_eval(seed, value_noise, beat, n=400, disparity=(1.0, 1.5), holdout=20):
    counter = synthgen.cyclic_counter_matrix(3, beat) if beat else None
    cfg = synthgen.SynthConfig(
        seed=seed, races=("Protoss", "Protoss"),
        planted=synthgen.simplex_corners_mixture(3, 6, 0.02),
        planted_counter=counter, value_noise=value_noise,
        disparity_range=disparity, scopes=("m",), battles_per_game=10)
    records, _ = synthgen.gen_battles(cfg, n)
    eval_cfg = cp.EvaluationConfig(disparity_thresholds=(1.1, 1.3, 1.5),
                                   scopes=("m",), holdout_games=holdout, split_seed=0)
    trainer = lambda train: cp.train_suite(train, k_range=(3,), structures=("tied",),
                                           seeds=(0,))
    result, test_games = cp.evaluate_with_holdout(records, eval_cfg, trainer)
    return result, test_games


class TestEvaluate:
    def test_value_determined_corpus_heuristic_perfect(self):
        result, _ = synthetic_eval(seed=1, value_noise=1.0, beat=0.0,
                                   disparity=(1.01, 1.5))
        acc = result.accuracy("PvP", 1.5, cp.PREDICTOR_HEURISTIC, "m")
        assert acc == 100.0

    def test_bucket_nesting(self):
        result, _ = synthetic_eval(seed=2, value_noise=0.5, beat=0.9)
        counts = [result.cells[("PvP", d, cp.PREDICTOR_HEURISTIC, "m")][1]
                  for d in (1.1, 1.3, 1.5)]
        assert counts == sorted(counts)

    def test_empty_bucket_gives_none(self):
        result, _ = synthetic_eval(seed=3, value_noise=1.0, beat=0.0,
                                   disparity=(1.2, 1.5))
        assert result.accuracy("PvP", 1.1, cp.PREDICTOR_HEURISTIC, "m") is None

    def test_holdout_split_is_seeded_and_disjoint(self):
        cfg = synthgen.SynthConfig(
            seed=4, races=("Protoss", "Protoss"),
            planted=synthgen.simplex_corners_mixture(3, 6, 0.02),
            scopes=("m",), battles_per_game=5)
        records, _ = synthgen.gen_battles(cfg, 100)
        tr1, te1, games1 = cp.holdout_split(records, 5, seed=11)
        tr2, te2, games2 = cp.holdout_split(records, 5, seed=11)
        tr3, _, games3 = cp.holdout_split(records, 5, seed=12)
        assert games1 == games2
        assert games1 != games3
        assert {b.game_id for b in tr1}.isdisjoint(set(games1))
        assert {b.game_id for b in te1} == set(games1)

    def test_antisymmetry_of_accuracy(self):
        records, _ = synthgen.gen_battles(synthgen.SynthConfig(
            seed=6, races=("Protoss", "Protoss"),
            planted=synthgen.simplex_corners_mixture(3, 6, 0.02),
            planted_counter=synthgen.cyclic_counter_matrix(3, 0.9),
            disparity_range=(1.001, 1.4), scopes=("m",), battles_per_game=10), 300)
        suite = cp.train_suite(records, k_range=(3,), structures=("tied",), seeds=(0,))
        cfgd = cp.EvaluationConfig(disparity_thresholds=(1.5,), scopes=("m",))
        fwd = cp.evaluate(records, suite, cfgd)

        def flip(b):
            return BattleRecord(b.game_id, b.frame, b.scope, own=b.enemy, enemy=b.own,
                                own_value=b.enemy_value, enemy_value=b.own_value,
                                winner=OWN if b.winner == ENEMY else ENEMY,
                                own_pid=1 - b.own_pid)

        rev = cp.evaluate([flip(b) for b in records], suite, cfgd)
        for pred in cp.PREDICTORS:
            a = fwd.accuracy("PvP", 1.5, pred, "m")
            b_ = rev.accuracy("PvP", 1.5, pred, "m")
            assert a == pytest.approx(b_, abs=1e-9)

    def test_results_csv_shape(self):
        result, _ = synthetic_eval(seed=7, value_noise=1.0, beat=0.0)
        lines = result.to_csv().strip().split("\n")
        header = lines[0].split(",")
        assert header == ["disparity", "predictor", "PvP_m", "mean_ws"]
        assert len(lines) == 1 + 3 * len(cp.PREDICTORS)


class TestPlotData:
    def test_heatmap_triples(self):
        matrix = np.array([[0.7, 0.2], [0.3, 0.8]])
        table = cp.DynamicsTable(matrix, 2880, 360, 5)
        lines = cp.heatmap_csv(table).strip().split("\n")
        assert lines[0] == "i,j,probability"
        assert len(lines) == 1 + 4
        assert lines[1] == "0,0,0.7"

    def test_parallel_plot_top_types_and_component_range(self):
        cfg = synthgen.SynthConfig(
            seed=8, races=("Protoss", "Protoss"),
            planted=synthgen.simplex_corners_mixture(3, 6, 0.02),
            scopes=("m",), battles_per_game=5)
        records, _ = synthgen.gen_battles(cfg, 50)
        model = cfg.planted.to_model(basis=records[0].own.basis, race="Protoss")
        csv_text = cp.parallel_plot_csv(records, model, top_types=4)
        lines = csv_text.strip().split("\n")
        header = lines[0].split(",")
        assert len(header) == 5 and header[-1] == "component"
        for line in lines[1:]:
            cells = line.split(",")
            props = [float(v) for v in cells[:-1]]
            assert sum(props) <= 1.0 + 1e-9
            assert 0 <= int(cells[-1]) < 3


class TestSerialization:
    def test_counter_roundtrip(self):
        battles = [battle(0, 1, OWN) for _ in range(10)]
        battles += [battle(1, 0, ENEMY) for _ in range(10)]
        model = label_model()
        table = cp.learn_counter_table(battles, model, model)
        back = cp.counter_from_text(cp.counter_to_text(table))
        assert np.array_equal(back.raw, table.raw)
        assert np.array_equal(back.normalized, table.normalized)
        assert back.battle_count == 20

    def test_dynamics_roundtrip(self):
        seq = [[(1000, comp_for(0)), (3880, comp_for(2))]]
        table = cp.learn_dynamics(seq, label_model(), 2880, 360)
        back = cp.dynamics_from_text(cp.dynamics_to_text(table))
        assert np.array_equal(back.matrix, table.matrix)
        assert back.dt_frames == 2880 and back.pair_count == 1
