import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bwmine import composition as comp
from bwmine.attacktrack import Attack
from bwmine.errors import EmptyArmy, UnknownUnitType, ValidationError, ZeroValueArmy
from bwmine.units import UnitTable

TABLE = UnitTable.default()


def make_attack(involved, lost=None, attacker=0):
    involved_sets = {}
    for pid, uids in involved.items():
        involved_sets[pid] = set(uids)
    lost_sets = {pid: set(uids) for pid, uids in (lost or {}).items()}
    return Attack(0, 100, 200, ((0.0, 0.0),), involved_sets, lost_sets, tick=0,
                  attacker_pid=attacker, defender_pid=1 - attacker)


class TestExtractComposition:
    def test_half_zealot_half_dragoon(self):
        types = {i: "Zealot" for i in range(5)} | {i + 5: "Dragoon" for i in range(5)}
        attack = make_attack({0: list(range(10))})
        cv = comp.extract_composition(attack, 0, "m", TABLE, types, "Protoss")
        by_type = dict(zip(cv.basis, cv.u))
        assert by_type["Zealot"] == 0.5
        assert by_type["Dragoon"] == 0.5
        assert sum(cv.u) == pytest.approx(1.0, abs=1e-12)
        assert cv.total_units == 10

    def test_single_marine_one_hot(self):
        attack = make_attack({1: [7]})
        cv = comp.extract_composition(attack, 1, "m", TABLE, {7: "Marine"}, "Terran")
        assert sum(1 for v in cv.u if v > 0) == 1
        assert cv.u[cv.basis.index("Marine")] == 1.0

    def test_workers_only_army_is_empty_under_m(self):
        attack = make_attack({0: [1, 2]})
        types = {1: "Probe", 2: "Probe"}
        with pytest.raises(EmptyArmy):
            comp.extract_composition(attack, 0, "m", TABLE, types, "Protoss")

    def test_ws_scope_adds_workers_and_static_defense(self):
        attack = make_attack({0: [1, 2, 3]})
        types = {1: "Probe", 2: "Photon Cannon", 3: "Zealot"}
        cv = comp.extract_composition(attack, 0, "ws", TABLE, types, "Protoss")
        assert cv.total_units == 3
        cv_m = comp.extract_composition(attack, 0, "m", TABLE, types, "Protoss")
        assert cv_m.total_units == 1

    def test_unknown_type_rejected_late(self):
        attack = make_attack({0: [1]})
        with pytest.raises(UnknownUnitType):
            comp.extract_composition(attack, 0, "m", TABLE, {1: "Gundam"}, "Protoss")

    def test_scale_invariance(self):
        types10 = {i: ("Zealot" if i < 4 else "Dragoon") for i in range(10)}
        types40 = {i: ("Zealot" if i < 16 else "Dragoon") for i in range(40)}
        a = comp.extract_composition(make_attack({0: list(range(10))}), 0, "m",
                                     TABLE, types10, "Protoss")
        b = comp.extract_composition(make_attack({0: list(range(40))}), 0, "m",
                                     TABLE, types40, "Protoss")
        assert a.u == b.u


class TestValues:
    def test_unit_value_formula(self):
        # minerals + 4/3 gas + 50 supply, on arbitrary table rows
        assert comp.unit_value("Marine", TABLE) == pytest.approx(
            TABLE["Marine"].minerals + 4.0 / 3.0 * TABLE["Marine"].gas
            + 50.0 * TABLE["Marine"].supply)
        assert comp.unit_value("Zealot", TABLE) == pytest.approx(100 + 0 + 100)

    def test_unit_value_examples(self):
        table = UnitTable.loads(
            "unit_type,race,minerals,gas,supply,is_military,is_flying,is_cloaked,"
            "is_transport,max_weapon_range_px\n"
            "A,Terran,50,0,1,1,0,0,0,10\n"
            "B,Terran,100,50,2,1,0,0,0,10\n"
            "C,Terran,0,0,0,1,0,0,0,10\n")
        assert comp.unit_value("A", table) == pytest.approx(100.0)
        assert comp.unit_value("B", table) == pytest.approx(266.0 + 2.0 / 3.0)
        assert comp.unit_value("C", table) == 0.0

    def test_army_value(self):
        assert comp.army_value([], TABLE) == 0.0
        assert comp.army_value(["Zealot"] * 3, TABLE) == pytest.approx(600.0)

    def test_army_value_matches_per_unit_sum(self):
        army = ["Marine", "Ghost", "Siege Tank", "Marine", "Medic"]
        total = sum(comp.unit_value(t, TABLE) for t in army)
        assert comp.army_value(army, TABLE) == pytest.approx(total)


class TestDisparity:
    def test_equal(self):
        assert comp.disparity(100.0, 100.0) == 1.0

    def test_ratio(self):
        assert comp.disparity(150.0, 100.0) == pytest.approx(1.5)

    def test_symmetry(self):
        assert comp.disparity(100.0, 150.0) == pytest.approx(1.5)

    def test_zero_value_rejected(self):
        with pytest.raises(ZeroValueArmy):
            comp.disparity(0.0, 10.0)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1, 1e6), st.floats(1, 1e6))
    def test_symmetric_and_at_least_one(self, a, b):
        assert comp.disparity(a, b) == comp.disparity(b, a) >= 1.0


class TestBattleAssembly:
    def test_attack_to_battles_perspectives_and_scopes(self):
        types = ({i: "Zealot" for i in range(4)}
                 | {i + 4: "Marine" for i in range(5)} | {9: "Probe"})
        attack = make_attack({0: [0, 1, 2, 3, 9], 1: [4, 5, 6, 7, 8]},
                             lost={0: [0, 1], 1: [4]}, attacker=1)
        races = {0: "Protoss", 1: "Terran"}
        records = comp.attack_to_battles(attack, "g1", races, TABLE, types)
        assert len(records) == 4       # 2 scopes x 2 perspectives
        own_races = {(r.scope, r.own.race) for r in records}
        assert own_races == {("m", "Protoss"), ("m", "Terran"),
                             ("ws", "Protoss"), ("ws", "Terran")}
        # player 1 lost less value (1 marine vs 2 zealots): player 1 won
        for r in records:
            if r.own_pid == 1:
                assert r.winner == comp.OWN
            else:
                assert r.winner == comp.ENEMY
        # matchup consistent
        assert all(r.matchup == "PvT" for r in records)

    def test_winner_tie_goes_to_defender(self):
        types = {0: "Zealot", 1: "Zealot", 2: "Zealot", 3: "Zealot"}
        attack = make_attack({0: [0, 1], 1: [2, 3]}, lost={0: [0], 1: [2]}, attacker=0)
        races = {0: "Protoss", 1: "Protoss"}
        records = comp.attack_to_battles(attack, "g", races, TABLE, types)
        for r in records:
            winner_pid = r.own_pid if r.winner == comp.OWN else 1 - r.own_pid
            assert winner_pid == 1     # defender

    def test_worker_only_side_skipped_under_m(self):
        types = {0: "Probe", 1: "Marine", 2: "Marine"}
        attack = make_attack({0: [0], 1: [1, 2]}, lost={0: [0]}, attacker=1)
        races = {0: "Protoss", 1: "Terran"}
        records = comp.attack_to_battles(attack, "g", races, TABLE, types)
        assert all(r.scope == "ws" for r in records)


class TestBattlesCsv:
    def roundtrip(self, records):
        return comp.parse_battles_csv(comp.battles_to_csv(records))

    def test_roundtrip(self):
        basis = TABLE.types_for_race("Protoss")
        n = len(basis)
        u = tuple([1.0 / 3] * 3 + [0.0] * (n - 3))
        cv = comp.CompositionVector("Protoss", basis, u, 9)
        rec = comp.BattleRecord("g7", 480, "m", cv, cv, 300.5, 200.25, comp.OWN, 1)
        (back,) = self.roundtrip([rec])
        assert back.game_id == "g7" and back.frame == 480
        assert back.own.u == u and back.enemy.u == u
        assert back.own_value == 300.5 and back.winner == comp.OWN
        assert back.own_pid == 1

    def test_mixed_race_file(self):
        pb = TABLE.types_for_race("Protoss")
        tb = TABLE.types_for_race("Terran")
        p = comp.CompositionVector("Protoss", pb, (1.0,) + (0.0,) * (len(pb) - 1), 2)
        t = comp.CompositionVector("Terran", tb, (1.0,) + (0.0,) * (len(tb) - 1), 2)
        rec1 = comp.BattleRecord("g", 0, "m", p, t, 10.0, 20.0, comp.ENEMY, 0)
        rec2 = comp.BattleRecord("g", 0, "m", t, p, 20.0, 10.0, comp.OWN, 1)
        back = self.roundtrip([rec1, rec2])
        assert back[0].own.basis == pb and back[0].enemy.basis == tb

    def test_header_required(self):
        with pytest.raises(ValidationError):
            comp.parse_battles_csv("not,a,valid,header\n")


def test_stack_compositions_rejects_mixed_bases():
    pb = TABLE.types_for_race("Protoss")
    tb = TABLE.types_for_race("Terran")
    p = comp.CompositionVector("Protoss", pb, (1.0,) + (0.0,) * (len(pb) - 1), 1)
    t = comp.CompositionVector("Terran", tb, (1.0,) + (0.0,) * (len(tb) - 1), 1)
    with pytest.raises(ValidationError):
        comp.stack_compositions([p, t])
    stacked = comp.stack_compositions([p, p])
    assert stacked.shape == (2, len(pb))
    assert np.allclose(stacked.sum(axis=1), 1.0)
