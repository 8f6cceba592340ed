import pytest

from bwmine import attacktrack as at
from bwmine import geometry as geo
from bwmine.errors import NoAttackerUnits, UnknownUnit
from bwmine.units import UnitTable

TABLE = UnitTable.default()
CFG = at.TrackerConfig()


def make_world(units):
    """units: iterable of (uid, utype, pid, x, y)."""
    world = at.WorldView(TABLE)
    for uid, utype, pid, x, y in units:
        world.units[uid] = at._Unit(uid, utype, pid, float(x), float(y))
    return world


def kill(state, world, uid, frame):
    attack = at.unit_death_event(state, uid, frame, world, CFG)
    world.units.pop(uid, None)
    return attack


class TestDeathEvent:
    def test_new_attack_with_two_military_around(self):
        world = make_world([
            (1, "Zealot", 0, 1000, 1000),
            (2, "Marine", 1, 1050, 1000),
            (3, "Marine", 1, 1000, 1060),
        ])
        state = at.TrackerState()
        attack = kill(state, world, 1, 500)
        assert attack is not None
        assert attack.start_frame == 500
        assert attack.all_involved() == {1, 2, 3}
        assert attack.units_lost[0] == {1}

    def test_second_death_inside_hull_merges(self):
        world = make_world([
            (1, "Zealot", 0, 1000, 1000),
            (2, "Marine", 1, 1050, 1000),
            (3, "Marine", 1, 1000, 1060),
        ])
        state = at.TrackerState()
        kill(state, world, 1, 500)
        # unit 2 dies 50 frames later at the same spot (inside inflated hull)
        world.units[2].x, world.units[2].y = 1000.0, 1000.0
        kill(state, world, 2, 550)
        assert len(state.tracked) == 1
        attack = state.tracked[0]
        assert attack.units_lost[1] == {2}
        assert attack.units_lost[0] == {1}

    def test_isolated_worker_death_creates_nothing(self):
        world = make_world([
            (1, "Probe", 0, 1000, 1000),
            (2, "SCV", 1, 1020, 1000),        # workers are not military
            (3, "Marine", 1, 3000, 3000),     # military but out of radius
        ])
        state = at.TrackerState()
        assert kill(state, world, 1, 100) is None
        assert state.tracked == []

    def test_one_military_neighbor_is_not_enough(self):
        world = make_world([
            (1, "Zealot", 0, 1000, 1000),
            (2, "Marine", 1, 1100, 1000),
        ])
        state = at.TrackerState()
        assert kill(state, world, 1, 100) is None

    def test_unknown_unit_raises(self):
        world = make_world([])
        with pytest.raises(UnknownUnit):
            at.unit_death_event(at.TrackerState(), 42, 10, world, CFG)

    def test_every_contained_death_joins_exactly_one_attack(self):
        world = make_world([
            (1, "Marine", 0, 1000, 1000),
            (2, "Marine", 0, 1010, 1000),
            (3, "Zealot", 1, 1000, 1010),
            (4, "Zealot", 1, 1010, 1010),
        ])
        state = at.TrackerState()
        kill(state, world, 1, 100)
        world.units[3].x, world.units[3].y = 1005.0, 1005.0
        kill(state, world, 3, 120)
        assert len(state.tracked) == 1
        assert len(state.finished) == 0


class TestUpdate:
    def make_attack(self):
        world = make_world([
            (1, "Zealot", 0, 1000, 1000),
            (2, "Marine", 1, 1100, 1000),
            (3, "Marine", 1, 1000, 1100),
            (4, "Dragoon", 0, 1100, 1100),
        ])
        state = at.TrackerState()
        attack = kill(state, world, 1, 500)
        return state, world, attack

    def test_death_at_hull_vertex_keeps_hull_resets_tick(self):
        _, world, attack = self.make_attack()
        attack.tick = 3
        hull_before = attack.hull
        world.units[2].x, world.units[2].y = 1000.0, 1000.0
        at.update(attack, 2, 600, world, CFG)
        assert attack.hull == hull_before
        assert attack.tick == CFG.timeout_frames

    def test_death_outside_hull_grows_it(self):
        _, world, attack = self.make_attack()
        area_before = geo.hull_area(attack.hull)
        at.update(attack, 2, 600, world, CFG)   # unit 2 dies at (1100, 1000)
        assert geo.distance_to_hull(attack.hull, (1100.0, 1000.0)) == 0.0
        assert geo.hull_area(attack.hull) >= area_before

    def test_ranged_unit_outside_raw_hull_joins_context(self):
        world = make_world([
            (1, "Zealot", 0, 1000, 1000),
            (2, "Marine", 1, 1010, 1000),
            (3, "Marine", 1, 1000, 1010),
            # Dragoon (range 128) stands 120 px from the death point
            (5, "Dragoon", 1, 1120, 1000),
            # Zealot (range 15) at the same distance stays out
            (6, "Zealot", 0, 880, 1000),
        ])
        state = at.TrackerState()
        attack = kill(state, world, 1, 500)
        world.units[2].x, world.units[2].y = 1000.0, 1000.0
        context = at.update(attack, 2, 520, world, CFG)
        assert 5 in context
        assert 6 not in context


class TestTick:
    def test_tick_one_finishes_on_next_update(self):
        state = at.TrackerState()
        attack = at.Attack(0, 10, 10, ((0.0, 0.0),), {}, {}, tick=1)
        state.tracked = [attack]
        at.tick_update(state, 11)
        assert state.tracked == []
        assert state.finished == [attack]
        assert attack.end_frame == 11

    def test_two_deaths_beyond_timeout_make_two_attacks(self):
        units = [
            (1, "Zealot", 0, 1000, 1000),
            (2, "Marine", 1, 1050, 1000),
            (3, "Marine", 1, 1000, 1050),
            (4, "Zealot", 0, 1000, 1000),
        ]
        world = make_world(units)
        state = at.TrackerState()
        kill(state, world, 1, 100)
        for f in range(100, 100 + CFG.timeout_frames + 1):
            at.tick_update(state, f)
        assert len(state.finished) == 1
        kill(state, world, 4, 100 + CFG.timeout_frames + 1)
        assert len(state.tracked) == 1
        assert state.tracked[0].attack_id != state.finished[0].attack_id

    def test_tick_reset_by_update_keeps_one_attack(self):
        units = [
            (1, "Zealot", 0, 1000, 1000),
            (2, "Marine", 1, 1050, 1000),
            (3, "Marine", 1, 1000, 1050),
            (4, "Zealot", 0, 1000, 1000),
        ]
        world = make_world(units)
        state = at.TrackerState()
        kill(state, world, 1, 100)
        half = CFG.timeout_frames // 2
        for f in range(100, 100 + half):
            at.tick_update(state, f)
        kill(state, world, 4, 100 + half)            # resets the tick
        for f in range(100 + half, 100 + CFG.timeout_frames + 2):
            at.tick_update(state, f)
        assert len(state.finished) + len(state.tracked) == 1


def classify(attacker_types, attacker_pid=0):
    uids = {i + 1: t for i, t in enumerate(attacker_types)}
    attack = at.Attack(0, 0, 10, ((0.0, 0.0),),
                       units_involved={attacker_pid: set(uids)}, units_lost={},
                       tick=0, attacker_pid=attacker_pid, defender_pid=1 - attacker_pid)
    return at.classify_type(attack, uids, TABLE)


class TestClassify:
    def test_dark_templars_are_invisible(self):
        assert classify(["Dark Templar"] * 3) == at.INVISIBLE

    def test_ghosts_are_invisible(self):
        assert classify(["Ghost", "Ghost"]) == at.INVISIBLE

    def test_lurkers_are_invisible(self):
        assert classify(["Lurker", "Lurker", "Lurker"]) == at.INVISIBLE

    def test_mutalisks_are_air(self):
        assert classify(["Mutalisk"] * 6) == at.AIR_RAID

    def test_wraiths_are_air(self):
        assert classify(["Wraith", "Wraith"]) == at.AIR_RAID

    def test_dropship_with_marines_is_drop(self):
        assert classify(["Dropship", "Marine", "Marine", "Marine", "Marine"]) == at.DROP

    def test_shuttle_with_zealots_is_drop(self):
        assert classify(["Shuttle", "Zealot", "Zealot"]) == at.DROP

    def test_overlord_with_zerglings_is_drop(self):
        assert classify(["Overlord", "Zergling", "Zergling"]) == at.DROP

    def test_drop_needs_a_ground_unit(self):
        # flying transport alone does not make a drop
        assert classify(["Shuttle", "Corsair"]) == at.AIR_RAID

    def test_mixed_ground_army(self):
        assert classify(["Zealot", "Dragoon", "Dragoon"]) == at.GROUND

    def test_cloaked_plus_ground_is_ground(self):
        assert classify(["Dark Templar", "Zealot"]) == at.GROUND

    def test_drop_precedes_invisible(self):
        assert classify(["Shuttle", "Dark Templar", "Dark Templar"]) == at.DROP

    def test_no_attacker_units(self):
        attack = at.Attack(0, 0, 10, ((0.0, 0.0),), units_involved={}, units_lost={},
                           tick=0, attacker_pid=0, defender_pid=1)
        with pytest.raises(NoAttackerUnits):
            at.classify_type(attack, {}, TABLE)
