"""Which compositions beat which: counter tables, dynamics, predictors.

The counter table is an add-one-smoothed win count between mixture
components, weighted by the component priors:

    raw[c, ec] = (1 + P(c) P(ec) wins(c over ec)) / (K + P(ec) seen(ec))

Raw entries are kept as learned; a column-normalized copy serves as the
conditional P(C=c | EC=ec) used by the predictors. Mirror match-ups
train one shared table holding both perspectives (every battle
contributes a row from each side), so the same table answers for either
army; non-mirror match-ups pair two tables, one per perspective.

Three battle-winner predictors are provided: the value heuristic, the
pure counter probability, and their product.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .composition import ENEMY, OWN, BattleRecord, stack_compositions
from .errors import DimensionMismatch, ValidationError, ZeroValueArmy
from .gmm import GmmModel, posterior, select_model
from . import gmm as gmm_mod

PREDICTOR_HEURISTIC = "heuristic"
PREDICTOR_JUST_PROB = "just_prob"
PREDICTOR_COMBINED = "prob_x_heuristic"
PREDICTORS = (PREDICTOR_HEURISTIC, PREDICTOR_JUST_PROB, PREDICTOR_COMBINED)

DEFAULT_DT_FRAMES = 2880          # 2 minutes
DEFAULT_DT_TOLERANCE = 360        # 15 s: start times are discrete, exact dt never occurs
DEFAULT_DISPARITY_THRESHOLDS = (1.1, 1.3, 1.5)
DEFAULT_HOLDOUT_GAMES = 100


@dataclass(frozen=True, eq=False)
class CounterTable:
    raw: np.ndarray              # (K, K')
    normalized: np.ndarray       # (K, K'), columns sum to 1
    priors_own: np.ndarray       # (K,)
    priors_enemy: np.ndarray     # (K',)
    battle_count: int

    @property
    def k_own(self) -> int:
        return self.raw.shape[0]

    @property
    def k_enemy(self) -> int:
        return self.raw.shape[1]


@dataclass(frozen=True, eq=False)
class DynamicsTable:
    matrix: np.ndarray           # (K', K'): P(EC^t = i | EC^{t+dt} = j)
    dt_frames: int
    tolerance_frames: int
    pair_count: int

    @property
    def k(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EvaluationConfig:
    disparity_thresholds: tuple[float, ...] = DEFAULT_DISPARITY_THRESHOLDS
    scopes: tuple[str, ...] = ("m", "ws")
    holdout_games: int = DEFAULT_HOLDOUT_GAMES
    split_seed: int = 0

    def __post_init__(self):
        if any(t < 1.0 for t in self.disparity_thresholds):
            raise ValidationError("disparity thresholds must be >= 1")


# ---------------------------------------------------------------------------
# table learning
# ---------------------------------------------------------------------------

def learn_counter_table(battles: Sequence[BattleRecord], own_model: GmmModel,
                        enemy_model: GmmModel) -> CounterTable:
    """Count hard-labeled battle outcomes into the smoothed counter table.

    Labels come from the argmax component posterior of each side. With
    zero battles the table is exactly uniform (1/K) and priors fall back
    to uniform.
    """
    K = own_model.n_components
    Kp = enemy_model.n_components
    wins = np.zeros((K, Kp))
    own_counts = np.zeros(K)
    enemy_counts = np.zeros(Kp)
    for b in battles:
        c = posterior(own_model, b.own)[1]
        ec = posterior(enemy_model, b.enemy)[1]
        own_counts[c] += 1
        enemy_counts[ec] += 1
        if b.winner == OWN:
            wins[c, ec] += 1
    m = len(battles)
    priors_own = own_counts / m if m else np.full(K, 1.0 / K)
    priors_enemy = enemy_counts / m if m else np.full(Kp, 1.0 / Kp)

    raw = np.empty((K, Kp))
    for ec in range(Kp):
        denom = K + priors_enemy[ec] * enemy_counts[ec]
        for c in range(K):
            raw[c, ec] = (1.0 + priors_own[c] * priors_enemy[ec] * wins[c, ec]) / denom
    normalized = raw / raw.sum(axis=0, keepdims=True)
    return CounterTable(raw=raw, normalized=normalized, priors_own=priors_own,
                        priors_enemy=priors_enemy, battle_count=m)


def learn_dynamics(sequences: Sequence[Sequence[tuple[int, object]]],
                   enemy_model: GmmModel,
                   dt_frames: int = DEFAULT_DT_FRAMES,
                   tolerance_frames: int = DEFAULT_DT_TOLERANCE) -> DynamicsTable:
    """Cluster dynamics P(EC^t | EC^{t+dt}) from per-(game, player) battle
    sequences of (start_frame, enemy composition).

    Pairs are battles of one sequence whose start frames differ by
    dt +- tolerance; counts are add-one smoothed and columns normalized
    (the condition is on the later label).
    """
    Kp = enemy_model.n_components
    counts = np.zeros((Kp, Kp))
    pairs = 0
    for seq in sequences:
        labeled = [(frame, posterior(enemy_model, comp)[1]) for frame, comp in seq]
        labeled.sort(key=lambda t: t[0])
        for i in range(len(labeled)):
            for j in range(i + 1, len(labeled)):
                gap = labeled[j][0] - labeled[i][0]
                if gap > dt_frames + tolerance_frames:
                    break
                if gap >= dt_frames - tolerance_frames:
                    counts[labeled[i][1], labeled[j][1]] += 1
                    pairs += 1
    smoothed = counts + 1.0
    matrix = smoothed / smoothed.sum(axis=0, keepdims=True)
    return DynamicsTable(matrix=matrix, dt_frames=dt_frames,
                         tolerance_frames=tolerance_frames, pair_count=pairs)


# ---------------------------------------------------------------------------
# predictors
# ---------------------------------------------------------------------------

def predict_heuristic(battle: BattleRecord) -> str:
    """Side with the larger army value wins; exact ties go to own."""
    if battle.own_value <= 0 or battle.enemy_value <= 0:
        raise ZeroValueArmy("battle values must be positive")
    return OWN if battle.own_value >= battle.enemy_value else ENEMY


def _prob_scores(battle: BattleRecord, table: CounterTable, own_model: GmmModel,
                 enemy_model: GmmModel,
                 enemy_table: CounterTable | None) -> tuple[float, float]:
    if enemy_table is None:
        enemy_table = table
    post_own = posterior(own_model, battle.own)[0]
    post_enemy = posterior(enemy_model, battle.enemy)[0]
    if table.normalized.shape != (len(post_own), len(post_enemy)):
        raise DimensionMismatch("counter table does not match the models")
    if enemy_table.normalized.shape != (len(post_enemy), len(post_own)):
        raise DimensionMismatch("enemy-perspective table does not match the models")
    score_own = float(post_own @ table.normalized @ post_enemy)
    score_enemy = float(post_enemy @ enemy_table.normalized @ post_own)
    return score_own, score_enemy


def predict_just_prob(battle: BattleRecord, table: CounterTable,
                      own_model: GmmModel, enemy_model: GmmModel,
                      enemy_table: CounterTable | None = None) -> str:
    """Counter probability alone: compare the two perspective scores
    sum_c sum_ec P(c|u) P(ec|eu) P(c beats ec); ties go to own.

    ``enemy_table`` is the table trained from the enemy perspective; it
    defaults to ``table`` itself, which is exact for mirror match-ups.
    """
    s_own, s_enemy = _prob_scores(battle, table, own_model, enemy_model, enemy_table)
    return OWN if s_own >= s_enemy else ENEMY


def predict_combined(battle: BattleRecord, table: CounterTable,
                     own_model: GmmModel, enemy_model: GmmModel,
                     enemy_table: CounterTable | None = None) -> str:
    """Counter probability weighted by army value; ties go to own."""
    s_own, s_enemy = _prob_scores(battle, table, own_model, enemy_model, enemy_table)
    return OWN if s_own * battle.own_value >= s_enemy * battle.enemy_value else ENEMY


# ---------------------------------------------------------------------------
# evaluation protocol
# ---------------------------------------------------------------------------

GroupKey = tuple[str, str, str]            # (matchup, own race, scope)


@dataclass
class PredictorSuite:
    """Fitted models and counter tables per (match-up, race, scope)."""

    models: dict[GroupKey, GmmModel]
    tables: dict[GroupKey, CounterTable]

    def keys_for(self, battle: BattleRecord) -> tuple[GroupKey, GroupKey]:
        own = (battle.matchup, battle.own.race, battle.scope)
        enemy = (battle.matchup, battle.enemy.race, battle.scope)
        return own, enemy

    def can_score(self, battle: BattleRecord) -> bool:
        own, enemy = self.keys_for(battle)
        return (own in self.models and enemy in self.models
                and own in self.tables and enemy in self.tables)

    def predict(self, predictor: str, battle: BattleRecord) -> str:
        if predictor == PREDICTOR_HEURISTIC:
            return predict_heuristic(battle)
        own_key, enemy_key = self.keys_for(battle)
        args = (battle, self.tables[own_key], self.models[own_key],
                self.models[enemy_key], self.tables[enemy_key])
        if predictor == PREDICTOR_JUST_PROB:
            return predict_just_prob(*args)
        if predictor == PREDICTOR_COMBINED:
            return predict_combined(*args)
        raise ValidationError(f"unknown predictor {predictor!r}")


def group_battles(battles: Iterable[BattleRecord]) -> dict[GroupKey, list[BattleRecord]]:
    groups: dict[GroupKey, list[BattleRecord]] = {}
    for b in battles:
        groups.setdefault((b.matchup, b.own.race, b.scope), []).append(b)
    return groups


def train_suite(train_battles: Sequence[BattleRecord],
                k_range: Iterable[int] = gmm_mod.DEFAULT_K_RANGE,
                structures: Sequence[str] = gmm_mod.STRUCTURES,
                seeds: Sequence[int] = (0,), **fit_kwargs) -> PredictorSuite:
    """Fit one model per (match-up, race, scope) group on the own-side
    compositions, then learn every group's counter table."""
    groups = group_battles(train_battles)
    models: dict[GroupKey, GmmModel] = {}
    for key in sorted(groups):
        mu, race, scope = key
        comps = [b.own for b in groups[key]]
        data = stack_compositions(comps)
        model = select_model(data, k_range=k_range, structures=structures,
                             seeds=seeds, basis=comps[0].basis, race=race,
                             scope=scope, **fit_kwargs)
        models[key] = model
    tables: dict[GroupKey, CounterTable] = {}
    for key in sorted(groups):
        mu, race, scope = key
        enemy_race = next(b.enemy.race for b in groups[key])
        enemy_key = (mu, enemy_race, scope)
        if enemy_key not in models:
            continue
        tables[key] = learn_counter_table(groups[key], models[key], models[enemy_key])
    return PredictorSuite(models=models, tables=tables)


def holdout_split(battles: Sequence[BattleRecord], holdout_games: int,
                  seed: int) -> tuple[list[BattleRecord], list[BattleRecord], tuple[str, ...]]:
    """Seeded game-level split; returns (train, test, test game ids)."""
    games = sorted({b.game_id for b in battles})
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(len(games)))
    test_games = {games[i] for i in order[:holdout_games]}
    train = [b for b in battles if b.game_id not in test_games]
    test = [b for b in battles if b.game_id in test_games]
    return train, test, tuple(sorted(test_games))


@dataclass(frozen=True)
class EvaluationResult:
    """Accuracy percentages per (match-up, disparity, predictor, scope)."""

    matchups: tuple[str, ...]
    disparities: tuple[float, ...]
    scopes: tuple[str, ...]
    cells: Mapping[tuple[str, float, str, str], tuple[float | None, int]]

    def accuracy(self, mu: str, disparity: float, predictor: str,
                 scope: str) -> float | None:
        return self.cells[(mu, disparity, predictor, scope)][0]

    def mean_ws(self, disparity: float, predictor: str) -> float | None:
        vals = [self.cells[(mu, disparity, predictor, "ws")][0]
                for mu in self.matchups
                if self.cells.get((mu, disparity, predictor, "ws"), (None, 0))[0] is not None]
        return sum(vals) / len(vals) if vals else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["disparity", "predictor"]
        for mu in self.matchups:
            for scope in self.scopes:
                header.append(f"{mu}_{scope}")
        header.append("mean_ws")
        w.writerow(header)
        for disp in self.disparities:
            for pred in PREDICTORS:
                row: list[object] = [repr(disp), pred]
                for mu in self.matchups:
                    for scope in self.scopes:
                        acc = self.cells.get((mu, disp, pred, scope), (None, 0))[0]
                        row.append("" if acc is None else repr(acc))
                mean = self.mean_ws(disp, pred)
                row.append("" if mean is None else repr(mean))
                w.writerow(row)
        return buf.getvalue()


def evaluate(test_battles: Sequence[BattleRecord], suite: PredictorSuite,
             config: EvaluationConfig = EvaluationConfig(),
             predictors: Sequence[str] = PREDICTORS) -> EvaluationResult:
    """Score predictors on held-out battles, bucketed by disparity cap.

    Buckets nest (every battle at threshold 1.1 also counts at 1.3 and
    1.5); empty buckets yield empty cells rather than errors.
    """
    matchups = tuple(sorted({b.matchup for b in test_battles}))
    cells: dict[tuple[str, float, str, str], tuple[float | None, int]] = {}
    for mu in matchups:
        for disp in config.disparity_thresholds:
            for scope in config.scopes:
                bucket = [b for b in test_battles
                          if b.matchup == mu and b.scope == scope
                          and b.disparity <= disp]
                for pred in predictors:
                    usable = bucket if pred == PREDICTOR_HEURISTIC else \
                        [b for b in bucket if suite.can_score(b)]
                    if not usable:
                        cells[(mu, disp, pred, scope)] = (None, 0)
                        continue
                    correct = sum(1 for b in usable if suite.predict(pred, b) == b.winner)
                    cells[(mu, disp, pred, scope)] = (100.0 * correct / len(usable),
                                                      len(usable))
    return EvaluationResult(matchups=matchups,
                            disparities=tuple(config.disparity_thresholds),
                            scopes=tuple(config.scopes), cells=cells)


def evaluate_with_holdout(battles: Sequence[BattleRecord],
                          config: EvaluationConfig = EvaluationConfig(),
                          trainer: Callable[[Sequence[BattleRecord]], PredictorSuite] | None = None,
                          predictors: Sequence[str] = PREDICTORS,
                          ) -> tuple[EvaluationResult, tuple[str, ...]]:
    """Full protocol: split off test games, train on the rest, score."""
    if trainer is None:
        trainer = train_suite
    train, test, test_games = holdout_split(battles, config.holdout_games,
                                            config.split_seed)
    suite = trainer(train)
    return evaluate(test, suite, config, predictors), test_games


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

def heatmap_csv(table: DynamicsTable) -> str:
    """Full conditional matrix as (i, j, probability) triples."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "probability"])
    for i in range(table.k):
        for j in range(table.k):
            w.writerow([i, j, repr(float(table.matrix[i, j]))])
    return buf.getvalue()


def parallel_plot_csv(battles: Sequence[BattleRecord], model: GmmModel,
                      top_types: int = 8) -> str:
    """Per-battle proportions over the most frequent unit types plus the
    most probable mixture component (row sums can fall below 1 after the
    pruning to the top types)."""
    comps = [b.own for b in battles]
    if not comps:
        raise ValidationError("no battles to plot")
    basis = comps[0].basis
    data = stack_compositions(comps)
    mass = data.sum(axis=0)
    order = sorted(range(len(basis)), key=lambda i: (-mass[i], basis[i]))
    keep = sorted(order[:top_types])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([basis[i] for i in keep] + ["component"])
    for comp in comps:
        label = posterior(model, comp)[1]
        w.writerow([repr(float(comp.u[i])) for i in keep] + [label])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# table file formats
# ---------------------------------------------------------------------------

def counter_to_text(table: CounterTable) -> str:
    lines = [f"COUNTER;v1;{table.k_own};{table.k_enemy};{table.battle_count}"]
    lines.append("priors_own;" + ";".join(repr(float(v)) for v in table.priors_own))
    lines.append("priors_enemy;" + ";".join(repr(float(v)) for v in table.priors_enemy))
    for row in table.raw:
        lines.append("raw;" + ";".join(repr(float(v)) for v in row))
    for row in table.normalized:
        lines.append("norm;" + ";".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def counter_from_text(text: str) -> CounterTable:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    header = lines[0].split(";")
    if len(header) != 5 or header[0] != "COUNTER" or header[1] != "v1":
        raise ValidationError("not a v1 counter table file")
    K, Kp, count = int(header[2]), int(header[3]), int(header[4])
    if len(lines) != 3 + 2 * K:
        raise ValidationError("counter table file has wrong line count")

    def floats(line: str, tag: str, n: int) -> np.ndarray:
        parts = line.split(";")
        if parts[0] != tag or len(parts) != n + 1:
            raise ValidationError(f"expected {tag} line with {n} values")
        return np.asarray([float(p) for p in parts[1:]])

    priors_own = floats(lines[1], "priors_own", K)
    priors_enemy = floats(lines[2], "priors_enemy", Kp)
    raw = np.stack([floats(lines[3 + i], "raw", Kp) for i in range(K)])
    norm = np.stack([floats(lines[3 + K + i], "norm", Kp) for i in range(K)])
    return CounterTable(raw=raw, normalized=norm, priors_own=priors_own,
                        priors_enemy=priors_enemy, battle_count=count)


def dynamics_to_text(table: DynamicsTable) -> str:
    lines = [f"DYN;v1;{table.k};{table.dt_frames};{table.tolerance_frames};{table.pair_count}"]
    for row in table.matrix:
        lines.append(";".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def dynamics_from_text(text: str) -> DynamicsTable:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    header = lines[0].split(";")
    if len(header) != 6 or header[0] != "DYN" or header[1] != "v1":
        raise ValidationError("not a v1 dynamics table file")
    k, dt, tol, pairs = (int(v) for v in header[2:])
    if len(lines) != 1 + k:
        raise ValidationError("dynamics table file has wrong line count")
    matrix = np.stack([np.asarray([float(v) for v in lines[1 + i].split(";")])
                       for i in range(k)])
    if matrix.shape != (k, k):
        raise ValidationError("dynamics matrix shape mismatch")
    return DynamicsTable(matrix=matrix, dt_frames=dt, tolerance_frames=tol,
                         pair_count=pairs)


def save_text(text: str, path: str | Path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")
