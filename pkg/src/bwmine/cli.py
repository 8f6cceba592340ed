"""Command-line pipeline driver.

Subcommands mirror the pipeline stages::

    gen-synthetic   seeded synthetic corpus (scripted logs or battle CSV)
    ingest          dump triples -> attacks, battles CSV, corpus stats
    stats           corpus statistics table only
    cluster         battles CSV -> BIC-selected mixture model file
    counter-table   battles + models -> counter table file
    dynamics        battles + model -> cluster dynamics table
    evaluate        holdout evaluation of the three predictors
    plot-data       parallel-plot or heatmap CSV for figures

Every stage hashes its inputs and effective config into ``manifest.json``
under the output directory and is skipped when nothing changed (use
--force to override). Exit codes: 0 ok, 2 input error, 3 validation
error, 4 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from pathlib import Path
from typing import Callable, Mapping, Sequence

from . import attacktrack, counterplay, gmm, synthgen
from .composition import BattleRecord, attack_to_battles, battles_to_csv, parse_battles_csv
from .errors import BwmineError, InputError, NoGamesFound, ValidationError
from .logmodel import GameLog, TypeTimeline, corpus_stats, read_game
from .manifest import Manifest, file_sha256, stage_signature, text_sha256
from .mapregions import build_region_map, parse_grid_file
from .units import RACE_LETTER, RACES, UnitTable

_LETTER_RACE = {v: k for k, v in RACE_LETTER.items()}


# ---------------------------------------------------------------------------
# options: CLI > config file > default
# ---------------------------------------------------------------------------

def _load_config_file(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise InputError(f"config file not found: {p}")
    cfg: dict[str, str] = {}
    for no, line in enumerate(p.read_text(encoding="utf-8").split("\n"), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"config line {no}: expected key = value")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


class Options:
    """Resolves option values: explicit flag, then config file, then default."""

    def __init__(self, args: argparse.Namespace, file_cfg: Mapping[str, str]):
        self.args = args
        self.file_cfg = file_cfg

    def get(self, name: str, default, cast: Callable = str):
        cli_val = getattr(self.args, name.replace("-", "_"), None)
        if cli_val is not None:
            return cli_val
        if name in self.file_cfg:
            return cast(self.file_cfg[name])
        return default


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).split(","))


def _strings(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def _parse_race(token: str) -> str:
    token = token.strip()
    if token in RACES:
        return token
    if token in _LETTER_RACE:
        return _LETTER_RACE[token]
    raise InputError(f"unknown race {token!r}")


# ---------------------------------------------------------------------------
# stage runner
# ---------------------------------------------------------------------------

def _run_stage(args, stage: str, inputs: Sequence[Path], config: Mapping[str, object],
               build: Callable[[], tuple[dict[Path, str], dict]]) -> None:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    hashes = {}
    rel_hashes = {}
    for p in sorted(set(Path(i) for i in inputs)):
        if not p.exists():
            raise InputError(f"missing input: {p}")
        digest = file_sha256(p)
        hashes[str(p)] = digest
        rel_hashes[os.path.relpath(p, out_dir)] = digest
    sig = stage_signature(rel_hashes, config)
    man = Manifest(out_dir / "manifest.json")
    if not args.force and man.is_current(stage, sig):
        print(f"{stage}: up to date")
        return
    files, details = build()
    out_hashes = {}
    for path in sorted(files):
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(files[path], encoding="utf-8")
        out_hashes[str(p)] = text_sha256(files[path])
    man.record(stage, sig, hashes, out_hashes, details)
    print(f"{stage}: wrote {len(files)} file(s) under {out_dir}")


def _unit_table(args) -> UnitTable:
    if getattr(args, "units", None):
        return UnitTable.load(args.units)
    return UnitTable.default()


# ---------------------------------------------------------------------------
# ingest / stats
# ---------------------------------------------------------------------------

def _load_corpus(args, opts: Options) -> tuple[list[tuple[str, GameLog]], dict[str, str]]:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise NoGamesFound(f"corpus directory not found: {corpus}")
    stems = sorted(p.with_suffix("") for p in corpus.glob("*.rgd"))
    if not stems:
        raise NoGamesFound(f"no .rgd files under {corpus}")
    games: list[tuple[str, GameLog]] = []
    skipped: dict[str, str] = {}
    for stem in stems:
        if not stem.with_suffix(".rod").exists() or not stem.with_suffix(".rld").exists():
            skipped[stem.name] = "incomplete dump triple"
            continue
        try:
            games.append((stem.name, read_game(stem)))
        except (ValidationError, OSError) as exc:
            skipped[stem.name] = str(exc)
    if not games:
        raise NoGamesFound(f"no readable games under {corpus}")
    for name, reason in sorted(skipped.items()):
        print(f"skipping {name}: {reason}", file=sys.stderr)
    return games, skipped


def _tracker_config(opts: Options) -> attacktrack.TrackerConfig:
    return attacktrack.TrackerConfig(
        timeout_frames=opts.get("timeout", attacktrack.DEFAULT_TIMEOUT_FRAMES, int),
        context_radius_px=opts.get("context-radius", attacktrack.DEFAULT_CONTEXT_RADIUS_PX, float),
    )


def _ingest_build(args, opts: Options, stats_only: bool) -> tuple[dict[Path, str], dict]:
    table = _unit_table(args)
    tracker_cfg = _tracker_config(opts)
    region_map = None
    if getattr(args, "grid", None):
        region_map = build_region_map(
            parse_grid_file(Path(args.grid).read_text(encoding="utf-8")),
            radius_px=opts.get("cdr-radius", None, int))
    games, skipped = _load_corpus(args, opts)

    out_dir = Path(args.out)
    files: dict[Path, str] = {}
    logs, counts = [], []
    battles: list[BattleRecord] = []
    for name, log in games:
        attacks = attacktrack.run_tracker(log, region_map, tracker_cfg, table)
        logs.append(log)
        counts.append(len(attacks))
        if stats_only:
            continue
        files[out_dir / "attacks" / f"{name}.csv"] = attacktrack.attacks_to_csv(
            attacks, log.player_ids())
        timeline = TypeTimeline(log)
        races = {p.id: p.race for p in log.players}
        for attack in attacks:
            uids = attack.all_involved()
            types = {uid: timeline.at(uid, attack.end_frame) for uid in uids}
            battles.extend(attack_to_battles(attack, name, races, table, types))
    stats = corpus_stats(logs, counts)
    files[out_dir / "stats.csv"] = stats.to_csv()
    if not stats_only:
        files[out_dir / "battles.csv"] = battles_to_csv(battles)
    print(stats.format_table())
    details = {"games": len(games), "skipped": skipped, "battles": len(battles)}
    return files, details


def cmd_ingest(args, opts: Options) -> None:
    corpus = Path(args.corpus)
    inputs = sorted(corpus.glob("*.rgd")) + sorted(corpus.glob("*.rod")) \
        + sorted(corpus.glob("*.rld")) if corpus.is_dir() else []
    if getattr(args, "grid", None):
        inputs.append(Path(args.grid))
    config = {"timeout": opts.get("timeout", attacktrack.DEFAULT_TIMEOUT_FRAMES, int),
              "context_radius": opts.get("context-radius",
                                         attacktrack.DEFAULT_CONTEXT_RADIUS_PX, float),
              "cdr_radius": opts.get("cdr-radius", None, int),
              "units": getattr(args, "units", None)}
    _run_stage(args, "ingest", inputs, config,
               lambda: _ingest_build(args, opts, stats_only=False))


def cmd_stats(args, opts: Options) -> None:
    corpus = Path(args.corpus)
    inputs = sorted(corpus.glob("*.rgd")) + sorted(corpus.glob("*.rod")) \
        + sorted(corpus.glob("*.rld")) if corpus.is_dir() else []
    config = {"timeout": opts.get("timeout", attacktrack.DEFAULT_TIMEOUT_FRAMES, int),
              "context_radius": opts.get("context-radius",
                                         attacktrack.DEFAULT_CONTEXT_RADIUS_PX, float)}
    _run_stage(args, "stats", inputs, config,
               lambda: _ingest_build(args, opts, stats_only=True))


# ---------------------------------------------------------------------------
# model fitting stages
# ---------------------------------------------------------------------------

def _fit_options(args, opts: Options) -> dict:
    k_min = opts.get("k-min", 5, int)
    k_max = opts.get("k-max", 15, int)
    structures = opts.get("structures", ",".join(gmm.STRUCTURES), str)
    seeds = opts.get("seeds", str(args.seed), str)
    return {
        "k_range": tuple(range(k_min, k_max + 1)),
        "structures": _strings(structures),
        "seeds": _ints(seeds),
    }


def _filtered_battles(path: str | Path, mu: str, race: str, scope: str) -> list[BattleRecord]:
    battles = [b for b in parse_battles_csv(Path(path).read_text(encoding="utf-8"))
               if b.matchup == mu and b.own.race == race and b.scope == scope]
    if not battles:
        raise InputError(f"no battles for {mu}/{race}/{scope} in {path}")
    return battles


def _model_path(out_dir: Path, mu: str, race: str, scope: str) -> Path:
    return out_dir / "models" / f"{mu}.{race}.{scope}.gmm"


def cmd_cluster(args, opts: Options) -> None:
    mu, race, scope = args.matchup, _parse_race(args.race), args.scope
    fit_opts = _fit_options(args, opts)
    config = {"matchup": mu, "race": race, "scope": scope, **fit_opts}
    out_path = _model_path(Path(args.out), mu, race, scope)

    def build():
        battles = _filtered_battles(args.battles, mu, race, scope)
        comps = [b.own for b in battles]
        from .composition import stack_compositions
        model = gmm.select_model(stack_compositions(comps), basis=comps[0].basis,
                                 race=race, scope=scope, **fit_opts)
        print(f"cluster {mu}/{race}/{scope}: K={model.n_components} "
              f"structure={model.structure} BIC={model.bic_score:.1f}")
        return {out_path: gmm.model_to_text(model)}, {
            "K": model.n_components, "structure": model.structure}

    _run_stage(args, f"cluster:{mu}.{race}.{scope}", [Path(args.battles)], config, build)


def _enemy_race(mu: str, own_race: str) -> str:
    a, b = _LETTER_RACE[mu[0]], _LETTER_RACE[mu[2]]
    if own_race not in (a, b):
        raise InputError(f"race {own_race} does not play in {mu}")
    return b if own_race == a else a


def cmd_counter_table(args, opts: Options) -> None:
    mu, race, scope = args.matchup, _parse_race(args.race), args.scope
    enemy_race = _enemy_race(mu, race)
    out_dir = Path(args.out)
    models_dir = Path(args.models_dir) if args.models_dir else out_dir
    own_model_path = _model_path(models_dir, mu, race, scope)
    enemy_model_path = _model_path(models_dir, mu, enemy_race, scope)
    out_path = out_dir / "tables" / f"{mu}.{race}.{scope}.counter"
    config = {"matchup": mu, "race": race, "scope": scope}

    def build():
        battles = _filtered_battles(args.battles, mu, race, scope)
        own_model = gmm.load_model(own_model_path)
        enemy_model = gmm.load_model(enemy_model_path)
        table = counterplay.learn_counter_table(battles, own_model, enemy_model)
        return {out_path: counterplay.counter_to_text(table)}, {
            "battles": table.battle_count}

    _run_stage(args, f"counter-table:{mu}.{race}.{scope}",
               [Path(args.battles), own_model_path, enemy_model_path], config, build)


def cmd_dynamics(args, opts: Options) -> None:
    mu, race, scope = args.matchup, _parse_race(args.race), args.scope
    enemy_race = _enemy_race(mu, race)
    out_dir = Path(args.out)
    models_dir = Path(args.models_dir) if args.models_dir else out_dir
    model_path = _model_path(models_dir, mu, enemy_race, scope)
    dt = opts.get("dt", counterplay.DEFAULT_DT_FRAMES, int)
    tol = opts.get("dt-tolerance", counterplay.DEFAULT_DT_TOLERANCE, int)
    out_path = out_dir / "tables" / f"{mu}.{race}.{scope}.dyn"
    config = {"matchup": mu, "race": race, "scope": scope, "dt": dt, "tolerance": tol}

    def build():
        battles = _filtered_battles(args.battles, mu, race, scope)
        model = gmm.load_model(model_path)
        sequences: dict[tuple[str, int], list[tuple[int, object]]] = {}
        for b in battles:
            sequences.setdefault((b.game_id, b.own_pid), []).append((b.frame, b.enemy))
        seq_list = [sequences[k] for k in sorted(sequences)]
        table = counterplay.learn_dynamics(seq_list, model, dt, tol)
        return {out_path: counterplay.dynamics_to_text(table)}, {
            "pairs": table.pair_count}

    _run_stage(args, f"dynamics:{mu}.{race}.{scope}",
               [Path(args.battles), model_path], config, build)


def cmd_evaluate(args, opts: Options) -> None:
    fit_opts = _fit_options(args, opts)
    eval_cfg = counterplay.EvaluationConfig(
        disparity_thresholds=_floats(opts.get(
            "disparity-thresholds", "1.1,1.3,1.5", str)),
        scopes=_strings(opts.get("scopes", "m,ws", str)),
        holdout_games=opts.get("holdout-games", counterplay.DEFAULT_HOLDOUT_GAMES, int),
        split_seed=args.seed,
    )
    config = {"holdout_games": eval_cfg.holdout_games, "split_seed": eval_cfg.split_seed,
              "thresholds": eval_cfg.disparity_thresholds, "scopes": eval_cfg.scopes,
              **fit_opts}
    out_path = Path(args.out) / "results.csv"

    def build():
        battles = parse_battles_csv(Path(args.battles).read_text(encoding="utf-8"))
        if not battles:
            raise InputError(f"no battles in {args.battles}")

        def trainer(train):
            return counterplay.train_suite(train, **fit_opts)

        result, test_games = counterplay.evaluate_with_holdout(
            battles, eval_cfg, trainer)
        print(result.to_csv(), end="")
        return {out_path: result.to_csv()}, {"test_games": list(test_games)}

    _run_stage(args, "evaluate", [Path(args.battles)], config, build)


def cmd_plot_data(args, opts: Options) -> None:
    out_dir = Path(args.out)
    if args.kind == "heatmap":
        if not args.dynamics:
            raise InputError("plot-data heatmap needs --dynamics")
        out_path = out_dir / "plots" / "heatmap.csv"

        def build():
            table = counterplay.dynamics_from_text(
                Path(args.dynamics).read_text(encoding="utf-8"))
            return {out_path: counterplay.heatmap_csv(table)}, {}

        _run_stage(args, "plot-data:heatmap", [Path(args.dynamics)],
                   {"kind": "heatmap"}, build)
        return
    if not args.battles or not args.model:
        raise InputError("plot-data parallel needs --battles and --model")
    out_path = out_dir / "plots" / "parallel.csv"
    top = opts.get("top-types", 8, int)

    def build():
        model = gmm.load_model(args.model)
        battles = [b for b in parse_battles_csv(Path(args.battles).read_text(encoding="utf-8"))
                   if b.own.race == model.race and b.scope == model.scope]
        if args.matchup:
            battles = [b for b in battles if b.matchup == args.matchup]
        if not battles:
            raise InputError("no battles match the model's race and scope")
        return {out_path: counterplay.parallel_plot_csv(battles, model, top)}, {
            "battles": len(battles)}

    _run_stage(args, "plot-data:parallel", [Path(args.battles), Path(args.model)],
               {"kind": "parallel", "matchup": args.matchup, "top": top}, build)


# ---------------------------------------------------------------------------
# synthetic corpus
# ---------------------------------------------------------------------------

def _synth_config(args, opts: Options) -> synthgen.SynthConfig:
    races = tuple(_parse_race(r) for r in _strings(opts.get("races", "Protoss,Terran")))
    if len(races) != 2:
        raise InputError("--races needs exactly two entries")
    kinds = _strings(opts.get("kinds", attacktrack.GROUND))
    for k in kinds:
        if k not in attacktrack.ATTACK_TYPES:
            raise InputError(f"unknown attack kind {k!r}")
    planted = None
    counter = None
    if args.mode == "battles":
        k = opts.get("k-components", 3, int)
        n = opts.get("n-dims", 6, int)
        std = opts.get("std", 0.02, float)
        planted = synthgen.simplex_corners_mixture(k, n, std)
        beat = opts.get("beat", 0.0, float)
        if beat > 0:
            counter = synthgen.cyclic_counter_matrix(k, beat)
    return synthgen.SynthConfig(
        seed=args.seed,
        races=races,
        games=opts.get("games", 5, int),
        battles_per_game=opts.get("battles-per-game", 3, int),
        template=opts.get("template", "tworooms", str),
        attack_kinds=kinds,
        planted=planted,
        planted_counter=counter,
        value_noise=opts.get("value-noise", 0.0, float),
        disparity_range=(opts.get("disparity-min", 1.0, float),
                         opts.get("disparity-max", 1.5, float)),
        scopes=_strings(opts.get("scopes", "m,ws")),
        battle_spacing=opts.get("spacing", synthgen.DEFAULT_BATTLE_SPACING, int),
    )


def cmd_gen_synthetic(args, opts: Options) -> None:
    cfg = _synth_config(args, opts)
    out_dir = Path(args.out)
    config = {"mode": args.mode, "cfg": repr(cfg)}
    if args.mode == "battles":
        n_battles = opts.get("n-battles", 600, int)
        config["n_battles"] = n_battles
        out_path = out_dir / "battles.csv"

        def build():
            records, truths = synthgen.gen_battles(cfg, n_battles)
            truth_text = "\n".join(
                f"{t.own_label};{t.enemy_label};{int(t.own_won)}" for t in truths) + "\n"
            return {out_path: battles_to_csv(records),
                    out_dir / "battles.truth": truth_text}, {"battles": n_battles}

        _run_stage(args, "gen-synthetic:battles", [], config, build)
        return

    corpus_dir = out_dir / "corpus"

    def build():
        stems = synthgen.gen_corpus(cfg, corpus_dir, table=_unit_table(args))
        files: dict[Path, str] = {}
        for p in sorted(corpus_dir.iterdir()):
            if p.is_file():
                files[p] = p.read_text(encoding="utf-8")
        print(f"gen-synthetic: {len(stems)} game(s) under {corpus_dir}")
        return files, {"games": len(stems)}

    _run_stage(args, "gen-synthetic:logs", [], config, build)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bwmine", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--units", help="unit attribute CSV (default: bundled table)")
    parser.add_argument("--force", action="store_true",
                        help="re-run stages even when the manifest says they are current")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic corpus")
    p.add_argument("--mode", choices=("logs", "battles"), default="logs")
    for flag, typ in (("--games", int), ("--battles-per-game", int), ("--template", str),
                      ("--races", str), ("--kinds", str), ("--spacing", int),
                      ("--n-battles", int), ("--k-components", int), ("--n-dims", int),
                      ("--std", float), ("--beat", float), ("--value-noise", float),
                      ("--disparity-min", float), ("--disparity-max", float),
                      ("--scopes", str)):
        p.add_argument(flag, type=typ)

    for name in ("ingest", "stats"):
        p = sub.add_parser(name, help=f"{name} a corpus of dump triples")
        p.add_argument("--corpus", required=True)
        p.add_argument("--grid", help="grid map file for region annotation")
        p.add_argument("--timeout", type=int)
        p.add_argument("--context-radius", type=float)
        p.add_argument("--cdr-radius", type=int)

    p = sub.add_parser("cluster", help="fit a mixture model for one group")
    p.add_argument("--battles", required=True)
    p.add_argument("--matchup", required=True)
    p.add_argument("--race", required=True)
    p.add_argument("--scope", required=True, choices=("m", "ws"))
    for flag, typ in (("--k-min", int), ("--k-max", int), ("--structures", str),
                      ("--seeds", str)):
        p.add_argument(flag, type=typ)

    for name in ("counter-table", "dynamics"):
        p = sub.add_parser(name, help=f"learn the {name.replace('-', ' ')}")
        p.add_argument("--battles", required=True)
        p.add_argument("--matchup", required=True)
        p.add_argument("--race", required=True)
        p.add_argument("--scope", required=True, choices=("m", "ws"))
        p.add_argument("--models-dir")
        if name == "dynamics":
            p.add_argument("--dt", type=int)
            p.add_argument("--dt-tolerance", type=int)

    p = sub.add_parser("evaluate", help="holdout evaluation of the predictors")
    p.add_argument("--battles", required=True)
    p.add_argument("--holdout-games", type=int)
    p.add_argument("--disparity-thresholds")
    p.add_argument("--scopes")
    for flag, typ in (("--k-min", int), ("--k-max", int), ("--structures", str),
                      ("--seeds", str)):
        p.add_argument(flag, type=typ)

    p = sub.add_parser("plot-data", help="emit figure-ready CSV data")
    p.add_argument("--kind", choices=("parallel", "heatmap"), required=True)
    p.add_argument("--battles")
    p.add_argument("--model")
    p.add_argument("--dynamics")
    p.add_argument("--matchup")
    p.add_argument("--top-types", type=int)
    return parser


_COMMANDS = {
    "gen-synthetic": cmd_gen_synthetic,
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "cluster": cmd_cluster,
    "counter-table": cmd_counter_table,
    "dynamics": cmd_dynamics,
    "evaluate": cmd_evaluate,
    "plot-data": cmd_plot_data,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = Options(args, _load_config_file(args.config))
        _COMMANDS[args.command](args, opts)
        return 0
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3
    except BwmineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except Exception:
        traceback.print_exc()
        return 4


if __name__ == "__main__":
    sys.exit(main())
