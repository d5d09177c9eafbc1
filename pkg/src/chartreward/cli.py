"""Command-line interface.

Subcommands: parse, score, eval, toy-train, filter, sample, serve.  All file
exchange is JSONL (one object per line) or JSON reports; --plot renders a
matplotlib figure next to the delimited output.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Iterator

from .config import ConfigError, RewardConfig, load_config
from .dataset import (
    ALL_CODES,
    DEFAULT_DROP_CODES,
    DatasetIOError,
    SamplingError,
    filter_dataset,
    read_records,
    sample_split,
    write_records,
)
from .grpo import GrpoHyper
from .metrics import (
    EvalRecord,
    OracleLogProbs,
    ValidationError,
    aggregate,
    delta_log_p,
    gt_is_zero,
    relaxed_accuracy,
    table_edit_distance,
    type_accuracy,
)
from .parsing import RawRollout, parse_rollout
from .scoring import ProtocolError, ScoreItem, ground_truth_from_dict, score_batch_items
from .service import build_provider, load_service_config, service_settings_from_env
from .tables import ParseFailure, parse_table_json
from .toytask import toy_train


def _read_jsonl(path: str) -> Iterator[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SystemExit(f"{path}:{lineno}: invalid JSON: {exc}")
            if not isinstance(obj, dict):
                raise SystemExit(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def _load_reward_config(path: str | None) -> RewardConfig:
    try:
        return load_config(path) if path else RewardConfig()
    except (ConfigError, OSError) as exc:
        raise SystemExit(f"config error: {exc}")


def cmd_parse(args: argparse.Namespace) -> int:
    cfg = _load_reward_config(args.config)
    n = 0
    with open(args.out, "w", encoding="utf-8") as out:
        for lineno, obj in _read_jsonl(args.rollouts):
            if "completion" not in obj:
                raise SystemExit(f"{args.rollouts}:{lineno}: missing 'completion'")
            raw = RawRollout.from_completion(
                str(obj.get("prompt_id", "")), str(obj["completion"]), cfg.token_policy
            )
            parsed = parse_rollout(raw)
            record = {"prompt_id": raw.prompt_id, **parsed.to_dict()}
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
            n += 1
    print(f"parsed {n} rollouts -> {args.out}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    cfg = _load_reward_config(args.config)
    provider = build_provider(args.provider, args.embed_endpoint)
    ground_truths = {}
    for lineno, obj in _read_jsonl(args.ground_truth):
        pid = str(obj.get("prompt_id", ""))
        try:
            ground_truths[pid] = ground_truth_from_dict(obj, f"line {lineno}")
        except ProtocolError as exc:
            raise SystemExit(f"{args.ground_truth}:{lineno}: {exc}")
    items = []
    for lineno, obj in _read_jsonl(args.rollouts):
        pid = str(obj.get("prompt_id", ""))
        if pid not in ground_truths:
            raise SystemExit(f"{args.rollouts}:{lineno}: no ground truth for prompt {pid!r}")
        items.append(ScoreItem(pid, str(obj.get("completion", "")), ground_truths[pid]))
    try:
        result = score_batch_items(items, cfg, provider)
    except ProtocolError as exc:
        raise SystemExit(f"score error [{exc.field}]: {exc}")
    with open(args.out, "w", encoding="utf-8") as out:
        for row in result["items"]:
            out.write(json.dumps(row, ensure_ascii=False) + "\n")
    if args.plot:
        from .figures import save_reward_components

        save_reward_components(result["items"], args.plot)
        print(f"figure -> {args.plot}")
    print(f"scored {len(result['items'])} rollouts in {len(result['groups'])} groups -> {args.out}")
    return 0


def _binary_map(text: str) -> str:
    lowered = text.strip().lower()
    if lowered == "true":
        return "yes"
    if lowered == "false":
        return "no"
    return text


def _table_from_field(value: object) -> object:
    if value is None:
        return None
    if isinstance(value, dict):
        return parse_table_json(json.dumps(value))
    return parse_table_json(str(value))


def _eval_record(obj: dict, where: str, binary: bool) -> EvalRecord:
    pred = str(obj.get("prediction", ""))
    gt = str(obj.get("ground_truth", ""))
    if binary:
        pred, gt = _binary_map(pred), _binary_map(gt)
    gt_table = _table_from_field(obj.get("gt_table"))
    if isinstance(gt_table, ParseFailure):
        raise SystemExit(f"{where}: ground-truth table does not parse ({gt_table.reason})")
    return EvalRecord(
        prompt_id=str(obj.get("prompt_id", "")),
        prediction=pred,
        ground_truth=gt,
        predicted_table=_table_from_field(obj.get("predicted_table")),
        gt_table=gt_table,
        predicted_type=obj.get("predicted_type"),
        gt_type=obj.get("gt_type"),
    )


def cmd_eval(args: argparse.Namespace) -> int:
    values: list[float] = []
    prompt_ids: list[str] = []
    flags: list[list[str]] = []
    for lineno, obj in _read_jsonl(args.records):
        where = f"{args.records}:{lineno}"
        try:
            if args.metric == "delta_logp":
                rec = OracleLogProbs(
                    str(obj.get("prompt_id", "")),
                    float(obj["logp_with_rationale"]),
                    float(obj["logp_without"]),
                )
                values.append(delta_log_p(rec))
                prompt_ids.append(rec.prompt_id)
                flags.append([])
                continue
            record = _eval_record(obj, where, args.binary)
            if args.metric == "relaxed_acc":
                if "prediction" not in obj or "ground_truth" not in obj:
                    raise KeyError("'prediction'/'ground_truth'")
                values.append(relaxed_accuracy(record.prediction, record.ground_truth))
                flags.append(["GT_ZERO"] if gt_is_zero(record.ground_truth) else [])
            elif args.metric == "type_acc":
                if "gt_type" not in obj:
                    raise KeyError("'gt_type'")
                values.append(type_accuracy(record.predicted_type, str(record.gt_type)))
                flags.append([])
            elif args.metric == "edit_distance":
                if record.gt_table is None:
                    raise KeyError("'gt_table'")
                values.append(table_edit_distance(record.predicted_table, record.gt_table))
                flags.append([])
            else:  # pragma: no cover - argparse choices guard this
                raise SystemExit(f"unknown metric {args.metric!r}")
            prompt_ids.append(record.prompt_id)
        except KeyError as exc:
            raise SystemExit(f"{where}: missing field {exc}")
        except ValidationError as exc:
            raise SystemExit(f"{where}: {exc}")
    report = {"metric": args.metric, **aggregate(values, prompt_ids, flags)}
    _write_json(args.out, report)
    if args.plot:
        from .figures import save_metric_values

        save_metric_values(report, args.metric, args.plot)
        print(f"figure -> {args.plot}")
    print(f"{args.metric}: count={report['count']} mean={report['mean']:.6f} -> {args.out}")
    return 0


def cmd_toy_train(args: argparse.Namespace) -> int:
    cfg = _load_reward_config(args.config)
    try:
        hyper = GrpoHyper(
            epsilon=args.epsilon,
            beta=args.beta,
            group_size=args.group_size,
            learning_rate=args.lr,
            epochs=args.epochs,
            steps_per_rollout=args.steps_per_rollout,
        )
    except ConfigError as exc:
        raise SystemExit(f"hyperparameter error: {exc}")
    report = toy_train(args.seed, hyper, cfg)
    _write_json(args.out, report.to_dict())
    if args.plot:
        from .figures import save_training_curve

        save_training_curve(report.to_dict(), args.plot)
        print(f"figure -> {args.plot}")
    print(
        f"toy-train seed={args.seed}: epoch0 mean={report.epoch0_mean:.4f}, "
        f"final mean={report.final_mean:.4f} (max {report.max_reward}) -> {args.out}"
    )
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    drop = DEFAULT_DROP_CODES if args.drop is None else frozenset(
        code.strip() for code in args.drop.split(",") if code.strip()
    )
    try:
        kept, report = filter_dataset(read_records(args.infile), drop)
        write_records(args.out, kept)
    except (DatasetIOError, ValueError) as exc:
        raise SystemExit(str(exc))
    if args.report:
        _write_json(args.report, report.to_dict())
    print(f"kept {report.kept}/{report.total} records -> {args.out}")
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    n_per_source = {}
    for part in args.per_source.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise SystemExit(f"--per-source expects src=count pairs, got {part!r}")
        src, count = part.split("=", 1)
        n_per_source[src.strip()] = int(count)
    try:
        records = list(read_records(args.infile))
        sampled = sample_split(records, args.seed, n_per_source)
        write_records(args.out, sampled)
    except (DatasetIOError, SamplingError) as exc:
        raise SystemExit(str(exc))
    print(f"sampled {len(sampled)} records -> {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    settings = service_settings_from_env(
        {
            "port": args.port,
            "config": args.config,
            "provider": args.provider,
            "embed_endpoint": args.embed_endpoint,
            "embed_timeout": args.embed_timeout,
            "embed_retries": args.embed_retries,
        }
    )
    try:
        cfg = load_service_config(settings["config"])
        provider = build_provider(
            settings["provider"],
            settings["embed_endpoint"],
            settings["embed_timeout"],
            settings["embed_retries"],
        )
    except ConfigError as exc:
        raise SystemExit(f"service config error: {exc}")
    app = create_app(cfg, provider)
    uvicorn.run(app, host=args.host, port=settings["port"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chartreward", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="decompose completions into structured rationales")
    p.add_argument("--rollouts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("score", help="score rollouts against ground truth")
    p.add_argument("--rollouts", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--provider", choices=["fallback", "remote"], default="fallback")
    p.add_argument("--embed-endpoint", default=None)
    p.add_argument("--plot", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="compute evaluation metrics over a record file")
    p.add_argument("--records", required=True)
    p.add_argument(
        "--metric",
        required=True,
        choices=["relaxed_acc", "type_acc", "edit_distance", "delta_logp"],
    )
    p.add_argument("--out", required=True)
    p.add_argument("--binary", action="store_true", help="map true/false to yes/no before matching")
    p.add_argument("--plot", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("toy-train", help="run the toy GRPO demonstration")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--group-size", type=int, default=4)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=0.04)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--steps-per-rollout", type=int, default=1)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None)
    p.set_defaults(func=cmd_toy_train)

    p = sub.add_parser("filter", help="drop records failing validation")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--drop", default=None, help=f"comma-separated codes from {', '.join(ALL_CODES)}")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("sample", help="seeded stratified sampling by source")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--per-source", required=True, help="e.g. chartqa=2000,plotqa=2000")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("serve", help="run the reward-scoring HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--config", default=None)
    p.add_argument("--provider", choices=["fallback", "remote"], default="fallback")
    p.add_argument("--embed-endpoint", default=None)
    p.add_argument("--embed-timeout", type=float, default=10.0)
    p.add_argument("--embed-retries", type=int, default=2)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
