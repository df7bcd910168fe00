"""Command-line front end.

The ledger lives in a JSON state file holding the genesis config and every
transaction; loading replays it, so the file is the whole state. Users are
named and their keys are derived from the name.

    rnft init --config genesis.json
    rnft mint --as alice
    rnft mint --as bob --refers 0 --weights 0.3
    rnft query referred 0
    rnft export --format dot

Exit codes: 0 success, 1 domain error (a JSON line naming the error goes to
stderr), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from typing import Optional, Sequence

from rnft.chain import ChainState, GenesisConfig, Mint, SetNode, Transfer, key_gen, tran_gen
from rnft.errors import RNftError
from rnft.incentive import IncentiveParams, payoff_of
from rnft.sim import ScenarioConfig, payoff_csv, report_csv, build_report, run_scenario

DEFAULT_STATE = "rnft-state.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _ids(text: Optional[str]) -> list[int]:
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated token ids, got {text!r}") from None


def _floats(text: Optional[str]) -> Optional[list[float]]:
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _address(text: str) -> bytes:
    if len(text) == 40:
        try:
            return bytes.fromhex(text)
        except ValueError:
            pass
    return key_gen(text).address


class Session:
    """A loaded ledger plus the optional incentive parameters stored beside it."""

    def __init__(self, chain: ChainState, incentive: Optional[IncentiveParams] = None):
        self.chain = chain
        self.incentive = incentive

    @classmethod
    def load(cls, path: str) -> "Session":
        if not os.path.exists(path):
            raise UsageError(f"no state file at {path!r}; run `init` first")
        with open(path) as fh:
            data = json.load(fh)
        incentive = data.get("incentive")
        return cls(
            ChainState.from_dict(data["chain"]),
            IncentiveParams.from_dict(incentive) if incentive else None,
        )

    def save(self, path: str) -> None:
        data = {
            "chain": self.chain.to_dict(),
            "incentive": self.incentive.to_dict() if self.incentive else None,
        }
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(data, fh, indent=1, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)

    def submit(self, name: str, payload, defer: bool) -> Optional[dict]:
        keys = key_gen(name)
        tx = tran_gen(keys, payload, self.chain.expected_nonce(keys.address))
        self.chain.submit_tx(tx)
        if defer:
            return None
        block = self.chain.seal_block()
        receipt = block.receipts[-1]
        if not receipt.ok:
            raise _receipt_error(receipt)
        return receipt.to_dict()


def _receipt_error(receipt) -> RNftError:
    from rnft import errors

    cls = getattr(errors, receipt.error, RNftError)
    return cls(receipt.message)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rnft", description="Referable NFT ledger and incentive simulator.")
    p.add_argument("--state", default=DEFAULT_STATE, help="ledger state file")
    p.add_argument("--check-invariants", action="store_true",
                   help="re-assert every registry and chain invariant after the command")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("init", help="create a fresh ledger")
    s.add_argument("--config", help="genesis config JSON")
    s.add_argument("--params", help="incentive parameter JSON to store with the ledger")
    s.add_argument("--force", action="store_true", help="overwrite an existing state file")

    s = sub.add_parser("mint", help="mint an rNFT")
    s.add_argument("--as", dest="user", required=True)
    s.add_argument("--refers", help="comma-separated referent ids")
    s.add_argument("--weights", help="comma-separated profit-sharing weights")
    s.add_argument("--labels", help="comma-separated labels")
    s.add_argument("--defer", action="store_true", help="leave in the mempool until `seal`")

    s = sub.add_parser("setnode", help="attach a referring list to an existing token")
    s.add_argument("token", type=int)
    s.add_argument("--as", dest="user", required=True)
    s.add_argument("--refers", required=True)
    s.add_argument("--weights")
    s.add_argument("--defer", action="store_true")

    s = sub.add_parser("transfer", help="transfer a token")
    s.add_argument("token", type=int)
    s.add_argument("--as", dest="user", required=True)
    s.add_argument("--to", required=True, help="user name or hex address")
    s.add_argument("--defer", action="store_true")

    sub.add_parser("seal", help="seal the mempool into a block")

    s = sub.add_parser("query", help="read the registry")
    s.add_argument("what", choices=["referring", "referred", "ancestors", "descendants",
                                    "timestamp", "height", "owner", "counts"])
    s.add_argument("token", type=int)
    s.add_argument("--depth", type=int, default=1, help="rounds for `counts`")

    s = sub.add_parser("payoff", help="payoff breakdown of a token (or all tokens as CSV)")
    s.add_argument("token", type=int, nargs="?")
    s.add_argument("--params", help="incentive parameter JSON (default: stored)")

    s = sub.add_parser("simulate", help="run a growth scenario into a fresh ledger")
    s.add_argument("--config", help="scenario config JSON")
    s.add_argument("--seed", type=int)
    s.add_argument("--format", choices=["dot", "json", "csv"], default="csv")
    s.add_argument("--out")

    s = sub.add_parser("export", help="emit DOT, JSON snapshot, CSV report or tx log")
    s.add_argument("--format", choices=["dot", "json", "csv", "txlog"], required=True)
    s.add_argument("--out")
    s.add_argument("--params", help="incentive parameter JSON for csv")

    s = sub.add_parser("run", help="execute a script of commands, one per line")
    s.add_argument("script")
    return p


def _params(args, session: Session) -> IncentiveParams:
    if getattr(args, "params", None):
        return IncentiveParams.load(args.params)
    return session.incentive or IncentiveParams()


def execute(args) -> None:
    cmd = args.command
    if cmd == "init":
        if os.path.exists(args.state) and not args.force:
            raise UsageError(f"{args.state!r} exists; pass --force to overwrite")
        genesis = GenesisConfig.load(args.config) if args.config else GenesisConfig()
        incentive = IncentiveParams.load(args.params) if args.params else None
        session = Session(ChainState(genesis), incentive)
        session.save(args.state)
        print(json.dumps({"height": 0, "stateRoot": session.chain.state_root().hex()}))
        return

    if cmd == "run":
        with open(args.script) as fh:
            lines = fh.readlines()
        for lineno, line in enumerate(lines, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            argv = ["--state", args.state]
            if args.check_invariants:
                argv.append("--check-invariants")
            sub_args = build_parser().parse_args(argv + shlex.split(line))
            if sub_args.command == "run":
                raise UsageError(f"line {lineno}: scripts cannot nest `run`")
            execute(sub_args)
        return

    if cmd == "simulate":
        config = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
        if args.seed is not None:
            config = ScenarioConfig.from_dict({**config.to_dict(), "seed": args.seed})
        chain, rows = run_scenario(config)
        session = Session(chain, config.incentive)
        session.save(args.state)
        _check(args, session)
        if args.format == "csv":
            _emit(report_csv(rows), args.out)
        elif args.format == "dot":
            _emit(chain.graph.to_dot(), args.out)
        else:
            _emit(chain.graph.to_json(indent=1) + "\n", args.out)
        return

    session = Session.load(args.state)
    chain, graph = session.chain, session.chain.graph
    mutated = True
    if cmd == "mint":
        refs = _ids(args.refers)
        weights = _floats(args.weights)
        labels = [s for s in (args.labels or "").split(",") if s]
        payload = Mint(tuple(refs), tuple(weights if weights is not None else [0.0] * len(refs)),
                       tuple(labels))
        _print_receipt(session.submit(args.user, payload, args.defer))
    elif cmd == "setnode":
        refs = _ids(args.refers)
        weights = _floats(args.weights)
        payload = SetNode(args.token, tuple(refs),
                          tuple(weights if weights is not None else [0.0] * len(refs)))
        _print_receipt(session.submit(args.user, payload, args.defer))
    elif cmd == "transfer":
        payload = Transfer(_address(args.to), args.token)
        _print_receipt(session.submit(args.user, payload, args.defer))
    elif cmd == "seal":
        block = chain.seal_block()
        print(json.dumps({
            "height": block.height,
            "timestamp": block.timestamp,
            "stateRoot": block.state_root.hex(),
            "receipts": [r.to_dict() for r in block.receipts],
        }, sort_keys=True))
    else:
        mutated = False
        if cmd == "query":
            _query(graph, args)
        elif cmd == "payoff":
            params = _params(args, session)
            if args.token is None:
                sys.stdout.write(payoff_csv(graph, params))
            else:
                b = payoff_of(graph, args.token, params)
                print(json.dumps({"tokenId": args.token, **b.as_row(),
                                  "incomeSchedule": list(b.income_schedule),
                                  "referrerCounts": list(b.referrer_counts)}))
        elif cmd == "export":
            if args.format == "dot":
                _emit(graph.to_dot(), args.out)
            elif args.format == "json":
                _emit(graph.to_json(indent=1) + "\n", args.out)
            elif args.format == "txlog":
                _emit(chain.tx_log_jsonl(), args.out)
            else:
                _emit(report_csv(build_report(graph, _params(args, session))), args.out)
    if mutated:
        session.save(args.state)
    _check(args, session)


def _query(graph, args) -> None:
    what, token = args.what, args.token
    if what == "referring":
        result = graph.referring_of(token)
    elif what == "referred":
        result = graph.referred_of(token)
    elif what == "ancestors":
        result = sorted(graph.ancestors(token))
    elif what == "descendants":
        result = sorted(graph.descendants(token))
    elif what == "timestamp":
        result = graph.created_timestamp_of(token)
    elif what == "height":
        result = graph.created_height_of(token)
    elif what == "owner":
        result = graph.owner_of(token).hex()
    else:
        result = graph.referrer_counts_by_height(token, args.depth)
    print(json.dumps(result))


def _print_receipt(receipt: Optional[dict]) -> None:
    if receipt is None:
        print(json.dumps({"status": "pending"}))
    else:
        print(json.dumps(receipt, sort_keys=True))


def _check(args, session: Session) -> None:
    if args.check_invariants:
        session.chain.graph.check_invariants()
        session.chain.verify_chain()


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        execute(args)
    except UsageError as exc:
        print(f"rnft: usage error: {exc}", file=sys.stderr)
        return 2
    except RNftError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
