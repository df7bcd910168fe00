"""Grow a random reference graph on the ledger and report per-token payoffs."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from rnft.chain import ChainState, GenesisConfig, Mint, key_gen, tran_gen
from rnft.errors import ConfigInvalid
from rnft.graph import ReferenceGraph
from rnft.incentive import IncentiveParams, PayoffBreakdown, payoff_of

ATTACHMENT_RULES = ("uniform", "preferential")

REPORT_COLUMNS = (
    "tokenId",
    "createdHeight",
    "inDegree",
    "outDegree",
    "ancestorsCount",
    "p0",
    "r",
    "sigma",
    "d",
    "outcome",
    "income",
    "utility",
)


@dataclass
class ScenarioConfig:
    """``arrivals_per_round`` is either a fixed count or ``{"poisson": mean}``."""

    rounds: int = 10
    arrivals_per_round: Union[int, dict] = 5
    references_per_arrival: int = 2
    attachment: str = "preferential"
    seed: int = 0
    incentive: IncentiveParams = field(default_factory=IncentiveParams)
    self_weight: float = 0.5
    users: int = 8
    genesis_time: int = 0
    block_interval: int = 12

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigInvalid(f"rounds must be >= 1, got {self.rounds}")
        if self.references_per_arrival < 0:
            raise ConfigInvalid("references_per_arrival must be >= 0")
        if self.attachment not in ATTACHMENT_RULES:
            raise ConfigInvalid(f"attachment must be one of {ATTACHMENT_RULES}")
        if not 0.0 <= self.self_weight <= 1.0:
            raise ConfigInvalid("self_weight must be in [0, 1]")
        if self.users < 1:
            raise ConfigInvalid("users must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigInvalid("seed must fit in an unsigned 64-bit integer")
        arrivals = self.arrivals_per_round
        if isinstance(arrivals, dict):
            if set(arrivals) != {"poisson"} or float(arrivals["poisson"]) < 0:
                raise ConfigInvalid('arrivals_per_round dict must be {"poisson": mean >= 0}')
        elif not isinstance(arrivals, int) or arrivals < 0:
            raise ConfigInvalid("arrivals_per_round must be a non-negative integer")

    _JSON_KEYS = {
        "rounds": "rounds",
        "arrivalsPerRound": "arrivals_per_round",
        "referencesPerArrival": "references_per_arrival",
        "attachment": "attachment",
        "seed": "seed",
        "selfWeight": "self_weight",
        "users": "users",
        "genesisTime": "genesis_time",
        "blockInterval": "block_interval",
    }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        incentive = data.pop("incentive", None)
        unknown = set(data) - set(cls._JSON_KEYS)
        if unknown:
            raise ConfigInvalid(f"unknown scenario keys {sorted(unknown)}")
        kwargs = {cls._JSON_KEYS[k]: v for k, v in data.items()}
        if incentive is not None:
            kwargs["incentive"] = IncentiveParams.from_dict(incentive)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from None

    def to_dict(self) -> dict:
        out = {key: getattr(self, attr) for key, attr in self._JSON_KEYS.items()}
        out["incentive"] = self.incentive.to_dict()
        return out

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ReportRow:
    token_id: int
    created_height: int
    in_degree: int
    out_degree: int
    ancestors_count: int
    payoff: PayoffBreakdown

    def as_dict(self) -> dict:
        return {
            "tokenId": self.token_id,
            "createdHeight": self.created_height,
            "inDegree": self.in_degree,
            "outDegree": self.out_degree,
            "ancestorsCount": self.ancestors_count,
            **self.payoff.as_row(),
        }


def choose_referents(
    rng: np.random.Generator, in_degrees: np.ndarray, m: int, rule: str
) -> list[int]:
    """Pick ``min(m, n)`` distinct indices out of ``n`` candidates.

    Preferential attachment weights candidate ``i`` by ``1 + in_degrees[i]``.
    """
    n = len(in_degrees)
    m = min(m, n)
    if m == 0:
        return []
    if rule == "uniform":
        picked = rng.choice(n, size=m, replace=False)
    else:
        weights = 1.0 + in_degrees
        picked = rng.choice(n, size=m, replace=False, p=weights / weights.sum())
    return sorted(int(i) for i in picked)


def build_report(graph: ReferenceGraph, params: IncentiveParams) -> list[ReportRow]:
    rows = []
    for tid in sorted(graph.records):
        rows.append(
            ReportRow(
                token_id=tid,
                created_height=graph.created_height_of(tid),
                in_degree=len(graph.referred_of(tid)),
                out_degree=len(graph.referring_of(tid)),
                ancestors_count=len(graph.ancestors(tid)),
                payoff=payoff_of(graph, tid, params),
            )
        )
    return rows


def run_scenario(config: ScenarioConfig) -> tuple[ChainState, list[ReportRow]]:
    """Mint arrivals round by round (one sealed block per round), then report payoffs.

    Arrivals only cite tokens sealed in earlier rounds, with cross weights
    split evenly over what remains after ``self_weight``.
    """
    rng = np.random.default_rng(config.seed)
    keys = [key_gen(f"scenario-user-{i}") for i in range(config.users)]
    genesis = GenesisConfig(
        config.genesis_time, config.block_interval, [k.address for k in keys]
    )
    chain = ChainState(genesis)
    nonces = [0] * config.users
    in_degrees = np.zeros(0)

    for _ in range(config.rounds):
        arrivals = config.arrivals_per_round
        if isinstance(arrivals, dict):
            arrivals = int(rng.poisson(float(arrivals["poisson"])))
        existing = sorted(chain.graph.records)
        in_degrees = np.array(
            [len(chain.graph.records[t].relationship.referred) for t in existing], dtype=float
        )
        for _ in range(arrivals):
            picked = choose_referents(
                rng, in_degrees, config.references_per_arrival, config.attachment
            )
            referring = tuple(existing[i] for i in picked)
            cross = (1.0 - config.self_weight) / len(referring) if referring else 0.0
            user = int(rng.integers(config.users))
            tx = tran_gen(
                keys[user],
                Mint(referring, (cross,) * len(referring), ()),
                nonces[user],
            )
            nonces[user] += 1
            chain.submit_tx(tx)
        chain.seal_block()

    return chain, build_report(chain.graph, config.incentive)


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def report_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        data = row.as_dict()
        writer.writerow([_fmt(data[col]) for col in REPORT_COLUMNS])
    return buf.getvalue()


def payoff_csv(graph: ReferenceGraph, params: IncentiveParams) -> str:
    """Plain payoff rows: tokenId, p0, r, sigma, d, outcome, income, utility."""
    cols = ("tokenId", "p0", "r", "sigma", "d", "outcome", "income", "utility")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for tid in sorted(graph.records):
        data = {"tokenId": tid, **payoff_of(graph, tid, params).as_row()}
        writer.writerow([_fmt(data[c]) for c in cols])
    return buf.getvalue()
