"""Referable NFTs: a DAG token registry on a deterministic ledger, with a payoff model."""
from rnft.chain import (
    Block,
    ChainState,
    Ed25519Scheme,
    GenesisConfig,
    KeyPair,
    KeyedDigestScheme,
    Mint,
    Receipt,
    SetNode,
    Transaction,
    Transfer,
    address_gen,
    key_gen,
    sign,
    tran_gen,
    verify,
)
from rnft.graph import BlockCoords, ReferenceGraph, Relationship, RNftRecord
from rnft.incentive import (
    HessianProbe,
    IncentiveParams,
    PayoffBreakdown,
    WeightVector,
    descending_rate,
    hessian_probe,
    income_of,
    initial_price,
    interest_rate,
    outcome_of,
    payment_depth,
    payoff,
    payoff_of,
)
from rnft.sim import ReportRow, ScenarioConfig, run_scenario

__version__ = "0.1.0"
