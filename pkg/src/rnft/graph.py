"""The rNFT registry: token records, referring/referred indices and DAG queries."""
from __future__ import annotations

import copy
import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

from rnft import canonical
from rnft.errors import (
    AlreadyReferenced,
    CycleDetected,
    DuplicateReferent,
    InvalidWeights,
    NotOwner,
    SelfReference,
    TemporalOrderViolation,
    UnknownReferent,
    UnknownToken,
    WeightShapeMismatch,
    WeightSumExceedsOne,
)

Address = bytes
TokenId = int

# float slack when checking that cross weights sum to at most one
WEIGHT_SUM_TOLERANCE = 1e-9


class BlockCoords(NamedTuple):
    """Where a mint landed on chain: block height, block timestamp, tx position."""

    height: int
    timestamp: int
    index: int


@dataclass
class Relationship:
    referring: list[TokenId] = field(default_factory=list)
    referred: list[TokenId] = field(default_factory=list)
    created_timestamp: int = 0
    created_height: int = 0
    intra_block_index: int = 0
    labels: list[str] = field(default_factory=list)
    profit_sharing: list[float] = field(default_factory=list)

    @property
    def order_key(self) -> tuple[int, int]:
        return (self.created_height, self.intra_block_index)

    @property
    def self_weight(self) -> float:
        """Residual weight kept by the token itself (1 minus the cross weights)."""
        return 1.0 - math.fsum(self.profit_sharing)


@dataclass
class RNftRecord:
    token_id: TokenId
    owner: Address
    relationship: Relationship

    def to_dict(self) -> dict:
        rel = self.relationship
        return {
            "tokenId": self.token_id,
            "owner": self.owner.hex(),
            "referring": list(rel.referring),
            "referred": list(rel.referred),
            "createdTimestamp": rel.created_timestamp,
            "createdHeight": rel.created_height,
            "intraBlockIndex": rel.intra_block_index,
            "labels": list(rel.labels),
            "profitSharing": list(rel.profit_sharing),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RNftRecord":
        rel = Relationship(
            referring=[int(t) for t in data["referring"]],
            referred=[int(t) for t in data["referred"]],
            created_timestamp=int(data["createdTimestamp"]),
            created_height=int(data["createdHeight"]),
            intra_block_index=int(data["intraBlockIndex"]),
            labels=[str(s) for s in data["labels"]],
            profit_sharing=[float(w) for w in data["profitSharing"]],
        )
        return cls(int(data["tokenId"]), bytes.fromhex(data["owner"]), rel)


def check_weights(weights: Sequence[float], n_referring: int) -> list[float]:
    """Validate cross weights against a referring list of length ``n_referring``."""
    weights = [float(w) for w in weights]
    if len(weights) != n_referring:
        raise WeightShapeMismatch(
            f"{len(weights)} weights for {n_referring} referents"
        )
    for w in weights:
        if not math.isfinite(w) or w < 0:
            raise InvalidWeights(f"weight {w!r} is not a finite non-negative number")
    total = math.fsum(weights)
    if total > 1.0 + WEIGHT_SUM_TOLERANCE:
        raise WeightSumExceedsOne(f"weights sum to {total!r} > 1")
    return weights


class ReferenceGraph:
    """Token registry whose referring edges form a DAG.

    Mutations validate completely before touching any state, so a raised error
    always leaves the registry unchanged.
    """

    def __init__(self, first_token_id: int = 0):
        self.records: dict[TokenId, RNftRecord] = {}
        self.next_token_id: TokenId = first_token_id
        self._encoded: dict[TokenId, bytes] = {}

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, token_id) -> bool:
        return token_id in self.records

    def __iter__(self):
        return iter(sorted(self.records))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ReferenceGraph):
            return NotImplemented
        return self.next_token_id == other.next_token_id and self.records == other.records

    def _record(self, token_id: TokenId) -> RNftRecord:
        try:
            return self.records[token_id]
        except (KeyError, TypeError):
            raise UnknownToken(f"token {token_id!r} does not exist") from None

    def _touch(self, token_id: TokenId) -> None:
        self._encoded.pop(token_id, None)

    # -- mutations --------------------------------------------------------

    def safe_mint(
        self,
        owner: Address,
        referring: Sequence[TokenId] = (),
        weights: Optional[Sequence[float]] = None,
        labels: Sequence[str] = (),
        at: BlockCoords = BlockCoords(0, 0, 0),
    ) -> TokenId:
        referring = list(referring)
        if weights is None:
            weights = [0.0] * len(referring)
        for ref in referring:
            if ref not in self.records:
                raise UnknownReferent(f"referent {ref!r} does not exist")
        weights = self._check_referents(None, (at.height, at.index), referring, weights)

        token_id = self.next_token_id
        rel = Relationship(
            created_timestamp=at.timestamp,
            created_height=at.height,
            intra_block_index=at.index,
            labels=[str(s) for s in labels],
        )
        self.records[token_id] = RNftRecord(token_id, owner, rel)
        self.next_token_id += 1
        if referring:
            self._link(token_id, referring, weights)
        return token_id

    def set_node(
        self,
        token_id: TokenId,
        referring: Sequence[TokenId],
        weights: Optional[Sequence[float]] = None,
    ) -> None:
        """Attach the referring list of ``token_id`` (write-once) and update referents."""
        record = self._record(token_id)
        referring = list(referring)
        if weights is None:
            weights = [0.0] * len(referring)
        if record.relationship.referring:
            raise AlreadyReferenced(f"token {token_id} already has a referring list")
        for ref in referring:
            if ref not in self.records:
                raise UnknownReferent(f"referent {ref!r} does not exist")
        weights = self._check_referents(
            token_id, record.relationship.order_key, referring, weights
        )
        if not referring:
            return
        self._check_no_cycle(token_id, referring)
        self._link(token_id, referring, weights)

    def _check_referents(self, token_id, order_key, referring, weights) -> list[float]:
        seen = set()
        for ref in referring:
            if ref == token_id:
                raise SelfReference(f"token {token_id} cannot refer to itself")
            if ref in seen:
                raise DuplicateReferent(f"referent {ref} listed twice")
            seen.add(ref)
            if not self.records[ref].relationship.order_key < order_key:
                raise TemporalOrderViolation(
                    f"referent {ref} at {self.records[ref].relationship.order_key} "
                    f"is not older than {order_key}"
                )
        return check_weights(weights, len(referring))

    def _check_no_cycle(self, token_id: TokenId, referring: Sequence[TokenId]) -> None:
        # A new edge token -> ref closes a cycle iff ref already descends from token.
        targets = set(referring)
        stack = [token_id]
        seen = {token_id}
        while stack:
            node = stack.pop()
            for child in self.records[node].relationship.referred:
                if child in targets:
                    raise CycleDetected(f"edge {token_id} -> {child} would close a cycle")
                if child not in seen:
                    seen.add(child)
                    stack.append(child)

    def _link(self, token_id, referring, weights) -> None:
        self.set_node_referring(token_id, referring, weights)
        self.set_node_referred(token_id, referring)

    def set_node_referring(
        self,
        token_id: TokenId,
        referring: Sequence[TokenId],
        weights: Optional[Sequence[float]] = None,
    ) -> None:
        """Write the out-list of ``token_id``. Internal half of :meth:`set_node`."""
        rel = self._record(token_id).relationship
        if not referring:
            return
        if rel.referring:
            raise AlreadyReferenced(f"token {token_id} already has a referring list")
        rel.referring = list(referring)
        rel.profit_sharing = (
            [0.0] * len(referring) if weights is None else [float(w) for w in weights]
        )
        self._touch(token_id)

    def set_node_referred(self, token_id: TokenId, referring: Sequence[TokenId]) -> None:
        """Append ``token_id`` to the in-list of every referent, keeping insertion order."""
        for ref in referring:
            rel = self._record(ref).relationship
            if token_id not in rel.referred:
                rel.referred.append(token_id)
                self._touch(ref)

    def transfer_from(self, sender: Address, to: Address, token_id: TokenId) -> None:
        record = self._record(token_id)
        if record.owner != sender:
            raise NotOwner(f"token {token_id} is not owned by {sender.hex()}")
        record.owner = to
        self._touch(token_id)

    # -- queries ----------------------------------------------------------

    def referring_of(self, token_id: TokenId) -> list[TokenId]:
        return list(self._record(token_id).relationship.referring)

    def referred_of(self, token_id: TokenId) -> list[TokenId]:
        return list(self._record(token_id).relationship.referred)

    def created_timestamp_of(self, token_id: TokenId) -> int:
        return self._record(token_id).relationship.created_timestamp

    def created_height_of(self, token_id: TokenId) -> int:
        return self._record(token_id).relationship.created_height

    def owner_of(self, token_id: TokenId) -> Address:
        return self._record(token_id).owner

    def profit_sharing_of(self, token_id: TokenId) -> list[float]:
        return list(self._record(token_id).relationship.profit_sharing)

    def labels_of(self, token_id: TokenId) -> list[str]:
        return list(self._record(token_id).relationship.labels)

    def is_original(self, token_id: TokenId) -> bool:
        rel = self._record(token_id).relationship
        return not rel.referring and not rel.referred

    def _closure(self, token_id: TokenId, attr: str) -> set[TokenId]:
        self._record(token_id)
        out: set[TokenId] = set()
        stack = [token_id]
        while stack:
            rel = self.records[stack.pop()].relationship
            for nxt in getattr(rel, attr):
                if nxt not in out:
                    out.add(nxt)
                    stack.append(nxt)
        out.discard(token_id)
        return out

    def ancestors(self, token_id: TokenId) -> set[TokenId]:
        return self._closure(token_id, "referring")

    def descendants(self, token_id: TokenId) -> set[TokenId]:
        return self._closure(token_id, "referred")

    def referrer_counts_by_height(self, token_id: TokenId, depth: int) -> list[int]:
        """Referring bandwidth per round: how many tokens minted at each of the
        ``depth`` heights after ``token_id``'s own height refer to it."""
        if depth < 0:
            raise ValueError("depth must be non-negative")
        rel = self._record(token_id).relationship
        h = rel.created_height
        counts = [0] * depth
        for ref in rel.referred:
            offset = self.records[ref].relationship.created_height - h
            if 1 <= offset <= depth:
                counts[offset - 1] += 1
        return counts

    def topological_order(self) -> list[TokenId]:
        """Referents before referrers; ties broken by creation coordinates."""
        pending = {tid: len(rec.relationship.referring) for tid, rec in self.records.items()}
        heap = [
            (*self.records[tid].relationship.order_key, tid)
            for tid, n in pending.items()
            if n == 0
        ]
        heapq.heapify(heap)
        order = []
        while heap:
            *_, tid = heapq.heappop(heap)
            order.append(tid)
            for child in self.records[tid].relationship.referred:
                pending[child] -= 1
                if pending[child] == 0:
                    heapq.heappush(heap, (*self.records[child].relationship.order_key, child))
        if len(order) != len(self.records):
            stuck = sorted(tid for tid, n in pending.items() if n > 0)
            raise CycleDetected(f"tokens {stuck[:10]} lie on or behind a cycle")
        return order

    def assert_acyclic(self) -> None:
        self.topological_order()

    def check_invariants(self) -> None:
        """Raise on any broken registry invariant (symmetry, order, weights, acyclicity)."""
        for tid, rec in self.records.items():
            rel = rec.relationship
            if len(set(rel.referring)) != len(rel.referring) or tid in rel.referring:
                raise DuplicateReferent(f"token {tid} has a malformed referring list")
            check_weights(rel.profit_sharing, len(rel.referring))
            for ref in rel.referring:
                other = self._record(ref).relationship
                if tid not in other.referred:
                    raise AssertionError(f"{tid} -> {ref} missing from referred index")
                if not other.order_key < rel.order_key:
                    raise TemporalOrderViolation(f"{tid} refers to newer token {ref}")
            for child in rel.referred:
                if tid not in self._record(child).relationship.referring:
                    raise AssertionError(f"{child} listed as referrer of {tid} but does not refer to it")
        self.assert_acyclic()

    # -- serialization ----------------------------------------------------

    def encoded_records(self) -> list[bytes]:
        """Canonical bytes of every record in token-id order (cached per record)."""
        cache = self._encoded
        if len(cache) == len(self.records):
            return list(cache.values())
        for tid, rec in self.records.items():
            if tid not in cache:
                cache[tid] = canonical.encode(rec.to_dict())
        # records are kept in ascending id order; rebuild the cache in that order
        self._encoded = {tid: cache[tid] for tid in self.records}
        return list(self._encoded.values())

    def to_dict(self) -> dict:
        return {
            "nextTokenId": self.next_token_id,
            "records": [self.records[tid].to_dict() for tid in sorted(self.records)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReferenceGraph":
        graph = cls()
        graph.next_token_id = int(data["nextTokenId"])
        loaded = [RNftRecord.from_dict(item) for item in data["records"]]
        for rec in sorted(loaded, key=lambda r: r.token_id):
            graph.records[rec.token_id] = rec
        return graph

    def to_json(self, indent: Optional[int] = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "ReferenceGraph":
        return cls.from_dict(json.loads(text))

    def to_dot(self, name: str = "rnft") -> str:
        lines = [f"digraph {name} {{"]
        for tid in sorted(self.records):
            h = self.records[tid].relationship.created_height
            lines.append(f'  "{tid}" [label="{tid}@{h}"];')
        for tid in sorted(self.records):
            rel = self.records[tid].relationship
            for ref, w in zip(rel.referring, rel.profit_sharing):
                lines.append(f'  "{tid}" -> "{ref}" [label="{w!r}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def snapshot(self) -> "ReferenceGraph":
        """Independent copy for read-only use by other threads."""
        return copy.deepcopy(self)

    def iter_edges(self) -> Iterable[tuple[TokenId, TokenId]]:
        for tid in sorted(self.records):
            for ref in self.records[tid].relationship.referring:
                yield tid, ref
