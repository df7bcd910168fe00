"""Deterministic single-node ledger that executes rNFT transactions.

Identities, signed transactions, block sealing on a fixed clock, and contract
execution against a :class:`~rnft.graph.ReferenceGraph`. There is one sealer
and no fork choice; every run over the same transactions yields the same
state roots.
"""
from __future__ import annotations

import hashlib
import hmac
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Protocol, Union

from rnft import canonical
from rnft.errors import (
    BadNonce,
    GenesisInvalid,
    InvalidSignature,
    NotOwner,
    RNftError,
)
from rnft.graph import Address, BlockCoords, ReferenceGraph, TokenId

ZERO_HASH = bytes(32)
DEFAULT_BLOCK_INTERVAL = 12


# -- identities and signatures ------------------------------------------------


@dataclass(frozen=True)
class KeyPair:
    sk: bytes
    pk: bytes

    @cached_property
    def address(self) -> Address:
        return address_gen(self.pk)


class SignatureScheme(Protocol):
    name: str

    def keygen(self, seed: bytes) -> KeyPair: ...

    def sign(self, sk: bytes, message: bytes) -> bytes: ...

    def verify(self, pk: bytes, message: bytes, signature: bytes) -> bool: ...


class KeyedDigestScheme:
    """HMAC-SHA256 keyed by the public key.

    Enough to bind a transaction to its sender inside a simulator: tampering
    with any signed byte invalidates it. Anyone holding ``pk`` can forge, so
    never use this outside simulation.
    """

    name = "keyed-digest"

    def keygen(self, seed: bytes) -> KeyPair:
        sk = hashlib.sha256(b"rnft/sk/" + seed).digest()
        return KeyPair(sk, self.public_key(sk))

    @staticmethod
    def public_key(sk: bytes) -> bytes:
        return hashlib.sha256(b"rnft/pk/" + sk).digest()

    def sign(self, sk: bytes, message: bytes) -> bytes:
        return hmac.new(self.public_key(sk), message, hashlib.sha256).digest()

    def verify(self, pk: bytes, message: bytes, signature: bytes) -> bool:
        expected = hmac.new(pk, message, hashlib.sha256).digest()
        return hmac.compare_digest(expected, bytes(signature))


class Ed25519Scheme:
    """Real Ed25519 signatures via ``cryptography`` (deterministic per RFC 8032)."""

    name = "ed25519"

    def keygen(self, seed: bytes) -> KeyPair:
        from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
        from cryptography.hazmat.primitives import serialization

        sk = hashlib.sha256(b"rnft/ed25519/" + seed).digest()
        pk = Ed25519PrivateKey.from_private_bytes(sk).public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )
        return KeyPair(sk, pk)

    def sign(self, sk: bytes, message: bytes) -> bytes:
        from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

        return Ed25519PrivateKey.from_private_bytes(sk).sign(message)

    def verify(self, pk: bytes, message: bytes, signature: bytes) -> bool:
        from cryptography.exceptions import InvalidSignature as _Bad
        from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PublicKey

        try:
            Ed25519PublicKey.from_public_bytes(pk).verify(bytes(signature), message)
        except (_Bad, ValueError):
            return False
        return True


DEFAULT_SCHEME: SignatureScheme = KeyedDigestScheme()


def key_gen(seed: Union[bytes, str], scheme: SignatureScheme = DEFAULT_SCHEME) -> KeyPair:
    if isinstance(seed, str):
        seed = seed.encode("utf-8")
    return scheme.keygen(seed)


def address_gen(pk: bytes) -> Address:
    """20-byte address: the tail of SHA-256(pk)."""
    return hashlib.sha256(pk).digest()[-20:]


# -- payloads and transactions ------------------------------------------------


@dataclass(frozen=True)
class Mint:
    referring: tuple[TokenId, ...] = ()
    weights: tuple[float, ...] = ()
    labels: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "kind": "mint",
            "referring": list(self.referring),
            "weights": [float(w) for w in self.weights],
            "labels": list(self.labels),
        }


@dataclass(frozen=True)
class SetNode:
    token_id: TokenId
    referring: tuple[TokenId, ...] = ()
    weights: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "kind": "setNode",
            "tokenId": self.token_id,
            "referring": list(self.referring),
            "weights": [float(w) for w in self.weights],
        }


@dataclass(frozen=True)
class Transfer:
    to: Address
    token_id: TokenId

    def to_dict(self) -> dict:
        return {"kind": "transfer", "to": self.to.hex(), "tokenId": self.token_id}


Payload = Union[Mint, SetNode, Transfer]


def payload_from_dict(data: dict) -> Payload:
    kind = data["kind"]
    if kind == "mint":
        return Mint(
            tuple(int(t) for t in data["referring"]),
            tuple(float(w) for w in data["weights"]),
            tuple(str(s) for s in data["labels"]),
        )
    if kind == "setNode":
        return SetNode(
            int(data["tokenId"]),
            tuple(int(t) for t in data["referring"]),
            tuple(float(w) for w in data["weights"]),
        )
    if kind == "transfer":
        return Transfer(bytes.fromhex(data["to"]), int(data["tokenId"]))
    raise ValueError(f"unknown payload kind {kind!r}")


def signing_bytes(metadata: dict, payload: Payload, nonce: int) -> bytes:
    return canonical.encode(
        {"metadata": dict(metadata), "nonce": nonce, "payload": payload.to_dict()}
    )


def sign(
    sk: bytes,
    metadata: dict,
    payload: Payload,
    nonce: int,
    scheme: SignatureScheme = DEFAULT_SCHEME,
) -> bytes:
    return scheme.sign(sk, signing_bytes(metadata, payload, nonce))


def verify(
    pk: bytes,
    metadata: dict,
    payload: Payload,
    nonce: int,
    signature: bytes,
    scheme: SignatureScheme = DEFAULT_SCHEME,
) -> bool:
    try:
        return scheme.verify(pk, signing_bytes(metadata, payload, nonce), signature)
    except Exception:
        return False


@dataclass(frozen=True)
class Transaction:
    sender: Address
    nonce: int
    payload: Payload
    metadata: dict
    public_key: bytes
    signature: bytes

    def to_dict(self) -> dict:
        return {
            "sender": self.sender.hex(),
            "nonce": self.nonce,
            "payload": self.payload.to_dict(),
            "metadata": dict(self.metadata),
            "publicKey": self.public_key.hex(),
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Transaction":
        return cls(
            bytes.fromhex(data["sender"]),
            int(data["nonce"]),
            payload_from_dict(data["payload"]),
            {str(k): str(v) for k, v in data["metadata"].items()},
            bytes.fromhex(data["publicKey"]),
            bytes.fromhex(data["signature"]),
        )

    @cached_property
    def hash(self) -> bytes:
        return canonical.hash_value(self.to_dict())

    def verifies(self, scheme: SignatureScheme = DEFAULT_SCHEME) -> bool:
        if address_gen(self.public_key) != self.sender:
            return False
        return verify(
            self.public_key, self.metadata, self.payload, self.nonce, self.signature, scheme
        )


def tran_gen(
    keypair: KeyPair,
    payload: Payload,
    nonce: int,
    metadata: Optional[dict] = None,
    scheme: SignatureScheme = DEFAULT_SCHEME,
) -> Transaction:
    metadata = {str(k): str(v) for k, v in (metadata or {}).items()}
    sig = sign(keypair.sk, metadata, payload, nonce, scheme)
    return Transaction(address_gen(keypair.pk), nonce, payload, metadata, keypair.pk, sig)


# -- blocks -------------------------------------------------------------------


@dataclass(frozen=True)
class Receipt:
    tx_hash: bytes
    index: int
    ok: bool
    error: Optional[str] = None
    message: str = ""
    token_id: Optional[TokenId] = None

    def to_dict(self) -> dict:
        return {
            "txHash": self.tx_hash.hex(),
            "index": self.index,
            "status": "ok" if self.ok else "failed",
            "error": self.error,
            "message": self.message,
            "tokenId": self.token_id,
        }


@dataclass(frozen=True)
class Block:
    height: int
    timestamp: int
    parent_hash: bytes
    transactions: tuple[Transaction, ...]
    state_root: bytes
    receipts: tuple[Receipt, ...] = ()

    @cached_property
    def tx_root(self) -> bytes:
        return canonical.hash_value([tx.hash for tx in self.transactions])

    @cached_property
    def receipt_root(self) -> bytes:
        return canonical.hash_value([r.to_dict() for r in self.receipts])

    @cached_property
    def hash(self) -> bytes:
        return canonical.hash_value(
            {
                "height": self.height,
                "parentHash": self.parent_hash,
                "receiptRoot": self.receipt_root,
                "stateRoot": self.state_root,
                "timestamp": self.timestamp,
                "txRoot": self.tx_root,
            }
        )


@dataclass
class GenesisConfig:
    genesis_time: int = 0
    block_interval: int = DEFAULT_BLOCK_INTERVAL
    accounts: list[Address] = field(default_factory=list)

    def __post_init__(self):
        if self.genesis_time < 0 or self.block_interval <= 0:
            raise GenesisInvalid(
                "genesisTime must be >= 0 and blockInterval > 0, got "
                f"{self.genesis_time}, {self.block_interval}"
            )

    def to_dict(self) -> dict:
        return {
            "genesisTime": self.genesis_time,
            "blockInterval": self.block_interval,
            "accounts": [a.hex() for a in self.accounts],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenesisConfig":
        try:
            return cls(
                int(data.get("genesisTime", 0)),
                int(data.get("blockInterval", DEFAULT_BLOCK_INTERVAL)),
                [bytes.fromhex(a) for a in data.get("accounts", [])],
            )
        except (TypeError, ValueError) as exc:
            raise GenesisInvalid(str(exc)) from None

    @classmethod
    def load(cls, path) -> "GenesisConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class ChainState:
    """Ledger state machine: graph, accounts, sealed blocks and a FIFO mempool.

    ``accounts`` maps each address to the number of its transactions that
    executed successfully. Admission uses a separate counter that also counts
    failed transactions, so a failed transaction consumes its nonce without
    changing the state root.
    """

    def __init__(
        self,
        genesis: Optional[GenesisConfig] = None,
        scheme: SignatureScheme = DEFAULT_SCHEME,
    ):
        self.genesis = genesis or GenesisConfig()
        self.scheme = scheme
        self.graph = ReferenceGraph()
        self.accounts: dict[Address, int] = {a: 0 for a in self.genesis.accounts}
        self.blocks: list[Block] = []
        self.mempool: list[Transaction] = []
        self._next_nonce: dict[Address, int] = {}
        self.blocks.append(
            Block(0, self.genesis.genesis_time, ZERO_HASH, (), self.state_root())
        )

    @property
    def head(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return self.head.height

    def timestamp_at(self, height: int) -> int:
        return self.genesis.genesis_time + height * self.genesis.block_interval

    def expected_nonce(self, sender: Address) -> int:
        return self._next_nonce.get(sender, 0)

    def submit_tx(self, tx: Transaction) -> None:
        if not tx.verifies(self.scheme):
            raise InvalidSignature(f"transaction from {tx.sender.hex()} does not verify")
        expected = self.expected_nonce(tx.sender)
        if tx.nonce != expected:
            raise BadNonce(f"nonce {tx.nonce} from {tx.sender.hex()}, expected {expected}")
        self._next_nonce[tx.sender] = expected + 1
        self.mempool.append(tx)

    def contract_exec(self, tx: Transaction, coords: BlockCoords) -> Optional[TokenId]:
        """Apply one payload to the graph. Raises on failure without mutating state."""
        payload = tx.payload
        graph = self.graph
        result = None
        if isinstance(payload, Mint):
            result = graph.safe_mint(
                tx.sender, payload.referring, payload.weights, payload.labels, coords
            )
        elif isinstance(payload, SetNode):
            if graph.owner_of(payload.token_id) != tx.sender:
                raise NotOwner(f"token {payload.token_id} is not owned by sender")
            graph.set_node(payload.token_id, payload.referring, payload.weights)
        elif isinstance(payload, Transfer):
            graph.transfer_from(tx.sender, payload.to, payload.token_id)
            self.accounts.setdefault(payload.to, 0)
        else:
            raise TypeError(f"unknown payload {payload!r}")
        self.accounts[tx.sender] = self.accounts.get(tx.sender, 0) + 1
        return result

    def seal_block(self) -> Block:
        height = self.height + 1
        timestamp = self.timestamp_at(height)
        txs, self.mempool = tuple(self.mempool), []
        receipts = []
        for index, tx in enumerate(txs):
            coords = BlockCoords(height, timestamp, index)
            try:
                token_id = self.contract_exec(tx, coords)
            except RNftError as exc:
                receipts.append(Receipt(tx.hash, index, False, exc.code, str(exc)))
            else:
                receipts.append(Receipt(tx.hash, index, True, token_id=token_id))
        block = Block(
            height, timestamp, self.head.hash, txs, self.state_root(), tuple(receipts)
        )
        self.blocks.append(block)
        return block

    def state_root(self) -> bytes:
        h = hashlib.sha256(b"rnft/state/v1")
        h.update(canonical.encode(self.graph.next_token_id))
        records = self.graph.encoded_records()
        h.update(canonical.encode(len(records)))
        h.update(b"".join(records))
        h.update(canonical.encode({a.hex(): n for a, n in self.accounts.items()}))
        return h.digest()

    def verify_chain(self) -> None:
        """Check contiguous heights, the parent-hash chain, the clock, and the head root."""
        for prev, block in zip(self.blocks, self.blocks[1:]):
            if block.height != prev.height + 1:
                raise AssertionError(f"height gap at {block.height}")
            if block.parent_hash != prev.hash:
                raise AssertionError(f"parent hash mismatch at {block.height}")
        for block in self.blocks:
            if block.timestamp != self.timestamp_at(block.height):
                raise AssertionError(f"clock drift at {block.height}")
        if self.blocks[0].height != 0 or self.blocks[0].parent_hash != ZERO_HASH:
            raise AssertionError("malformed genesis block")
        if self.head.state_root != self.state_root():
            raise AssertionError("head stateRoot does not match current state")

    def state_roots(self) -> list[bytes]:
        return [b.state_root for b in self.blocks]

    # -- persistence --------------------------------------------------------

    def tx_log(self) -> list[dict]:
        """One entry per sealed transaction, with its receipt."""
        rows = []
        for block in self.blocks:
            for tx, receipt in zip(block.transactions, block.receipts):
                row = {"height": block.height, **tx.to_dict(), **receipt.to_dict()}
                rows.append(row)
        return rows

    def tx_log_jsonl(self) -> str:
        return "".join(json.dumps(row, sort_keys=True) + "\n" for row in self.tx_log())

    def to_dict(self) -> dict:
        """Replayable description: genesis, per-block transactions and roots, mempool."""
        return {
            "genesis": self.genesis.to_dict(),
            "scheme": self.scheme.name,
            "blocks": [
                {
                    "height": b.height,
                    "stateRoot": b.state_root.hex(),
                    "transactions": [tx.to_dict() for tx in b.transactions],
                }
                for b in self.blocks[1:]
            ],
            "mempool": [tx.to_dict() for tx in self.mempool],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChainState":
        """Rebuild by replaying every block; raises if a recorded root disagrees."""
        scheme = {"keyed-digest": KeyedDigestScheme, "ed25519": Ed25519Scheme}[
            data.get("scheme", "keyed-digest")
        ]()
        state = cls(GenesisConfig.from_dict(data["genesis"]), scheme)
        for entry in data["blocks"]:
            for item in entry["transactions"]:
                state.submit_tx(Transaction.from_dict(item))
            block = state.seal_block()
            if block.state_root.hex() != entry["stateRoot"]:
                raise AssertionError(f"replay diverged at height {block.height}")
        for item in data["mempool"]:
            state.submit_tx(Transaction.from_dict(item))
        return state
