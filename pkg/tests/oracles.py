"""Independent checks used across the suite.

Nothing here calls the registry's own traversal code; everything is rebuilt
from the raw referring/referred lists.
"""
import random
from fractions import Fraction

from rnft.chain import ChainState, GenesisConfig, Mint, SetNode, Transaction, Transfer, key_gen, tran_gen
from rnft.errors import RNftError


def has_cycle(adjacency: dict) -> bool:
    """Iterative three-colour DFS; a node is GREY exactly while it sits on the
    current path, so meeting a GREY node means a back edge."""
    WHITE, GREY, BLACK = 0, 1, 2
    colour = dict.fromkeys(adjacency, WHITE)
    for root in adjacency:
        if colour[root]:
            continue
        colour[root] = GREY
        stack = [(root, iter(adjacency[root]))]
        while stack:
            node, children = stack[-1]
            for nxt in children:
                c = colour[nxt]
                if c == GREY:
                    return True
                if c == WHITE:
                    colour[nxt] = GREY
                    stack.append((nxt, iter(adjacency[nxt])))
                    break
            else:
                colour[node] = BLACK
                stack.pop()
    return False


def referring_adjacency(graph) -> dict:
    return {tid: rec.relationship.referring for tid, rec in graph.records.items()}


def symmetric(graph) -> bool:
    """j in referring(i) <=> i in referred(j), over every pair."""
    rels = [(i, rec.relationship) for i, rec in graph.records.items()]
    out_edges = {(i, j) for i, rel in rels for j in rel.referring}
    in_edges = {(r, i) for i, rel in rels for r in rel.referred}
    return out_edges == in_edges


def temporally_ordered(graph) -> bool:
    rels = {tid: rec.relationship for tid, rec in graph.records.items()}
    key = {tid: (rel.created_height, rel.intra_block_index) for tid, rel in rels.items()}
    return all(
        key[ref] < key[tid] for tid, rel in rels.items() for ref in rel.referring
    )


def registry_sound(graph) -> bool:
    return (
        symmetric(graph)
        and temporally_ordered(graph)
        and not has_cycle(referring_adjacency(graph))
    )


def brute_closure(graph, token, attr):
    """Transitive closure by repeated relaxation until nothing changes."""
    reach = set(getattr(graph.records[token].relationship, attr))
    while True:
        grown = set(reach)
        for t in reach:
            grown.update(getattr(graph.records[t].relationship, attr))
        if grown == reach:
            return reach - {token}
        reach = grown


def expanded_outcome(p0, lam, d, r) -> Fraction:
    """Installment-by-installment outcome in exact arithmetic."""
    p0, lam, r = Fraction(p0), Fraction(lam), Fraction(r)
    if d == 0:
        return p0
    total = lam * p0
    for j in range(1, d + 1):
        total += (1 + r) ** j * p0 * (1 - lam) / d
    return total


def largest_remainder_oracle(total: int, weights) -> list:
    """Hamilton apportionment the slow way: one leftover unit at a time to the
    largest outstanding remainder (lowest index on ties)."""
    fr = [Fraction(w) for w in weights]
    quotas = [f * total / sum(fr) for f in fr]
    shares = [q.numerator // q.denominator for q in quotas]
    for _ in range(total - sum(shares)):
        best = max(range(len(fr)), key=lambda i: (quotas[i] - shares[i], -i))
        shares[best] += 1
    return shares


class RandomLedgerDriver:
    """Submits a random mix of valid and deliberately invalid operations.

    ``step()`` performs one operation and seals it into its own block. It
    returns ``(kind, accepted)``, where ``accepted`` is False for admission
    rejections and for failed receipts.
    """

    def __init__(self, seed: int, users: int = 5, invalid_rate: float = 0.3):
        self.rng = random.Random(seed)
        self.keys = [key_gen(f"fuzz-user-{i}") for i in range(users)]
        self.chain = ChainState(GenesisConfig(accounts=[k.address for k in self.keys]))
        self.invalid_rate = invalid_rate

    def _nonce(self, key):
        return self.chain.expected_nonce(key.address)

    def _owned(self, key):
        return [t for t, r in self.chain.graph.records.items() if r.owner == key.address]

    def _weights(self, n, overflow=False):
        if overflow:
            return (1.5,) if n == 1 else (0.6,) * n
        raw = [self.rng.random() + 1e-3 for _ in range(n)]
        scale = self.rng.random() / sum(raw) if raw else 0.0
        return tuple(x * scale for x in raw)

    def _valid_payload(self, key):
        rng, graph = self.rng, self.chain.graph
        ids = sorted(graph.records)
        roll = rng.random()
        if roll < 0.55 or not ids:
            refs = tuple(rng.sample(ids, min(len(ids), rng.randint(0, 3))))
            labels = tuple(rng.sample(["artwork", "song", "movie", "subtitle"], rng.randint(0, 2)))
            return "mint", Mint(refs, self._weights(len(refs)), labels)
        owned = self._owned(key)
        blank = [t for t in owned if not graph.records[t].relationship.referring and t > ids[0]]
        if roll < 0.75 and blank:
            tok = rng.choice(blank)
            older = [t for t in ids if graph.records[t].relationship.order_key < graph.records[tok].relationship.order_key]
            refs = tuple(rng.sample(older, min(len(older), rng.randint(1, 3))))
            return "setNode", SetNode(tok, refs, self._weights(len(refs)))
        if owned:
            to = rng.choice(self.keys).address
            return "transfer", Transfer(to, rng.choice(owned))
        return "mint", Mint((), (), ())

    def _invalid_payload(self, key):
        rng, graph = self.rng, self.chain.graph
        ids = sorted(graph.records)
        nxt = graph.next_token_id
        kinds = ["unknown"]
        if ids:
            kinds += ["weights", "duplicate", "shape", "notowner"]
            referenced = [t for t in ids if graph.records[t].relationship.referring]
            if referenced:
                kinds.append("already")
            if len(ids) >= 2:
                kinds.append("temporal")
        kind = rng.choice(kinds)
        if kind == "unknown":
            return kind, Mint((nxt + rng.randint(0, 5),), (0.1,), ())
        if kind == "weights":
            refs = tuple(ids[:2])
            return kind, Mint(refs, self._weights(len(refs), overflow=True), ())
        if kind == "duplicate":
            t = rng.choice(ids)
            return kind, Mint((t, t), (0.1, 0.1), ())
        if kind == "shape":
            return kind, Mint((rng.choice(ids),), (0.1, 0.1), ())
        if kind == "notowner":
            foreign = [t for t in ids if graph.records[t].owner != key.address]
            if not foreign:
                return "unknown", Mint((nxt + 1,), (0.0,), ())
            return kind, Transfer(key.address, rng.choice(foreign))
        if kind == "already":
            t = rng.choice(referenced)
            return kind, SetNode(t, (graph.records[t].relationship.referring[0],), (0.0,))
        # setNode on an older token pointing at a newer one
        old, new = sorted(rng.sample(ids, 2))
        return kind, SetNode(old, (new,), (0.0,))

    def step(self):
        rng = self.rng
        key = rng.choice(self.keys)
        chain = self.chain
        if rng.random() < self.invalid_rate:
            kind, payload = self._invalid_payload(key)
            if kind in ("notowner",) or rng.random() < 0.8:
                tx = tran_gen(key, payload, self._nonce(key))
            elif rng.random() < 0.5:
                kind = "badsig"
                good = tran_gen(key, payload, self._nonce(key))
                sig = bytearray(good.signature)
                sig[rng.randrange(len(sig))] ^= 0xFF
                tx = Transaction(good.sender, good.nonce, good.payload, good.metadata, good.public_key, bytes(sig))
            else:
                kind = "badnonce"
                tx = tran_gen(key, payload, self._nonce(key) + rng.randint(1, 3))
        else:
            kind, payload = self._valid_payload(key)
            tx = tran_gen(key, payload, self._nonce(key))
        try:
            chain.submit_tx(tx)
        except RNftError:
            chain.seal_block()
            return kind, False
        block = chain.seal_block()
        return kind, block.receipts[0].ok
