"""
Signed transactions on a toy ledger
===================================

The registry lives inside a deterministic state machine. Transactions are
signed and nonce-ordered, blocks are sealed on a fixed clock, and every block
commits to a hash of the full registry state.
"""

# %%
from rnft.chain import ChainState, GenesisConfig, Mint, SetNode, Transfer, key_gen, tran_gen

alice, bob = key_gen("alice"), key_gen("bob")
chain = ChainState(GenesisConfig(genesis_time=1_700_000_000, block_interval=12))
print("genesis root", chain.state_root().hex())

# %%
# Two mints in one block. Intra-block position breaks the tie in time
# order, so bob's token may cite alice's only from a later block.
chain.submit_tx(tran_gen(alice, Mint((), (), ("artwork",)), chain.expected_nonce(alice.address)))
chain.submit_tx(tran_gen(bob, Mint((), (), ()), chain.expected_nonce(bob.address)))
b1 = chain.seal_block()
print(b1.height, b1.timestamp, [r.token_id for r in b1.receipts])

# %%
# Alice tries to point her token at bob's. Bob's sits later in the same
# block, so the contract rejects it. The receipt records the failure and the
# state root does not move.
chain.submit_tx(tran_gen(alice, SetNode(0, (1,), (0.3,)), chain.expected_nonce(alice.address)))
b2 = chain.seal_block()
print(b2.receipts[0].ok, b2.receipts[0].error)
print("root unchanged:", b2.state_root == b1.state_root)

# %%
# The other direction is fine: bob's blank token cites alice's, and alice
# then sells her token to bob.
chain.submit_tx(tran_gen(bob, SetNode(1, (0,), (0.3,)), chain.expected_nonce(bob.address)))
chain.submit_tx(tran_gen(alice, Transfer(bob.address, 0), chain.expected_nonce(alice.address)))
b3 = chain.seal_block()
print([r.ok for r in b3.receipts], chain.graph.referred_of(0))
print("owner of 0 is bob:", chain.graph.owner_of(0) == bob.address)

# %%
# Tampered signatures never reach the mempool.
from dataclasses import replace

from rnft.errors import InvalidSignature

tx = tran_gen(alice, Mint((), (), ()), chain.expected_nonce(alice.address))
forged = replace(tx, signature=bytes(len(tx.signature)))
try:
    chain.submit_tx(forged)
except InvalidSignature as exc:
    print("refused:", exc.code)

# %%
# Replaying the transaction log from genesis reproduces every root.
clone = ChainState.from_dict(chain.to_dict())
print(clone.state_roots() == chain.state_roots())
print(chain.tx_log_jsonl().splitlines()[0])
