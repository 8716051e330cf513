"""Strategy-parameterized seller / consumer / provider agents.

``run_scenario`` drives one full trade under a strategy profile and returns
a transcript: contract events, balance deltas, appeal verdicts, and a
data-recovery flag.  Cheating variants:

* seller ``b``/``d`` substitute garbage shards after passing exposure (the
  exposure step kills pre-exposure fakery outright, which would make those
  strategies unreachable);
* seller ``c``/``d`` post a key unrelated to the one the shards were
  encrypted under; ``d`` encrypts its garbage under the key it posts, so
  the substitution is only detectable through the plaintext commitment;
* provider ``k``/``l`` re-encrypt garbage instead of the seller's shards,
  ``j``/``l`` post a wrong re-encryption key;
* consumer ``f``/``g``/``h`` offer less than the listed price + fees, so
  the order is never funded.

The honest consumer appeals on the first verification failure, routing the
appeal by which posted key opens the delivered layer: an outer layer that
will not open (or that opens to bytes outside the seller's commitment)
implicates the provider; an inner layer that opens to bad plaintext, or
that is genuine but will not open, implicates the seller.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

from . import crypto, metrics
from .contracts import (
    AppealEvidence,
    ContractConfig,
    ContractSystem,
    SELLER_PAYEE,
    provider_payee,
)
from .errors import DecryptError, InsufficientTokens, InvalidInput
from .ledger import Ledger, address_for
from .merkle import mproof, mtree, mvrfy
from .sharding import provider_encrypt, reassemble, shard_encrypt

SELLER_STRATEGIES = "abcd"
CONSUMER_STRATEGIES = "efgh"
PROVIDER_STRATEGIES = "ijkl"


@dataclass(frozen=True)
class StrategyProfile:
    seller: str
    consumer: str
    provider: str

    def __post_init__(self):
        if (
            self.seller not in SELLER_STRATEGIES
            or self.consumer not in CONSUMER_STRATEGIES
            or self.provider not in PROVIDER_STRATEGIES
        ):
            raise InvalidInput(f"bad profile {self.seller}{self.consumer}{self.provider}")

    @classmethod
    def parse(cls, text: str) -> "StrategyProfile":
        if len(text) != 3:
            raise InvalidInput(f"profile must be three letters, got {text!r}")
        return cls(text[0], text[1], text[2])

    def __str__(self) -> str:
        return self.seller + self.consumer + self.provider


def all_profiles() -> list[StrategyProfile]:
    return [
        StrategyProfile(sl, cm, sp)
        for sl in SELLER_STRATEGIES
        for cm in CONSUMER_STRATEGIES
        for sp in PROVIDER_STRATEGIES
    ]


@dataclass
class RunTranscript:
    profile: str
    x: float
    y: float
    n: int
    price: int
    unit_price: int
    seed: int
    funded: bool = False
    recovery: bool = False
    verdicts: dict[str, str] = field(default_factory=dict)
    appeals: list[dict] = field(default_factory=list)
    deltas: dict[str, int] = field(default_factory=dict)
    balances: dict[str, int] = field(default_factory=dict)
    events: list[dict] = field(default_factory=list)
    phase_ops: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    def to_jsonl(self) -> str:
        """Header line with run facts, then one line per contract event."""
        head = {k: v for k, v in self.__dict__.items() if k != "events"}
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps(e, sort_keys=True) for e in self.events]
        return "\n".join(lines)


def _validate_params(x: float, y: float) -> None:
    if not (0 <= x < 20 and 0 <= y < 4 and x + y < 24):
        raise InvalidInput(f"need 0<=x<20, 0<=y<4, x+y<24; got x={x} y={y}")


def run_scenario(
    profile: StrategyProfile | str,
    x: float = 10.0,
    y: float = 2.0,
    n: int = 8,
    price: int = 40,
    unit_price: int = 1,
    seed: int = 0,
    slot: int = 1 << 20,
    strict_forfeit: bool = True,
) -> RunTranscript:
    if isinstance(profile, str):
        profile = StrategyProfile.parse(profile)
    _validate_params(x, y)
    rng = random.Random(("scenario", str(profile), seed).__repr__())
    seller = address_for("actor:seller")
    consumer = address_for("actor:consumer")
    provider = address_for("actor:provider")
    endow = 100 * price
    ledger = Ledger({seller: endow, consumer: endow, provider: endow})
    system = ContractSystem(ledger, ContractConfig(strict_forfeit=strict_forfeit))
    tr = RunTranscript(
        profile=str(profile), x=x, y=y, n=n, price=price, unit_price=unit_price, seed=seed
    )
    data = rng.randbytes(n * slot)
    master = hashlib.sha256(b"master" + str(seed).encode()).digest()
    wrong_master = hashlib.sha256(b"not-the-master" + str(seed).encode()).digest()

    with metrics.collect() as col:
        with col.phase("upload"):
            shards = shard_encrypt(master, data, slot)
            assert shards.n == n
            data_id = system.ssmc_register_seller(
                seller, "tcp://seller", "weather sensor dump", len(data), n,
                shards.root_plain, shards.root_enc, price, unit_price,
                deposit=system.min_deposit(price),
            )
            ledger.mine_block()  # seals the registration
            ledger.mine_block()  # supplies the exposure randomness
            pieces = [
                (i, shards.plain_shards[i], mproof(shards.tree_plain, i),
                 mproof(shards.tree_enc, i), shards.enc_shards[i])
                for i in system.expected_exposure_indices(data_id)
            ]
            system.ssmc_expose(data_id, pieces)
            system.ssmc_register_provider(provider, "tcp://provider", data_id)
            system.ssmc_confirm_provider(seller, provider, data_id)
            ledger.mine_block()

        required = price + n * unit_price
        x_tokens = round(x * price / 20)
        y_tokens = round(y * n * unit_price / 4)
        offer = {
            "e": required,
            "f": x_tokens + n * unit_price,
            "g": price + y_tokens,
            "h": x_tokens + y_tokens,
        }[profile.consumer]
        try:
            order_id = system.scmc_place_order(consumer, data_id, offer)
        except InsufficientTokens:
            # order discarded before funding; the seller withdraws the listing
            # so the deposit round-trips
            ledger.mine_block()
            system.ssmc_delist(seller, data_id)
            ledger.mine_block()
            return _finalize(tr, ledger, col, seller, consumer, provider, endow)
        tr.funded = True

        with col.phase("download"):
            system.scmc_select(order_id, [(provider, list(range(n)))])
            # the seller hands the provider one shard set (honest or substituted)
            if profile.seller in "bd":
                basis = master if profile.seller == "b" else wrong_master
                keys = crypto.derive_keys(basis, n)
                inner_served = tuple(
                    crypto.sym_encrypt(k, rng.randbytes(slot)) for k in keys
                )
            else:
                inner_served = shards.enc_shards
            proofs_ed = [mproof(shards.tree_enc, i) for i in range(n)]
            # the provider wraps what it actually serves and commits that root
            if profile.provider in "kl":
                to_wrap = [rng.randbytes(len(s)) for s in inner_served]
            else:
                to_wrap = list(inner_served)
            pkg = provider_encrypt(to_wrap, hashlib.sha256(b"sp" + str(seed).encode()).digest())
            system.scmc_record_provider_root(order_id, provider, pkg.root)
            escrow = system.cpc_open(order_id)
            kp = crypto.pk_keygen(b"consumer" + str((str(profile), seed)).encode())
            system.cpc_post_pubkey(order_id, kp.public)
            sp_key_posted = (
                pkg.key
                if profile.provider in "ik"
                else hashlib.sha256(b"not-the-sp-key" + str(seed).encode()).digest()
            )
            system.cpc_post_key(
                order_id, provider_payee(provider), crypto.pk_encrypt(kp.public, sp_key_posted)
            )
            ledger.mine_block()
            # consumer: unwrap the provider key, peel the outer layer
            posted_sp = crypto.pk_decrypt(
                kp.private, escrow.posted_keys[provider_payee(provider)]
            )
            proofs_eed = [mproof(pkg.tree_eed, i) for i in range(n)]
            for i in range(n):
                assert mvrfy(i, pkg.root, pkg.eed_shards[i], proofs_eed[i])
            inner_got: list[bytes | None] = []
            outer_fail = None
            for i in range(n):
                try:
                    inner_got.append(crypto.sym_decrypt(posted_sp, pkg.eed_shards[i]))
                except DecryptError:
                    outer_fail = i
                    break

        appeal_payee = appeal_ev = None
        with col.phase("decrypt"):
            sl_key_posted = wrong_master if profile.seller in "cd" else master
            system.cpc_post_key(
                order_id, SELLER_PAYEE, crypto.pk_encrypt(kp.public, sl_key_posted)
            )
            ledger.mine_block()
            posted_master = crypto.pk_decrypt(kp.private, escrow.posted_keys[SELLER_PAYEE])
            if outer_fail is not None:
                # outer layer will not open: the provider's posted key is bad
                appeal_payee = provider_payee(provider)
                appeal_ev = AppealEvidence(
                    outer_fail, pkg.eed_shards[outer_fail],
                    auth_proof=proofs_eed[outer_fail],
                    inner_proof=proofs_ed[outer_fail],
                )
            else:
                shard_keys = crypto.derive_keys(posted_master, n)
                plain_got: list[bytes] = []
                bad = None
                for i, enc_i in enumerate(inner_got):
                    ed_ok = mvrfy(i, shards.root_enc, enc_i, proofs_ed[i])
                    try:
                        p = crypto.sym_decrypt(shard_keys[i], enc_i)
                    except DecryptError:
                        # genuine seller layer the posted key cannot open points
                        # at the seller; anything else was swapped in transit
                        payee = SELLER_PAYEE if ed_ok else provider_payee(provider)
                        if payee == SELLER_PAYEE:
                            ev = AppealEvidence(
                                i, enc_i, auth_proof=proofs_ed[i], inner_proof=proofs_ed[i]
                            )
                        else:
                            ev = AppealEvidence(
                                i, pkg.eed_shards[i],
                                auth_proof=proofs_eed[i], inner_proof=proofs_ed[i],
                            )
                        bad, appeal_payee, appeal_ev = i, payee, ev
                        break
                    plain_got.append(p)
                if bad is None:
                    check = mtree(plain_got)
                    if check.root == shards.root_plain and reassemble(plain_got) == data:
                        tr.recovery = True
                    else:
                        # opened under the seller's posted key but off-commitment
                        i = next(
                            j for j in range(n)
                            if check.levels[0][j] != shards.tree_plain.levels[0][j]
                        )
                        appeal_payee = SELLER_PAYEE
                        appeal_ev = AppealEvidence(
                            i, inner_got[i], auth_proof=proofs_ed[i],
                            inner_proof=mproof(check, i),
                        )

        if appeal_payee is not None:
            with col.phase("appeal"):
                verdict = system.cpc_appeal(order_id, appeal_payee, kp.private, appeal_ev)
            tr.appeals.append(
                {"payee": appeal_payee, "index": appeal_ev.index, "verdict": verdict}
            )
        for _ in range(system.config.appeal_window + 1):
            ledger.mine_block()
        system.cpc_settle(order_id)
        ledger.mine_block()
        tr.verdicts = dict(system.escrows[order_id].verdicts)
    return _finalize(tr, ledger, col, seller, consumer, provider, endow)


def _finalize(tr, ledger, col, seller, consumer, provider, endow) -> RunTranscript:
    tr.balances = {
        "seller": ledger.balance(seller),
        "consumer": ledger.balance(consumer),
        "provider": ledger.balance(provider),
    }
    tr.deltas = {k: v - endow for k, v in tr.balances.items()}
    tr.events = [dict(e) for e in ledger.events]
    tr.phase_ops = {label: c.as_dict() for label, c in col.phases.items()}
    return tr


def cheat_catalog() -> list[tuple[str, dict]]:
    """The qualitative outcome classes used as the scenario test matrix.

    Each entry: (profile, expectations). ``cheater`` names the payee whose
    net token gain must be <= 0; ``verdict`` the appeal outcome against it.
    """
    return [
        ("aei", {"desc": "honest trade", "funded": True, "recovery": True,
                 "appeals": 0, "cheater": None}),
        ("bei", {"desc": "seller serves garbage, posts the real key",
                 "funded": True, "recovery": False, "appeals": 1,
                 "cheater": "seller", "verdict": "Upheld"}),
        ("cei", {"desc": "seller serves real data, posts a wrong key",
                 "funded": True, "recovery": False, "appeals": 1,
                 "cheater": "seller", "verdict": "Upheld"}),
        ("dei", {"desc": "seller serves garbage under a wrong posted key",
                 "funded": True, "recovery": False, "appeals": 1,
                 "cheater": "seller", "verdict": "Upheld"}),
        ("aej", {"desc": "provider serves real data, posts a wrong key",
                 "funded": True, "recovery": False, "appeals": 1,
                 "cheater": "provider", "verdict": "Upheld"}),
        ("aek", {"desc": "provider serves garbage, posts the real key",
                 "funded": True, "recovery": False, "appeals": 1,
                 "cheater": "provider", "verdict": "Upheld"}),
        ("ael", {"desc": "provider serves garbage under a wrong posted key",
                 "funded": True, "recovery": False, "appeals": 1,
                 "cheater": "provider", "verdict": "Upheld"}),
        ("afi", {"desc": "consumer shorts the seller", "funded": False,
                 "recovery": False, "appeals": 0, "cheater": "consumer"}),
        ("agi", {"desc": "consumer shorts the provider", "funded": False,
                 "recovery": False, "appeals": 0, "cheater": "consumer"}),
        ("ahi", {"desc": "consumer shorts both", "funded": False,
                 "recovery": False, "appeals": 0, "cheater": "consumer"}),
    ]
