"""Sequential trading game over the 64 strategy profiles.

Two payoff modes:

* ``raw_payoff`` — profit rules under the bookkeeping where every payee
  collects his tranche regardless of honesty; reproduced cell-for-cell by
  the transcription fixture ``RAW_TABLE`` (``verify_table`` diffs the two).
* ``enforced_payoff`` — the same profiles after contract enforcement:
  a cheating payee's tranche is refunded to an appealing consumer, an
  under-funded order never pays anyone and the consumer forfeits what he
  sent.  ``token_flows`` isolates the monetary part of the enforced values
  so it can be compared 1:1 against simulated balance deltas.

``nash_equilibria`` and ``backward_induction`` operate on either mode.
"""
from __future__ import annotations

from typing import Callable, NamedTuple

from .actors import (
    CONSUMER_STRATEGIES,
    PROVIDER_STRATEGIES,
    SELLER_STRATEGIES,
    StrategyProfile,
    all_profiles,
    run_scenario,
)
from .errors import InvalidInput, Mismatch

PRICE = 20  # units paid to the seller
FEE = 4  # units paid to the provider(s)
UTILITY = 20  # value of recovered data to the consumer

SELLER_COST = {"a": -11, "b": -1, "c": -10, "d": 0}
PROVIDER_COST = {"i": -2, "j": -1, "k": -1, "l": 0}


class PayoffVector(NamedTuple):
    u_sl: float
    u_cm: float
    u_sp: float


PayoffFn = Callable[[StrategyProfile, float, float], PayoffVector]


def consumer_payment(cm: str, x: float, y: float) -> float:
    """Amount the consumer sends: full price+fee under e, partial otherwise."""
    return {"e": PRICE + FEE, "f": x + FEE, "g": y + PRICE, "h": x + y}[cm]


def _check_params(x: float, y: float) -> None:
    if not (0 <= x < 20 and 0 <= y < 4):
        raise InvalidInput(f"need 0<=x<20 and 0<=y<4, got x={x} y={y}")


def raw_payoff(profile: StrategyProfile, x: float, y: float) -> PayoffVector:
    _check_params(x, y)
    sl, cm, sp = profile.seller, profile.consumer, profile.provider
    u_sl = SELLER_COST[sl] + (PRICE if cm in "eg" else x)
    u_sp = PROVIDER_COST[sp] + (FEE if cm in "ef" else y)
    if sl == "a" and sp == "i":
        u_cm = -consumer_payment(cm, x, y) + (UTILITY if cm != "h" else 0)
    else:
        u_cm = -(PRICE + FEE)
    return PayoffVector(u_sl, u_cm, u_sp)


def enforced_payoff(profile: StrategyProfile, x: float, y: float) -> PayoffVector:
    _check_params(x, y)
    sl, cm, sp = profile.seller, profile.consumer, profile.provider
    if cm != "e":
        # the order is never funded: nobody produces or earns, the
        # consumer forfeits what he sent
        return PayoffVector(0, -consumer_payment(cm, x, y), 0)
    flow_sl, flow_cm, flow_sp = token_flows(profile, x, y)
    u_sl = SELLER_COST[sl] + flow_sl
    u_sp = PROVIDER_COST[sp] + flow_sp
    u_cm = flow_cm + (UTILITY if (sl == "a" and sp == "i") else 0)
    return PayoffVector(u_sl, u_cm, u_sp)


def token_flows(profile: StrategyProfile, x: float, y: float) -> PayoffVector:
    """Net token movement per party under contract enforcement, in units.

    Excludes production costs and data utility: exactly the quantities a
    ledger balance delta can show.  A dishonest seller keeps his tranche
    when the provider layer is broken (the consumer never reaches the
    seller's layer to gather evidence).
    """
    _check_params(x, y)
    sl, cm, sp = profile.seller, profile.consumer, profile.provider
    if cm != "e":
        return PayoffVector(0, -consumer_payment(cm, x, y), 0)
    flow_sl = PRICE if (sl == "a" or sp != "i") else 0
    flow_sp = FEE if sp == "i" else 0
    return PayoffVector(flow_sl, -(flow_sl + flow_sp), flow_sp)


# Literal transcription of the published 64-cell profit table, kept separate
# from the rule-based raw_payoff so the two can be diffed (verify_table).
# A handful of cells contain stray double commas in the source; they are
# read as single values.
RAW_TABLE: dict[str, Callable[[float, float], tuple]] = {
    "aei": lambda x, y: (9, -4, 2),
    "bei": lambda x, y: (19, -24, 2),
    "cei": lambda x, y: (10, -24, 2),
    "dei": lambda x, y: (20, -24, 2),
    "aej": lambda x, y: (9, -24, 3),
    "bej": lambda x, y: (19, -24, 3),
    "cej": lambda x, y: (10, -24, 3),
    "dej": lambda x, y: (20, -24, 3),
    "aek": lambda x, y: (9, -24, 3),
    "bek": lambda x, y: (19, -24, 3),
    "cek": lambda x, y: (10, -24, 3),
    "dek": lambda x, y: (20, -24, 3),
    "ael": lambda x, y: (9, -24, 4),
    "bel": lambda x, y: (19, -24, 4),
    "cel": lambda x, y: (10, -24, 4),
    "del": lambda x, y: (20, -24, 4),
    "afi": lambda x, y: (x - 11, 16 - x, 2),
    "bfi": lambda x, y: (x - 1, -24, 2),
    "cfi": lambda x, y: (x - 10, -24, 2),
    "dfi": lambda x, y: (x, -24, 2),
    "afj": lambda x, y: (x - 11, -24, 3),
    "bfj": lambda x, y: (x - 1, -24, 3),
    "cfj": lambda x, y: (x - 10, -24, 3),
    "dfj": lambda x, y: (x, -24, 3),
    "afk": lambda x, y: (x - 11, -24, 3),
    "bfk": lambda x, y: (x - 1, -24, 3),
    "cfk": lambda x, y: (x - 10, -24, 3),
    "dfk": lambda x, y: (x, -24, 3),
    "afl": lambda x, y: (x - 11, -24, 4),
    "bfl": lambda x, y: (x - 1, -24, 4),
    "cfl": lambda x, y: (x - 10, -24, 4),
    "dfl": lambda x, y: (x, -24, 4),
    "agi": lambda x, y: (9, -y, y - 2),
    "bgi": lambda x, y: (19, -24, y - 2),
    "cgi": lambda x, y: (10, -24, y - 2),
    "dgi": lambda x, y: (20, -24, y - 2),
    "agj": lambda x, y: (9, -24, y - 1),
    "bgj": lambda x, y: (19, -24, y - 1),
    "cgj": lambda x, y: (10, -24, y - 1),
    "dgj": lambda x, y: (20, -24, y - 1),
    "agk": lambda x, y: (9, -24, y - 1),
    "bgk": lambda x, y: (19, -24, y - 1),
    "cgk": lambda x, y: (10, -24, y - 1),
    "dgk": lambda x, y: (20, -24, y - 1),
    "agl": lambda x, y: (9, -24, y),
    "bgl": lambda x, y: (19, -24, y),
    "cgl": lambda x, y: (10, -24, y),
    "dgl": lambda x, y: (20, -24, y),
    "ahi": lambda x, y: (x - 11, -x - y, y - 2),
    "bhi": lambda x, y: (x - 1, -24, y - 2),
    "chi": lambda x, y: (x - 10, -24, y - 2),
    "dhi": lambda x, y: (x, -24, y - 2),
    "ahj": lambda x, y: (x - 11, -24, y - 1),
    "bhj": lambda x, y: (x - 1, -24, y - 1),
    "chj": lambda x, y: (x - 10, -24, y - 1),
    "dhj": lambda x, y: (x, -24, y - 1),
    "ahk": lambda x, y: (x - 11, -24, y - 1),
    "bhk": lambda x, y: (x - 1, -24, y - 1),
    "chk": lambda x, y: (x - 10, -24, y - 1),
    "dhk": lambda x, y: (x, -24, y - 1),
    "ahl": lambda x, y: (x - 11, -24, y),
    "bhl": lambda x, y: (x - 1, -24, y),
    "chl": lambda x, y: (x - 10, -24, y),
    "dhl": lambda x, y: (x, -24, y),
}


def verify_table(x: float, y: float) -> list[dict]:
    """Diff raw_payoff against the transcription; empty list = full agreement."""
    mismatches = []
    for profile in all_profiles():
        got = tuple(raw_payoff(profile, x, y))
        want = tuple(RAW_TABLE[str(profile)](x, y))
        if got != want:
            mismatches.append({"profile": str(profile), "expected": want, "got": got})
    return mismatches


def system_total(payoff_fn: PayoffFn, profile: StrategyProfile, x: float, y: float) -> float:
    return sum(payoff_fn(profile, x, y))


def nash_equilibria(payoff_fn: PayoffFn, x: float, y: float) -> set[str]:
    """Profiles where no player's unilateral deviation strictly improves him."""
    table = {str(p): payoff_fn(p, x, y) for p in all_profiles()}
    out = set()
    for p in all_profiles():
        base = table[str(p)]
        stable = all(
            table[str(StrategyProfile(alt, p.consumer, p.provider))].u_sl <= base.u_sl
            for alt in SELLER_STRATEGIES
        ) and all(
            table[str(StrategyProfile(p.seller, alt, p.provider))].u_cm <= base.u_cm
            for alt in CONSUMER_STRATEGIES
        ) and all(
            table[str(StrategyProfile(p.seller, p.consumer, alt))].u_sp <= base.u_sp
            for alt in PROVIDER_STRATEGIES
        )
        if stable:
            out.add(str(p))
    return out


def backward_induction(payoff_fn: PayoffFn, x: float, y: float) -> StrategyProfile:
    """Solve the SL -> CM -> SP sequential game.

    Ties break toward the earlier-listed strategy (a < b < c < d, etc.), so
    the result is well-defined even where honest play only weakly dominates.
    """

    def best(options):
        # options: iterable of (strategy_letter, own_payoff), in listed order
        choice, top = None, None
        for letter, value in options:
            if top is None or value > top:
                choice, top = letter, value
        return choice

    sp_policy = {}
    for sl in SELLER_STRATEGIES:
        for cm in CONSUMER_STRATEGIES:
            sp_policy[sl, cm] = best(
                (sp, payoff_fn(StrategyProfile(sl, cm, sp), x, y).u_sp)
                for sp in PROVIDER_STRATEGIES
            )
    cm_policy = {}
    for sl in SELLER_STRATEGIES:
        cm_policy[sl] = best(
            (cm, payoff_fn(StrategyProfile(sl, cm, sp_policy[sl, cm]), x, y).u_cm)
            for cm in CONSUMER_STRATEGIES
        )
    sl_choice = best(
        (
            sl,
            payoff_fn(
                StrategyProfile(sl, cm_policy[sl], sp_policy[sl, cm_policy[sl]]), x, y
            ).u_sl,
        )
        for sl in SELLER_STRATEGIES
    )
    cm_choice = cm_policy[sl_choice]
    return StrategyProfile(sl_choice, cm_choice, sp_policy[sl_choice, cm_choice])


def crosscheck_simulation(
    profile: StrategyProfile | str,
    x: float = 10.0,
    y: float = 2.0,
    n: int = 8,
    price: int = 40,
    unit_price: int = 1,
    seed: int = 0,
    slot: int = 4096,
) -> bool:
    """Run the full pipeline and compare balance deltas with token_flows.

    ``price`` must be a multiple of 20 and ``n * unit_price`` must scale the
    4-unit fee by the same factor, so unit amounts map to whole tokens.
    """
    if isinstance(profile, str):
        profile = StrategyProfile.parse(profile)
    if price % PRICE:
        raise InvalidInput("price must be a multiple of 20 units")
    scale = price // PRICE
    if n * unit_price != FEE * scale:
        raise InvalidInput("n * unit_price must equal 4 units at the same scale")
    tr = run_scenario(
        profile, x=x, y=y, n=n, price=price, unit_price=unit_price,
        seed=seed, slot=slot, strict_forfeit=True,
    )
    want = token_flows(profile, x, y)
    got = PayoffVector(
        tr.deltas["seller"] / scale,
        tr.deltas["consumer"] / scale,
        tr.deltas["provider"] / scale,
    )
    if tuple(got) != tuple(want):
        raise Mismatch(
            f"{profile}: model {tuple(want)} != simulated {tuple(got)} "
            f"(token deltas {tr.deltas}, scale {scale})"
        )
    return True
