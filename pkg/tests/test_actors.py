"""Scenario-level behavior: who recovers, who gets paid, who gets caught."""
import pytest

from bdts.actors import StrategyProfile, all_profiles, cheat_catalog, run_scenario
from bdts.errors import InvalidInput

SLOT = 1024  # small shards keep the full matrix fast


def run(profile, **kw):
    kw.setdefault("slot", SLOT)
    return run_scenario(profile, **kw)


def test_profile_parsing():
    p = StrategyProfile.parse("aei")
    assert (p.seller, p.consumer, p.provider) == ("a", "e", "i")
    assert str(p) == "aei"
    with pytest.raises(InvalidInput):
        StrategyProfile.parse("zzz")
    with pytest.raises(InvalidInput):
        StrategyProfile.parse("ae")


def test_all_profiles_enumerates_64():
    ps = all_profiles()
    assert len(ps) == len(set(map(str, ps))) == 64


def test_param_ranges_enforced():
    with pytest.raises(InvalidInput):
        run("aei", x=20)
    with pytest.raises(InvalidInput):
        run("aei", y=4)


def test_honest_run():
    tr = run("aei", price=40, unit_price=1, n=8)
    assert tr.funded and tr.recovery
    assert tr.verdicts == {} and tr.appeals == []
    assert tr.deltas == {"seller": 40, "consumer": -48, "provider": 8}


def test_transcript_determinism():
    a = run("cei", seed=7)
    b = run("cei", seed=7)
    assert a.to_json() == b.to_json()
    assert a.to_jsonl() == b.to_jsonl()


def test_transcript_changes_with_seed():
    assert run("aei", seed=1).to_json() != run("aei", seed=2).to_json()


@pytest.mark.parametrize("profile,expect", cheat_catalog())
def test_cheat_catalog_outcomes(profile, expect):
    tr = run(profile)
    assert tr.funded == expect["funded"]
    assert tr.recovery == expect["recovery"]
    assert len(tr.appeals) == expect["appeals"]
    if expect["appeals"]:
        assert tr.appeals[0]["verdict"] == expect["verdict"]
    cheater = expect["cheater"]
    if cheater is not None:
        assert tr.deltas[cheater] <= 0


def test_recovery_iff_fully_honest():
    # honest consumer: data recovered exactly when seller=a and provider=i
    for sl in "abcd":
        for sp in "ijkl":
            tr = run(StrategyProfile(sl, "e", sp))
            assert tr.recovery == (sl == "a" and sp == "i"), f"{sl}e{sp}"


def test_cheating_payee_never_profits():
    for p in all_profiles():
        if p.consumer != "e":
            continue
        tr = run(p)
        if p.seller != "a" and p.provider == "i":
            assert tr.deltas["seller"] <= 0, str(p)
        if p.provider != "i":
            assert tr.deltas["provider"] <= 0, str(p)


def test_supply_conserved_in_every_catalog_run():
    for profile, _ in cheat_catalog():
        tr = run(profile)
        # actor gains are funded entirely by actor losses and contract sinks
        assert sum(tr.deltas.values()) <= 0


def test_strict_forfeit_off_refunds_underpayment():
    tr = run("afi", strict_forfeit=False)
    assert not tr.funded
    assert tr.deltas == {"seller": 0, "consumer": 0, "provider": 0}


def test_phase_ops_present_for_funded_run():
    tr = run("aei")
    assert set(tr.phase_ops) == {"upload", "download", "decrypt"}
    tr = run("cei")
    assert "appeal" in tr.phase_ops
