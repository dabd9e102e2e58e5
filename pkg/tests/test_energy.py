from fractions import Fraction

import pytest

from conftest import home_run
from transducernet.energy import (
    COMPARED_PHASES, EnergyMeter, closed_form_pj, compare, debit, get_profile, traditional_equivalent,
)
from transducernet.network import simulate
from transducernet.errors import MismatchedHorizon, MismatchedTransducers, NegativeDebit
from transducernet.scenario import builtin_home


def test_debit_is_exact():
    m = EnergyMeter()
    debit(m, "sensing", Fraction(3, 2))
    debit(m, "sensing", 1)
    assert m.sensing == 2_500_000 and m.total_pj == 2_500_000
    with pytest.raises(NegativeDebit):
        debit(m, "sensing", -1)
    with pytest.raises(NegativeDebit):
        m.add_pj("processing", -5)
    with pytest.raises(ValueError):
        debit(m, "idle", 1)


def test_unknown_profile():
    with pytest.raises(ValueError):
        get_profile("wifi")


def test_traditional_split():
    trad = traditional_equivalent(builtin_home())
    assert len(trad.nodes) == 19
    assert [n.node_id for n in trad.nodes if n.group_id == 3] == [301, 302, 303, 304, 305, 306]
    assert all(not n.reports for n in trad.nodes if n.layout and n.layout[0] in (21, 22, 23, 24))
    assert {h.node_id for h in trad.hotplug} == {502}


@pytest.mark.parametrize("traditional", [False, True])
def test_closed_form_matches_meters(traditional, zigbee):
    run = home_run(10, traditional)
    for n in run.energy.nodes:
        expect = closed_form_pj(n.traffic, zigbee, run.horizon_ms)
        assert {p: n.phases_pj[p] for p in COMPARED_PHASES} == expect


def test_compare_checks_inputs():
    a, b = home_run(10).energy, home_run(10, True).energy
    with pytest.raises(MismatchedTransducers):
        compare(a, home_run(10).energy.__class__(a.horizon_ms, a.nodes[:-1]))
    with pytest.raises(MismatchedHorizon):
        compare(a, b.__class__(b.horizon_ms + 1, b.nodes))


def test_short_run_comparison():
    report = compare(home_run(10).energy, home_run(10, True).energy)
    assert [n.traditional_nodes for n in report.nodes] == [3, 2, 6, 2, 2, 4]
    assert 0 < report.network_ratio < 1
    assert report.to_csv().splitlines()[-1].startswith("network,19,19,")


def test_communication_dominates(pottie):
    sc = builtin_home(horizon_ms=60_000)
    runs = [home_run(10, trad).energy for trad in (False, True)]
    runs += [simulate(s, pottie).energy for s in (sc, traditional_equivalent(sc))]
    for report in runs:
        for n in report.nodes:
            if n.messages:
                p = n.phases_pj
                assert p["communicating"] > p["sensing"] + p["processing"]
