import json
from fractions import Fraction

from transducernet.calibration import (
    FIXED, PROFILE_PATH, TX_GRID, evaluate, fit, measure, with_radio_costs,
)
from transducernet.energy import EnergyParams, compare, get_profile
from transducernet.network import simulate
from transducernet.energy import traditional_equivalent
from transducernet.scenario import builtin_home

SHORT = 5 * 60_000


def test_packaged_profile_is_the_fit_output():
    doc = json.loads(PROFILE_PATH.read_text())
    assert EnergyParams.from_dict(doc["params"]) == get_profile("zigbee-default")
    radio = get_profile("zigbee-default").radio
    assert radio.tx_energy_uj_per_byte == radio.rx_energy_uj_per_byte
    assert doc["fit"]["horizon_ms"] == 86_400_000


def test_evaluate_agrees_with_simulated_comparison():
    sc = builtin_home(horizon_ms=SHORT)
    p = get_profile("zigbee-default")
    m = measure(sc, p, SHORT)
    ev = evaluate(m, p)
    report = compare(simulate(sc, p).energy, simulate(traditional_equivalent(sc), p).energy)
    assert ev.network == report.network_ratio
    assert all(ev.ratios[n.node_id] == n.ratio for n in report.nodes)
    assert m.parity_nodes == (4,)


def test_fit_on_a_small_grid():
    sc = builtin_home(horizon_ms=SHORT)
    m = measure(sc, FIXED, SHORT)
    grid_w = [Fraction(w) for w in (5_000, 23_000)]
    result = fit(m, wake_grid=grid_w, tx_grid=TX_GRID[::40])
    assert result.candidates == 2 * len(TX_GRID[::40])
    assert result.params.radio.wake_energy_uj in grid_w
    assert result.evaluation == evaluate(m, result.params)
    assert with_radio_costs(FIXED, 1, 2).radio.rx_energy_uj_per_byte == 2
