"""Regenerate the bundled modified IEEE 30-bus case file.

Topology and reactances follow the standard IEEE 30-bus test system; line
ratings follow the common 30-bus rating set.  Generators: two 60 MW coal
plants (buses 1, 2), a 150 MW nuclear unit (bus 5), three 60 MW gas
peakers (buses 8, 11, 13) and a wind unit at bus 12.  Costs not fixed by
the offer table (no-load, start-up, minimum output, up/down times) are
plausible illustrative values.

    python3 scripts/make_ieee30_case.py [output path]
"""

import json
import sys
from pathlib import Path

# (from, to, reactance pu, rating MW)
BRANCHES = [
    (1, 2, 0.0575, 130), (1, 3, 0.1652, 130), (2, 4, 0.1737, 65), (3, 4, 0.0379, 130),
    (2, 5, 0.1983, 130), (2, 6, 0.1763, 65), (4, 6, 0.0414, 90), (5, 7, 0.1160, 70),
    (6, 7, 0.0820, 130), (6, 8, 0.0420, 32), (6, 9, 0.2080, 65), (6, 10, 0.5560, 32),
    (9, 11, 0.2080, 65), (9, 10, 0.1100, 65), (4, 12, 0.2560, 65), (12, 13, 0.1400, 65),
    (12, 14, 0.2559, 32), (12, 15, 0.1304, 32), (12, 16, 0.1987, 32), (14, 15, 0.1997, 16),
    (16, 17, 0.1923, 16), (15, 18, 0.2185, 16), (18, 19, 0.1292, 16), (19, 20, 0.0680, 32),
    (10, 20, 0.2090, 32), (10, 17, 0.0845, 32), (10, 21, 0.0749, 32), (10, 22, 0.1499, 32),
    (21, 22, 0.0236, 32), (15, 23, 0.2020, 16), (22, 24, 0.1790, 16), (23, 24, 0.2700, 16),
    (24, 25, 0.3292, 16), (25, 26, 0.3800, 16), (25, 27, 0.2087, 16), (28, 27, 0.3960, 65),
    (27, 29, 0.4153, 16), (27, 30, 0.6027, 16), (29, 30, 0.4533, 16), (8, 28, 0.2000, 32),
    (6, 28, 0.0599, 32),
]

# peak-hour bus loads, MW (standard 30-bus values, 283.4 MW total)
BUS_LOAD = {
    2: 21.7, 3: 2.4, 4: 7.6, 5: 94.2, 7: 22.8, 8: 30.0, 10: 5.8, 12: 11.2, 14: 6.2, 15: 8.2,
    16: 3.5, 17: 9.0, 18: 3.2, 19: 9.5, 20: 2.2, 21: 17.5, 23: 3.2, 24: 8.7, 26: 3.5, 29: 2.4,
    30: 10.6,
}

# hourly system load as a fraction of peak: overnight trough, afternoon peak
LOAD_SHAPE = [
    0.68, 0.65, 0.63, 0.62, 0.62, 0.64, 0.69, 0.75, 0.81, 0.86, 0.90, 0.93,
    0.96, 0.98, 1.00, 0.99, 0.97, 0.94, 0.91, 0.87, 0.82, 0.77, 0.73, 0.70,
]

# wind at bus 12, MW: strong overnight/morning, gone by late morning
WIND = [
    12.0, 18.0, 25.0, 29.0, 30.0, 27.0, 20.0, 11.0, 4.0, 0.0, 0.0, 0.0,
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
]

OFFERS = {
    "G1": [[25, 7], [20, 10], [15, 15]],
    "G2": [[25, 5], [20, 12], [15, 20]],
    "G3": [[25, 1], [20, 4], [105, 4.7]],
    "G4": [[25, 50], [20, 100], [15, 150]],
    "G5": [[25, 80], [20, 300], [15, 500]],
    "G6": [[25, 120], [20, 750], [15, 999]],
}


def coal(gid, bus, ramp, init):
    return {
        "id": gid, "bus": bus, "kind": "coal", "g_min": 10.0, "g_max": 60.0, "ramp_limit": ramp,
        "no_load_cost": 40.0, "startup_cost": 800.0, "shutdown_cost": 0.0,
        "min_uptime": 6, "min_downtime": 6, "offer_blocks": OFFERS[gid],
        "initial_commitment": True, "initial_output": init, "hours_in_initial_state": 24,
    }


def gas(gid, bus):
    return {
        "id": gid, "bus": bus, "kind": "gas", "g_min": 5.0, "g_max": 60.0, "ramp_limit": 60.0,
        "no_load_cost": 15.0, "startup_cost": 60.0, "shutdown_cost": 0.0,
        "min_uptime": 1, "min_downtime": 1, "offer_blocks": OFFERS[gid],
        "initial_commitment": False, "initial_output": 0.0, "hours_in_initial_state": 8,
    }


def build() -> dict:
    buses = [{"id": b, "reference": b == 1} for b in range(1, 31)]
    lines = [
        {"from": f, "to": t, "susceptance": round(1.0 / x, 10), "capacity": float(cap), "name": f"L{f}-{t}"}
        for f, t, x, cap in BRANCHES
    ]
    load = [[round(s * BUS_LOAD.get(b, 0.0), 6) for b in range(1, 31)] for s in LOAD_SHAPE]
    gens = [
        coal("G1", 1, 4.0, 26.0),
        coal("G2", 2, 6.0, 28.0),
        {
            "id": "G3", "bus": 5, "kind": "nuclear", "g_min": 60.0, "g_max": 150.0, "ramp_limit": 1.0,
            "no_load_cost": 0.0, "startup_cost": 5000.0, "shutdown_cost": 0.0,
            "min_uptime": 24, "min_downtime": 24, "offer_blocks": OFFERS["G3"],
            "initial_commitment": True, "initial_output": 118.0, "hours_in_initial_state": 48,
        },
        gas("G4", 8),
        gas("G5", 11),
        gas("G6", 13),
        {
            "id": "W12", "bus": 12, "kind": "wind", "g_min": 0.0, "g_max": max(WIND), "ramp_limit": max(WIND),
            "offer_blocks": [[max(WIND), 0.0]], "initial_commitment": True, "initial_output": WIND[0],
        },
    ]
    emission = {"static": {"f0": 11.53, "f1": 0.86, "N1": 1.02}, "dynamic": {"b": 6.12, "tau": 0.34, "N2": 0.2}}
    coal_plants = [
        {"generator": g, "eol": 30.0, "ramp_up_cost": 0.0, "ramp_down_cost": 0.0, "emission": emission}
        for g in ("G1", "G2")
    ]
    return {
        "name": "ieee30_mod",
        "description": "Modified IEEE 30-bus system: two coal plants, one nuclear unit, three gas peakers, wind at bus 12",
        "base_mva": 100.0,
        "horizon": 24,
        "slice_hours": 1.0,
        "allow_curtailment": False,
        "network": {"buses": buses, "lines": lines},
        "generators": gens,
        "coal_plants": coal_plants,
        "storages": [],
        "profiles": {"load": load, "wind": [[w] for w in WIND]},
        "scenarios": [{"name": "base", "probability": 1.0}],
    }


def main(argv):
    out = Path(argv[1]) if len(argv) > 1 else Path(__file__).resolve().parents[1] / "src/deepcycle/data/ieee30_mod.case"
    out.write_text(json.dumps(build(), indent=1) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main(sys.argv)
