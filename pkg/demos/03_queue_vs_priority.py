"""The price of mainline priority: queues at the station exit.

During congestion the merge at the station's exit cell splits the scarce
supply by the priority vector. A mainstream priority of 0.99 starves the
station ramp, so vehicles whose dwell has elapsed pile up in the exit queue
e(k); at 0.95 the ramp drains almost freely. The relief on the mainline is
paid for with waiting time at the station.
"""

import numpy as np

from ctmsim import parse_scenario, run_scenario

print("station (2,4), beta_s = 0.05, dwell 15 min")
print(f"{'p_ms':>6} {'max e [veh]':>12} {'peak at k':>10} {'pi':>7}")
runs = {}
for p_ms in (0.95, 0.97, 0.99):
    doc = {
        "preset": "a13-single-station",
        "overrides": {
            "stations.0.beta_s": 0.05,
            "stations.0.delta_min": 15,
            "priorities.4.ms": p_ms,
            "priorities.4.stations": [round(1.0 - p_ms, 12)],
        },
    }
    res = run_scenario(parse_scenario(doc))
    runs[p_ms] = res
    e = res.e_queue[:, 0]
    print(f"{p_ms:>6} {e.max():>12.2f} {int(np.argmax(e)):>10} "
          f"{'-':>7}")

print("\nqueue evolution e(k), one row per 5 min:")
header = "    k     " + "".join(f"p={p:<8}" for p in runs)
print(header)
for k in range(520, 681, 30):
    cells = "".join(f"{runs[p].e_queue[k, 0]:<10.2f}" for p in runs)
    print(f"  {k:5d}   {cells}")
