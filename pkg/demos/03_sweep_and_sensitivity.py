"""Target sweeps and the privilege misconfiguration analysis.

The sweep re-plans against every host to map the attack surface; the
sensitivity analysis reruns planning after forcing RCE grants up (every
LOW-yielding service runs privileged: UB) or down (services properly
sandboxed: LB).
"""
from pathlib import Path

from chainplan import ExploitMatrix, load_catalog, load_network, \
    network_from_dict, records_from_dict
from chainplan.analysis import privilege_sensitivity, sweep_targets
from chainplan.synth import purdue_fixture

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

net = load_network(FIXTURES / "motivating_network.json")
matrix = load_catalog(FIXTURES / "motivating_catalog_bpf.json")

print("per-target sweep on the two-subnet network:")
sweep = sweep_targets(net, matrix, k=13)
for host, entry in sweep.per_host.items():
    print(f"  {host:<12} {entry.plans} chain(s), "
          f"mean {entry.mean_chain_length:.1f} exploits, {entry.duration_s:.3f}s")
print(f"  total: {sweep.total}")

print("\nprivilege sensitivity on the same network:")
result = privilege_sensitivity(net, matrix, k=13)
print(f"  lower bound {result.lower_bound} <= "
      f"baseline {result.baseline} <= upper bound {result.upper_bound}")

# the same analyses scale to the synthetic industrial network
net_dict, cat_dict = purdue_fixture(hosts=21)
purdue = network_from_dict(net_dict)
purdue_matrix = ExploitMatrix(tuple(records_from_dict(cat_dict)))

print(f"\nper-target sweep on '{purdue.name}' "
      f"({len(purdue.hosts) - 1} hosts, {len(purdue_matrix)} exploits):")
sweep = sweep_targets(purdue, purdue_matrix, k=13)
for host, entry in sweep.per_host.items():
    if entry.plans:
        print(f"  {host:<14} {entry.plans} chain(s), "
              f"mean {entry.mean_chain_length:.1f} exploits")
unreachable = [h for h, e in sweep.per_host.items() if not e.plans]
print(f"  unreachable hosts: {len(unreachable)}")

result = privilege_sensitivity(purdue, purdue_matrix, k=13)
print(f"\nprivilege sensitivity: LB {result.lower_bound} <= "
      f"baseline {result.baseline} <= UB {result.upper_bound}")
