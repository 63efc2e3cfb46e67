"""Walk the full pipeline on the two-subnet example network.

A web server sits in a DMZ, a database server in the LAN behind it, and the
attacker starts outside with the goal of root on the database server. Three
planted exploits chain: a Drupal RCE for the first foothold, a CouchDB RCE
to pivot into the LAN, and a kernel privilege escalation for root.
"""
from pathlib import Path

from chainplan import (
    check_plan,
    find_top_k,
    ground,
    load_catalog,
    load_network,
    select_relevant_exploits,
)
from chainplan.analysis import to_chain_report
from chainplan.pddlgen import emit_domain, emit_problem, to_pddl

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

net = load_network(FIXTURES / "motivating_network.json")
matrix = load_catalog(FIXTURES / "motivating_catalog.json")

print(f"network '{net.name}': subnets {net.subnets}, hosts {net.host_names()}")
print(f"scenario: {net.scenario.attacker_host} -> {net.scenario.goal_host} "
      f"({net.scenario.goal_privilege.name})")

# 1. pick the exploits this network is actually vulnerable to
relevance = select_relevant_exploits(net, matrix)
print(f"\nrelevant exploits ({len(relevance.relevant)} kept, "
      f"{relevance.discarded_count} discarded):")
for entry in relevance.relevant:
    hosts = sorted({host for host, _ in entry.matches})
    print(f"  {entry.exploit_id}  on {hosts}")

# 2. compile network + exploits into PDDL
domain = emit_domain(relevance, matrix, net)
problem = emit_problem(net)
print(f"\ndomain: {len(domain.actions)} action schemas "
      f"(4 connectivity + {len(domain.actions) - 4} exploits)")
print(f"problem: {len(problem.objects)} objects, {len(problem.init)} init facts")

# the serialized files are what an external planner would consume
print("\n--- problem.pddl (excerpt) ---")
print("\n".join(to_pddl(problem).splitlines()[:14]), "\n  ...")

# 3. ground and enumerate chains with the embedded planner
task = ground(domain, problem)
print(f"\ngrounded task: {len(task.actions)} actions, {len(task.atoms)} atoms")

plans = find_top_k(task, k=13)
print(f"found {len(plans)} distinct chain(s)\n")
for index, plan in enumerate(plans, start=1):
    assert check_plan(task, plan)
    report = to_chain_report(plan, task, matrix)
    print(f"chain {index}: {report.total_actions} actions, "
          f"{report.chain_length_exploits} exploits")
    for number, step in enumerate(report.steps, start=1):
        if step.kind == "connect":
            print(f"  {number}. [{step.protocol} connect] "
                  f"{step.from_host} -> {step.to_host}")
        else:
            print(f"  {number}. [{step.kind.upper()}] {step.exploit_name}: "
                  f"{step.to_host} now {step.privilege_after.name}")
