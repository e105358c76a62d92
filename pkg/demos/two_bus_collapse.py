"""Two-bus voltage collapse against the closed form.

A single-phase source (1000 V behind 0.5 ohm) feeds a constant-power load
of 125 kW through a 0.5 ohm line.  With R = 1 ohm of total series
resistance the loadability limit is the textbook

    P_max = V_te^2 / (4 R) = 250 kW,

i.e. the continuation must fold at exactly xi = 2.  Below the limit the
load voltage follows

    V(xi) = ( V_te + sqrt(V_te^2 - 4 R P xi) ) / 2,

and the stability index at the solved point is L = |1 - V_te / V|, which
reaches 1 at the fold.  The script sweeps the continuation, prints the
trace against these closed forms, and writes the trace CSV.

Run:  python3 demos/two_bus_collapse.py
"""

import os

import numpy as np

from polyvsi import (
    Branch,
    GridModel,
    Node,
    PhaseResource,
    PolyphaseSystem,
    ResourceModel,
    SlackModel,
    ZipCoefficients,
    run_cpf,
)
from polyvsi.reporting import write_trace_csv

V_TE = 1000.0
R_TOTAL = 1.0
P_LOAD = 125e3

# %% build the system

cp = ZipCoefficients(0.0, 0.0, 1.0)
grid = GridModel(
    nodes=(Node(1, "slack", vnom=V_TE), Node(2, "resource", vnom=V_TE)),
    branches=(Branch(1, 2, np.array([[0.5 + 0j]])),),
    p=1,
)
slacks = [SlackModel(node=1, v_te=np.array([V_TE + 0j]), z_te=np.array([[0.5 + 0j]]))]
resources = [
    ResourceModel(
        node=2,
        v0=V_TE,
        phases=(PhaseResource(p0=-P_LOAD, q0=0.0, zip_re=cp, zip_im=cp),),
    )
]
system = PolyphaseSystem(grid, slacks, resources)


def v_closed(xi: float) -> float:
    disc = V_TE**2 - 4.0 * R_TOTAL * P_LOAD * xi
    return (V_TE + np.sqrt(max(disc, 0.0))) / 2.0


# %% run the continuation

trace = run_cpf(system)
print(f"termination: {trace.termination} after {len(trace.samples)} samples")

print("\n   xi        V_2 [V]   closed [V]    L        sv_min")
step = max(len(trace.samples) // 12, 1)
shown = list(trace.samples[::step])
if shown[-1] is not trace.samples[-1]:
    shown.append(trace.samples[-1])
for s in shown:
    v2 = s.op.magnitude(2, 1)
    print(
        f"  {s.xi:7.4f}   {v2:8.2f}   {v_closed(s.xi):8.2f}"
        f"   {s.vsi.global_value:7.5f}   {s.sv[0]:8.5f}"
    )

# %% fold location vs closed form

xi_exact = 2.0
print(f"\nfold:   xi_max = {trace.xi_max:.6f}   closed form = {xi_exact:.6f}")
print(f"        relative error {abs(trace.xi_max - xi_exact) / xi_exact:.2e}")

final = trace.final
v_fold = final.op.magnitude(2, 1)
print(f"        V_2 at fold = {v_fold:.2f} V   closed form = {V_TE / 2:.2f} V")
print(f"        L at fold   = {final.vsi.global_value:.5f}   (1.0 at the limit)")

# the index also matches its own closed form away from the fold
print("\nindex vs closed form at each accepted sample:")
worst = 0.0
for s in trace.samples:
    v2 = s.op.magnitude(2, 1)
    worst = max(worst, abs(s.vsi.global_value - abs(1.0 - V_TE / v2)))
print(f"  max |L - |1 - V_te/V_2||  = {worst:.2e}")

# %% write the trace

out_dir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out_dir, exist_ok=True)
path = os.path.join(out_dir, "two_bus_trace.csv")
write_trace_csv(path, trace)
print(f"\nwrote {path}")
