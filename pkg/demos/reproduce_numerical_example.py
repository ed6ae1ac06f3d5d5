"""
Index policy on the four-source example
=======================================

One crawl per period (M=1), two crawls per period (M=2), and the greedy
baseline that crawls only the first source.
"""

from whittlecrawl import PolicySpec, StaticSchedule, run, table1_fleet
from whittlecrawl.sim import alternating_steady_state_reward


def pattern(trace, start, width=42):
    for i in range(trace.action.shape[1]):
        row = "".join("#" if a else "." for a in trace.action[start:start + width, i])
        print(f"  source {i}: {row}")


greedy = StaticSchedule((1, None, None, None))
_, s = run(table1_fleet(1.0), PolicySpec("static", greedy), horizon=1000)
print(f"greedy, source 0 only: {s.average_reward:.2f}")

trace, s = run(table1_fleet(1.0), PolicySpec("whittle"), horizon=1000)
print(f"\nM=1 index policy: {s.average_reward:.2f} (cycle period {s.cycle_period})")
print(f"alternating steady state, computed by hand: "
      f"{alternating_steady_state_reward(*table1_fleet().sources[:2]):.2f}")
pattern(trace, 100)

trace, s = run(table1_fleet(2.0), PolicySpec("whittle"), horizon=1000)
print(f"\nM=2 index policy: {s.average_reward:.2f} (cycle period {s.cycle_period})")
print("  crawl intervals per source:", s.interval_histogram)
pattern(trace, 100)

# round robin for comparison
_, s = run(table1_fleet(2.0), PolicySpec("round-robin"), horizon=1000)
print(f"\nM=2 round robin: {s.average_reward:.2f}")
