"""Smoke test for the riskbandit extension module.

Build and run:

    cargo build --release -p riskbandit-py --features extension-module
    cp target/release/libriskbandit.so /tmp/riskbandit.so
    PYTHONPATH=/tmp python3 python/smoke_test.py
"""

import math

import riskbandit as rb


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    u = rb.ArmSpec.uniform(0.5, 0.5)
    close(u.mean, 0.5, 1e-12)
    close(u.cvar(0.2), 0.1, 1e-12)
    assert u.lower_bound_constant == 1.0
    draws = u.sample(10_000, 1)
    assert len(draws) == 10_000 and min(draws) >= 0.0 and max(draws) <= 1.0

    stats = rb.ArmStats([0.1, 0.5, 0.9])
    close(rb.marab_index(stats, 10, 1.0, 0.4), -0.5326, 1e-4)
    assert rb.min_index(stats) == 0.1
    assert rb.marab_index(stats, 10, 0.0, 0.01) == rb.min_index(stats)
    stats.update(0.05)
    assert len(stats) == 4 and stats.rewards[0] == 0.05

    problem = rb.Problem.proof_of_concept()
    assert problem.k == 20 and problem.best_mean_arm == 0 and problem.best_min_arm == 0
    res = rb.simulate(problem, rb.Policy.min(), 2000, 8, 5)
    assert len(res["mean_theoretical"]) == 2000
    assert sum(res["pulls"]) == 8 * 2000
    r500, r2000 = res["mean_theoretical"][499], res["mean_theoretical"][1999]
    assert r2000 - r500 <= 0.01 * r500 + 1.0
    again = rb.simulate(problem, rb.Policy.min(), 2000, 8, 5)
    assert again["mean_theoretical"] == res["mean_theoretical"]

    hp, exp = rb.prop43_regret_bound(2, 1.0, 0.1, 0.1, 100, 0.05)
    close(hp, 8.394, 1e-3)
    assert exp is not None
    close(rb.ucb_regret_bound([0.5], 3), 8 * math.log(3) / 0.5 + (1 + math.pi**2 / 3) * 0.5, 1e-9)

    check = rb.check_lemma([u], 10, 0.1, 20_000, seed=4)
    assert check["pass"]
    close(check["empirical_prob"], 0.9**10, 0.02)

    out = rb.run_experiment(
        """
seed = 1
horizon = 100
runs = 2
[problem]
generator = "mixture"
arms = 5
[[policies]]
kind = "marab"
c = 1e-3
alpha = 0.1
grid = { alpha = [0.05, 0.2] }
"""
    )
    assert [o["params"] for o in out] == [[("alpha", 0.05)], [("alpha", 0.2)]]

    try:
        rb.ArmSpec.uniform(0.9, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("support outside [0, 1] accepted")

    print("riskbandit", rb.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
