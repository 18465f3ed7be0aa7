"""Benchmark the compiled solver kernels against the pure-Python fallback.

Times the three fixed-point kernels on representative problem sizes plus the
end-to-end per-observation cost of the online learner under each backend.

    python benchmarks/kernel_benchmark.py [--repeats N]
"""

import argparse
import time

import numpy as np

from onlineirl import _kernels_py

try:
    from onlineirl import _kernels
except ImportError:
    _kernels = None


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def kernel_cases(n_states, n_actions, n_params, seed=0):
    rng = np.random.default_rng(seed)
    p = np.ascontiguousarray(rng.dirichlet(np.ones(n_states), size=(n_states, n_actions)))
    r = rng.uniform(0, 1, size=n_states)
    w = rng.dirichlet(np.ones(n_actions), size=n_states)
    a = np.ascontiguousarray(np.einsum("sa,sax->sx", w, p))
    b = np.ascontiguousarray(rng.normal(size=(n_states, n_params)))
    v0 = np.zeros(n_states)
    dv0 = np.zeros((n_states, n_params))
    return {
        "exact_vi": lambda m: m.exact_vi(p, r, 0.9, 1e-8, 10_000, v0),
        "approx_vi[gsoft k=100]": lambda m: m.approx_vi(p, r, 0.9, 1, 100.0, 1e-8, 10_000, v0, 1e-8),
        "grad_vi": lambda m: m.grad_vi(a, b, 0.9, 1e-8, 10_000, dv0),
    }


def learner_case(backend_mod):
    # monkey-patch the backend module used by the solvers for a fair run
    import onlineirl.backend as backend
    import onlineirl.mdp as mdp_mod
    import onlineirl.solver as solver_mod
    import onlineirl.learner as learner_mod

    for mod in (backend, mdp_mod, solver_mod, learner_mod):
        mod.kernels = backend_mod

    from onlineirl.envs import GridSpec, generate_observations, make_gridworld
    from onlineirl.learner import LearnerConfig, OnlineRewardLearner
    from onlineirl.rewards import RewardModel

    env = make_gridworld(GridSpec(width=10))
    learner = OnlineRewardLearner(
        env.mdp, env.features, RewardModel("linear", 100), LearnerConfig(n_restarts=5)
    )
    stream = list(generate_observations(env, 200, seed=0))
    start = time.perf_counter()
    for obs in stream:
        learner.observe(obs)
    return (time.perf_counter() - start) / len(stream)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.append(("compiled", _kernels))
    else:
        print("compiled kernels not built; benchmarking the fallback only\n")

    sizes = [(16, 4, 16), (100, 4, 100), (256, 4, 512)]
    print(f"{'kernel':28s} {'size':>14s} " + " ".join(f"{n:>12s}" for n, _ in backends))
    for n_states, n_actions, n_params in sizes:
        cases = kernel_cases(n_states, n_actions, n_params)
        for label, call in cases.items():
            times = [time_call(lambda m=mod: call(m), args.repeats) for _, mod in backends]
            row = " ".join(f"{t * 1000:>10.2f}ms" for t in times)
            print(f"{label:28s} {f'{n_states}s/{n_actions}a/{n_params}p':>14s} {row}")

    print("\nend-to-end online learner (10x10 gridworld, 5 restarts, linear):")
    for name, mod in backends:
        per_obs = learner_case(mod)
        print(f"  {name:10s} {per_obs * 1000:8.2f} ms/observation")


if __name__ == "__main__":
    main()
