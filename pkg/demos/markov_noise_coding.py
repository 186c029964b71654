"""Greedy codes on a channel whose noise is driven by a hidden Markov chain.

Each site is either left alone or hit by amplitude damping, depending on a
two-state chain with second eigenvalue 0.5. The script prints the greedy code
rate and its worst error next to the per-site Holevo rate of uniform inputs.

    python demos/markov_noise_coding.py
"""

import numpy as np

from cqcoding import (
    CPTPMap,
    IIDProcess,
    MarkovNoise,
    conditional_typicality_pipeline,
    evaluate_errors,
    greedy_code,
    markov_noise,
)
from cqcoding.operators import pure_state


def main():
    noise = MarkovNoise(np.array([[0.75, 0.25], [0.25, 0.75]]),
                        (CPTPMap.identity(2), CPTPMap.amplitude_damping(0.4)))
    theta = np.pi / 3
    ch = markov_noise([pure_state([1, 0]), pure_state([np.cos(theta), np.sin(theta)])], noise)
    p = IIDProcess([0.5, 0.5])
    print(f"{'n':>2} {'M':>3} {'rate':>7} {'max_err':>8} {'chi/n':>7}")
    for n in (2, 4, 6):
        rep = conditional_typicality_pipeline(p, ch, n, eps=1.0)
        code = greedy_code(rep, None, 0.2)
        max_err, _ = evaluate_errors(code, ch)
        r = rep.rates
        chi = r["s_input"] + r["s_output"] - r["s_joint"]
        print(f"{n:>2} {code.size:>3} {code.rate:7.4f} {max_err:8.4f} {chi:7.4f}")


if __name__ == "__main__":
    main()
