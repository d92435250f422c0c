"""Measurements as interactions with a probe.

Shows the kappa matrix of a random interaction family, how repeated
interactions drive it towards the identity, that the one-shot family is an
exact projection measurement, and that a controlled-NOT can be undone only
while the probe is still available.
"""

import numpy as np

from fgqmf import gates
from fgqmf.classical import format_number
from fgqmf.measure import (
    converge,
    interaction_gadget,
    kappa,
    one_shot_family,
    projection_gadget,
    random_family,
    separation_violations,
    undo_check,
)
from fgqmf.models import separation_example

BOX = ["X", "Xt", "X'", "Xt'"]


def show(k):
    for row in k.values:
        print("  " + "  ".join(format_number(z).rjust(28) for z in row))


def main():
    rng = np.random.default_rng(1)
    k = kappa(random_family(3, 2, rng))
    print("kappa of a random family:")
    show(k)
    r = converge(k)
    print(f"max off-diagonal {format_number(k.max_off_diagonal())}; "
          f"below {r.threshold:g} after N = {r.n} interactions\n")

    one = interaction_gadget(one_shot_family(3)).graph.exterior(BOX)
    proj = projection_gadget(np.eye(3)).graph.exterior(BOX)
    print(f"one-shot interaction vs projection: max diff {format_number(one.max_abs_diff(proj))}\n")

    u = gates.cnot(2).reshape(4, 4)
    print(f"CNOT undone with the probe fed back: {undo_check(u, [1.0, 0.0])}")
    print(f"CNOT undone with a fresh probe:      {undo_check(u, [1.0, 0.0], refeed=False)}\n")

    for violate in (False, True):
        bad = separation_violations(separation_example(violate), "meas.")
        print(f"separation example (violate={violate}): violations {bad or 'none'}")


if __name__ == "__main__":
    main()
