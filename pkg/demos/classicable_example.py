"""Classical versus classicable pairs in a three-step chain.

``X0`` and ``X2`` are classical; ``X1`` is only classicable. The pair set
``{X1, X2}`` is jointly classicable under a uniform initial mixture and
loses that property as soon as the mixture is skewed.
"""

from fgqmf import gates
from fgqmf.classical import classicality_report, format_number, off_diagonal_witness
from fgqmf.models import classicable_example
from fgqmf.qmf import sqmf_from_graph


def main():
    H = gates.hadamard()
    for p in ([0.5, 0.5], [0.7, 0.3]):
        q = sqmf_from_graph(classicable_example(p, H, H), ["X0", "X1", "X2"])
        r = classicality_report(q)
        print(f"p(x0) = {p}")
        print(f"  classical pairs: {[k for k, v in r.classical.items() if v]}")
        print(f"  classicable pairs: {[k for k, v in r.classicable.items() if v]}")
        print(f"  maximal jointly classicable sets: {[list(s) for s in r.maximal_jointly_classicable]}")
        w = off_diagonal_witness(q, ["X1", "X2"])
        if w is not None and abs(w[1]) > 1e-12:
            print(f"  {{X1, X2}} witness {format_number(w[1])} at {w[0]}")
        print()


if __name__ == "__main__":
    main()
