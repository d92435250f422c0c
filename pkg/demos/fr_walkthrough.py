"""Walk through the nested-agents model step by step.

Builds the model, prints the valid configurations behind each agent's
inference, checks the three implications inside their own views, and shows
why they cannot be chained: the four measured pairs are not jointly
classicable. Run with ``python3 demos/fr_walkthrough.py``.
"""

from fgqmf.models import fr_implications, fr_model


def main():
    m = fr_model(seed=0)
    print(f"full model: {len(m.graph.variables)} variables, {len(m.graph.factors)} factors")
    for name in ("F", "Wbar", "W"):
        v = m.view(name)
        print(f"view {name}: outputs {v.outputs}")
    print()
    print(fr_implications(m).to_text(), end="")
    print()
    for seed in (1, 2, 3):
        print(f"completion seed {seed}: Pr = {fr_model(seed).stop_probability():.15f}")


if __name__ == "__main__":
    main()
