"""Apply the twelve local moves and explore a cycle's orbit.

Each move flips one bulk plaquette conditioned on a fixed window
pattern; the move set connects cycles to cycles, and its graph Laplacian
is the hopping part of the Hamiltonian.
"""

from gridcycles import (
    LatticeShape,
    classify,
    config_to_text,
    enumerate_cycles,
    reference_cycle,
)
from gridcycles.rules import (
    apply_rule,
    enumerate_instances,
    generate_rule_set,
    sector_partition,
)


def orbit(config):
    """Breadth-first closure of a configuration under all moves."""
    seen = {config.bulk_index}
    frontier = [config]
    while frontier:
        nxt = []
        for cur in frontier:
            for inst in enumerate_instances(cur.shape):
                new = apply_rule(cur, inst)
                if new is not None and new.bulk_index not in seen:
                    seen.add(new.bulk_index)
                    nxt.append(new)
        frontier = nxt
    return seen


def main():
    rules = generate_rule_set()
    print(f"{len(rules)} rules; the first few footprints and bit swaps:")
    for rule in rules[:4]:
        print(f"  rule {rule.k:<2d} footprint {rule.footprint}  "
              f"swap {rule.swap[0]} -> {rule.swap[1]}")
    print("  ...")

    shape = LatticeShape(4, 4)
    start = reference_cycle(shape)
    print(f"\nreference cycle on {shape}:")
    print(config_to_text(start))

    moved = None
    for inst in enumerate_instances(shape):
        moved = apply_rule(start, inst)
        if moved is not None:
            break
    print(f"after rule {inst.rule.k} at ({inst.row},{inst.col}):")
    print(config_to_text(moved))
    rep = classify(moved)
    assert rep.is_two_factor and rep.num_loops == 1

    reach = orbit(start)
    cycles = set(enumerate_cycles(shape))
    print(f"orbit of the reference cycle: {len(reach)} configs; "
          f"cycle set size {len(cycles)}; equal: {reach == cycles}")

    part = sector_partition(shape)
    sizes = sorted((len(c) for c in part.classes), reverse=True)
    print(f"sector partition: {len(part.classes)} classes over "
          f"{sum(sizes)} configs, largest {sizes[:5]}")


if __name__ == "__main__":
    main()
