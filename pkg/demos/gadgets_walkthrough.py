"""Walk through the hand-built gadgets: worst traversal, contraction, and a full solve."""

from atsp_approx import verify_tour
from atsp_approx.generators import contraction_gadget, nested_irreducible
from atsp_approx.laminar import contract, max_DS
from atsp_approx.pipeline import solve_laminar_instance


def main():
    inst, names = contraction_gadget()
    label = {v: k for k, v in names.items()}
    worst, u, v = max_DS(inst, 4)
    print(f"contraction gadget: total value {inst.total_value()}, set value {inst.value(inst.laminar.sets[4])}")
    print(f"  worst entry-to-exit traversal: {worst} (from {label[u]} to {label[v]})")
    child, rec = contract(inst, 4)
    print(f"  after contraction: {child.n} vertices, total value {child.total_value()}")

    inst, _ = nested_irreducible()
    tour, stats = solve_laminar_instance(inst)
    print(f"nested gadget: tour weight {inst.cost(tour.edges)} against value {inst.total_value()}")
    print(f"  recursions into unvisited sets: {stats.irr_recursions}, tour checks: {verify_tour(inst.g, tour) or 'ok'}")


if __name__ == "__main__":
    main()
