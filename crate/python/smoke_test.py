"""Smoke test for the gridswitch extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/gridswitch-*.whl
"""

import json

import gridswitch as gs


def main():
    grid = gs.Grid.six_block()
    assert grid.n_vars == 7
    assert grid.variable_labels() == ["1-2", "1-4", "2-3", "2-5", "3-6", "4-6", "5-6"]
    assert gs.Grid.from_json(grid.to_json()).n_vars == 7

    q = [gs.Poly.var(i) for i in range(3)]
    p = q[0] * q[1] * q[2] + 2.0 * q[0] - 1.0
    assert p.degree == 3
    assert p.eval("111") == 2.0
    assert p.eval([False, False, False]) == -1.0
    assert (q[0] * q[0]) == q[0]

    parts = gs.build_objective(grid, c_penalty=5.0, exponent_l=4)
    assert sorted(parts) == sorted(
        ["power", "radial", "maxconn", "blackout", "current", "max_v", "min_v", "total"]
    )
    assert parts["radial"].terms() == [([2, 4], 5.0), ([3, 6], 5.0)]

    total = gs.build_objective(grid)["total"]
    exact = gs.brute_force_min(total, grid.n_vars)
    bits = exact["best_assignment"]
    assert len(bits) == 7

    model = gs.quadratize(total, grid.n_vars)
    assert model.n_aux > 0
    lifted = model.lift(bits)
    assert model.project(lifted) == (bits, True)
    assert abs(model.energy(lifted) - exact["best_value"]) <= 1e-9 * abs(exact["best_value"])
    assert model.export().startswith("c offset ")
    reparsed = gs.QuboModel.parse(model.export(), model.sidecar_json())
    assert reparsed.n_vars == model.n_vars

    sa = gs.anneal_hubo(total, grid.n_vars, seed=1, sweeps=300, restarts=8)
    assert sa["best_value"] >= exact["best_value"]
    sq = gs.anneal_qubo(model, total, seed=1, sweeps=300, restarts=8)
    assert len(sq["per_restart_values"]) == 8

    physical = gs.check_feasibility(grid, "0100111")
    assert physical["feasible"], physical
    paper = gs.check_feasibility(grid, "0100111", mode="paper")
    assert not paper["maxconn_ok"]

    rows = gs.enumerate_feasible(grid, "physical")
    assert rows and all(a[1] <= b[1] for a, b in zip(rows, rows[1:]))

    try:
        gs.check_feasibility(grid, "01")
    except ValueError:
        pass
    else:
        raise AssertionError("short bit string accepted")

    print(json.dumps({"argmin": bits, "value": exact["best_value"], "feasible_rows": len(rows)}))
    print("smoke test passed")


if __name__ == "__main__":
    main()
