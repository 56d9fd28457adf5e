"""Smoke test for the Python bindings.

Build and install first:
    pip install maturin
    pip install --no-build-isolation -e crates/py
"""

from pathlib import Path

import hardcore_py as hc

MODELS = Path(__file__).resolve().parent.parent / "models"


def main():
    model = hc.Model.load(str(MODELS / "staircase3.json"))
    print(model, "dimension", model.dimension)

    c = model.constants()
    assert c["N"] == "479/6" and c["rho0"] == "479/3355", c
    print("N =", c["N"], " rho0 =", c["rho0"], " R2 =", c["R2"])

    report = hc.Model.load(str(MODELS / "squares2x2.json")).verify_assumption()
    assert not report["passed"] and report["items"][1]["verdict"] == "fail"
    print("2x2 squares:", report["items"][1]["summary"])

    local = hc.max_local_configs(3, 12)
    assert local["optimum"] == "7" and len(local["optima"]) == 2
    print("3-staircase optimum", local["optimum"], "gap", local["gap"])

    sys = hc.System(model)
    print("ground states", sys.ground_state_count, " rho_max", sys.rho_max)
    gamma = sys.contours(0, [[0, 0]])
    assert len(gamma) == 1
    print("vacancy contour with", len(gamma[0]["support"]), "support sites")

    for row in sys.polymer_identity(8, 8):
        assert row["holds"], row
    xi = sys.xi(8, 8, ["1", "10"])
    print("Xi on 8x8: top coefficient", xi["coefficients"][-1], "at k =", xi["k_max"])

    audit = sys.round_trip(trials=20, seed=3)
    assert not audit["mismatches"] and not audit["errors"], audit
    print("round trip:", audit["contours"], "contours, no mismatches")

    mc = sys.monte_carlo(12, 12, 1e4, 2000, seed=1)
    print("mc z=1e4 on-ground occupancy", round(mc["on_ground"], 4))

    try:
        hc.Model.from_json("{}")
    except ValueError as e:
        print("schema error surfaced:", str(e).split(":")[0])
    print("ok")


if __name__ == "__main__":
    main()
