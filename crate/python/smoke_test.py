"""Smoke test for the Python extension.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml --release`.
"""

import json
import math
import sys

import elastic_tep as et


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    mesh = et.Mesh("unit-square", 1)
    assert len(mesh.triangles) == 32, mesh
    assert mesh.space_dimension("b3") == 134
    assert mesh.dump().startswith("vertices ")
    assert "l-shape" in et.domains()

    lam = et.solve_bielastic("unit-square", 1, 0.25, 1 / 16, k=2)
    assert close(lam[0], 25.35774, 5e-4), lam

    report = et.run_example(4, levels=[1])
    assert close(report.eigenvalues[0][4].real, 202.60084, 5e-4)
    assert json.loads(report.to_json())["metadata"]["example"] == 4
    assert report.to_csv().splitlines()[0] == "level,h,dofs,branch,value_re,value_im,order,residual,seconds"

    tep = et.solve_tep("unit-square", 1, 0.25, 0.25, "1/20", "3", k=2, method="quadratic")
    assert close(tep[0].real, 8.49982, 1e-5), tep
    assert math.isclose(tep[0].imag, 0.0, abs_tol=1e-12)

    try:
        et.Mesh("disk", 1)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown domain accepted")

    for name, passed, detail in et.self_test():
        print(("PASS" if passed else "FAIL"), name, detail)
        assert passed
    print("python smoke test ok")


if __name__ == "__main__":
    sys.exit(main())
