"""Smoke test for the kondolab_py extension.

Build and install first, e.g.

    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/kondolab_py-*.whl
"""

import json
import math
import os
import tempfile

import kondolab_py as kl


def main():
    code = kl.SurfaceCode(4)
    assert code.num_qubits == 4 * 4 + 3 * 3
    assert len(code.stars) + len(code.plaquettes) == code.num_qubits - 1
    assert code.syndrome("Z", code.logical_z) == []
    assert len(code.syndrome("Z", [1 * 4 + 1])) == 2  # bulk horizontal edge (1, 1)

    assert kl.decode_contour(4, [0, 1], "report")["status"] == "tie"
    assert kl.decode_contour(4, [0, 1], "adversarial")["status"] == "logical_error"
    assert kl.failure_census(6, 3)["n_tie"] == 20

    assert abs(kl.matching_sum([0, 1, 2, 3], 1.0) - 1.173611) < 1e-6
    assert kl.matching_sum([0, 1, 2, 3, 4, 5], 0.0) == 15.0
    probe = kl.matching_scaling_probe(list(range(4, 17, 2)), 1.0)
    assert probe["trend"] == "bounded"

    assert kl.n_paths(100) == 100 * math.comb(100, 50)
    assert 0.997 <= kl.stirling_ratio(100) <= 1.005
    assert kl.classify_regime(0.5, 1.0) == "Critical"
    assert not kl.threshold_exists(0.3, 1.0)

    flow = kl.integrate_flow(0.05, 0.05, 0.05)
    assert flow.terminal == "StrongCoupling" and abs(flow.l_star - 20.0) < 1e-6
    fm = kl.integrate_flow(0.05, 0.05, -0.2)
    assert fm.terminal == "Localized" and abs(fm.jz_star + 0.193649) < 1e-4
    assert kl.classify_phase(0.1, 0.1, -0.3) == "FM"

    spec = kl.BathSpec(z="1/2", lambda_=0.02, tau_qec=0.5)
    ratio = spec.critical_coupling(100) / spec.critical_coupling(10)
    assert abs(ratio - math.sqrt(math.log(10) / math.log(100))) < 1e-12
    report = kl.BathSpec(lambda_=1.0, tau_qec=0.1).lifetime_report(8)
    assert report["phase"] == "AFM" and report["regime"] == "ShortRange"

    exact, approx = kl.memory_time(0.01, 1.0, 0.1)
    assert abs(exact - 0.99 ** -50) < 1e-9 and abs(approx - math.exp(0.5)) < 1e-9

    na = kl.preset_report("neutral_atom")
    assert na["checks"]["c_tau_over_a"] == 1e11 and na["checks"]["g_c"] == 2.5e-12

    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "life.csv")
        cfg = {"task": "lifetime", "output_path": out, "axes": {"L": [4, 8], "z": [1.0]}}
        task, path, rows = kl.run_sweep(json.dumps(cfg), workers=2)
        assert (task, rows) == ("lifetime", 2)
        with open(path) as fh:
            assert len(fh.read().splitlines()) == 3
        try:
            kl.run_sweep(json.dumps(cfg))
        except FileExistsError:
            pass
        else:
            raise AssertionError("overwrite was not refused")

    print("kondolab_py smoke test passed")


if __name__ == "__main__":
    main()
