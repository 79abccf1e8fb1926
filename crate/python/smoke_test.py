"""Quick check that the pyrydberg extension loads and gives sane numbers.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install --no-build-isolation dist/pyrydberg-*.whl
"""

import math

import pyrydberg as pr


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    p = pr.AtomParams.fig2()
    assert p.antiblockade_satisfied()
    assert close(p.optimal_time(), 40 * math.pi, 1e-9)

    a, b, c, d = pr.closed_form_coeffs(math.pi)
    assert close(a, 0.5 - 0.5j, 1e-12) and close(c, 0.5 + 0.5j, 1e-12)
    assert abs(b) < 1e-12 and abs(d) < 1e-12

    h = pr.effective_hamiltonian(p.with_gamma(0.0))
    assert len(h) == 5
    for i in range(5):
        for j in range(5):
            assert close(h[i][j], h[j][i].conjugate(), 1e-15)

    times, fids = pr.fidelity_trace(p.with_gamma(0.0), initial="01", model="closed_form", samples=20)
    assert len(times) == 21 and close(fids[-1], 1.0, 1e-12)

    branches = pr.run_fusion("ghz", 3, 3)
    assert [br.outcome for br in branches] == ["00", "01", "10", "11", "rr"]
    assert all(close(br.probability, 0.25, 1e-12) for br in branches[:4])
    labels, amps = branches[0].post_state
    assert close(amps[labels.index("1111")] / amps[labels.index("0000")], 1j, 1e-12)

    assert pr.w_success_probability(3, 4) == (5, 12)
    assert close(pr.fusion_fidelity("w", 3, 4), 1.0, 1e-12)

    f_phys = pr.fusion_fidelity("ghz", 3, 3, gate="physical")
    assert 0.98 < f_phys < 1.0, f_phys

    labels, amps = pr.w_state(3)
    assert close(abs(amps[labels.index("010")]), 1 / math.sqrt(3), 1e-12)

    try:
        pr.AtomParams(1.0, 1.0, 40.0, 40.0, 80.0, gamma=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative gamma accepted")

    print(f"smoke test ok (physical GHZ fusion fidelity {f_phys:.6f})")


if __name__ == "__main__":
    main()
