"""Verdict registry shared by the acceptance tests and the terminal summary."""

TITLES = {
    1: "design validity",
    2: "side-lobe landmark and monotonicity",
    3: "Dolph-Chebyshev equiripple level",
    4: "plain-OFDM BER against the closed form",
    5: "zero-forcing exactness",
    6: "BER ordering designed vs Dolph-Chebyshev",
    7: "PAPR ordering",
    8: "post-equalization SNR formula",
    9: "sigma-tilde consistency",
    10: "LP solver against vertex enumeration",
    11: "determinism across re-runs and threads",
}
VERDICTS: dict[int, str] = {}


def record(number: int, checks: dict, detail: str) -> None:
    """Store and print one verdict line, then fail the calling test if needed."""
    ok = all(bool(v) for v in checks.values())
    line = f"[{number:2d}] {'PASS' if ok else 'FAIL'}  {TITLES[number]}: {detail}"
    VERDICTS[number] = line
    print(line)
    failed = [name for name, v in checks.items() if not v]
    assert ok, f"{TITLES[number]} failed checks {failed}; {detail}"
