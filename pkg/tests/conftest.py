"""Shared pytest hooks: acceptance-criterion pass/fail summary lines."""

import re

CRITERIA = {
    1: "score identity on random instances (runtime-capped)",
    2: "Fisher information: finite difference vs heat variance",
    3: "two-point trajectory heat vs projected-energy route",
    4: "exchange-model closed forms vs brute force on a parameter grid",
    5: "exchange-model worked precision bound (e-1)/sqrt(e)",
    6: "dephasing worked numbers cross-checked against brute force",
    7: "dephasing average trajectory heat equals Q",
    8: "low-temperature scaling exponents (runtime-capped)",
    9: "mean-force identities: reconstruction, Sylvester, dual deviation, UR",
    10: "weak-coupling collapse of the energy operator",
    11: "mutation sensitivity of the Fisher cross-check",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one pass/fail line per acceptance criterion."""
    results = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.getreports(status):
            if "test_acceptance" not in report.nodeid:
                continue
            match = re.search(r"test_criterion_(\d+)", report.nodeid)
            if match:
                num = int(match.group(1))
                ok = status == "passed"
                results[num] = results.get(num, True) and ok
    if not results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for num in sorted(CRITERIA):
        if num in results:
            verdict = "PASS" if results[num] else "FAIL"
        else:
            verdict = "NOT RUN"
        terminalreporter.write_line(f"  criterion {num:2d}: {verdict} - {CRITERIA[num]}")
