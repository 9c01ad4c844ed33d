ACCEPTANCE_RESULTS = []


def record_criterion(number, description, passed, elapsed, limit):
    ACCEPTANCE_RESULTS.append(
        {
            "number": number,
            "description": description,
            "passed": passed,
            "elapsed": elapsed,
            "limit": limit,
        }
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for row in sorted(ACCEPTANCE_RESULTS, key=lambda r: r["number"]):
        status = "PASS" if row["passed"] else "FAIL"
        terminalreporter.write_line(
            f"criterion {row['number']:>2}: {status}  "
            f"({row['elapsed']:.2f}s / limit {row['limit']:.0f}s)  {row['description']}"
        )
