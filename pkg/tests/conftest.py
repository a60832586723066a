def pytest_terminal_summary(terminalreporter):
    import test_acceptance as acc

    lines = []
    for outcome in ('passed', 'failed'):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != 'call' or 'test_acceptance.py::test_ac' not in rep.nodeid:
                continue
            number = int(rep.nodeid.split('::test_ac')[1][:2])
            lines.append((number, acc.status_line(number, outcome == 'passed', rep.duration)))
    if lines:
        terminalreporter.section('acceptance criteria')
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
