import pytest

# criterion number -> [title, [(nodeid, status, detail)]]
_CRITERIA: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        n, title = mark.args
        entry = _CRITERIA.setdefault(n, [title, []])
        if hasattr(rep, "wasxfail"):
            status = "xfail" if rep.skipped else "xpass"
        else:
            status = rep.outcome
        detail = "; ".join(str(v) for k, v in rep.user_properties if k == "detail")
        if status == "xfail" and not detail:
            detail = rep.wasxfail
        entry[1].append((item.name, status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, results = _CRITERIA[n]
        ok = all(status == "passed" for _, status, _ in results)
        tr.write_line(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}")
        for name, status, detail in results:
            tail = f": {detail}" if detail else ""
            tr.write_line(f"    {status:<6} {name}{tail}")
