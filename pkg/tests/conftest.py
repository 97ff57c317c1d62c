def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in mod.CRITERIA:
        if key in mod.RESULTS:
            terminalreporter.write_line(mod.RESULTS[key].line())
