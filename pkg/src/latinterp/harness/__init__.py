"""Instance files, verification suites, reports and the ``verify`` CLI."""
