from log_fixtures import six_line_dir  # noqa: F401
