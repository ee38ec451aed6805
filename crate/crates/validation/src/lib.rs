//! Holds the `acceptance` test target; see `tests/acceptance/`.
