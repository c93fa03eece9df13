// Entry point for the doctest unit suites; each suite is registered with
// ctest separately via --test-suite filtering.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
