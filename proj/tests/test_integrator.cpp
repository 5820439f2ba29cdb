#include <doctest.h>
TEST_SUITE_BEGIN("integrator");
TEST_SUITE_END();
