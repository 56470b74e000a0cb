#include <doctest.h>
#include "srouda/experiment.hpp"

TEST_CASE("placeholder") { CHECK(true); }
