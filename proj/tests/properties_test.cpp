#include "property_checks.hpp"

#include <doctest.h>

using namespace rssmix;

namespace {

void require(const checks::Outcome& o)
{
    INFO(o.detail);
    CHECK(o.pass);
}

}  // namespace

TEST_CASE("property: doubly stochastic outputs")
{
    require(checks::doubly_stochastic_outputs(50));
}

TEST_CASE("property: order statistic identities")
{
    require(checks::order_stat_identities());
}

TEST_CASE("property: zeta weight identities")
{
    require(checks::zeta_weight_identities(50));
}

TEST_CASE("property: conjugate conditionals match quadrature")
{
    require(checks::srs_conditionals_match_quadrature());
}

TEST_CASE("property: two-state independence chain")
{
    require(checks::two_state_mh_frequencies());
}

TEST_CASE("property: EM objective never decreases")
{
    require(checks::em_q_monotone(20));
}
