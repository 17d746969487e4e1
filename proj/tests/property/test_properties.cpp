#include "../support/fixtures.hpp"
#include "../support/properties.hpp"

#include <doctest.h>

using namespace appforge::testing;

namespace {

void require_ok(const PropertyOutcome& o, std::size_t min_cases) {
  INFO(o.summary());
  CHECK(o.cases >= min_cases);
  CHECK(o.ok());
}

}  // namespace

TEST_SUITE("accuracy") {
TEST_CASE("formula matches the integer oracle") { require_ok(check_accuracy_formula(kPropertySeed), 1000); }
TEST_CASE("bounds, monotonicity and pooling") { require_ok(check_accuracy_laws(kPropertySeed + 1), 1000); }
}

TEST_SUITE("patch") {
TEST_CASE("diff actions match a naive splice; corrupted context is rejected untouched") {
  TempDir scratch("appforge-prop-");
  require_ok(check_patch_oracle(kPropertySeed + 2, scratch.path()), 1200);
}
}

TEST_SUITE("cleaning") {
TEST_CASE("idempotent and non-destructive") { require_ok(check_cleaning(kPropertySeed + 3), 1000); }
TEST_CASE("entity table round-trips") { require_ok(check_entity_table(), 7); }
}

TEST_SUITE("parsers") {
TEST_CASE("malformed corpus") { require_ok(check_parser_corpus(malformed_corpus_path()), 50); }
}

TEST_SUITE("selection") {
TEST_CASE("best round matches brute force") { require_ok(check_best_round(kPropertySeed + 4), 1000); }
}
