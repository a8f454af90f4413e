#include "chainstage/error.hpp"
#include "chainstage/util.hpp"

#include <catch_amalgamated.hpp>

#include <set>

using namespace chainstage;

TEST_CASE("timestamps round trip in strict form", "[util]") {
    auto t = parse_timestamp("2024-01-15T09:00:00Z");
    REQUIRE(t);
    CHECK(format_timestamp(*t) == "2024-01-15T09:00:00Z");
    CHECK_FALSE(parse_timestamp("2024-01-15 09:00:00Z"));
    CHECK_FALSE(parse_timestamp("2024-02-30T09:00:00Z"));
    CHECK_FALSE(parse_timestamp("2024-01-15T09:00:00+01:00"));
    CHECK_FALSE(parse_timestamp(""));
}

TEST_CASE("stepping clock advances one second per call", "[util]") {
    auto origin = *parse_timestamp("2024-01-15T09:00:00Z");
    auto clock = stepping_clock(origin);
    CHECK(clock() == origin);
    CHECK(clock() == origin + std::chrono::seconds(1));
    auto copy = clock;  // copies share the counter
    CHECK(copy() == origin + std::chrono::seconds(2));
}

TEST_CASE("ulids are 26 crockford characters and unique", "[util]") {
    std::set<std::string> seen;
    for (int i = 0; i < 1000; ++i) {
        auto id = new_ulid();
        REQUIRE(id.size() == 26);
        REQUIRE(id.find_first_not_of("0123456789ABCDEFGHJKMNPQRSTVWXYZ") == std::string::npos);
        seen.insert(id);
    }
    CHECK(seen.size() == 1000);
}

TEST_CASE("string helpers", "[util]") {
    CHECK(trim("  a b \n") == "a b");
    CHECK(is_blank(" \t\n"));
    CHECK_FALSE(is_blank(" x "));
    CHECK(word_count("  nah  Leslie deserved\tit ") == 4);
    CHECK(utf8_length("café 🩰") == 6);
    CHECK(to_lower_ascii("If Student") == "if student");
}

TEST_CASE("error codes render as upper snake case", "[util]") {
    CHECK(to_string(ErrorCode::SessionNotFound) == "SESSION_NOT_FOUND");
    auto e = Error::schema("nodes[2].colour", "unknown field");
    CHECK(e.code() == ErrorCode::SchemaError);
    CHECK(e.field() == "nodes[2].colour");
    auto r = Error::rate_limited(2.5, "slow down");
    CHECK(r.retry_after() == 2.5);
}
