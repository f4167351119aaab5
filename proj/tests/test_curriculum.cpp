#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "autocoach/curriculum.hpp"

using namespace autocoach;

TEST_CASE("the curriculum set has exactly 12 members") {
    REQUIRE(CurriculumSet::size() == 12);
    REQUIRE(CurriculumSet::members().size() == 12);
    REQUIRE(CurriculumSet::contains({0, 0}));
    REQUIRE(CurriculumSet::contains({3, 2}));
    REQUIRE_FALSE(CurriculumSet::contains({4, 0}));
    REQUIRE_FALSE(CurriculumSet::contains({0, 3}));
    REQUIRE_FALSE(CurriculumSet::contains({-1, 0}));
}

TEST_CASE("epsilon = 0 always deploys the LLM choice") {
    Rng rng(1);
    const CurriculumId c{2, 1};
    for (int i = 0; i < 1000; ++i) {
        const auto [id, origin] = select_curriculum(c, 0.0, rng);
        REQUIRE(id == c);
        REQUIRE(origin == CurriculumOrigin::llm);
    }
}

TEST_CASE("epsilon = 1 is uniform over the set") {
    Rng rng(99);
    std::map<std::pair<int, int>, int> counts;
    const int draws = 12000;
    for (int i = 0; i < draws; ++i) {
        const auto [id, origin] = select_curriculum({0, 0}, 1.0, rng);
        REQUIRE(origin == CurriculumOrigin::random);
        ++counts[{id.density, id.motion_mode}];
    }
    REQUIRE(counts.size() == 12);
    for (const auto& [key, n] : counts) {
        const double freq = static_cast<double>(n) / draws;
        REQUIRE(std::abs(freq - 1.0 / 12.0) < 0.02);
    }
}

TEST_CASE("epsilon = 0.5 yields a random origin about half the time") {
    Rng rng(7);
    int random_count = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const auto [id, origin] = select_curriculum({1, 1}, 0.5, rng);
        if (origin == CurriculumOrigin::random) ++random_count;
    }
    const double rate = static_cast<double>(random_count) / draws;
    REQUIRE(std::abs(rate - 0.5) < 0.02);
}

TEST_CASE("select never returns a non-member") {
    Rng rng(3);
    for (int i = 0; i < 20000; ++i) {
        const auto [id, origin] = select_curriculum({3, 2}, 0.7, rng);
        REQUIRE(CurriculumSet::contains(id));
    }
    REQUIRE_THROWS_AS(select_curriculum({9, 0}, 0.5, rng), UsageError);
}

TEST_CASE("epsilon schedule decays linearly to zero and stays there") {
    const EpsilonSchedule s{0.3, 0.8, 1000};
    REQUIRE(s.at(0) == Catch::Approx(0.3));
    REQUIRE(s.at(400) == Catch::Approx(0.15));
    REQUIRE(s.at(800) == Catch::Approx(0.0));
    REQUIRE(s.at(999) == 0.0);
    for (int e = 1; e < 1000; ++e) REQUIRE(s.at(e) <= s.at(e - 1));
}

TEST_CASE("well-formed selection tag decodes") {
    const auto r = decode_curriculum("I pick a gentle start.\n<curriculum density=1 mode=2/>\nThanks.");
    REQUIRE(r.ok());
    REQUIRE(r.id->density == 1);
    REQUIRE(r.id->motion_mode == 2);
    REQUIRE(r.id->density_level() == Density::low);
    REQUIRE(r.id->mode() == MotionMode::interactive);
}

TEST_CASE("tag tolerates surrounding whitespace variants") {
    const auto r = decode_curriculum("<curriculum  density=0  mode=0 />");
    REQUIRE(r.ok());
    REQUIRE(r.id->density == 0);
}

TEST_CASE("prose without a tag is a missing-tag decode error") {
    const auto r = decode_curriculum("Start with the empty road, stationary vehicles.");
    REQUIRE_FALSE(r.ok());
    REQUIRE(*r.error == CurriculumDecodeError::missing_tag);
}

TEST_CASE("duplicate tags are rejected") {
    const auto r = decode_curriculum("<curriculum density=0 mode=0/>\n<curriculum density=1 mode=1/>");
    REQUIRE_FALSE(r.ok());
    REQUIRE(*r.error == CurriculumDecodeError::duplicate_tag);
}

TEST_CASE("non-integer fields are rejected") {
    const auto r = decode_curriculum("<curriculum density=low mode=0/>");
    REQUIRE_FALSE(r.ok());
    REQUIRE(*r.error == CurriculumDecodeError::non_integer_field);
}

TEST_CASE("out-of-range pairs are rejected") {
    const auto r = decode_curriculum("<curriculum density=9 mode=0/>");
    REQUIRE_FALSE(r.ok());
    REQUIRE(*r.error == CurriculumDecodeError::out_of_range);
}

TEST_CASE("curriculum history enforces strictly increasing episodes") {
    CurriculumHistory h;
    h.append({0, {0, 0}, {0, 0}, CurriculumOrigin::llm, "start"});
    h.append({100, {1, 0}, {1, 0}, CurriculumOrigin::llm, "step up"});
    REQUIRE_THROWS_AS(h.append({100, {1, 1}, {1, 1}, CurriculumOrigin::llm, "dup"}), UsageError);
    REQUIRE(h.latest()->episode == 100);
}
