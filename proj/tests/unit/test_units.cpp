#include <doctest.h>

#include "ezvc/errors.hpp"
#include "ezvc/rng.hpp"
#include "ezvc/units.hpp"

using namespace ezvc;

namespace {
UnitSequence seq_of(std::vector<std::int32_t> units, bool deduped = false) {
    UnitSequence s;
    s.units = std::move(units);
    s.deduped = deduped;
    return s;
}
} // namespace

TEST_CASE("dedup collapses runs") {
    CHECK(dedup(seq_of({1, 1, 2, 2, 2, 3})).units == std::vector<std::int32_t>{1, 2, 3});
    CHECK(dedup(seq_of({})).units.empty());
    CHECK(dedup(seq_of({5, 5, 5, 5})).units == std::vector<std::int32_t>{5});
    CHECK(dedup(seq_of({1, 2, 1, 2})).units == std::vector<std::int32_t>{1, 2, 1, 2});
    CHECK(dedup(seq_of({7})).deduped);
}

TEST_CASE("dedup properties over random sequences") {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const int len = int(rng.uniform_int(0, 40));
        std::vector<std::int32_t> units(static_cast<size_t>(len));
        for (auto& u : units) u = std::int32_t(rng.uniform_int(0, 4)); // short alphabet forces runs
        const UnitSequence input = seq_of(units);
        const UnitSequence out = dedup(input);

        // idempotent
        CHECK(dedup(out).units == out.units);
        // no adjacent equal pair
        for (size_t i = 0; i + 1 < out.units.size(); ++i)
            CHECK(out.units[i] != out.units[i + 1]);
        // output equals the sequence of run-first elements (subsequence of input)
        std::vector<std::int32_t> run_firsts;
        for (size_t i = 0; i < units.size(); ++i)
            if (i == 0 || units[i] != units[i - 1]) run_firsts.push_back(units[i]);
        CHECK(out.units == run_firsts);
        // length law
        CHECK(out.units.size() <= units.size());
        if (out.units.size() == units.size()) CHECK(out.units == units);
    }
}

TEST_CASE("to_tokens pads with FILLER") {
    const UnitVocabulary vocab{500};
    CHECK(vocab.filler_id() == 500);
    CHECK(vocab.pad_id() == 501);
    CHECK(vocab.total_size() == 502);

    const auto tokens = to_tokens(seq_of({1, 2, 3}, true), vocab, 5);
    CHECK(tokens == std::vector<std::int32_t>{1, 2, 3, 500, 500});
    CHECK(to_tokens(seq_of({1, 2, 3}, true), vocab, 3) ==
          std::vector<std::int32_t>{1, 2, 3});
}

TEST_CASE("to_tokens never truncates") {
    const UnitVocabulary vocab{500};
    CHECK_THROWS_AS(to_tokens(seq_of({1, 2, 3}, true), vocab, 2), ContractError);
}

TEST_CASE("to_tokens contract checks") {
    const UnitVocabulary vocab{10};
    CHECK_THROWS_AS(to_tokens(seq_of({1, 2}, false), vocab, 4), ContractError);
    CHECK_THROWS_AS(to_tokens(seq_of({11}, true), vocab, 4), ContractError);
}
