#pragma once

#include "ezvc/types.hpp"

#include <cstdint>
#include <vector>

namespace ezvc {

// Token vocabulary over discrete units: unit u keeps token id u, specials sit
// above the unit range.
struct UnitVocabulary {
    int k_units = 500;

    std::int32_t filler_id() const { return k_units; }
    std::int32_t pad_id() const { return k_units + 1; }
    int total_size() const { return k_units + 2; }
};

// Collapses every maximal run of equal adjacent units to one occurrence.
UnitSequence dedup(const UnitSequence& seq);

// Identity-mapped unit ids followed by FILLER up to target_len. Units are
// never truncated: target_len < length(seq) is a contract error.
std::vector<std::int32_t> to_tokens(const UnitSequence& seq, const UnitVocabulary& vocab,
                                    int target_len);

} // namespace ezvc
