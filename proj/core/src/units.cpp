#include "ezvc/units.hpp"

#include "ezvc/errors.hpp"

namespace ezvc {

UnitSequence dedup(const UnitSequence& seq) {
    UnitSequence out;
    out.deduped = true;
    out.units.reserve(seq.units.size());
    for (const std::int32_t u : seq.units)
        if (out.units.empty() || out.units.back() != u) out.units.push_back(u);
    return out;
}

std::vector<std::int32_t> to_tokens(const UnitSequence& seq, const UnitVocabulary& vocab,
                                    int target_len) {
    if (!seq.deduped) throw ContractError("to_tokens: sequence must be deduped");
    if (target_len < int(seq.units.size()))
        throw ContractError("to_tokens: target_len " + std::to_string(target_len) +
                            " < sequence length " + std::to_string(seq.units.size()));
    for (const std::int32_t u : seq.units)
        if (u < 0 || u >= vocab.k_units)
            throw ContractError("to_tokens: unit " + std::to_string(u) +
                                " outside vocabulary of " + std::to_string(vocab.k_units));

    std::vector<std::int32_t> tokens(seq.units.begin(), seq.units.end());
    tokens.resize(size_t(target_len), vocab.filler_id());
    return tokens;
}

} // namespace ezvc
