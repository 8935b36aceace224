#pragma once

#include <deque>

#include "bfpa/bfpa.hpp"

namespace bfpa::test {

/// Profiles are expensive to tabulate; share one instance per
/// (constellation, decoder) across the whole test binary, backed by the
/// on-disk cache between runs.
inline const MiProfile& profile(const std::string& name, Decoder dec = Decoder::cm) {
    struct Key {
        std::string name;
        Decoder dec;
        MiProfile profile;
    };
    static std::deque<Key> store;  // stable references under growth
    for (const auto& k : store)
        if (k.name == name && k.dec == dec) return k.profile;
    if (name == "gaussian") {
        store.push_back({name, dec, MiProfile::gaussian_input()});
    } else {
        store.push_back({name, dec, MiProfile::get_cached(make_constellation(name), dec)});
    }
    return store.back().profile;
}

/// Random gain vector with entries on a wide dynamic range, for property
/// checks.
inline GainVector random_gains(StreamRng& rng, int blocks, double spread_db = 25.0) {
    GainVector g(blocks);
    for (auto& x : g) x = std::pow(10.0, spread_db * (rng.next_unit() - 0.5) / 10.0);
    return g;
}

}  // namespace bfpa::test
