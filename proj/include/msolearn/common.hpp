#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace msolearn {

// Reserved labels realizing the ordered variant of disjoint union.
inline const std::string kLeftMark = "@L";
inline const std::string kRightMark = "@R";

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed textual input (formula, expression, graph, ...).
struct parse_error : error {
    parse_error(const std::string& what, int line, int col)
        : error(what + " at " + std::to_string(line) + ":" + std::to_string(col)),
          line(line), col(col) {}
    int line, col;
};

// A configured node/work budget was exhausted; callers map this to exit code 3.
struct resource_cap_error : error {
    using error::error;
};

inline uint64_t fnv1a(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ULL) {
    auto p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t seed = 0xcbf29ce484222325ULL) {
    return fnv1a(s.data(), s.size(), seed);
}

inline uint64_t hash_mix(uint64_t h, uint64_t v) {
    return fnv1a(&v, sizeof v, h);
}

inline std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

// Counts work units inside recursive drivers; throws once the cap is hit.
class node_budget {
public:
    explicit node_budget(uint64_t cap) : cap_(cap) {}
    void charge(uint64_t n = 1) {
        used_ += n;
        if (cap_ != 0 && used_ > cap_)
            throw resource_cap_error("node budget exceeded (" + std::to_string(used_) +
                                     " > " + std::to_string(cap_) + ")");
    }
    uint64_t used() const { return used_; }

private:
    uint64_t cap_;
    uint64_t used_ = 0;
};

}  // namespace msolearn
