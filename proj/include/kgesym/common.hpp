#ifndef KGESYM_COMMON_HPP
#define KGESYM_COMMON_HPP

#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace kgesym {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

enum class Split { train = 0, valid = 1, test = 2 };
inline constexpr int kSplitCount = 3;
inline constexpr Split kSplits[kSplitCount] = {Split::train, Split::valid, Split::test};

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        case Split::test: return "test";
    }
    return "?";
}

// Scope over which symmetry ratios are computed. `all` means the set union
// of the three splits (cross-split duplicates counted once).
enum class SplitSelector { train = 0, valid = 1, test = 2, all = 3 };

inline const char* selector_name(SplitSelector s) {
    switch (s) {
        case SplitSelector::train: return "train";
        case SplitSelector::valid: return "valid";
        case SplitSelector::test: return "test";
        case SplitSelector::all: return "all";
    }
    return "?";
}

enum class Norm { l1, l2 };

inline const char* norm_name(Norm n) { return n == Norm::l1 ? "l1" : "l2"; }

enum class ModelKind { transe, transh, transd };

inline const char* model_name(ModelKind k) {
    switch (k) {
        case ModelKind::transe: return "transe";
        case ModelKind::transh: return "transh";
        case ModelKind::transd: return "transd";
    }
    return "?";
}

struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;

    friend bool operator==(const Triple&, const Triple&) = default;

    Triple reversed() const { return {tail, relation, head}; }
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t x = static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.head));
        x = x * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(t.relation);
        x = x * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(t.tail);
        x ^= x >> 32;
        x *= 0xff51afd7ed558ccdULL;
        x ^= x >> 32;
        return static_cast<std::size_t>(x);
    }
};

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
    std::ostringstream os;
    (os << ... << std::forward<Args>(args));
    return os.str();
}

}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
    throw Error(detail::concat(std::forward<Args>(args)...));
}

// FNV-1a over raw bytes; used for dataset fingerprints in run manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace kgesym

#endif
