#ifndef KGESYM_TESTS_HELPERS_HPP
#define KGESYM_TESTS_HELPERS_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kgesym/data.hpp"
#include "kgesym/rng.hpp"

namespace testutil {

using kgesym::Split;
using kgesym::Triple;
using kgesym::TripleStore;

struct NameTriple {
    std::string head, relation, tail;
};

inline TripleStore make_store(const std::vector<NameTriple>& train,
                              const std::vector<NameTriple>& valid = {},
                              const std::vector<NameTriple>& test = {}) {
    TripleStore::Builder b;
    auto add = [&](Split s, const std::vector<NameTriple>& triples) {
        for (const auto& nt : triples) {
            Triple t;
            t.head = b.intern_entity(nt.head);
            t.relation = b.intern_relation(nt.relation);
            t.tail = b.intern_entity(nt.tail);
            b.add_triple(s, t);
        }
    };
    add(Split::train, train);
    add(Split::valid, valid);
    add(Split::test, test);
    return b.build();
}

// Random store with every split non-empty and no within-split duplicates.
inline TripleStore random_store(kgesym::Rng& rng, std::size_t max_entities = 10,
                                std::size_t max_relations = 3, std::size_t max_per_split = 12) {
    const std::size_t n_entities = 2 + kgesym::uniform_index(rng, max_entities - 1);
    const std::size_t n_relations = 1 + kgesym::uniform_index(rng, max_relations);
    TripleStore::Builder b;
    for (std::size_t e = 0; e < n_entities; ++e) b.intern_entity("e" + std::to_string(e));
    for (std::size_t r = 0; r < n_relations; ++r) b.intern_relation("r" + std::to_string(r));

    for (Split s : kgesym::kSplits) {
        const std::size_t want = 1 + kgesym::uniform_index(rng, max_per_split);
        kgesym::TripleSet seen;
        std::size_t guard = 0;
        while (seen.size() < want && ++guard < 1000) {
            Triple t;
            t.head = static_cast<kgesym::EntityId>(kgesym::uniform_index(rng, n_entities));
            t.relation = static_cast<kgesym::RelationId>(kgesym::uniform_index(rng, n_relations));
            t.tail = static_cast<kgesym::EntityId>(kgesym::uniform_index(rng, n_entities));
            if (!seen.insert(t).second) continue;
            b.add_triple(s, t);
        }
    }
    return b.build();
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("kgesym_" + tag + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testutil

#endif
