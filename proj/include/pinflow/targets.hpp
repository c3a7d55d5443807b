#pragma once

#include <string>
#include <vector>

#include "pinflow/errors.hpp"

namespace pinflow {

enum class HeadKind { Deterministic, Probabilistic };

struct HeadSpec {
    std::string name;
    std::string unit;
    HeadKind kind = HeadKind::Deterministic;
};

/// Ordered list of prediction heads. Order fixes target vector layout,
/// report ordering and checkpoint tensor naming.
struct TargetSpec {
    std::vector<HeadSpec> heads;

    std::size_t size() const { return heads.size(); }

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < heads.size(); ++i)
            if (heads[i].name == name) return static_cast<int>(i);
        return -1;
    }

    void check() const {
        if (heads.empty()) throw Error("EmptyTargetSpec", "at least one head required");
        for (std::size_t i = 0; i < heads.size(); ++i)
            for (std::size_t j = i + 1; j < heads.size(); ++j)
                if (heads[i].name == heads[j].name)
                    throw Error("DuplicateHead", "head name " + heads[i].name + " repeated");
    }
};

}  // namespace pinflow
