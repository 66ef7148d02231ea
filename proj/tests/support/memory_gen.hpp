#pragma once

#include <random>
#include <string>
#include <vector>

#include "playforge/memory/store.hpp"

namespace playforge::testing {

// Random save/query workload over a small tag space, plus the scoping oracle.
class MemoryWorkload {
public:
    explicit MemoryWorkload(unsigned seed) : rng_(seed) {}

    memory::MemoryEntry random_entry() {
        using namespace memory;
        MemoryEntry e;
        e.layer = static_cast<Layer>(rng_() % 3);
        switch (e.layer) {
        case Layer::skill: e.owner = rng_() % 2 ? Owner::game_agent : Owner::gui_player; break;
        default: e.owner = Owner::shared; break;
        }
        e.kind = static_cast<Kind>(rng_() % 6);
        e.archetype = archetypes_[rng_() % archetypes_.size()];
        e.task_id = tasks_[rng_() % tasks_.size()];
        e.round = 1 + static_cast<int>(rng_() % 5);
        e.content = "note-" + std::to_string(rng_() % 50);
        return e;
    }

    memory::MemoryQuery random_query() {
        using namespace memory;
        MemoryQuery q;
        q.requester = rng_() % 2 ? Owner::game_agent : Owner::gui_player;
        if (rng_() % 2) q.archetype = archetypes_[rng_() % archetypes_.size()];
        q.task_id = tasks_[rng_() % tasks_.size()];
        q.layers = ablation_view(static_cast<Ablation>(rng_() % 4));
        return q;
    }

    bool coin() { return rng_() % 2 == 0; }

    // Returns an empty string when `result` honours every scoping rule.
    static std::string violation(const memory::MemoryQuery& q,
                                 const std::vector<memory::MemoryEntry>& result) {
        using namespace memory;
        for (const auto& e : result) {
            if (!q.layers.count(e.layer)) return "entry " + e.id + " outside the layer subset";
            if (e.layer == Layer::episode_shared && e.task_id != q.task_id) {
                return "episode entry " + e.id + " from another task";
            }
            if (e.layer == Layer::skill && e.owner != q.requester) {
                return "skill entry " + e.id + " owned by the other agent";
            }
            if (q.archetype && !e.archetype.empty() && e.archetype != *q.archetype) {
                return "entry " + e.id + " with the wrong archetype";
            }
        }
        for (std::size_t i = 1; i < result.size(); ++i) {
            if (result[i - 1].created_at <= result[i].created_at) return "not newest-first";
        }
        return {};
    }

    // Brute-force expected result from the full entry list.
    static std::vector<std::string> expected_ids(const memory::MemoryQuery& q,
                                                 const std::vector<memory::MemoryEntry>& all) {
        using namespace memory;
        std::vector<std::string> ids;
        for (auto it = all.rbegin(); it != all.rend(); ++it) {
            const auto& e = *it;
            bool ok = q.layers.count(e.layer) > 0;
            ok = ok && (!q.archetype || e.archetype.empty() || e.archetype == *q.archetype);
            if (e.layer == Layer::episode_shared) ok = ok && e.task_id == q.task_id;
            if (e.layer == Layer::skill) ok = ok && e.owner == q.requester;
            if (ok) ids.push_back(e.id);
        }
        return ids;
    }

private:
    std::mt19937 rng_;
    std::vector<std::string> archetypes_ = {"puzzle", "platformer", "card", "", "tower-defense"};
    std::vector<std::string> tasks_ = {"t1", "t2", "t3"};
};

}  // namespace playforge::testing
