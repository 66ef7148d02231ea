#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace playforge::memory {

using nlohmann::json;

enum class Layer { episode_shared, skill, world };
enum class Owner { game_agent, gui_player, shared };
enum class Kind { pitfall, fix_pattern, decision, interaction_pattern, false_positive, observation };

std::string_view to_string(Layer v);
std::string_view to_string(Owner v);
std::string_view to_string(Kind v);
std::optional<Layer> parse_layer(std::string_view text);
std::optional<Owner> parse_owner(std::string_view text);
std::optional<Kind> parse_kind(std::string_view text);

struct MemoryEntry {
    std::string id;         // assigned by the store when empty
    Layer layer = Layer::world;
    Owner owner = Owner::shared;
    Kind kind = Kind::observation;
    std::string archetype;  // free-form tag, seeded with genre names
    std::string content;
    std::string task_id;    // required for episode-shared entries
    int round = 0;
    std::uint64_t created_at = 0;  // store-assigned logical clock, strictly increasing

    bool operator==(const MemoryEntry&) const = default;
};

using LayerSet = std::set<Layer>;

struct MemoryQuery {
    Owner requester = Owner::game_agent;
    std::optional<std::string> archetype;
    std::string task_id;
    LayerSet layers = {Layer::episode_shared, Layer::skill, Layer::world};
};

enum class Ablation { none, episode_only, episode_skill, full };

std::string_view to_string(Ablation v);
std::optional<Ablation> parse_ablation(std::string_view text);
LayerSet ablation_view(Ablation config);

// Throws Errc::consistency_violation when layer/owner/task rules are broken.
void check_consistency(const MemoryEntry& entry);

void to_json(json& j, const MemoryEntry& e);
void from_json(const json& j, MemoryEntry& e);

// Three-layer tagged store backed by an append-only JSON-lines log.
//
//   <dir>/log.jsonl     one MemoryEntry per line, in save order
//   <dir>/access.jsonl  one record per visible() call
//
// Episode entries stay in the log after their task ends; they are hidden
// at query time instead. Many readers may query concurrently; saves are
// serialized and become visible atomically.
class MemoryStore {
public:
    // Opens (creating if needed) the store in `dir`, replaying the log.
    explicit MemoryStore(std::filesystem::path dir);

    MemoryStore(const MemoryStore&) = delete;
    MemoryStore& operator=(const MemoryStore&) = delete;

    std::string save(MemoryEntry entry);

    // Episode entries of query.task_id, skill entries owned by the requester,
    // and all world entries; filtered by archetype and layer subset; newest first.
    std::vector<MemoryEntry> visible(const MemoryQuery& query);

    std::size_t size() const;
    std::size_t read_count() const;
    std::vector<MemoryEntry> all() const;

    // Rewrites the log dropping later duplicates of identical
    // (layer, owner, kind, archetype, content) entries. Returns entries removed.
    std::size_t compact();

    const std::filesystem::path& dir() const { return dir_; }

private:
    void append_line(const std::filesystem::path& file, const std::string& line);

    std::filesystem::path dir_;
    mutable std::shared_mutex mutex_;
    mutable std::mutex access_mutex_;
    std::vector<MemoryEntry> entries_;
    std::uint64_t clock_ = 0;
    std::size_t reads_ = 0;
};

}  // namespace playforge::memory
