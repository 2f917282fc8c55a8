#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgcp {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Raised for malformed triple files. `line()` is 1-based, 0 when the error
/// is not tied to a line (e.g. an empty file).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised when a knowledge graph violates one of its structural invariants.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bidirectional name <-> dense id map. Ids are assigned in first-seen order.
class Dictionary {
 public:
  std::uint32_t add(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

struct KnowledgeGraph {
  Dictionary entities;
  Dictionary relations;
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;

  std::size_t num_entities() const noexcept { return entities.size(); }
  std::size_t num_relations() const noexcept { return relations.size(); }

  /// Throws GraphError on out-of-range ids or overlapping splits.
  void validate() const;
};

enum class Direction : std::uint8_t { Tail, Head };

/// Tail query <anchor, relation, ?> or head query <?, relation, anchor>.
struct Query {
  Direction direction = Direction::Tail;
  EntityId anchor = 0;
  RelationId relation = 0;

  friend bool operator==(const Query&, const Query&) = default;
};

struct QueryHash {
  std::size_t operator()(const Query& q) const noexcept {
    const std::uint64_t key = (static_cast<std::uint64_t>(q.anchor) << 33) ^
                              (static_cast<std::uint64_t>(q.relation) << 1) ^
                              static_cast<std::uint64_t>(q.direction);
    return std::hash<std::uint64_t>{}(key);
  }
};

struct QueryExample {
  Query query;
  EntityId answer = 0;
};

/// The triple obtained by filling the query's open slot with `answer`.
constexpr Triple materialize(const Query& q, EntityId answer) noexcept {
  return q.direction == Direction::Tail ? Triple{q.anchor, q.relation, answer}
                                        : Triple{answer, q.relation, q.anchor};
}

constexpr Query tail_query(const Triple& t) noexcept { return {Direction::Tail, t.head, t.relation}; }
constexpr Query head_query(const Triple& t) noexcept { return {Direction::Head, t.tail, t.relation}; }

/// Parses `head\trelation\ttail` lines, registering unseen names in the
/// dictionaries. Blank lines are skipped; a trailing '\r' is stripped.
std::vector<Triple> parse_triples(std::istream& in, Dictionary& entities, Dictionary& relations);
std::vector<Triple> parse_triples(const std::filesystem::path& path, Dictionary& entities,
                                  Dictionary& relations);

/// Loads the three splits in train, valid, test order and validates the graph.
KnowledgeGraph load_graph(const std::filesystem::path& train, const std::filesystem::path& valid,
                          const std::filesystem::path& test);

/// Writes one split as TSV using dictionary names.
void write_triples(std::ostream& out, const KnowledgeGraph& kg, std::span<const Triple> triples);

/// `{"entities": [...], "relations": [...]}` in id order.
std::string dictionary_json(const KnowledgeGraph& kg);

/// Two examples per triple, tail query first, in input order.
std::vector<QueryExample> make_query_examples(std::span<const Triple> triples);

enum SplitMask : unsigned {
  kTrain = 1u << 0,
  kValid = 1u << 1,
  kTest = 1u << 2,
};

/// Known answers per query, aggregated over the selected splits.
class FilterIndex {
 public:
  FilterIndex() = default;
  FilterIndex(const KnowledgeGraph& kg, unsigned splits);

  /// Sorted, duplicate-free; empty for queries never seen.
  std::span<const EntityId> answers(const Query& q) const;
  bool contains(const Query& q, EntityId e) const;

 private:
  std::unordered_map<Query, std::vector<EntityId>, QueryHash> index_;
};

FilterIndex build_filter_index(const KnowledgeGraph& kg, unsigned splits);

/// Filtering applied at prediction time: known-true answers other than
/// `exempt` are removed from the candidate set. A null index means unfiltered.
struct CandidateFilter {
  const FilterIndex* index = nullptr;
  std::optional<EntityId> exempt;

  /// Entity ids removed for `q`, sorted.
  std::vector<EntityId> removed(const Query& q) const;
};

/// Number of candidates left for `q` out of `num_entities`.
std::size_t candidate_count(const CandidateFilter& filter, const Query& q, std::size_t num_entities);

}  // namespace kgcp
