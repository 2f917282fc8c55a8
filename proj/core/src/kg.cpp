#include "kgcp/kg.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace kgcp {

std::uint32_t Dictionary::add(std::string_view name) {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Dictionary::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  return std::nullopt;
}

void KnowledgeGraph::validate() const {
  const auto check = [&](const std::vector<Triple>& split, std::string_view split_name) {
    for (std::size_t i = 0; i < split.size(); ++i) {
      const Triple& t = split[i];
      if (t.head >= num_entities() || t.tail >= num_entities() || t.relation >= num_relations()) {
        throw GraphError(fmt::format("{} triple {} references an unknown id", split_name, i));
      }
    }
  };
  check(train, "train");
  check(valid, "valid");
  check(test, "test");

  const std::set<Triple> train_set(train.begin(), train.end());
  const std::set<Triple> valid_set(valid.begin(), valid.end());
  for (const Triple& t : valid) {
    if (train_set.contains(t)) {
      throw GraphError(fmt::format("triple ({}, {}, {}) occurs in both train and valid",
                                   entities.name(t.head), relations.name(t.relation),
                                   entities.name(t.tail)));
    }
  }
  for (const Triple& t : test) {
    if (train_set.contains(t) || valid_set.contains(t)) {
      throw GraphError(fmt::format("test triple ({}, {}, {}) also occurs in {}",
                                   entities.name(t.head), relations.name(t.relation),
                                   entities.name(t.tail), train_set.contains(t) ? "train" : "valid"));
    }
  }
}

std::vector<Triple> parse_triples(std::istream& in, Dictionary& entities, Dictionary& relations) {
  std::vector<Triple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::string_view rest(line);
    std::string_view fields[3];
    std::size_t count = 0;
    while (true) {
      const auto tab = rest.find('\t');
      if (count < 3) fields[count] = rest.substr(0, tab);
      ++count;
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (count != 3) {
      throw ParseError(fmt::format("line {}: expected 3 tab-separated fields, found {}", line_no, count),
                       line_no);
    }
    for (const auto& f : fields) {
      if (f.empty()) throw ParseError(fmt::format("line {}: empty field", line_no), line_no);
    }
    const EntityId h = entities.add(fields[0]);
    const RelationId r = relations.add(fields[1]);
    const EntityId t = entities.add(fields[2]);
    triples.push_back({h, r, t});
  }
  if (triples.empty()) throw ParseError("no triples found", 0);
  return triples;
}

std::vector<Triple> parse_triples(const std::filesystem::path& path, Dictionary& entities,
                                  Dictionary& relations) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open {}", path.string()), 0);
  try {
    return parse_triples(in, entities, relations);
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()), e.line());
  }
}

KnowledgeGraph load_graph(const std::filesystem::path& train, const std::filesystem::path& valid,
                          const std::filesystem::path& test) {
  KnowledgeGraph kg;
  kg.train = parse_triples(train, kg.entities, kg.relations);
  kg.valid = parse_triples(valid, kg.entities, kg.relations);
  kg.test = parse_triples(test, kg.entities, kg.relations);
  kg.validate();
  return kg;
}

void write_triples(std::ostream& out, const KnowledgeGraph& kg, std::span<const Triple> triples) {
  for (const Triple& t : triples) {
    out << kg.entities.name(t.head) << '\t' << kg.relations.name(t.relation) << '\t'
        << kg.entities.name(t.tail) << '\n';
  }
}

std::string dictionary_json(const KnowledgeGraph& kg) {
  nlohmann::json j;
  j["entities"] = kg.entities.names();
  j["relations"] = kg.relations.names();
  return j.dump();
}

std::vector<QueryExample> make_query_examples(std::span<const Triple> triples) {
  std::vector<QueryExample> out;
  out.reserve(2 * triples.size());
  for (const Triple& t : triples) {
    out.push_back({tail_query(t), t.tail});
    out.push_back({head_query(t), t.head});
  }
  return out;
}

FilterIndex::FilterIndex(const KnowledgeGraph& kg, unsigned splits) {
  const auto add = [&](const std::vector<Triple>& split) {
    for (const Triple& t : split) {
      index_[tail_query(t)].push_back(t.tail);
      index_[head_query(t)].push_back(t.head);
    }
  };
  if (splits & kTrain) add(kg.train);
  if (splits & kValid) add(kg.valid);
  if (splits & kTest) add(kg.test);
  for (auto& [q, answers] : index_) {
    std::sort(answers.begin(), answers.end());
    answers.erase(std::unique(answers.begin(), answers.end()), answers.end());
  }
}

std::span<const EntityId> FilterIndex::answers(const Query& q) const {
  if (auto it = index_.find(q); it != index_.end()) return it->second;
  return {};
}

bool FilterIndex::contains(const Query& q, EntityId e) const {
  const auto a = answers(q);
  return std::binary_search(a.begin(), a.end(), e);
}

FilterIndex build_filter_index(const KnowledgeGraph& kg, unsigned splits) {
  if ((splits & (kTrain | kValid | kTest)) == 0) {
    throw std::invalid_argument("build_filter_index: no split selected");
  }
  return FilterIndex(kg, splits);
}

std::vector<EntityId> CandidateFilter::removed(const Query& q) const {
  if (index == nullptr) return {};
  const auto known = index->answers(q);
  std::vector<EntityId> out;
  out.reserve(known.size());
  for (EntityId e : known) {
    if (!exempt || e != *exempt) out.push_back(e);
  }
  return out;
}

std::size_t candidate_count(const CandidateFilter& filter, const Query& q, std::size_t num_entities) {
  return num_entities - filter.removed(q).size();
}

}  // namespace kgcp
