#include "cdgnn/snap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

#include "cdgnn/csv.hpp"
#include "cdgnn/rng.hpp"
#include "cdgnn/text_io.hpp"

namespace cdgnn {

SnapInput read_snap(const std::string& edge_file, const std::string& community_file) {
  SnapInput input;
  {
    LineReader in(edge_file);
    std::string line;
    while (in.next(line)) {
      if (is_comment_or_blank(line)) continue;
      const auto f = split_fields(line);
      if (f.size() < 2)
        throw ParseError(edge_file + ":" + std::to_string(in.line_number()) +
                         ": expected two node ids");
      input.edges.emplace_back(parse_id(f[0], in), parse_id(f[1], in));
    }
  }
  {
    LineReader in(community_file);
    std::string line;
    while (in.next(line)) {
      if (is_comment_or_blank(line)) continue;
      std::vector<long long> members;
      for (const auto& f : split_fields(line)) members.push_back(parse_id(f, in));
      input.communities.push_back(std::move(members));
    }
  }
  return input;
}

SnapDataset snap_build(const SnapInput& input, const SnapCaps& caps) {
  SnapDataset out;

  // Dense ids in order of first appearance in the edge list.
  std::unordered_map<long long, NodeId> dense;
  std::vector<long long> original;
  auto intern = [&](long long raw) {
    auto [it, fresh] = dense.try_emplace(raw, static_cast<NodeId>(original.size()));
    if (fresh) original.push_back(raw);
    return it->second;
  };
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(input.edges.size());
  for (auto [a, b] : input.edges) {
    const NodeId u = intern(a), v = intern(b);
    if (u != v) edges.emplace_back(u, v);
  }
  const SparseGraph graph = SparseGraph::from_edges(original.size(), edges);

  // Communities: sorted dense member lists, oversized ones dropped.
  const std::size_t considered = std::min(caps.max_communities, input.communities.size());
  std::vector<std::vector<NodeId>> members(considered);
  std::vector<bool> usable(considered, false);
  std::vector<std::vector<std::size_t>> node_communities(original.size());
  for (std::size_t c = 0; c < considered; ++c) {
    const auto& raw = input.communities[c];
    for (long long id : raw) {
      const auto it = dense.find(id);
      if (it == dense.end())
        throw ParseError("community " + std::to_string(c) + " references unknown node " +
                         std::to_string(id));
      members[c].push_back(it->second);
    }
    std::sort(members[c].begin(), members[c].end());
    members[c].erase(std::unique(members[c].begin(), members[c].end()), members[c].end());
    if (members[c].size() > caps.max_community_size) {
      ++out.communities_oversized;
      continue;
    }
    usable[c] = true;
    ++out.communities_kept;
    for (NodeId v : members[c]) node_communities[v].push_back(c);
  }
  auto contains = [&](std::size_t c, NodeId v) {
    return std::binary_search(members[c].begin(), members[c].end(), v);
  };
  // Larger first; ties to the smaller community id.
  auto better = [&](std::size_t x, std::size_t y) {
    return members[x].size() != members[y].size() ? members[x].size() > members[y].size() : x < y;
  };
  auto pick = [&](NodeId in, NodeId out_node) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t c : node_communities[in])
      if (!contains(c, out_node) && (!best || better(c, *best))) best = c;
    return best;
  };

  // Community pairs in order of first discovery.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::map<std::pair<std::size_t, std::size_t>, bool> seen;
  for (const Edge& e : graph.edges()) {
    const auto c1 = pick(e.u, e.v);
    const auto c2 = pick(e.v, e.u);
    if (!c1 || !c2) continue;
    const auto key = std::minmax(*c1, *c2);
    if (seen.emplace(key, true).second) pairs.emplace_back(*c1, *c2);
  }
  if (pairs.empty()) {
    out.warnings.push_back("no edge crosses two communities; dataset is empty");
    return out;
  }

  // Random community split.
  std::vector<std::size_t> ids;
  for (std::size_t c = 0; c < considered; ++c)
    if (usable[c]) ids.push_back(c);
  Rng rng = make_rng(caps.seed, 0x5a9);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<bool> is_test(considered, false);
  const auto n_test = static_cast<std::size_t>(
      std::llround(caps.test_community_fraction * static_cast<double>(ids.size())));
  for (std::size_t i = 0; i < n_test && i < ids.size(); ++i) is_test[ids[i]] = true;

  std::vector<NodeId> local(original.size(), -1);
  for (auto [c1, c2] : pairs) {
    if (is_test[c1] != is_test[c2]) {
      ++out.pairs_dropped_by_split;
      continue;
    }
    std::vector<NodeId> nodes;
    std::set_union(members[c1].begin(), members[c1].end(), members[c2].begin(), members[c2].end(),
                   std::back_inserter(nodes));
    for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<NodeId>(i);
    std::vector<std::pair<NodeId, NodeId>> sub;
    for (NodeId v : nodes)
      for (NodeId w : graph.neighbors(v))
        if (w > v && local[w] >= 0) sub.emplace_back(local[v], local[w]);

    SnapSample s;
    s.community_1 = c1;
    s.community_2 = c2;
    s.sample.truth.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const bool in1 = contains(c1, nodes[i]);
      const bool in2 = contains(c2, nodes[i]);
      s.sample.truth[i] = in1 && in2 ? 2 : (in1 ? 0 : 1);
      s.original_ids.push_back(original[nodes[i]]);
    }
    s.sample.graph = SparseGraph::from_edges(nodes.size(), sub);
    s.sample.meta.k = 3;
    s.sample.meta.source = "snap";
    for (NodeId v : nodes) local[v] = -1;
    (is_test[c1] ? out.test : out.train).push_back(std::move(s));
  }
  return out;
}

SnapDataset snap_build(const std::string& edge_file, const std::string& community_file,
                       const SnapCaps& caps) {
  return snap_build(read_snap(edge_file, community_file), caps);
}

void write_dataset(const std::string& dir, const std::vector<DatasetRecord>& records) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  CsvTable manifest;
  manifest.header = {"file", "n", "m", "k", "a", "b", "snr", "split"};
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    char stem[32];
    std::snprintf(stem, sizeof(stem), "sample_%06zu", i);
    const std::string file = std::string(stem) + ".edges";
    write_edge_list(r.sample.graph, (fs::path(dir) / file).string());
    std::ofstream labels(fs::path(dir) / (std::string(stem) + ".labels"));
    for (auto l : r.sample.truth) labels << l << '\n';
    if (!labels) throw std::runtime_error("cannot write labels in " + dir);
    manifest.rows.push_back({file, std::to_string(r.sample.graph.num_nodes()),
                             std::to_string(r.sample.graph.num_edges()),
                             std::to_string(r.sample.meta.k), format_real(r.sample.meta.a),
                             format_real(r.sample.meta.b), format_real(r.sample.meta.snr),
                             r.split});
  }
  write_csv((fs::path(dir) / "manifest.csv").string(), manifest);
}

std::vector<DatasetRecord> read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const CsvTable manifest = read_csv((fs::path(dir) / "manifest.csv").string());
  const std::size_t cf = manifest.column("file"), cn = manifest.column("n"),
                    cm = manifest.column("m"), ck = manifest.column("k"), ca = manifest.column("a"),
                    cb = manifest.column("b"), cs = manifest.column("snr"),
                    csplit = manifest.column("split");
  std::vector<DatasetRecord> out;
  for (const auto& row : manifest.rows) {
    DatasetRecord r;
    const std::size_t n = std::stoull(row[cn]);
    r.sample.graph = read_edge_list((fs::path(dir) / row[cf]).string(), n);
    if (r.sample.graph.num_edges() != std::stoull(row[cm]))
      throw ParseError("dataset: edge count mismatch for " + row[cf]);
    const std::string stem = fs::path(row[cf]).stem().string();
    LineReader labels((fs::path(dir) / (stem + ".labels")).string());
    std::string line;
    while (labels.next(line))
      if (!is_comment_or_blank(line))
        r.sample.truth.push_back(static_cast<std::int32_t>(parse_id(line, labels)));
    if (r.sample.truth.size() != n) throw ParseError("dataset: label count mismatch for " + row[cf]);
    r.sample.meta.k = std::stoi(row[ck]);
    r.sample.meta.a = std::stod(row[ca]);
    r.sample.meta.b = std::stod(row[cb]);
    r.sample.meta.snr = std::stod(row[cs]);
    r.sample.meta.source = "dataset";
    r.split = row[csplit];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cdgnn
