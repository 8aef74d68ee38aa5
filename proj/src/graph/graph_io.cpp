#include <algorithm>
#include <fstream>

#include "cdgnn/graph.hpp"
#include "cdgnn/text_io.hpp"

namespace cdgnn {

SparseGraph read_edge_list(const std::string& path, std::size_t num_nodes) {
  LineReader in(path);
  std::vector<std::pair<NodeId, NodeId>> edges;
  long long max_id = -1;
  std::size_t declared_nodes = 0;
  std::string line;
  while (in.next(line)) {
    if (is_comment_or_blank(line)) {
      // Files written by write_edge_list declare their node count so that
      // trailing isolated nodes survive a round trip.
      const auto fields = split_fields(line);
      if (fields.size() >= 3 && fields[0] == "#" && fields[1] == "nodes")
        declared_nodes = static_cast<std::size_t>(parse_id(fields[2], in));
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() < 2) {
      throw ParseError(path + ":" + std::to_string(in.line_number()) + ": expected two node ids");
    }
    const long long a = parse_id(fields[0], in);
    const long long b = parse_id(fields[1], in);
    max_id = std::max({max_id, a, b});
    if (a == b) continue;  // self-loops are dropped, matching SNAP cleanup
    edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
  }
  std::size_t n = num_nodes ? num_nodes : static_cast<std::size_t>(max_id + 1);
  if (num_nodes == 0) n = std::max(n, declared_nodes);
  return SparseGraph::from_edges(n, edges);
}

void write_edge_list(const SparseGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# nodes " << g.num_nodes() << " edges " << g.num_edges() << '\n';
  for (const Edge& e : g.edges()) out << e.u << '\t' << e.v << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace cdgnn
