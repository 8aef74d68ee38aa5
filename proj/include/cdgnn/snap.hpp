#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdgnn/generators.hpp"

namespace cdgnn {

struct SnapCaps {
  std::size_t max_communities = 5000;     // leading lines of the community file
  std::size_t max_community_size = 800;   // larger communities are dropped
  double test_community_fraction = 0.25;  // share of communities reserved for test
  std::uint64_t seed = 0;
};

/// Raw SNAP input with original (sparse) node ids.
struct SnapInput {
  std::vector<std::pair<long long, long long>> edges;
  std::vector<std::vector<long long>> communities;  // in file order
};

struct SnapSample {
  LabeledGraph sample;               // 3 classes: 0 = C1 only, 1 = C2 only, 2 = both
  std::size_t community_1 = 0;       // community ids (file line index)
  std::size_t community_2 = 0;
  std::vector<long long> original_ids;  // original id of each subgraph node
};

struct SnapDataset {
  std::vector<SnapSample> train;
  std::vector<SnapSample> test;
  std::size_t communities_kept = 0;
  std::size_t communities_oversized = 0;
  std::size_t pairs_dropped_by_split = 0;
  std::vector<std::string> warnings;
};

/// Reads a SNAP edge list and community file (plain or gzip).
SnapInput read_snap(const std::string& edge_file, const std::string& community_file);

/// For every edge (i, j) such that some community holds i but not j and some
/// community holds j but not i, picks the largest such C1 containing i and
/// C2 containing j (ties to the smaller community id) and emits the induced
/// subgraph on C1 u C2 once per community pair. Communities are split at
/// random into train and test sets; pairs straddling the split are dropped so
/// the two sides share no community.
SnapDataset snap_build(const SnapInput& input, const SnapCaps& caps);
SnapDataset snap_build(const std::string& edge_file, const std::string& community_file,
                       const SnapCaps& caps);

/// On-disk dataset: <dir>/<stem>.edges (edge list), <dir>/<stem>.labels (one
/// label per line) and <dir>/manifest.csv with columns
/// file,n,m,k,a,b,snr,split.
struct DatasetRecord {
  LabeledGraph sample;
  std::string split = "train";
};

void write_dataset(const std::string& dir, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_dataset(const std::string& dir);

}  // namespace cdgnn
