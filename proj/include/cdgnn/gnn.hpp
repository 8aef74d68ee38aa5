#pragma once

// Multiscale graph networks over the generator family
// {I, D, U, A^(2^0), ..., A^(2^(J-1))}, with an optional edge tower on the
// line graph coupled to the node tower through the incidence matrix.

#include <cstdint>
#include <string>
#include <vector>

#include "cdgnn/generators.hpp"
#include "cdgnn/graph.hpp"
#include "cdgnn/nn.hpp"

namespace cdgnn {

enum class GnnVariant { node_only, line_graph };
/// Input signal of the edge tower.
enum class EdgeInput { line_degree, ones, incidence_degree };

struct GnnModelSpec {
  int depth = 30;
  int width = 10;   // feature maps per layer, even
  int J = 3;        // power adjacencies A^(2^j), j < J
  int classes = 2;
  GnnVariant variant = GnnVariant::node_only;
  int line_J = 3;   // power adjacencies of the line graph
  bool scalar_coupling = false;  // delta as 1 x 1 instead of width x width
  EdgeInput edge_input = EdgeInput::line_degree;
  bool batch_norm = true;
  bool bn_affine = false;

  void validate() const;  // throws ConfigError
  std::size_t generators() const noexcept { return static_cast<std::size_t>(J) + 3; }
  friend bool operator==(const GnnModelSpec&, const GnnModelSpec&) = default;
};

GnnVariant parse_gnn_variant(const std::string& s);
std::string to_string(GnnVariant v);
EdgeInput parse_edge_input(const std::string& s);
std::string to_string(EdgeInput e);

/// JSON form used as checkpoint header.
std::string spec_to_json(const GnnModelSpec& spec);
GnnModelSpec spec_from_json(const std::string& json);

/// Parameters with Normal(0, 1/sqrt(d_in * generators)) entries; names are
/// "layer<k>.theta" (node tower, width x generators*d_in), "layer<k>.gamma"
/// (edge tower), "layer<k>.delta" / "layer<k>.delta_edge" (couplings),
/// "layer<k>.bn_scale" / "layer<k>.bn_shift" when affine, and "readout".
template <class T>
nn::ParamStore<T> init_params(const GnnModelSpec& spec, std::uint64_t seed);

/// Per-graph operators, built once and reused every step.
struct GraphInputs {
  const SparseGraph* graph = nullptr;
  std::vector<SparseGraph> powers;  // A^(2^j) supports, j < J
  FeatureMatrix degree;             // n x 1
  // line-graph variant only
  SparseGraph line;
  EdgeIncidence incidence;
  std::vector<SparseGraph> line_powers;
  FeatureMatrix edge_signal;        // |E| x 1
};

/// `g` must outlive the result. The line-graph variant throws GraphError when
/// g has no edges.
GraphInputs prepare_inputs(const SparseGraph& g, const GnnModelSpec& spec);

template <class T>
struct GnnOutput {
  nn::Var logits;     // n x C
  nn::Var log_probs;  // row-wise log-softmax of logits
};

/// Records the network on `tape`, binding every parameter of `params`.
template <class T>
GnnOutput<T> gnn_forward(nn::Tape<T>& tape, nn::ParamStore<T>& params, const GnnModelSpec& spec,
                         const GraphInputs& in);

/// Softmax probabilities without gradient bookkeeping.
template <class T>
Matrix<T> gnn_probabilities(const nn::ParamStore<T>& params, const GnnModelSpec& spec,
                            const GraphInputs& in);

/// min over label permutations sigma of -sum_i log o(i, sigma(y_i)), C <= 6.
/// The gradient follows the minimizing permutation (the first one in
/// lexicographic order on ties).
template <class T>
nn::Var perm_invariant_loss(nn::Tape<T>& tape, nn::Var log_probs, const Labeling& truth, int classes);

/// The C~ true classes with the largest entropy H(o; c) =
/// -sum_{y_i = c} o(i,c) log o(i,c) are matched by permutations among
/// themselves in the nll term; the remaining classes contribute H(o; c).
template <class T>
nn::Var cheap_perm_loss(nn::Tape<T>& tape, nn::Var log_probs, const Labeling& truth, int classes,
                        int subgroup);

/// Argmax per row, ties to the lowest class.
template <class T>
Labeling predict(const Matrix<T>& probs);

/// Checkpoint with the spec as header; load verifies the stored arrays
/// match the architecture the header describes.
void save_model(const std::string& path, const GnnModelSpec& spec, const nn::ParamStore<float>& params);
struct LoadedModel {
  GnnModelSpec spec;
  nn::ParamStore<float> params;
};
LoadedModel load_model(const std::string& path);

}  // namespace cdgnn
