#include "cdgnn/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <sstream>

namespace cdgnn {

const std::vector<std::pair<std::string, std::string>>& Settings::known_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"model.depth", "number of layers"},
      {"model.width", "feature maps per layer (even)"},
      {"model.J", "power adjacencies A^(2^j), j < J"},
      {"model.line_J", "power adjacencies of the line graph"},
      {"model.variant", "node_only or line_graph"},
      {"model.scalar_coupling", "1 x 1 line-graph couplings instead of width x width"},
      {"model.edge_input", "edge-tower input: line_degree, ones, incidence_degree"},
      {"model.bn_affine", "learned scale and shift after batch norm"},
      {"data.n", "nodes per graph"},
      {"data.k", "communities"},
      {"data.dbar", "average degree"},
      {"data.a", "within-community rate"},
      {"data.b", "across-community rate"},
      {"data.snr", "signal-to-noise ratio (with dbar, replaces a and b)"},
      {"data.associative", "a > b when deriving rates from snr"},
      {"data.count", "training graphs"},
      {"data.val_count", "validation graphs"},
      {"data.test_count", "test graphs per evaluation point"},
      {"data.disassociative_fraction", "share of mixture samples with a < b"},
      {"data.randomize_dbar", "draw dbar per mixture sample"},
      {"data.separation", "GBM distance S between means"},
      {"data.radius", "GBM threshold T"},
      {"data.dir", "dataset directory"},
      {"data.snap_edges", "SNAP edge list"},
      {"data.snap_communities", "SNAP community file"},
      {"train.epochs", "passes over the training set"},
      {"train.lr", "Adamax learning rate"},
      {"train.loss", "exact or cheap"},
      {"train.subgroup", "permuted classes in the cheap loss"},
      {"train.max_steps", "update cap, 0 for none"},
      {"train.eval_every", "steps between validation passes, 0 for once per epoch"},
      {"train.checkpoint", "path of the best-validation model"},
      {"sweep.detectors", "comma list: laplacian, bh_assoc, bh_disassoc, pm, bp, gnn"},
      {"sweep.snr_min", "first grid point"},
      {"sweep.snr_max", "last grid point"},
      {"sweep.points", "grid size"},
      {"sweep.graphs", "graphs per grid point"},
      {"sweep.pm_layers", "power-method baseline steps"},
      {"sweep.model", "trained model used by the gnn detector"},
      {"sweep.output", "CSV path"},
  };
  return keys;
}

namespace {

bool known(const std::string& key) {
  const auto& keys = Settings::known_keys();
  return std::any_of(keys.begin(), keys.end(), [&](const auto& kv) { return kv.first == key; });
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

Settings from_tree(const boost::property_tree::ptree& tree) {
  Settings s;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) s.set(section + "." + key, value.get_value<std::string>());
  }
  return s;
}

}  // namespace

Settings Settings::from_ini(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return from_tree(tree);
}

Settings Settings::parse_ini(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return from_tree(tree);
}

void Settings::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw ConfigError("config: unknown key '" + key + "'");
  values_[key] = trim(value);
}

std::string Settings::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("config: " + key + " = '" + text + "' is not a valid number");
  return v;
}

}  // namespace

int Settings::get_int(const std::string& key, int fallback) const {
  return has(key) ? parse_number<int>(key, values_.at(key)) : fallback;
}

std::size_t Settings::get_size(const std::string& key, std::size_t fallback) const {
  return has(key) ? parse_number<std::size_t>(key, values_.at(key)) : fallback;
}

double Settings::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_number<double>(key, values_.at(key)) : fallback;
}

bool Settings::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = values_.at(key);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config: " + key + " = '" + v + "' is not a boolean");
}

std::vector<std::string> Settings::get_list(const std::string& key, const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::string> out;
  std::stringstream in(values_.at(key));
  for (std::string item; std::getline(in, item, ',');)
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

}  // namespace cdgnn
