#include <algorithm>
#include <limits>

#include "cdgnn/kernels.hpp"
#include "cdgnn/rng.hpp"
#include "cdgnn/spectral.hpp"

namespace cdgnn {
namespace {

struct Run {
  Labeling labels;
  FeatureMatrix centroids;
  double inertia = 0;
  bool degenerate = false;
};

Run lloyd(const FeatureMatrix& x, int k, std::size_t max_iter, Rng& rng) {
  const std::size_t n = x.rows(), d = x.cols();
  const auto& kern = kernels::active<double>();
  auto dist = [&](std::size_t i, const FeatureMatrix& c, std::size_t j) {
    return kern.sq_dist(x.data() + i * d, c.data() + j * d, d);
  };

  Run run;
  run.centroids = FeatureMatrix(static_cast<std::size_t>(k), d);
  auto set_center = [&](std::size_t j, std::size_t i) {
    std::copy_n(x.data() + i * d, d, run.centroids.data() + j * d);
  };

  // k-means++ seeding.
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  set_center(0, pick(rng));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = dist(i, run.centroids, 0);
  for (int j = 1; j < k; ++j) {
    double total = 0;
    for (double v : d2) total += v;
    std::size_t chosen = 0;
    if (total <= 0) {
      run.degenerate = true;  // every point coincides with a chosen centre
    } else {
      double u = std::uniform_real_distribution<double>(0, total)(rng);
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0) {
          chosen = i;
          break;
        }
      }
    }
    set_center(static_cast<std::size_t>(j), chosen);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], dist(i, run.centroids, static_cast<std::size_t>(j)));
  }

  run.labels.assign(n, -1);
  std::vector<double> best_d(n);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = dist(i, run.centroids, 0);
      for (int j = 1; j < k; ++j) {
        const double v = dist(i, run.centroids, static_cast<std::size_t>(j));
        if (v < bd) {
          bd = v;
          best = j;
        }
      }
      best_d[i] = bd;
      if (run.labels[i] != best) {
        run.labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    run.centroids.fill(0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(run.labels[i]);
      ++count[j];
      kern.axpy(1.0, x.data() + i * d, run.centroids.data() + j * d, d);
    }
    for (std::size_t j = 0; j < count.size(); ++j) {
      if (count[j] > 0) {
        for (std::size_t c = 0; c < d; ++c) run.centroids(j, c) /= static_cast<double>(count[j]);
        continue;
      }
      // Empty cluster: reseed from the point farthest from its centroid.
      const auto far = static_cast<std::size_t>(
          std::max_element(best_d.begin(), best_d.end()) - best_d.begin());
      if (best_d[far] <= 0) {
        run.degenerate = true;
        continue;
      }
      set_center(j, far);
      best_d[far] = 0;
    }
  }

  std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
  run.inertia = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ++count[static_cast<std::size_t>(run.labels[i])];
    run.inertia += dist(i, run.centroids, static_cast<std::size_t>(run.labels[i]));
  }
  if (std::find(count.begin(), count.end(), 0) != count.end()) run.degenerate = true;
  return run;
}

}  // namespace

KMeansResult kmeans(const FeatureMatrix& points, int k, const KMeansConfig& cfg) {
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > points.rows()) throw ConfigError("kmeans: k exceeds point count");
  if (!points.all_finite()) throw ConfigError("kmeans: non-finite input");
  KMeansResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(cfg.restarts, 1); ++r) {
    Rng rng = make_rng(cfg.seed, r);
    Run run = lloyd(points, k, cfg.max_iter, rng);
    if (run.inertia < best) {
      best = run.inertia;
      out.labels = std::move(run.labels);
      out.centroids = std::move(run.centroids);
      out.inertia = run.inertia;
      out.degenerate = run.degenerate;
    }
  }
  return out;
}

}  // namespace cdgnn
