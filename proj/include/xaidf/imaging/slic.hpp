#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "xaidf/error.hpp"
#include "xaidf/imaging/image.hpp"

namespace xaidf {

struct SlicParams {
  int n_segments = 50;
  double compactness = 10.0;
  int iterations = 10;
};

// RGB in [0,1] is stretched to [0,100] so that compactness keeps its usual
// CIELAB-calibrated meaning (m = 10 is a balanced default).
inline constexpr double kSlicColorScale = 100.0;

namespace detail {

struct GridLayout {
  int columns;
  int rows;
};

// Picks columns x rows with a product closest to n, preferring cells with the
// image's aspect ratio and, on ties, more columns.
inline GridLayout slic_grid_layout(int height, int width, int n) {
  GridLayout best{1, 1};
  double best_cost = std::numeric_limits<double>::infinity();
  for (int cols = 1; cols <= std::min(width, n); ++cols) {
    const int rows = std::clamp(static_cast<int>(std::lround(static_cast<double>(n) / cols)), 1, height);
    const double count_error = std::abs(cols * rows - n) / static_cast<double>(n);
    const double aspect = std::abs(std::log((static_cast<double>(width) / cols) /
                                            (static_cast<double>(height) / rows)));
    const double cost = count_error + 0.1 * aspect;
    if (cost <= best_cost + 1e-12) {
      best_cost = cost;
      best = {cols, rows};
    }
  }
  return best;
}

// Relabels 4-connected components. The largest component of each cluster
// label is kept; the other (orphan) components merge into their largest
// neighbour, smallest first. Labels come out dense in raster-scan order of first appearance.
inline std::vector<int> enforce_connectivity(int height, int width, const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  std::vector<int> component(n, -1);
  std::vector<std::size_t> comp_size;
  std::queue<std::size_t> frontier;
  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    const int id = static_cast<int>(comp_size.size());
    comp_size.push_back(0);
    component[start] = id;
    frontier.push(start);
    while (!frontier.empty()) {
      const std::size_t i = frontier.front();
      frontier.pop();
      ++comp_size[static_cast<std::size_t>(id)];
      const int y = static_cast<int>(i / width);
      const int x = static_cast<int>(i % width);
      const std::size_t nbrs[4] = {
          y > 0 ? i - width : n, y + 1 < height ? i + width : n,
          x > 0 ? i - 1 : n, x + 1 < width ? i + 1 : n};
      for (std::size_t j : nbrs) {
        if (j < n && component[j] < 0 && labels[j] == labels[i]) {
          component[j] = id;
          frontier.push(j);
        }
      }
    }
  }

  const std::size_t count = comp_size.size();
  std::vector<std::vector<int>> adjacent(count);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i / width);
    const int x = static_cast<int>(i % width);
    const int a = component[i];
    if (x + 1 < width && component[i + 1] != a) {
      adjacent[static_cast<std::size_t>(a)].push_back(component[i + 1]);
      adjacent[static_cast<std::size_t>(component[i + 1])].push_back(a);
    }
    if (y + 1 < height && component[i + width] != a) {
      adjacent[static_cast<std::size_t>(a)].push_back(component[i + width]);
      adjacent[static_cast<std::size_t>(component[i + width])].push_back(a);
    }
  }

  std::vector<int> parent(count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int c) {
    while (parent[static_cast<std::size_t>(c)] != c) {
      parent[static_cast<std::size_t>(c)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(c)])];
      c = parent[static_cast<std::size_t>(c)];
    }
    return c;
  };
  std::vector<std::size_t> size = comp_size;
  std::vector<std::vector<int>> members(count);
  for (std::size_t c = 0; c < count; ++c) members[c].push_back(static_cast<int>(c));

  // Anchor = largest component of its label.
  std::vector<char> anchor(count, 0);
  {
    std::vector<int> best_of_label;
    for (std::size_t i = 0; i < n; ++i) {
      const auto l = static_cast<std::size_t>(labels[i]);
      if (l >= best_of_label.size()) best_of_label.resize(l + 1, -1);
      const int c = component[i];
      const int b = best_of_label[l];
      if (b < 0 || comp_size[static_cast<std::size_t>(c)] > comp_size[static_cast<std::size_t>(b)]) {
        best_of_label[l] = c;
      }
    }
    for (int b : best_of_label) {
      if (b >= 0) anchor[static_cast<std::size_t>(b)] = 1;
    }
  }

  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return comp_size[static_cast<std::size_t>(a)] < comp_size[static_cast<std::size_t>(b)];
  });
  for (bool merged = true; merged;) {
    merged = false;
    for (int c : order) {
      const int root = find(c);
      if (root != c) continue;
      const auto ur = static_cast<std::size_t>(root);
      if (anchor[ur]) continue;
      int target = -1;
      for (int m : members[ur]) {
        for (int nb : adjacent[static_cast<std::size_t>(m)]) {
          const int r = find(nb);
          if (r == root) continue;
          if (target < 0 || size[static_cast<std::size_t>(r)] > size[static_cast<std::size_t>(target)] ||
              (size[static_cast<std::size_t>(r)] == size[static_cast<std::size_t>(target)] && r < target)) {
            target = r;
          }
        }
      }
      if (target < 0) continue;
      const auto ut = static_cast<std::size_t>(target);
      parent[ur] = target;
      size[ut] += size[ur];
      members[ut].insert(members[ut].end(), members[ur].begin(), members[ur].end());
      members[ur].clear();
      merged = true;
    }
  }

  std::vector<int> dense(count, -1);
  std::vector<int> out(n);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int r = find(component[i]);
    if (dense[static_cast<std::size_t>(r)] < 0) dense[static_cast<std::size_t>(r)] = next++;
    out[i] = dense[static_cast<std::size_t>(r)];
  }
  return out;
}

}  // namespace detail

/// SLIC superpixels: localized k-means over (RGB, x, y) with distance
/// D = sqrt(d_color^2 + (d_spatial / S)^2 * m^2), S = sqrt(HW / n_segments).
/// Centers start on a regular grid (no randomness); a connectivity pass keeps
/// the largest piece of every cluster and merges the stray pieces.
inline SegmentationMap slic_segment(const Image& image, int n_segments, double compactness = 10.0,
                                    int iterations = 10) {
  const int h = image.height();
  const int w = image.width();
  const std::size_t n_pixels = image.pixel_count();
  if (n_segments < 1 || static_cast<std::size_t>(n_segments) > n_pixels) {
    throw InvalidArgument("n_segments must be in [1, " + std::to_string(n_pixels) + "], got " +
                          std::to_string(n_segments));
  }
  if (!(compactness > 0.0)) throw InvalidArgument("compactness must be positive");
  if (iterations < 1) throw InvalidArgument("iterations must be positive");

  const auto layout = detail::slic_grid_layout(h, w, n_segments);
  const double cell_w = static_cast<double>(w) / layout.columns;
  const double cell_h = static_cast<double>(h) / layout.rows;
  const double grid_interval = std::sqrt(static_cast<double>(n_pixels) / n_segments);
  const double spatial_weight = (compactness / grid_interval) * (compactness / grid_interval);
  const int window = static_cast<int>(std::ceil(std::max(cell_w, cell_h)));

  struct Center {
    double y, x, r, g, b;
  };
  // Seeds sit at grid-cell centres and take the mean colour of their cell, so
  // high-frequency texture does not bias the initial colours.
  std::vector<Center> centers(static_cast<std::size_t>(layout.rows) * layout.columns, Center{0, 0, 0, 0, 0});
  std::vector<std::size_t> cell_counts(centers.size(), 0);
  std::vector<int> labels(n_pixels);
  for (int y = 0; y < h; ++y) {
    const int row = std::min(layout.rows - 1, static_cast<int>(y / cell_h));
    for (int x = 0; x < w; ++x) {
      const int col = std::min(layout.columns - 1, static_cast<int>(x / cell_w));
      const int k = row * layout.columns + col;
      labels[static_cast<std::size_t>(y) * w + x] = k;
      auto& c = centers[static_cast<std::size_t>(k)];
      c.r += image.at(y, x, 0) * kSlicColorScale;
      c.g += image.at(y, x, 1) * kSlicColorScale;
      c.b += image.at(y, x, 2) * kSlicColorScale;
      ++cell_counts[static_cast<std::size_t>(k)];
    }
  }
  for (int row = 0; row < layout.rows; ++row) {
    for (int col = 0; col < layout.columns; ++col) {
      const auto k = static_cast<std::size_t>(row * layout.columns + col);
      const double inv = cell_counts[k] ? 1.0 / static_cast<double>(cell_counts[k]) : 0.0;
      centers[k] = {(row + 0.5) * cell_h, (col + 0.5) * cell_w, centers[k].r * inv, centers[k].g * inv,
                    centers[k].b * inv};
    }
  }

  std::vector<double> best(n_pixels);
  for (int it = 0; it < iterations; ++it) {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y - window)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y + window)));
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x - window)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x + window)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const std::size_t i = image.index(y, x, 0);
          const double dr = image.data()[i] * kSlicColorScale - c.r;
          const double dg = image.data()[i + 1] * kSlicColorScale - c.g;
          const double db = image.data()[i + 2] * kSlicColorScale - c.b;
          // Pixel centres sit at integer + 0.5 to match the grid seeding.
          const double sy = y + 0.5 - c.y;
          const double sx = x + 0.5 - c.x;
          const double d = dr * dr + dg * dg + db * db + (sy * sy + sx * sx) * spatial_weight;
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          if (d < best[p]) {
            best[p] = d;
            labels[p] = static_cast<int>(k);
          }
        }
      }
    }

    std::vector<Center> sums(centers.size(), Center{0, 0, 0, 0, 0});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const auto k = static_cast<std::size_t>(labels[p]);
        const std::size_t i = image.index(y, x, 0);
        sums[k].y += y + 0.5;
        sums[k].x += x + 0.5;
        sums[k].r += image.data()[i] * kSlicColorScale;
        sums[k].g += image.data()[i + 1] * kSlicColorScale;
        sums[k].b += image.data()[i + 2] * kSlicColorScale;
        ++counts[k];
      }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[k]);
      centers[k] = {sums[k].y * inv, sums[k].x * inv, sums[k].r * inv, sums[k].g * inv, sums[k].b * inv};
    }
  }

  return SegmentationMap(h, w, detail::enforce_connectivity(h, w, labels));
}

}  // namespace xaidf
