#include "ace/slic.hpp"

#include "ace/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ace {

std::vector<int> SuperpixelLabeling::label_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(n_labels), 0);
  for (Eigen::Index i = 0; i < labels.size(); ++i) ++counts[std::size_t(labels.data()[i])];
  return counts;
}

namespace {

double srgb_to_linear(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3 * delta * delta) + 4.0 / 29.0;
}

struct Center {
  double l, a, b, x, y;
};

}  // namespace

Image<float> rgb_to_lab(const RgbImage& image) {
  constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
  Image<float> lab(image.width, image.height);
  for (Eigen::Index i = 0; i < image.pixel_count(); ++i) {
    const double r = srgb_to_linear(std::clamp<double>(image.pixels(i, 0), 0, 1));
    const double g = srgb_to_linear(std::clamp<double>(image.pixels(i, 1), 0, 1));
    const double b = srgb_to_linear(std::clamp<double>(image.pixels(i, 2), 0, 1));
    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(x / xn), fy = lab_f(y / yn), fz = lab_f(z / zn);
    lab.pixels(i, 0) = float(116 * fy - 16);
    lab.pixels(i, 1) = float(500 * (fx - fy));
    lab.pixels(i, 2) = float(200 * (fy - fz));
  }
  return lab;
}

int enforce_connectivity(LabelMap& labels) {
  const int h = int(labels.rows());
  const int w = int(labels.cols());
  const Eigen::Index n = labels.size();
  if (n == 0) return 0;

  // 4-connected components.
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  std::vector<int> comp_label;
  std::vector<int> comp_size;
  std::vector<Eigen::Index> stack;
  for (Eigen::Index start = 0; start < n; ++start) {
    if (comp[std::size_t(start)] >= 0) continue;
    const int id = int(comp_label.size());
    const int lab = labels.data()[start];
    comp_label.push_back(lab);
    comp_size.push_back(0);
    comp[std::size_t(start)] = id;
    stack.assign(1, start);
    while (!stack.empty()) {
      const Eigen::Index p = stack.back();
      stack.pop_back();
      ++comp_size[std::size_t(id)];
      const int x = int(p % w), y = int(p / w);
      const Eigen::Index nbrs[4] = {x > 0 ? p - 1 : -1, x + 1 < w ? p + 1 : -1, y > 0 ? p - w : -1,
                                    y + 1 < h ? p + w : -1};
      for (Eigen::Index q : nbrs) {
        if (q < 0 || comp[std::size_t(q)] >= 0 || labels.data()[q] != lab) continue;
        comp[std::size_t(q)] = id;
        stack.push_back(q);
      }
    }
  }
  const int n_comp = int(comp_label.size());

  // Largest component of each label is its main region.
  std::map<int, int> main_of;
  for (int c = 0; c < n_comp; ++c) {
    auto [it, inserted] = main_of.try_emplace(comp_label[std::size_t(c)], c);
    if (!inserted && comp_size[std::size_t(c)] > comp_size[std::size_t(it->second)]) it->second = c;
  }
  std::vector<char> settled(static_cast<std::size_t>(n_comp), 0);
  for (const auto& [lab, c] : main_of) settled[std::size_t(c)] = 1;

  // Shared border lengths between adjacent components.
  std::vector<std::map<int, int>> border(static_cast<std::size_t>(n_comp));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Eigen::Index p = Eigen::Index(y) * w + x;
      const int a = comp[std::size_t(p)];
      if (x + 1 < w && comp[std::size_t(p + 1)] != a) {
        ++border[std::size_t(a)][comp[std::size_t(p + 1)]];
        ++border[std::size_t(comp[std::size_t(p + 1)])][a];
      }
      if (y + 1 < h && comp[std::size_t(p + w)] != a) {
        ++border[std::size_t(a)][comp[std::size_t(p + w)]];
        ++border[std::size_t(comp[std::size_t(p + w)])][a];
      }
    }

  // Orphans join the settled neighbor label with the longest shared border,
  // in waves so the outcome is independent of processing order.
  bool pending = true;
  while (pending) {
    pending = false;
    std::vector<std::pair<int, int>> wave;
    for (int c = 0; c < n_comp; ++c) {
      if (settled[std::size_t(c)]) continue;
      std::map<int, int> by_label;
      for (const auto& [nb, len] : border[std::size_t(c)])
        if (settled[std::size_t(nb)]) by_label[comp_label[std::size_t(nb)]] += len;
      if (by_label.empty()) {
        pending = true;
        continue;
      }
      auto best = by_label.begin();
      for (auto it = by_label.begin(); it != by_label.end(); ++it)
        if (it->second > best->second) best = it;
      wave.emplace_back(c, best->first);
    }
    if (wave.empty()) break;
    for (const auto& [c, lab] : wave) {
      comp_label[std::size_t(c)] = lab;
      settled[std::size_t(c)] = 1;
    }
  }

  // Compact relabel in raster order.
  std::map<int, int> remap;
  for (Eigen::Index p = 0; p < n; ++p) {
    const int lab = comp_label[std::size_t(comp[std::size_t(p)])];
    auto [it, inserted] = remap.try_emplace(lab, int(remap.size()));
    labels.data()[p] = it->second;
  }
  return int(remap.size());
}

SuperpixelLabeling slic_segment(const RgbImage& image, const SlicOptions& options, SlicTrace* trace) {
  require(!image.empty(), "slic_segment: empty image");
  const int w = image.width, h = image.height;
  const Eigen::Index n = image.pixel_count();
  if (options.n_segments < 1 || options.n_segments > n)
    fail(ErrorKind::invalid_argument, "slic_segment: n_segments must be in [1, " + std::to_string(n) + "], got " +
                                          std::to_string(options.n_segments));
  require(options.compactness > 0, "slic_segment: compactness must be positive");
  require(options.max_iters >= 0, "slic_segment: max_iters must be non-negative");

  SuperpixelLabeling out;
  out.width = w;
  out.height = h;
  out.labels = LabelMap::Zero(h, w);
  if (options.n_segments == 1) {
    out.n_labels = 1;
    if (trace) trace->total_distance.clear();
    return out;
  }

  const Image<float> lab = rgb_to_lab(image);
  const double step = std::sqrt(double(n) / options.n_segments);
  const int nx = std::clamp(int(std::lround(w / step)), 1, w);
  const int ny = std::clamp(int(std::lround(h / step)), 1, h);
  const double cell_w = double(w) / nx, cell_h = double(h) / ny;
  const double spatial_weight = (options.compactness / step) * (options.compactness / step);

  auto gradient = [&](int x, int y) {
    const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
    const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
    double g = 0;
    for (int c = 0; c < 3; ++c) {
      const double dx = lab(xr, y, c) - lab(xl, y, c);
      const double dy = lab(x, yd, c) - lab(x, yu, c);
      g += dx * dx + dy * dy;
    }
    return g;
  };

  std::vector<Center> centers;
  centers.reserve(std::size_t(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int cx = std::min(int((i + 0.5) * cell_w), w - 1);
      int cy = std::min(int((j + 0.5) * cell_h), h - 1);
      double best = gradient(cx, cy);
      int bx = cx, by = cy;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = cx + dx, y = cy + dy;
          if (x < 0 || x >= w || y < 0 || y >= h) continue;
          const double g = gradient(x, y);
          if (g < best) {
            best = g;
            bx = x;
            by = y;
          }
        }
      centers.push_back({lab(bx, by, 0), lab(bx, by, 1), lab(bx, by, 2), double(bx), double(by)});
    }

  // Start from the grid-cell partition so every pixel has a valid label.
  LabelMap& labels = out.labels;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int i = std::min(int(x / cell_w), nx - 1);
      const int j = std::min(int(y / cell_h), ny - 1);
      labels(y, x) = j * nx + i;
    }

  auto distance2 = [&](const Center& c, int x, int y) {
    const double dl = lab(x, y, 0) - c.l, da = lab(x, y, 1) - c.a, db = lab(x, y, 2) - c.b;
    const double dx = x - c.x, dy = y - c.y;
    return dl * dl + da * da + db * db + (dx * dx + dy * dy) * spatial_weight;
  };

  std::vector<double> dist(static_cast<std::size_t>(n));
  if (trace) trace->total_distance.clear();
  const int radius = int(std::ceil(step));
  for (int iter = 0; iter < options.max_iters; ++iter) {
    // A pixel always keeps its current center as a candidate, so the
    // assignment step can only lower its distance.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        dist[std::size_t(y) * w + x] = distance2(centers[std::size_t(labels(y, x))], x, y);

    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const int x0 = std::max(int(std::floor(c.x)) - radius, 0), x1 = std::min(int(std::ceil(c.x)) + radius, w - 1);
      const int y0 = std::max(int(std::floor(c.y)) - radius, 0), y1 = std::min(int(std::ceil(c.y)) + radius, h - 1);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const double d = distance2(c, x, y);
          double& best = dist[std::size_t(y) * w + x];
          if (d < best) {
            best = d;
            labels(y, x) = int(k);
          }
        }
    }
    if (trace) {
      double total = 0;
      for (double d : dist) total += d;
      trace->total_distance.push_back(total);
    }

    std::vector<Center> sums(centers.size(), Center{0, 0, 0, 0, 0});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const auto k = std::size_t(labels(y, x));
        sums[k].l += lab(x, y, 0);
        sums[k].a += lab(x, y, 1);
        sums[k].b += lab(x, y, 2);
        sums[k].x += x;
        sums[k].y += y;
        ++counts[k];
      }
    double shift = 0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double inv = 1.0 / double(counts[k]);
      const Center next{sums[k].l * inv, sums[k].a * inv, sums[k].b * inv, sums[k].x * inv, sums[k].y * inv};
      shift = std::max(shift, std::abs(next.x - centers[k].x) + std::abs(next.y - centers[k].y));
      centers[k] = next;
    }
    if (shift == 0.0) break;
  }

  out.n_labels = enforce_connectivity(labels);
  return out;
}

}  // namespace ace
