#include "dferr/image_structure.hpp"

#include "dferr/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace dferr {

struct ImageStructure::Cells {
  int q = 1;
  int per_axis = 1;
  std::vector<std::vector<double>> edges;  // interior edges per axis
  std::vector<std::size_t> counts;
  std::vector<Matrix> gamma;
  std::vector<Vector> drift;
  std::vector<Vector> theoretical;
  bool has_drift = false;
  bool has_theoretical = false;

  int locate(const Vector& y) const {
    int cell = 0;
    for (int k = q - 1; k >= 0; --k) {
      const auto& e = edges[k];
      const int b = static_cast<int>(std::upper_bound(e.begin(), e.end(), y[k]) - e.begin());
      cell = cell * per_axis + b;
    }
    return cell;
  }
};

int ImageStructure::cell_count() const { return static_cast<int>(cells_->counts.size()); }

int ImageStructure::cell_of(const Vector& y) const {
  if (y.size() != cells_->q) throw std::invalid_argument("image point has wrong dimension");
  return cells_->locate(y);
}

std::size_t ImageStructure::missing_cells() const {
  return static_cast<std::size_t>(
      std::count(cells_->counts.begin(), cells_->counts.end(), std::size_t{0}));
}

std::size_t ImageStructure::samples_in(int cell) const { return cells_->counts.at(cell); }

std::optional<Matrix> ImageStructure::diffusion_at(const Vector& y) const {
  const int c = cell_of(y);
  if (cells_->counts[c] == 0) return std::nullopt;
  return cells_->gamma[c];
}

std::optional<Vector> ImageStructure::drift_at(const Vector& y) const {
  if (!cells_->has_drift) throw std::logic_error("input structure had no symmetric drift");
  const int c = cell_of(y);
  if (cells_->counts[c] == 0) return std::nullopt;
  return cells_->drift[c];
}

std::optional<double> ImageStructure::square_field(const TestFunction& u, const Vector& y) const {
  const auto g = diffusion_at(y);
  if (!g) return std::nullopt;
  const Vector grad = u.jet(y, false).gradient();
  return grad.dot(*g * grad);
}

std::optional<double> ImageStructure::generator(const TestFunction& u, const Vector& y) const {
  const auto g = diffusion_at(y);
  const auto b = drift_at(y);
  if (!g || !b) return std::nullopt;
  const Jet2 j = u.jet(y);
  return b->dot(j.gradient()) + 0.5 * j.hessian().cwiseProduct(*g).sum();
}

ImageStructure image_structure(const DirichletStructure& in, std::span<const TestFunction> phi,
                               const ImageOptions& options) {
  const int q = static_cast<int>(phi.size());
  if (q < 1) throw std::invalid_argument("image_structure: empty map");
  for (const auto& f : phi) {
    if (f.dimension() != in.dim) throw std::invalid_argument("image_structure: map dimension mismatch");
  }
  if (options.bins < 1) throw std::invalid_argument("image_structure: bins must be positive");
  if (options.samples < 2) throw std::invalid_argument("image_structure: too few samples");

  const std::size_t n = options.samples;
  const bool has_drift = static_cast<bool>(in.drift);
  const bool has_theoretical = static_cast<bool>(in.theoretical_drift);
  // Per-sample record: Y (q), Gamma_in[Phi] (q*q), A~_in[Phi] (q), A-bar_in[Phi] (q).
  const int stride = q + q * q + 2 * q;
  std::vector<double> records(n * static_cast<std::size_t>(stride));
  const std::uint64_t key = derive_stream(options.seed, "image-structure");

  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<Jet2> jets;
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(key, i);
      const Vector x = in.measure(rng);
      const Matrix theta = in.diffusion(x);
      jets.clear();
      for (const auto& f : phi) jets.push_back(f.jet(x));
      double* r = records.data() + i * static_cast<std::size_t>(stride);
      for (int a = 0; a < q; ++a) r[a] = jets[a].value();
      for (int a = 0; a < q; ++a) {
        const Vector ga = theta * jets[a].gradient();
        for (int b = 0; b < q; ++b) r[q + a * q + b] = jets[b].gradient().dot(ga);
      }
      const Vector drift = has_drift ? in.drift(x) : Vector::Zero(in.dim);
      const Vector tdrift = has_theoretical ? in.theoretical_drift(x) : Vector::Zero(in.dim);
      for (int a = 0; a < q; ++a) {
        const double second = 0.5 * jets[a].hessian().cwiseProduct(theta).sum();
        r[q + q * q + a] = second + drift.dot(jets[a].gradient());
        r[q + q * q + q + a] = second + tdrift.dot(jets[a].gradient());
      }
      for (int k = 0; k < stride; ++k) {
        if (!std::isfinite(r[k])) {
          throw std::domain_error("image_structure: non-finite value at sample " + std::to_string(i));
        }
      }
    }
  };

  const std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(blocks)));
  if (workers == 1) {
    run(0, n);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex m;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < blocks; b = next++) {
          try {
            run(b * kBlockSize, std::min(n, (b + 1) * kBlockSize));
          } catch (...) {
            std::lock_guard lock(m);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  auto cells = std::make_shared<ImageStructure::Cells>();
  cells->q = q;
  cells->per_axis = std::max(1, static_cast<int>(std::floor(std::pow(options.bins, 1.0 / q) + 1e-9)));
  cells->has_drift = has_drift;
  cells->has_theoretical = has_theoretical;
  // Equal-count marginal edges.
  std::vector<double> axis(n);
  for (int k = 0; k < q; ++k) {
    for (std::size_t i = 0; i < n; ++i) axis[i] = records[i * stride + k];
    std::sort(axis.begin(), axis.end());
    std::vector<double> e;
    for (int b = 1; b < cells->per_axis; ++b) {
      e.push_back(axis[static_cast<std::size_t>(static_cast<double>(b) * n / cells->per_axis)]);
    }
    cells->edges.push_back(std::move(e));
  }
  int total = 1;
  for (int k = 0; k < q; ++k) total *= cells->per_axis;
  cells->counts.assign(total, 0);
  cells->gamma.assign(total, Matrix::Zero(q, q));
  cells->drift.assign(total, Vector::Zero(q));
  cells->theoretical.assign(total, Vector::Zero(q));
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = records.data() + i * stride;
    const Vector y = Eigen::Map<const Vector>(r, q);
    const int c = cells->locate(y);
    ++cells->counts[c];
    cells->gamma[c] += Eigen::Map<const Matrix>(r + q, q, q);
    cells->drift[c] += Eigen::Map<const Vector>(r + q + q * q, q);
    cells->theoretical[c] += Eigen::Map<const Vector>(r + q + q * q + q, q);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int c = 0; c < total; ++c) {
    if (cells->counts[c] == 0) {
      cells->gamma[c].setConstant(nan);
      cells->drift[c].setConstant(nan);
      cells->theoretical[c].setConstant(nan);
      continue;
    }
    const double inv = 1.0 / static_cast<double>(cells->counts[c]);
    cells->gamma[c] *= inv;
    cells->gamma[c] = 0.5 * (cells->gamma[c] + cells->gamma[c].transpose()).eval();
    cells->drift[c] *= inv;
    cells->theoretical[c] *= inv;
  }

  ImageStructure out;
  out.cells_ = cells;
  DirichletStructure& s = out.structure_;
  s.dim = q;
  s.diffusion = [cells](const Vector& y) { return cells->gamma[cells->locate(y)]; };
  if (has_drift) s.drift = [cells](const Vector& y) { return cells->drift[cells->locate(y)]; };
  if (has_theoretical) {
    s.theoretical_drift = [cells](const Vector& y) { return cells->theoretical[cells->locate(y)]; };
  }
  std::vector<TestFunction> map(phi.begin(), phi.end());
  s.measure = [sampler = in.measure, map](CounterRng& rng) {
    const Vector x = sampler(rng);
    Vector y(static_cast<int>(map.size()));
    for (int k = 0; k < y.size(); ++k) y[k] = map[k](x);
    return y;
  };
  return out;
}

}  // namespace dferr
