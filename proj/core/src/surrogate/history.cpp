#include "pgso/surrogate/history.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "pgso/errors.hpp"

namespace pgso::surrogate {

namespace {

void copy_rows(const Tensor& src, Tensor& dst, std::size_t dst_row) {
  std::copy(src.values().begin(), src.values().end(),
            dst.values().begin() + static_cast<std::ptrdiff_t>(dst_row * dst.cols()));
}

struct Selection {
  const HistoryBuffer::Block* block;
  std::vector<std::size_t> rows;  // empty means every row
};

Dataset gather(const std::vector<Selection>& picks, std::size_t psi_dim,
               std::size_t x_dim, std::size_t y_dim) {
  std::size_t n = 0;
  for (const auto& p : picks) n += p.rows.empty() ? p.block->x.rows() : p.rows.size();
  Dataset out{Tensor::matrix(n, psi_dim), Tensor::matrix(n, x_dim),
              Tensor::matrix(n, y_dim)};
  std::size_t r = 0;
  for (const auto& p : picks) {
    const auto& b = *p.block;
    auto put = [&](std::size_t src) {
      std::copy(b.psi.begin(), b.psi.end(), out.psi.row(r).begin());
      auto xr = b.x.row(src);
      std::copy(xr.begin(), xr.end(), out.x.row(r).begin());
      auto yr = b.y.row(src);
      std::copy(yr.begin(), yr.end(), out.y.row(r).begin());
      ++r;
    };
    if (p.rows.empty()) {
      for (std::size_t i = 0; i < b.x.rows(); ++i) put(i);
    } else {
      for (std::size_t i : p.rows) put(i);
    }
  }
  return out;
}

}  // namespace

Dataset concat(const std::vector<Dataset>& parts) {
  std::size_t n = 0;
  const Dataset* shape = nullptr;
  for (const auto& p : parts) {
    n += p.size();
    if (!p.empty()) shape = &p;
  }
  if (!shape) return parts.empty() ? Dataset{} : parts.front();
  Dataset out{Tensor::matrix(n, shape->psi.cols()), Tensor::matrix(n, shape->x.cols()),
              Tensor::matrix(n, shape->y.cols())};
  std::size_t r = 0;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    copy_rows(p.psi, out.psi, r);
    copy_rows(p.x, out.x, r);
    copy_rows(p.y, out.y, r);
    r += p.size();
  }
  return out;
}

HistoryBuffer::HistoryBuffer(std::size_t psi_dim, std::size_t x_dim, std::size_t y_dim)
    : psi_dim_(psi_dim), x_dim_(x_dim), y_dim_(y_dim) {}

void HistoryBuffer::append_call(std::vector<Block> blocks) {
  for (auto& b : blocks) {
    if (b.psi.size() != psi_dim_ || b.x.cols() != x_dim_ || b.y.cols() != y_dim_ ||
        b.x.rows() != b.y.rows()) {
      throw DimensionError("history block does not match the buffer layout");
    }
  }
  for (auto& b : blocks) {
    b.call = calls_;
    records_ += b.x.rows();
    blocks_.push_back(std::move(b));
  }
  ++calls_;
}

void HistoryBuffer::evict_calls_before(std::int64_t call) {
  auto keep = std::stable_partition(blocks_.begin(), blocks_.end(),
                                    [&](const Block& b) { return b.call >= call; });
  for (auto it = keep; it != blocks_.end(); ++it) records_ -= it->x.rows();
  blocks_.erase(keep, blocks_.end());
}

void HistoryBuffer::clear() {
  blocks_.clear();
  records_ = 0;
  calls_ = 0;
}

void HistoryBuffer::write_csv(std::ostream& out) const {
  auto header = [&](const char* prefix, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out << prefix << i << ',';
  };
  header("psi_", psi_dim_);
  header("x_", x_dim_);
  header("y_", y_dim_);
  out << "episode,call\n";
  const auto old_precision = out.precision(17);
  for (const auto& b : blocks_) {
    for (std::size_t r = 0; r < b.x.rows(); ++r) {
      for (double v : b.psi) out << v << ',';
      for (double v : b.x.row(r)) out << v << ',';
      for (double v : b.y.row(r)) out << v << ',';
      out << b.episode << ',' << b.call << '\n';
    }
  }
  out.precision(old_precision);
}

Dataset filter_history(const HistoryBuffer& buffer, const TrustRegion& region) {
  std::vector<Selection> picks;
  for (const auto& b : buffer.blocks()) {
    if (region.contains(b.psi)) picks.push_back({&b, {}});
  }
  return gather(picks, buffer.psi_dim(), buffer.x_dim(), buffer.y_dim());
}

Dataset warm_start_dataset(const HistoryBuffer& buffer, const TrustRegion& region,
                           std::int64_t current_call, Rng& rng) {
  std::map<std::int64_t, std::vector<const HistoryBuffer::Block*>, std::greater<>> by_call;
  for (const auto& b : buffer.blocks()) {
    if (b.call <= current_call && region.contains(b.psi)) by_call[b.call].push_back(&b);
  }
  std::vector<Selection> picks;
  for (const auto& [call, blocks] : by_call) {
    const std::int64_t k = current_call - call;
    if (k == 0) {
      for (const auto* b : blocks) picks.push_back({b, {}});
      continue;
    }
    std::size_t total = 0;
    for (const auto* b : blocks) total += b->x.rows();
    const auto keep = k >= 63 ? std::size_t{0}
                              : static_cast<std::size_t>(std::floor(
                                    static_cast<double>(total) / std::ldexp(1.0, static_cast<int>(k))));
    if (keep == 0) continue;
    std::vector<std::size_t> index(total);
    std::iota(index.begin(), index.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `keep` entries form a uniform subset.
    for (std::size_t i = 0; i < keep; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, total - 1);
      std::swap(index[i], index[pick(rng)]);
    }
    std::sort(index.begin(), index.begin() + static_cast<std::ptrdiff_t>(keep));
    std::size_t offset = 0, cursor = 0;
    for (const auto* b : blocks) {
      Selection sel{b, {}};
      const std::size_t end = offset + b->x.rows();
      while (cursor < keep && index[cursor] < end) sel.rows.push_back(index[cursor++] - offset);
      if (!sel.rows.empty()) picks.push_back(std::move(sel));
      offset = end;
    }
  }
  return gather(picks, buffer.psi_dim(), buffer.x_dim(), buffer.y_dim());
}

std::size_t acquire_data(const sim::Problem& problem, const TrustRegion& region,
                         const sim::XDistribution& xdist, HistoryBuffer& buffer,
                         std::int64_t episode, Rng& rng) {
  if (region.dim() != problem.psi_dim) {
    throw DimensionError("trust region dimension does not match the problem");
  }
  Tensor points = lhs_sample_psi(region, problem.M, rng);
  std::vector<HistoryBuffer::Block> blocks;
  blocks.reserve(problem.M);
  std::size_t appended = 0;
  for (std::size_t i = 0; i < problem.M; ++i) {
    HistoryBuffer::Block b;
    auto row = points.row(i);
    b.psi.assign(row.begin(), row.end());
    b.episode = episode;
    b.x = xdist.sample(problem.N, rng);
    b.y = problem.simulate(b.psi, b.x, rng);
    if (b.y.cols() != buffer.y_dim()) {
      throw SimulatorFault(problem.name + ": simulator returned " +
                           std::to_string(b.y.cols()) + " outputs per row, expected " +
                           std::to_string(buffer.y_dim()));
    }
    appended += b.x.rows();
    blocks.push_back(std::move(b));
  }
  buffer.append_call(std::move(blocks));
  return appended;
}

}  // namespace pgso::surrogate
