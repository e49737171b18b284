#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "pgso/nn/tensor.hpp"
#include "pgso/sim/problem.hpp"
#include "pgso/sim/rng.hpp"
#include "pgso/surrogate/trust_region.hpp"

namespace pgso::surrogate {

/// Training rows for the surrogate: one (psi, x, y) triple per row.
struct Dataset {
  Tensor psi;
  Tensor x;
  Tensor y;

  std::size_t size() const { return psi.rows(); }
  bool empty() const { return size() == 0; }
};

/// Concatenates datasets row-wise; empty parts are skipped.
Dataset concat(const std::vector<Dataset>& parts);

/// Archive of simulator output. Records are grouped by the psi point that
/// produced them: one block of N (x, y) rows per psi point.
class HistoryBuffer {
 public:
  struct Block {
    std::vector<double> psi;
    std::int64_t episode = 0;
    std::int64_t call = 0;
    Tensor x;
    Tensor y;
  };

  HistoryBuffer() = default;
  HistoryBuffer(std::size_t psi_dim, std::size_t x_dim, std::size_t y_dim);

  std::size_t psi_dim() const { return psi_dim_; }
  std::size_t x_dim() const { return x_dim_; }
  std::size_t y_dim() const { return y_dim_; }

  /// Number of acquisitions recorded so far (also the next call index).
  std::int64_t calls() const { return calls_; }
  std::size_t record_count() const { return records_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  /// Appends the blocks of one acquisition and advances the call counter.
  void append_call(std::vector<Block> blocks);
  /// Drops every block whose call index is below `call`.
  void evict_calls_before(std::int64_t call);
  void clear();

  /// Header: psi_0.., x_0.., y_0.., episode, call.
  void write_csv(std::ostream& out) const;

 private:
  std::size_t psi_dim_ = 0;
  std::size_t x_dim_ = 0;
  std::size_t y_dim_ = 0;
  std::int64_t calls_ = 0;
  std::size_t records_ = 0;
  std::vector<Block> blocks_;
};

/// Every record whose psi lies inside the region, from any episode.
Dataset filter_history(const HistoryBuffer& buffer, const TrustRegion& region);

/// Geometric replay: all in-region records of the current call, and
/// floor(n * 2^-k) uniformly chosen in-region records of the call made k
/// retraining steps earlier.
Dataset warm_start_dataset(const HistoryBuffer& buffer, const TrustRegion& region,
                           std::int64_t current_call, Rng& rng);

/// One simulator call: M psi points from the Latin hypercube, N x draws
/// each, appended to the buffer as a single call. Faults leave the buffer
/// untouched. Returns the number of appended records.
std::size_t acquire_data(const sim::Problem& problem, const TrustRegion& region,
                         const sim::XDistribution& xdist, HistoryBuffer& buffer,
                         std::int64_t episode, Rng& rng);

}  // namespace pgso::surrogate
