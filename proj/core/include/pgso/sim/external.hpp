#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <span>
#include <string>

#include "pgso/nn/tensor.hpp"
#include "pgso/sim/problem.hpp"

namespace pgso::sim {

/// Where an external simulator lives. `address` is either
/// "exec:<shell command>" (child process over stdin/stdout) or
/// "tcp:<host>:<port>" (stream socket). A bare string is treated as a
/// command.
struct ExternalEndpoint {
  std::string address;
  std::chrono::milliseconds timeout{std::chrono::seconds(300)};
};

/// Line-delimited JSON messages:
///   request  {"id": <int>, "psi": [..], "xs": [[..], ..]}
///   reply    {"id": <int>, "ys": [[..], ..]}
namespace protocol {

std::string encode_request(std::int64_t id, std::span<const double> psi,
                           const nn::Tensor& xs);
/// Validates id, row count and row width; throws SimulatorFault otherwise.
nn::Tensor decode_reply(const std::string& line, std::int64_t expected_id,
                        std::size_t expected_rows, std::size_t y_dim);

struct Request {
  std::int64_t id = 0;
  std::vector<double> psi;
  nn::Tensor xs;
};
Request decode_request(const std::string& line);
std::string encode_reply(std::int64_t id, const nn::Tensor& ys);

/// Server loop: answers every request line read from `in` until EOF.
using Handler = std::function<nn::Tensor(const Request&)>;
void serve(std::istream& in, std::ostream& out, const Handler& handler);

}  // namespace protocol

class LineChannel;

/// Simulator adapter that forwards every batch to an external process.
/// Requests on one adapter are serialized.
class ExternalSimulator : public Simulator {
 public:
  ExternalSimulator(ExternalEndpoint endpoint, std::size_t y_dim);
  ~ExternalSimulator() override;

  ExternalSimulator(const ExternalSimulator&) = delete;
  ExternalSimulator& operator=(const ExternalSimulator&) = delete;

  Tensor simulate(std::span<const double> psi, const Tensor& xs,
                  Rng& rng) override;

  std::int64_t round_trips() const { return next_id_; }

 private:
  ExternalEndpoint endpoint_;
  std::size_t y_dim_;
  std::mutex mutex_;
  std::unique_ptr<LineChannel> channel_;
  std::int64_t next_id_ = 0;
};

/// One request/reply exchange; faults leave the adapter ready to reconnect.
Tensor run_external_simulator(ExternalSimulator& sim, std::span<const double> psi,
                              const Tensor& xs);

struct ExternalProblemConfig {
  std::string name = "external";
  ExternalEndpoint endpoint;
  std::size_t psi_dim = 1;
  std::size_t y_dim = 1;
  std::vector<double> psi0;
  std::vector<double> x_lower;
  std::vector<double> x_upper;
  double tau = 0.0;
  double epsilon_default = 0.5;
  std::size_t M = 1;
  std::size_t N = 3000;
  ObjectiveSpec objective{ObjectiveSpec::Kind::mean_y};
};

Problem make_external_problem(const ExternalProblemConfig& cfg);

}  // namespace pgso::sim
