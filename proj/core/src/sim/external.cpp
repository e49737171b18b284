#include "pgso/sim/external.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "pgso/errors.hpp"

namespace pgso::sim {

using json = nlohmann::json;

namespace protocol {

std::string encode_request(std::int64_t id, std::span<const double> psi,
                           const nn::Tensor& xs) {
  json rows = json::array();
  for (std::size_t r = 0; r < xs.rows(); ++r) {
    auto row = xs.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json msg = {{"id", id},
              {"psi", std::vector<double>(psi.begin(), psi.end())},
              {"xs", std::move(rows)}};
  return msg.dump();
}

namespace {

nn::Tensor rows_to_tensor(const json& rows, std::size_t expected_rows,
                          std::size_t width, const char* what) {
  if (!rows.is_array()) {
    throw SimulatorFault(std::string("malformed message: '") + what +
                         "' is not an array");
  }
  if (expected_rows != 0 && rows.size() != expected_rows) {
    throw SimulatorFault(std::string("'") + what + "' has " +
                         std::to_string(rows.size()) + " rows, expected " +
                         std::to_string(expected_rows));
  }
  const std::size_t n = rows.size();
  if (n == 0) return nn::Tensor::matrix(0, width);
  if (width == 0) width = rows.front().is_array() ? rows.front().size() : 0;
  nn::Tensor t = nn::Tensor::matrix(n, width);
  for (std::size_t r = 0; r < n; ++r) {
    const json& row = rows[r];
    if (!row.is_array() || row.size() != width) {
      throw SimulatorFault(std::string("'") + what + "' row " + std::to_string(r) +
                           " has the wrong width (expected " +
                           std::to_string(width) + ")");
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (!row[c].is_number()) {
        throw SimulatorFault(std::string("'") + what + "' holds a non-number");
      }
      t.at(r, c) = row[c].get<double>();
    }
  }
  return t;
}

json parse_line(const std::string& line) {
  json msg = json::parse(line, nullptr, false);
  if (msg.is_discarded() || !msg.is_object()) {
    throw SimulatorFault("malformed message: " + line.substr(0, 200));
  }
  return msg;
}

}  // namespace

nn::Tensor decode_reply(const std::string& line, std::int64_t expected_id,
                        std::size_t expected_rows, std::size_t y_dim) {
  json msg = parse_line(line);
  if (!msg.contains("id") || !msg["id"].is_number_integer()) {
    throw SimulatorFault("reply without an integer id");
  }
  const auto id = msg["id"].get<std::int64_t>();
  if (id != expected_id) {
    throw SimulatorFault("reply id " + std::to_string(id) + " does not match request " +
                         std::to_string(expected_id));
  }
  if (msg.contains("error")) {
    throw SimulatorFault("simulator reported: " + msg["error"].dump());
  }
  if (!msg.contains("ys")) throw SimulatorFault("reply without 'ys'");
  nn::Tensor ys = rows_to_tensor(msg["ys"], expected_rows, y_dim, "ys");
  if (ys.rows() != expected_rows) {
    throw SimulatorFault("reply has " + std::to_string(ys.rows()) +
                         " rows, expected " + std::to_string(expected_rows));
  }
  return ys;
}

Request decode_request(const std::string& line) {
  json msg = parse_line(line);
  if (!msg.contains("id") || !msg.contains("psi") || !msg.contains("xs")) {
    throw SimulatorFault("request needs 'id', 'psi' and 'xs'");
  }
  Request req;
  req.id = msg["id"].get<std::int64_t>();
  req.psi = msg["psi"].get<std::vector<double>>();
  req.xs = rows_to_tensor(msg["xs"], 0, 0, "xs");
  return req;
}

std::string encode_reply(std::int64_t id, const nn::Tensor& ys) {
  json rows = json::array();
  for (std::size_t r = 0; r < ys.rows(); ++r) {
    auto row = ys.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return json{{"id", id}, {"ys", std::move(rows)}}.dump();
}

void serve(std::istream& in, std::ostream& out, const Handler& handler) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::int64_t id = -1;
    try {
      Request req = decode_request(line);
      id = req.id;
      out << encode_reply(id, handler(req)) << '\n';
    } catch (const std::exception& e) {
      out << json{{"id", id}, {"error", e.what()}}.dump() << '\n';
    }
    out.flush();
  }
}

}  // namespace protocol

/// Bidirectional line stream over a pair of file descriptors.
class LineChannel {
 public:
  LineChannel(int read_fd, int write_fd, pid_t child)
      : read_fd_(read_fd), write_fd_(write_fd), child_(child) {}

  ~LineChannel() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (child_ > 0) {
      ::kill(child_, SIGTERM);
      ::waitpid(child_, nullptr, 0);
    }
  }

  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;

  void write_line(const std::string& line) {
    std::string payload = line + '\n';
    std::size_t off = 0;
    while (off < payload.size()) {
      ssize_t n = child_ > 0 ? ::write(write_fd_, payload.data() + off, payload.size() - off)
                             : ::send(write_fd_, payload.data() + off,
                                      payload.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SimulatorFault(std::string("write to simulator failed: ") +
                             std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw SimulatorFault("simulator timed out");
      pollfd pfd{read_fd_, POLLIN, 0};
      int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw SimulatorFault(std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) throw SimulatorFault("simulator timed out");
      char chunk[65536];
      ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SimulatorFault(std::string("read from simulator failed: ") +
                             std::strerror(errno));
      }
      if (n == 0) throw SimulatorFault("simulator closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int read_fd_;
  int write_fd_;
  pid_t child_;
  std::string buffer_;
};

namespace {

void ignore_sigpipe_once() {
  static const bool done = [] {
    struct sigaction current {};
    ::sigaction(SIGPIPE, nullptr, &current);
    if (current.sa_handler == SIG_DFL) ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

std::unique_ptr<LineChannel> spawn(const std::string& command) {
  ignore_sigpipe_once();
  int to_child[2], from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw SimulatorFault("pipe failed");
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw SimulatorFault("pipe failed");
  }
  pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    throw SimulatorFault("fork failed");
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<LineChannel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& target) {
  const auto colon = target.rfind(':');
  if (colon == std::string::npos) {
    throw ConfigError("tcp endpoint needs host:port, got '" + target + "'");
  }
  const std::string host = target.substr(0, colon);
  const std::string port = target.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &found) != 0 || !found) {
    throw SimulatorFault("cannot resolve " + target);
  }
  int fd = -1;
  for (addrinfo* a = found; a; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw SimulatorFault("cannot connect to " + target);
  return std::make_unique<LineChannel>(fd, fd, 0);
}

std::unique_ptr<LineChannel> open_channel(const std::string& address) {
  if (address.rfind("tcp:", 0) == 0) return connect_tcp(address.substr(4));
  if (address.rfind("exec:", 0) == 0) return spawn(address.substr(5));
  if (address.empty()) throw ConfigError("empty simulator endpoint");
  return spawn(address);
}

}  // namespace

ExternalSimulator::ExternalSimulator(ExternalEndpoint endpoint, std::size_t y_dim)
    : endpoint_(std::move(endpoint)), y_dim_(y_dim) {
  if (y_dim_ == 0) throw ConfigError("external simulator needs y_dim >= 1");
}

ExternalSimulator::~ExternalSimulator() = default;

Tensor ExternalSimulator::simulate(std::span<const double> psi, const Tensor& xs,
                                   Rng&) {
  std::lock_guard lock(mutex_);
  const std::int64_t id = next_id_++;
  try {
    if (!channel_) channel_ = open_channel(endpoint_.address);
    channel_->write_line(protocol::encode_request(id, psi, xs));
    return protocol::decode_reply(channel_->read_line(endpoint_.timeout), id,
                                  xs.rows(), y_dim_);
  } catch (const SimulatorFault&) {
    channel_.reset();
    throw;
  }
}

Tensor run_external_simulator(ExternalSimulator& sim, std::span<const double> psi,
                              const Tensor& xs) {
  Rng unused(0);
  return sim.simulate(psi, xs, unused);
}

Problem make_external_problem(const ExternalProblemConfig& cfg) {
  if (cfg.psi0.size() != cfg.psi_dim) {
    throw ConfigError("external problem: psi0 has " + std::to_string(cfg.psi0.size()) +
                      " entries, psi_dim is " + std::to_string(cfg.psi_dim));
  }
  XDistribution xdist{XDistribution::Family::uniform, cfg.x_lower, cfg.x_upper};
  xdist.validate();
  if (xdist.dim() == 0) throw ConfigError("external problem needs x bounds");
  Problem p;
  p.kind = ProblemKind::external;
  p.name = cfg.name;
  p.psi_dim = cfg.psi_dim;
  p.x_dim = xdist.dim();
  p.y_dim = cfg.y_dim;
  p.tau = cfg.tau;
  p.epsilon_default = cfg.epsilon_default;
  p.psi0 = cfg.psi0;
  p.M = cfg.M;
  p.N = cfg.N;
  p.x_mode = XMode::fixed;
  p.x_canonical = std::move(xdist);
  p.objective = cfg.objective;
  p.simulator = std::make_shared<ExternalSimulator>(cfg.endpoint, cfg.y_dim);
  return p;
}

}  // namespace pgso::sim
