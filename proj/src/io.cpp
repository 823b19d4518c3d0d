#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "chq/harness.hpp"

namespace chq {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Little-endian byte images, independent of the host.
template <typename T>
void put(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

class Cursor {
 public:
  explicit Cursor(const std::string& s) : s_(s) {}
  template <typename T>
  T take(const char* what) {
    if (pos_ + sizeof(T) > s_.size())
      throw Error(Errc::FormatError, std::string("truncated snapshot reading ") + what + " at byte " +
                                         std::to_string(pos_) + " of " + std::to_string(s_.size()));
    unsigned char b[sizeof(T)];
    std::memcpy(b, s_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  size_t pos() const { return pos_; }

 private:
  const std::string& s_;
  size_t pos_ = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::FormatError, "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

std::string report_header() {
  return std::string("# schema ") + kReportSchema +
         "\nexperiment,eps,a,mu,level,lambda,poho_residual,bary_x,bary_y,bary_z,dist_to_M,iterations,converged\n";
}

std::string format_row(const ReportRow& r) {
  std::string s = r.experiment;
  for (double v : {r.eps, r.a, r.mu, r.level, r.lambda, r.poho_residual, r.bary[0], r.bary[1], r.bary[2], r.dist_to_M})
    s += "," + g17(v);
  s += "," + std::to_string(r.iterations) + "," + (r.converged ? "1" : "0") + "\n";
  return s;
}

std::string format_report(const std::vector<ReportRow>& rows) {
  std::string s = report_header();
  for (const ReportRow& r : rows) s += format_row(r);
  return s;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  static std::atomic<unsigned> counter{0};
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(counter++) + "." +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000);
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::FormatError, "cannot write " + tmp.string());
    f.write(content.data(), std::streamsize(content.size()));
    f.flush();
    if (!f) throw Error(Errc::FormatError, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(Errc::FormatError, "rename to " + path + ": " + ec.message());
  }
}

std::string encode_snapshot(const Field& u) {
  const Grid& g = u.grid;
  std::string out = "CHQF";
  put<std::uint32_t>(out, kSnapshotVersion);
  put<std::uint32_t>(out, std::uint32_t(g.N));
  for (int d = 0; d < g.N; ++d) {
    put<std::uint32_t>(out, std::uint32_t(g.points));
    put<double>(out, g.extent);
  }
  out.reserve(out.size() + 8 * size_t(u.values.size()));
  for (Eigen::Index i = 0; i < u.values.size(); ++i) put<double>(out, u.values[i]);
  return out;
}

Field decode_snapshot(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "CHQF") != 0)
    throw Error(Errc::FormatError, "bad magic at byte 0, expected \"CHQF\"");
  Cursor c(bytes);
  c.take<std::uint32_t>("magic");
  const size_t vpos = c.pos();
  const std::uint32_t version = c.take<std::uint32_t>("version");
  if (version != kSnapshotVersion)
    throw Error(Errc::FormatError, "snapshot version " + std::to_string(version) + " at byte " + std::to_string(vpos) +
                                       ", expected " + std::to_string(kSnapshotVersion));
  const size_t npos = c.pos();
  const std::uint32_t N = c.take<std::uint32_t>("N");
  if (N < 1 || N > 3) throw Error(Errc::FormatError, "N = " + std::to_string(N) + " at byte " + std::to_string(npos));
  int points = 0;
  double extent = 0;
  for (std::uint32_t d = 0; d < N; ++d) {
    const size_t ppos = c.pos();
    const std::uint32_t p = c.take<std::uint32_t>("points");
    const double L = c.take<double>("extent");
    if (d > 0 && (int(p) != points || L != extent))
      throw Error(Errc::FormatError, "anisotropic grid at byte " + std::to_string(ppos) + " is not supported");
    points = int(p);
    extent = L;
  }
  Grid g;
  try {
    g = make_grid(int(N), points, extent, N == 1 ? Topology::isolated : Topology::periodic);
  } catch (const Error& e) {
    throw Error(Errc::FormatError, std::string("grid header: ") + e.what());
  }
  const size_t need = c.pos() + 8 * size_t(g.size());
  if (bytes.size() != need)
    throw Error(Errc::FormatError, "payload ends at byte " + std::to_string(bytes.size()) + ", expected " +
                                       std::to_string(need));
  Eigen::VectorXd v(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) v[i] = c.take<double>("sample");
  return Field{g, std::move(v), std::nullopt};
}

void save_snapshot(const Field& u, const std::string& path) { write_atomic(path, encode_snapshot(u)); }

Field load_snapshot(const std::string& path) { return decode_snapshot(read_file(path)); }

std::string solve_sidecar(const SolveResult& r, const std::string& config_echo) {
  std::string s = "[result]\n";
  auto kv = [&](const char* k, const std::string& v) { s += std::string(k) + " = " + v + "\n"; };
  kv("level", g17(r.level));
  kv("lambda", g17(r.lambda));
  kv("poho_residual", g17(r.poho_residual));
  kv("grad_residual", g17(r.grad_residual));
  kv("el_residual", g17(r.el_residual));
  kv("nu", g17(r.nu));
  kv("hs_norm", g17(r.hs_norm));
  kv("mass", g17(mass(r.field)));
  kv("iterations", std::to_string(r.iterations));
  kv("converged", r.converged ? "true" : "false");
  s += "\n[config]\n";
  std::istringstream is(config_echo);
  for (std::string line; std::getline(is, line);) s += "# " + line + "\n";
  return s;
}

const char* status_name(Status s) {
  switch (s) {
    case Status::pass: return "PASS";
    case Status::fail: return "FAIL";
    case Status::skipped: return "SKIPPED";
  }
  return "?";
}

std::string format_checks(const std::vector<CheckRow>& rows) {
  std::string s = std::string("# schema ") + kVerifySchema + "\nid,check,status,measured,threshold,detail\n";
  for (const CheckRow& r : rows) {
    std::string d = r.detail;
    for (char& ch : d)
      if (ch == ',' || ch == '\n') ch = ';';
    s += std::to_string(r.id) + "," + r.name + "," + status_name(r.status) + "," + g17(r.measured) + "," +
         g17(r.threshold) + "," + d + "\n";
  }
  return s;
}

bool all_pass(const std::vector<CheckRow>& rows) {
  for (const CheckRow& r : rows)
    if (r.status != Status::pass) return false;
  return !rows.empty();
}

void parallel_for(int count, int threads, const std::function<void(int)>& f) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i; (i = next++) < count;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!first) first = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace chq
