#include "sgdqn/eval/exports.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sgdqn/errors.hpp"
#include "sgdqn/net/network.hpp"

namespace sgdqn::eval {
namespace {

constexpr const char* kTrajectoryHeader = "t,agent_id,x,y,vx,vy,radius,goal_x,goal_y";
constexpr const char* kAttentionHeader = "from_agent,to_agent,weight,layer";

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE) {
    throw FormatError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

std::size_t parse_index(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || s[0] == '-') {
    throw FormatError("line " + std::to_string(line_no) + ": bad index '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

std::vector<std::vector<std::string>> parse_table(const std::string& text, const char* header,
                                                  std::size_t width) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != header) {
    throw FormatError(std::string("expected header '") + header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = split_fields(lines[i]);
    if (f.size() != width) {
      throw FormatError("line " + std::to_string(i + 1) + ": expected " + std::to_string(width) + " fields, got " +
                        std::to_string(f.size()));
    }
    rows.push_back(std::move(f));
  }
  return rows;
}

}  // namespace

std::vector<TrajectoryRow> trajectory_rows(const std::vector<sim::World>& frames) {
  std::vector<TrajectoryRow> rows;
  for (const auto& w : frames) {
    auto add = [&](std::size_t id, const sim::FullState& a) {
      rows.push_back({w.time, id, a.position.x, a.position.y, a.velocity.x, a.velocity.y, a.radius, a.goal.x,
                      a.goal.y});
    };
    add(0, w.robot);
    for (std::size_t i = 0; i < w.pedestrians.size(); ++i) add(i + 1, w.pedestrians[i]);
  }
  return rows;
}

std::vector<AttentionRow> attention_rows(const ad::ParameterSet& params, const sim::JointState& state) {
  const sim::JointState centric =
      state.frame == sim::Frame::robot_centric ? state : sim::to_robot_centric(state);
  const net::Evaluation e = net::evaluate(params, centric);
  std::vector<AttentionRow> rows;
  for (std::size_t l = 0; l < e.attention.size(); ++l) {
    const ad::Tensor& a = e.attention[l];
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j) rows.push_back({i, j, a(i, j), l});
    }
  }
  return rows;
}

std::string to_csv(const std::vector<TrajectoryRow>& rows) {
  std::string out = std::string(kTrajectoryHeader) + "\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.agent_id, r.x,
                  r.y, r.vx, r.vy, r.radius, r.goal_x, r.goal_y);
    out += buf;
  }
  return out;
}

std::string to_csv(const std::vector<AttentionRow>& rows) {
  std::string out = std::string(kAttentionHeader) + "\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%zu\n", r.from_agent, r.to_agent, r.weight, r.layer);
    out += buf;
  }
  return out;
}

std::vector<TrajectoryRow> parse_trajectory_csv(const std::string& text) {
  std::vector<TrajectoryRow> out;
  std::size_t line = 1;
  for (const auto& f : parse_table(text, kTrajectoryHeader, 9)) {
    ++line;
    out.push_back({parse_double(f[0], line), parse_index(f[1], line), parse_double(f[2], line),
                   parse_double(f[3], line), parse_double(f[4], line), parse_double(f[5], line),
                   parse_double(f[6], line), parse_double(f[7], line), parse_double(f[8], line)});
  }
  return out;
}

std::vector<AttentionRow> parse_attention_csv(const std::string& text) {
  std::vector<AttentionRow> out;
  std::size_t line = 1;
  for (const auto& f : parse_table(text, kAttentionHeader, 4)) {
    ++line;
    out.push_back({parse_index(f[0], line), parse_index(f[1], line), parse_double(f[2], line),
                   parse_index(f[3], line)});
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading: " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return ss.str();
}

}  // namespace sgdqn::eval
