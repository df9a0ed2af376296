#include "modc/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "modc/error.hpp"

namespace modc::io {

namespace {

template <typename T>
T field(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end()) throw SchemaMismatch(std::string("record has no \"") + key + "\" field");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("field \"") + key + "\": " + e.what());
  }
}

}  // namespace

json problem_to_json(const Problem& problem) {
  return {{"id", problem.id}, {"nums", problem.start_numbers}, {"target", problem.target}};
}

Problem problem_from_json(const json& record) {
  Problem p = Problem::make(field<std::vector<Value>>(record, "nums"), field<Value>(record, "target"));
  if (record.contains("id") && field<std::string>(record, "id") != p.id) {
    throw SchemaMismatch("id " + record["id"].get<std::string>() + " does not match its numbers");
  }
  return p;
}

json example_to_json(const TrainingExample& ex) {
  const Trajectory& t = ex.trajectory;
  json steps = json::array();
  if (t.solution) {
    for (const Step& s : t.solution->steps) {
      steps.push_back({{"a", s.left}, {"b", s.right}, {"op", std::string(1, op_symbol(s.op))}, {"r", s.result}});
    }
  }
  json visited = json::array();
  for (const VisitRecord& v : t.visited) {
    visited.push_back({{"depth", v.depth}, {"score", v.score}, {"remaining", v.remaining}});
  }
  json j = problem_to_json(ex.problem);
  j["mode"] = to_string(t.mode_used);
  j["heuristic"] = to_string(t.config.heuristic.kind);
  j["noise"] = t.config.heuristic.noise_scale;
  j["beam"] = t.config.beam_width;
  j["budget"] = t.config.node_budget;
  j["seed"] = t.config.seed;
  j["solved"] = t.solved;
  j["expanded"] = t.expanded_nodes;
  j["steps"] = std::move(steps);
  j["visited"] = std::move(visited);
  return j;
}

TrainingExample example_from_json(const json& record) {
  TrainingExample ex;
  ex.problem = problem_from_json(record);
  Trajectory& t = ex.trajectory;
  t.problem_id = ex.problem.id;
  try {
    // "mode" is optional so that mode-stripped corpora still load.
    if (record.contains("mode")) t.mode_used = parse_mode(record["mode"].get<std::string>());
    t.config.mode = t.mode_used;
    if (record.contains("heuristic")) t.config.heuristic.kind = parse_heuristic(record["heuristic"].get<std::string>());
  } catch (const json::exception& e) {
    throw SchemaMismatch(e.what());
  }
  t.config.heuristic.noise_scale = record.value("noise", 0.0);
  t.config.beam_width = record.value("beam", t.config.beam_width);
  t.config.node_budget = record.value("budget", t.config.node_budget);
  t.config.seed = record.value("seed", std::uint64_t{0});
  t.solved = field<bool>(record, "solved");
  t.expanded_nodes = record.value("expanded", 0);
  if (record.contains("steps") && !record["steps"].empty()) {
    Expression e;
    for (const json& s : record["steps"]) {
      e.steps.push_back({field<Value>(s, "a"), field<Value>(s, "b"), parse_op(field<std::string>(s, "op")),
                         field<Value>(s, "r")});
    }
    t.solution = std::move(e);
  }
  if (record.contains("visited")) {
    for (const json& v : record["visited"]) {
      VisitRecord r;
      r.depth = field<int>(v, "depth");
      r.score = field<double>(v, "score");
      r.remaining = field<std::vector<Value>>(v, "remaining");
      r.fingerprint = state_fingerprint(r.remaining);
      t.visited.push_back(std::move(r));
    }
  }
  return ex;
}

json profile_to_json(const ModeSuccessProfile& p) {
  return {{"id", p.problem_id}, {"p_dfs", p.p_dfs}, {"p_bfs", p.p_bfs}, {"n_runs", p.n_runs}};
}

ModeSuccessProfile profile_from_json(const json& record) {
  return {field<std::string>(record, "id"), field<double>(record, "p_dfs"), field<double>(record, "p_bfs"),
          field<int>(record, "n_runs")};
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<json> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw SchemaMismatch(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string to_jsonl(const std::vector<json>& records) {
  std::string out;
  for (const json& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records) {
  write_text(path, to_jsonl(records));
}

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

namespace {

constexpr const char* kCurveHeader = "k,strategy,testset,value,n_samples,stderr";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw SchemaMismatch("bad number '" + s + "'");
  return v;
}

}  // namespace

std::string curves_to_csv(const std::vector<PassKCurve>& curves) {
  std::string out = std::string(kCurveHeader) + "\n";
  for (const PassKCurve& c : curves) {
    for (std::size_t i = 0; i < c.ks.size(); ++i) {
      out += std::to_string(c.ks[i]) + ",\"" + c.strategy + "\"," + c.testset + "," + format_double(c.values[i]) +
             "," + std::to_string(c.n_samples) + "," + format_double(c.stderrs[i]) + "\n";
    }
  }
  return out;
}

std::vector<PassKCurve> curves_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaMismatch("empty curve file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCurveHeader) throw SchemaMismatch("unexpected curve header '" + line + "'");
  std::vector<PassKCurve> curves;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    // Strategy labels may contain commas ("beta(0.3,0.3)"), so the fixed
    // columns are taken from both ends.
    auto cells = split_csv(line);
    if (cells.size() < 6) throw SchemaMismatch("short curve row '" + line + "'");
    const std::size_t n = cells.size();
    std::string strategy = cells[1];
    for (std::size_t i = 2; i + 4 < n; ++i) strategy += "," + cells[i];
    if (strategy.size() >= 2 && strategy.front() == '"' && strategy.back() == '"') {
      strategy = strategy.substr(1, strategy.size() - 2);
    }
    const std::string& testset = cells[n - 4];
    auto [it, fresh] = index.try_emplace({strategy, testset}, curves.size());
    if (fresh) {
      curves.emplace_back();
      curves.back().strategy = strategy;
      curves.back().testset = testset;
    }
    PassKCurve& c = curves[it->second];
    c.ks.push_back(parse_number<int>(cells[0]));
    c.values.push_back(parse_number<double>(cells[n - 3]));
    c.n_samples = parse_number<int>(cells[n - 2]);
    c.stderrs.push_back(parse_number<double>(cells[n - 1]));
  }
  if (curves.empty()) throw SchemaMismatch("curve file has no rows");
  return curves;
}

std::string histograms_to_csv(const std::vector<BalanceHistogram>& histograms) {
  std::string out = "policy,bin_lo,bin_hi,count,extremity_mass\n";
  for (const BalanceHistogram& h : histograms) {
    const std::string mass = format_double(h.extremity_mass());
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      out += "\"" + h.label + "\"," + format_double(h.edges[b]) + "," + format_double(h.edges[b + 1]) + "," +
             std::to_string(h.counts[b]) + "," + mass + "\n";
    }
  }
  return out;
}

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".manifest.json");
}

void write_manifest(const std::filesystem::path& output, const json& manifest) {
  write_text(manifest_path(output), manifest.dump(2) + "\n");
}

}  // namespace modc::io
